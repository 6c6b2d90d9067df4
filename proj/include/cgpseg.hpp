#pragma once

#include "cgpseg/analysis.hpp"
#include "cgpseg/dataset.hpp"
#include "cgpseg/default_library.hpp"
#include "cgpseg/endpoints.hpp"
#include "cgpseg/ensemble.hpp"
#include "cgpseg/error.hpp"
#include "cgpseg/evaluation.hpp"
#include "cgpseg/evolution.hpp"
#include "cgpseg/export.hpp"
#include "cgpseg/genotype.hpp"
#include "cgpseg/graph.hpp"
#include "cgpseg/image.hpp"
#include "cgpseg/labeling.hpp"
#include "cgpseg/library.hpp"
#include "cgpseg/metrics.hpp"
#include "cgpseg/model.hpp"
#include "cgpseg/parallel.hpp"
#include "cgpseg/preprocess.hpp"
#include "cgpseg/rng.hpp"
#include "cgpseg/synthetic.hpp"
