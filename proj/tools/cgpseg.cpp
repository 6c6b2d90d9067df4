// cgpseg: train, run, score, ensemble, analyse and export evolved
// segmentation pipelines.
//
// Exit codes: 0 success, 1 structured error, 2 usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgpseg.hpp"
#include "cgpseg/bench.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cgpseg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

struct Globals {
  bool json_output = false;
  int workers = default_workers();
  bool workers_given = false;  // --workers beats a config file's "workers"
};

// Human-readable lines go to stdout unless --json is set, in which case the
// only stdout content is the final JSON document.
struct Report {
  const Globals& g;
  json result = json::object();

  void line(const std::string& text) const {
    if (!g.json_output) std::cout << text << '\n';
  }
  void progress(const std::string& text) const {
    if (!g.json_output) std::cerr << text << '\n';
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::load, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema, path.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::load, "cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

// CSV to a file, or to stdout when no path was given and JSON is off.
void emit_csv(const std::string& csv, const std::string& path, Report& r) {
  if (!path.empty()) {
    write_text(path, csv);
    r.result["csv"] = path;
  } else if (!r.g.json_output) {
    std::cout << csv;
  }
}

Channels load_input(const std::vector<std::string>& paths, const PreprocessingSpec& spec) {
  std::vector<RawImage> raw;
  for (const auto& p : paths) raw.push_back(read_image(p));
  return preprocess(raw, spec);
}

void write_prediction(const fs::path& path, const FinalOutput& out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (const auto* labels = std::get_if<LabelMap>(&out)) write_labels(path, *labels);
  else write_image(path, std::get<Image2D>(out));
}

std::vector<fs::path> model_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::load, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > 11 && name.ends_with(".model.json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::load, "no *.model.json files in " + dir.string());
  return files;
}

// ---------------------------------------------------------------- train

struct RunConfig {
  EvolutionConfig evolution;
  EndpointSpec endpoint = EndpointSpec::make(EndpointKind::local_max_watershed);
  std::optional<PreprocessingSpec> preprocessing;
  fs::path dataset;
  fs::path test_dataset;
  fs::path out = "models";
  int runs = 1;

  // Everything that determines the results; the worker count is excluded.
  json to_json() const {
    json j{{"evolution", cgpseg::to_json(evolution)},
           {"endpoint", cgpseg::to_json(endpoint)},
           {"library", default_library().id()},
           {"dataset", dataset.string()},
           {"runs", runs}};
    if (preprocessing) j["preprocessing"] = cgpseg::to_json(*preprocessing);
    if (!test_dataset.empty()) j["test_dataset"] = test_dataset.string();
    return j;
  }
};

RunConfig run_config_from_file(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw Error(ErrorKind::config, path.string() + ": config must be a JSON object");
  static const std::vector<std::string> known{"evolution", "endpoint", "preprocessing", "library", "dataset",
                                              "test_dataset", "out", "runs", "workers"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorKind::config, path.string() + ": unknown key '" + key + "'");
  const fs::path base = path.parent_path();
  auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  RunConfig c;
  c.evolution.workers = default_workers();
  try {
    if (j.contains("evolution")) c.evolution = evolution_config_from_json(j["evolution"]);
    if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j["endpoint"]);
    if (j.contains("preprocessing")) c.preprocessing = preprocessing_from_json(j["preprocessing"]);
    if (j.contains("library") && j["library"].get<std::string>() != default_library().id())
      throw Error(ErrorKind::config, "unknown function library '" + j["library"].get<std::string>() + "'");
    if (j.contains("dataset")) c.dataset = rel(j["dataset"].get<std::string>());
    if (j.contains("test_dataset")) c.test_dataset = rel(j["test_dataset"].get<std::string>());
    if (j.contains("out")) c.out = rel(j["out"].get<std::string>());
    c.runs = j.value("runs", c.runs);
    c.evolution.workers = j.value("workers", c.evolution.workers);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, path.string() + ": " + e.what());
  }
  return c;
}

json stats(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {{"min", *std::min_element(v.begin(), v.end())},
          {"mean", mean},
          {"max", *std::max_element(v.begin(), v.end())},
          {"sd", v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0}};
}

struct TrainArgs {
  std::string config, dataset, test_dataset, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs, generations;
};

int cmd_train(const TrainArgs& a, Report& r) {
  RunConfig c = a.config.empty() ? RunConfig{} : run_config_from_file(a.config);
  if (!a.dataset.empty()) c.dataset = a.dataset;
  if (!a.test_dataset.empty()) c.test_dataset = a.test_dataset;
  if (!a.out.empty()) c.out = a.out;
  if (a.seed) c.evolution.seed = *a.seed;
  if (a.runs) c.runs = *a.runs;
  if (a.generations) c.evolution.K = *a.generations;
  if (r.g.workers_given || a.config.empty()) c.evolution.workers = r.g.workers;
  if (c.evolution.workers < 1) throw Error(ErrorKind::config, "workers must be >= 1");

  // Validate everything before the first run.
  c.evolution.check();
  if (c.runs < 1) throw Error(ErrorKind::config, "runs must be >= 1");
  if (c.dataset.empty()) throw Error(ErrorKind::config, "no training dataset given (config 'dataset' or --dataset)");
  const Dataset train = load_dataset(c.dataset, c.preprocessing);
  if (train.empty()) throw Error(ErrorKind::config, "training dataset " + c.dataset.string() + " has no entries");
  std::optional<Dataset> test;
  if (!c.test_dataset.empty()) {
    test = load_dataset(c.test_dataset, train.preprocessing);
    if (!test->empty() && test->entries.front().input.channel_count() != train.entries.front().input.channel_count())
      throw Error(ErrorKind::config, "test dataset channel count differs from the training dataset");
  }
  fs::create_directories(c.out);

  const json config_json = c.to_json();
  json per_run = json::array();
  std::vector<double> train_errors, test_errors;
  for (int run = 0; run < c.runs; ++run) {
    EvolutionConfig ec = c.evolution;
    ec.seed = c.evolution.seed + static_cast<std::uint64_t>(run);
    auto result = evolve(train, ec, default_library(), train.preprocessing, c.endpoint);
    result.model.provenance.config = config_json;
    result.model.provenance.config["run"] = run;

    const std::string stem = "run_" + std::to_string(run);
    save_model(result.model, c.out / (stem + ".model.json"), default_library());
    {
      auto out = open_out(c.out / (stem + ".trace.csv"));
      result.trace.write_csv(out);
    }
    json row{{"run", run},
             {"seed", ec.seed},
             {"generations", result.model.provenance.generations},
             {"active_nodes", decode(result.model.genotype, default_library()).active_count()},
             {"train_error", result.model.provenance.train_error},
             {"model", stem + ".model.json"}};
    train_errors.push_back(result.model.provenance.train_error);
    if (test && !test->empty()) {
      const double e = fitness(result.model, *test, result.model.fitness, default_library());
      row["test_error"] = e;
      test_errors.push_back(e);
    }
    r.progress("run " + std::to_string(run) + ": seed " + std::to_string(ec.seed) + ", train error " +
               fmt(row["train_error"].get<double>()) +
               (row.contains("test_error") ? ", test error " + fmt(row["test_error"].get<double>()) : std::string()));
    per_run.push_back(row);
  }

  json summary{{"config", config_json}, {"runs", per_run}, {"train_error", stats(train_errors)}};
  summary["test_error"] = test_errors.empty() ? json() : stats(test_errors);
  write_text(c.out / "summary.json", summary.dump(2) + "\n");

  r.result = summary;
  r.result["out"] = c.out.string();
  r.line("wrote " + std::to_string(c.runs) + " model(s) and summary.json to " + c.out.string());
  r.line("train error mean " + fmt(summary["train_error"]["mean"].get<double>()) +
         (test_errors.empty() ? std::string() : ", test error mean " + fmt(summary["test_error"]["mean"].get<double>())));
  return kExitOk;
}

// -------------------------------------------------------------- predict

struct PredictArgs {
  std::string model, dataset, out;
  std::vector<std::string> input;
};

int cmd_predict(const PredictArgs& a, Report& r) {
  if (a.input.empty() == a.dataset.empty()) throw Error(ErrorKind::usage, "give exactly one of --input or --dataset");
  const auto model = load_model(a.model, default_library());
  if (!a.input.empty()) {
    const auto out = run_model(model, InputVector(load_input(a.input, model.preprocessing)), default_library());
    write_prediction(a.out, out);
    r.result = {{"written", json::array({a.out})}};
    r.line("wrote " + a.out);
    return kExitOk;
  }
  const Dataset ds = load_dataset(a.dataset, model.preprocessing);
  std::vector<FinalOutput> outs(ds.size());
  parallel_for(ds.size(), r.g.workers, [&](std::size_t i) { outs[i] = run_model(model, ds.entries[i].input, default_library()); });
  json written = json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto path = fs::path(a.out) / (ds.entries[i].name + ".png");
    write_prediction(path, outs[i]);
    written.push_back(path.string());
  }
  r.result = {{"written", written}};
  r.line("wrote " + std::to_string(ds.size()) + " prediction(s) to " + a.out);
  return kExitOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string model, dataset, predictions, csv;
};

int cmd_eval(const EvalArgs& a, Report& r) {
  const auto model = load_model(a.model, default_library());
  const Dataset ds = load_dataset(a.dataset, model.preprocessing);
  if (ds.empty()) throw input_error("dataset " + a.dataset + " has no entries");

  std::vector<double> metrics;
  if (a.predictions.empty()) {
    metrics = evaluate(decode(model.genotype, default_library()), model.endpoint, ds, model.fitness, default_library()).metrics;
  } else {
    // Saved predictions from `predict`, named after the dataset entries.
    for (const auto& e : ds.entries) {
      const auto path = fs::path(a.predictions) / (e.name + ".png");
      FinalOutput pred = model.endpoint.produces_labels() ? FinalOutput(read_labels(path))
                                                          : FinalOutput(read_image(path).planes.at(0));
      metrics.push_back(score_prediction(pred, e.annotation, model.fitness));
    }
  }
  // Same summation order as evaluate().
  double total = 0.0;
  for (double m : metrics) total += 1.0 - m;
  const double error = total / static_cast<double>(metrics.size());

  const char* metric = model.fitness.metric == MetricKind::iou ? "iou" : "ap";
  std::string csv = std::string("name,") + metric + "\n";
  json per_image = json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    per_image.push_back({{"name", ds.entries[i].name}, {"score", metrics[i]}});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", metrics[i]);
    csv += ds.entries[i].name + "," + buf + "\n";
  }
  if (!a.csv.empty()) write_text(a.csv, csv);
  r.result = {{"metric", metric},
              {"iou_threshold", model.fitness.iou_threshold},
              {"per_image", per_image},
              {"mean_score", 1.0 - error},
              {"error", error}};
  if (!a.csv.empty()) r.result["csv"] = a.csv;
  for (const auto& p : per_image) r.line(p["name"].get<std::string>() + "  " + fmt(p["score"].get<double>()));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", error);
  r.line(std::string("mean ") + metric + " " + fmt(1.0 - error) + ", error " + buf);
  return kExitOk;
}

// ------------------------------------------------------------- ensemble

struct EnsembleArgs {
  std::string models, dataset, out, sweep;
  std::vector<std::string> input;
};

int cmd_ensemble(const EnsembleArgs& a, Report& r) {
  if (a.input.empty() == a.dataset.empty()) throw Error(ErrorKind::usage, "give exactly one of --input or --dataset");
  if (!a.sweep.empty() && a.dataset.empty()) throw Error(ErrorKind::usage, "--sweep needs --dataset with annotations");
  std::vector<PipelineModel> models;
  for (const auto& f : model_files(a.models)) models.push_back(load_model(f, default_library()));
  for (const auto& m : models)
    if (m.preprocessing != models.front().preprocessing)
      throw Error(ErrorKind::config, "ensemble members use different preprocessing");
  const auto& spec = models.front().preprocessing;
  r.result["models"] = models.size();

  if (!a.input.empty()) {
    const auto h = build_heatmap(models, InputVector(load_input(a.input, spec)), default_library(), r.g.workers);
    if (!a.out.empty()) write_heatmap(a.out, h);
    r.result["heatmap"] = a.out;
    r.line("merged " + std::to_string(models.size()) + " model(s)" + (a.out.empty() ? std::string() : " into " + a.out));
    return kExitOk;
  }

  const Dataset ds = load_dataset(a.dataset, spec);
  if (!a.out.empty()) fs::create_directories(a.out);
  std::vector<Heatmap> heatmaps;
  std::vector<Image2D> truth;
  for (const auto& e : ds.entries) {
    heatmaps.push_back(build_heatmap(models, e.input, default_library(), r.g.workers));
    truth.push_back(e.annotation.mask());
    if (!a.out.empty()) write_heatmap(fs::path(a.out) / (e.name + ".tif"), heatmaps.back());
  }
  if (!a.sweep.empty()) {
    const auto s = sweep_threshold(heatmaps, truth);
    std::string csv = "t,mean_iou\n";
    for (std::size_t i = 0; i < s.thresholds.size(); ++i) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%.2f,%.17g\n", s.thresholds[i], s.mean_iou[i]);
      csv += buf;
    }
    write_text(a.sweep, csv);
    r.result["best_t"] = s.best_t;
    r.result["best_iou"] = s.best_iou;
    r.result["curve"] = a.sweep;
    r.line("best t " + fmt(s.best_t, 3) + ", mean IoU " + fmt(s.best_iou));
  }
  r.line("merged " + std::to_string(models.size()) + " model(s) over " + std::to_string(ds.size()) + " image(s)");
  return kExitOk;
}

// -------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string a, b, labels, out, ctl, target;
  std::vector<std::string> channels;
  std::vector<int> thresholds;
  double t = 0.05;
  std::size_t min_area = 350, max_area = 6000;
  ConjugateOptions conj;
};

int cmd_pair(const AnalyzeArgs& a, Report& r) {
  const auto p = pair_instances(read_labels(a.a), read_labels(a.b), a.t);
  std::string csv = "a,b,iou\n";
  json pairs = json::array();
  for (const auto& q : p.pairs) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%u,%u,%.17g\n", q.a, q.b, q.iou);
    csv += buf;
    pairs.push_back({{"a", q.a}, {"b", q.b}, {"iou", q.iou}});
  }
  for (auto l : p.a_only) csv += std::to_string(l) + ",,\n";
  for (auto l : p.b_only) csv += "," + std::to_string(l) + ",\n";
  emit_csv(csv, a.out, r);
  r.result["pairs"] = pairs;
  r.result["a_only"] = p.a_only;
  r.result["b_only"] = p.b_only;
  return kExitOk;
}

int cmd_features(const AnalyzeArgs& a, Report& r) {
  const auto labels = read_labels(a.labels);
  std::vector<Image2D> ch;
  for (const auto& path : a.channels) {
    const auto raw = read_image(path);
    ch.insert(ch.end(), raw.planes.begin(), raw.planes.end());
  }
  if (!a.thresholds.empty() && a.thresholds.size() != ch.size())
    throw Error(ErrorKind::usage, "--thresholds needs one value per channel (" + std::to_string(ch.size()) + ")");
  const auto t = a.thresholds.empty() ? otsu_thresholds(ch) : a.thresholds;
  const auto features = instance_features(labels, ch, t);

  std::string csv = "label";
  for (std::size_t k = 0; k < (std::size_t{1} << ch.size()); ++k) csv += ",pattern_" + std::to_string(k);
  for (std::size_t c = 0; c < ch.size(); ++c) {
    const auto s = std::to_string(c);
    csv += ",positive_" + s + ",sum_" + s + ",mean_" + s;
  }
  csv += "\n";
  json rows = json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto v = features[i].flatten();
    csv += std::to_string(i + 1);
    for (double x : v) csv += "," + fmt(x, 17);
    csv += "\n";
    rows.push_back({{"label", i + 1}, {"features", v}});
  }
  emit_csv(csv, a.out, r);
  r.result["thresholds"] = t;
  r.result["instances"] = rows;
  return kExitOk;
}

int cmd_filter(const AnalyzeArgs& a, Report& r) {
  if (a.out.empty()) throw Error(ErrorKind::usage, "filter needs --out");
  const auto labels = read_labels(a.labels);
  const auto kept = area_filter(labels, a.min_area, a.max_area);
  write_labels(a.out, kept);
  r.result = {{"before", labels.count()}, {"after", kept.count()}, {"out", a.out}};
  r.line("kept " + std::to_string(kept.count()) + " of " + std::to_string(labels.count()) + " instance(s)");
  return kExitOk;
}

int cmd_conjugates(const AnalyzeArgs& a, Report& r) {
  const auto pairs = detect_conjugates(read_labels(a.ctl), read_labels(a.target), a.conj);
  std::string csv = "ctl,target\n";
  json rows = json::array();
  for (const auto& [c, t] : pairs) {
    csv += std::to_string(c) + "," + std::to_string(t) + "\n";
    rows.push_back({{"ctl", c}, {"target", t}});
  }
  emit_csv(csv, a.out, r);
  r.result["conjugates"] = rows;
  return kExitOk;
}

// --------------------------------------------------------------- export

int cmd_export(const std::string& model_path, const std::string& format, const std::string& out, Report& r) {
  const auto model = load_model(model_path, default_library());
  const std::string text = format == "python" ? export_python(model, default_library()) : export_dsl(model, default_library());
  if (!out.empty()) {
    write_text(out, text);
    r.line("wrote " + out);
  } else if (!r.g.json_output) {
    std::cout << text;
  }
  r.result = {{"format", format}, {"text", text}};
  if (!out.empty()) r.result["out"] = out;
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string model;
  int width = 512, height = 512, iterations = 50, images = 8;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& a, Report& r) {
  if (a.iterations < 1) throw Error(ErrorKind::usage, "--iterations must be >= 1");
  if (a.images < 1) throw Error(ErrorKind::usage, "--images must be >= 1");
  const auto model = a.model.empty() ? reference_pipeline(default_library()) : load_model(a.model, default_library());
  if (model.genotype.inputs != 1) throw Error(ErrorKind::usage, "bench uses single-channel synthetic images");
  const auto inputs = bench_inputs(a.width, a.height, a.images, a.seed);
  const auto t = measure_throughput(model, inputs, a.iterations, default_library());
  r.result = {{"width", a.width},
              {"height", a.height},
              {"iterations", t.iterations},
              {"active_nodes", decode(model.genotype, default_library()).active_count()},
              {"endpoint", to_string(model.endpoint.kind)},
              {"median_seconds", t.median_seconds},
              {"images_per_second", t.images_per_second}};
  r.line(std::to_string(a.width) + "x" + std::to_string(a.height) + ": " + fmt(t.images_per_second, 4) +
         " images/s (median of " + std::to_string(t.iterations) + ")");
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  int train = 10, test = 5, size = 128;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, Report& r) {
  if (a.train < 1 || a.test < 0 || a.size < 32) throw Error(ErrorKind::usage, "need --train >= 1, --test >= 0, --size >= 32");
  DiscSpec spec;
  spec.width = spec.height = a.size;
  const auto train = write_disc_dataset(make_disc_dataset(spec, a.train, a.seed, 0, "train"), a.out);
  r.result["train"] = train.string();
  if (a.test > 0) {
    const auto test =
        write_disc_dataset(make_disc_dataset(spec, a.test, a.seed, static_cast<std::uint64_t>(a.train), "test"), a.out);
    r.result["test"] = test.string();
  }
  r.line("wrote " + train.string() + (a.test > 0 ? " and " + r.result["test"].get<std::string>() : std::string()));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolve, run and export image segmentation pipelines"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json_output, "Print one JSON document on stdout");
  auto* workers = app.add_option("--workers", g.workers, "Worker threads (default: CGPSEG_WORKERS, else 1)")
                      ->check(CLI::PositiveNumber);

  std::function<int(Report&)> run;

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run independent evolutions and write models, traces and a summary");
  train->add_option("--config", ta.config, "Run configuration (JSON)");
  train->add_option("--dataset", ta.dataset, "Training manifest");
  train->add_option("--test-dataset", ta.test_dataset, "Held-out manifest");
  train->add_option("--seed", ta.seed, "Base seed; run r uses seed + r");
  train->add_option("--runs", ta.runs, "Independent runs");
  train->add_option("--out", ta.out, "Output directory");
  train->add_option("-K,--generations", ta.generations, "Generation budget");
  train->callback([&] { run = [&](Report& r) { return cmd_train(ta, r); }; });

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Run a model on images or on a manifest");
  predict->add_option("--model", pa.model, "Model file")->required();
  predict->add_option("--input", pa.input, "Input image(s), one per raw channel group");
  predict->add_option("--dataset", pa.dataset, "Manifest; one output per entry");
  predict->add_option("--out", pa.out, "Output file (--input) or directory (--dataset)")->required();
  predict->callback([&] { run = [&](Report& r) { return cmd_predict(pa, r); }; });

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a model on an annotated manifest");
  eval->add_option("--model", ea.model, "Model file")->required();
  eval->add_option("--dataset", ea.dataset, "Annotated manifest")->required();
  eval->add_option("--predictions", ea.predictions, "Score saved predictions from this directory instead");
  eval->add_option("--csv", ea.csv, "Per-image CSV output");
  eval->callback([&] { run = [&](Report& r) { return cmd_eval(ea, r); }; });

  EnsembleArgs na;
  auto* ensemble = app.add_subcommand("ensemble", "Merge a directory of models into agreement heatmaps");
  ensemble->add_option("--models", na.models, "Directory of *.model.json")->required();
  ensemble->add_option("--input", na.input, "Input image(s)");
  ensemble->add_option("--dataset", na.dataset, "Manifest");
  ensemble->add_option("--out", na.out, "Heatmap file (.tif float, .png 16-bit) or directory for --dataset");
  ensemble->add_option("--sweep", na.sweep, "Write the threshold/IoU curve CSV here");
  ensemble->callback([&] { run = [&](Report& r) { return cmd_ensemble(na, r); }; });

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Instance pairing, features, filtering and conjugates");
  analyze->require_subcommand(1);
  auto* pair = analyze->add_subcommand("pair", "Pair instances of two label maps");
  pair->add_option("--a", aa.a, "First label map")->required();
  pair->add_option("--b", aa.b, "Second label map")->required();
  pair->add_option("--t", aa.t, "Minimum IoU for a pair");
  pair->add_option("--out", aa.out, "CSV output");
  pair->callback([&] { run = [&](Report& r) { return cmd_pair(aa, r); }; });
  auto* features = analyze->add_subcommand("features", "Per-instance intensity feature vectors");
  features->add_option("--labels", aa.labels, "Label map")->required();
  features->add_option("--channels", aa.channels, "Marker images")->required();
  features->add_option("--thresholds", aa.thresholds, "Per-channel positivity thresholds (default Otsu)");
  features->add_option("--out", aa.out, "CSV output");
  features->callback([&] { run = [&](Report& r) { return cmd_features(aa, r); }; });
  auto* filter = analyze->add_subcommand("filter", "Keep instances with min < area < max");
  filter->add_option("--labels", aa.labels, "Label map")->required();
  filter->add_option("--min", aa.min_area, "Exclusive lower area bound");
  filter->add_option("--max", aa.max_area, "Exclusive upper area bound");
  filter->add_option("--out", aa.out, "Filtered label map")->required();
  filter->callback([&] { run = [&](Report& r) { return cmd_filter(aa, r); }; });
  auto* conj = analyze->add_subcommand("conjugates", "Touching instance pairs across two label maps");
  conj->add_option("--ctl", aa.ctl, "Effector label map")->required();
  conj->add_option("--target", aa.target, "Target label map")->required();
  conj->add_option("--max-distance", aa.conj.max_centroid_distance, "Centroid distance gate (px)");
  conj->add_option("--kernel", aa.conj.dilation_kernel, "Dilation kernel side");
  conj->add_option("--iterations", aa.conj.dilation_iterations, "Dilation iterations");
  conj->add_option("--out", aa.out, "CSV output");
  conj->callback([&] { run = [&](Report& r) { return cmd_conjugates(aa, r); }; });

  std::string ex_model, ex_format = "dsl", ex_out;
  auto* exp = app.add_subcommand("export", "Print a model as pipeline text or a Python script");
  exp->add_option("--model", ex_model, "Model file")->required();
  exp->add_option("--format", ex_format, "dsl or python")->check(CLI::IsMember({"dsl", "python"}));
  exp->add_option("--out", ex_out, "Output file (default stdout)");
  exp->callback([&] { run = [&](Report& r) { return cmd_export(ex_model, ex_format, ex_out, r); }; });

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Single-worker throughput on synthetic images");
  bench->add_option("--model", ba.model, "Model file (default: built-in 4-node watershed pipeline)");
  bench->add_option("--width", ba.width, "Image width");
  bench->add_option("--height", ba.height, "Image height");
  bench->add_option("--iterations", ba.iterations, "Timed calls");
  bench->add_option("--images", ba.images, "Distinct synthetic images to cycle through");
  bench->add_option("--seed", ba.seed, "Synthetic image seed");
  bench->callback([&] { run = [&](Report& r) { return cmd_bench(ba, r); }; });

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic disc dataset");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--train", sa.train, "Training images");
  synth->add_option("--test", sa.test, "Test images");
  synth->add_option("--size", sa.size, "Image side");
  synth->add_option("--seed", sa.seed, "Seed");
  synth->callback([&] { run = [&](Report& r) { return cmd_synth(sa, r); }; });

  auto fail = [&](int code, const char* kind, const std::string& message) {
    if (g.json_output) std::cout << json{{"ok", false}, {"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
    else std::cerr << "error: " << message << '\n';
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (g.json_output) return fail(kExitUsage, "usage", e.what());
    app.exit(e);
    return kExitUsage;
  }

  g.workers_given = workers->count() > 0;
  Report report{g};
  try {
    const int code = run(report);
    if (g.json_output) std::cout << json{{"ok", true}, {"result", report.result}}.dump() << '\n';
    return code;
  } catch (const Error& e) {
    return fail(e.kind() == ErrorKind::usage ? kExitUsage : kExitError, to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail(kExitError, "internal", e.what());
  }
}
