// Command-line interface: train, predict, crossval, sweep and bench
// subcommands over the ferns library. Result tables go to stdout (CSV or
// TSV); the run report (command echo, dataset dimensions, parameters and
// wall-clock timings) goes to stderr, so stdout stays byte-reproducible
// for a fixed seed.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ferns/dataset.hpp"
#include "ferns/ensemble.hpp"
#include "ferns/error.hpp"
#include "ferns/evaluate.hpp"
#include "ferns/model_io.hpp"
#include "ferns/predict.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDataError = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string shortest(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, end);
}

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

struct RunReport {
  std::string command_echo;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::pair<std::string, double>> timings;

  void add(std::string key, std::string value) {
    fields.emplace_back(std::move(key), std::move(value));
  }
  void add(std::string key, std::uint64_t value) {
    add(std::move(key), std::to_string(value));
  }
  void add_timing(std::string phase, double secs) {
    timings.emplace_back(std::move(phase), secs);
  }
  void print() const {
    std::cerr << "# " << command_echo << "\n";
    for (const auto& [key, value] : fields) {
      std::cerr << "# " << key << ": " << value << "\n";
    }
    for (const auto& [phase, secs] : timings) {
      std::cerr << "# time_" << phase << "_s: " << fixed(secs, 3) << "\n";
    }
  }
};

struct DataFlags {
  std::string path;
  std::string decision;
  std::vector<std::string> categorical_hints;
  std::vector<std::string> continuous_hints;

  ferns::LoadOptions load_options() const {
    ferns::LoadOptions options;
    for (const auto& name : categorical_hints) {
      options.type_hints[name] = ferns::AttrKind::Categorical;
    }
    for (const auto& name : continuous_hints) {
      if (options.type_hints.count(name)) {
        throw UsageError("column '" + name +
                         "' is hinted both categorical and continuous");
      }
      options.type_hints[name] = ferns::AttrKind::Continuous;
    }
    return options;
  }
};

void add_data_flags(CLI::App* cmd, DataFlags& flags, bool need_decision) {
  cmd->add_option("--data", flags.path, "input CSV file")->required();
  auto* decision = cmd->add_option("--decision", flags.decision,
                                   "decision column (name or 0-based index)");
  if (need_decision) decision->required();
  cmd->add_option("--categorical", flags.categorical_hints,
                  "columns to force categorical (comma separated)")
      ->delimiter(',');
  cmd->add_option("--continuous", flags.continuous_hints,
                  "columns to force continuous (comma separated)")
      ->delimiter(',');
}

void describe_dataset(RunReport& report, const ferns::Dataset& data) {
  report.add("objects", data.n_objects());
  report.add("attributes", data.n_attributes());
  report.add("classes", data.n_classes());
}

char delimiter_of(const std::string& format) {
  if (format == "csv") return ',';
  if (format == "tsv") return '\t';
  throw UsageError("--format must be csv or tsv");
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
  DataFlags data;
  std::uint32_t ferns = 1000;
  int depth = 5;
  bool balanced = true;
  bool importance = false;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
  std::string format = "csv";
};

int run_train(const TrainArgs& args, RunReport& report) {
  const ferns::Dataset data =
      ferns::load_csv(args.data.path, args.data.decision,
                      args.data.load_options());
  describe_dataset(report, data);

  ferns::TrainOptions options;
  options.fern_count = args.ferns;
  options.depth = args.depth;
  options.balanced = args.balanced;
  options.compute_importance = args.importance;
  options.seed = args.seed;
  options.workers = args.workers;

  const auto t0 = Clock::now();
  const ferns::Model model = ferns::train(data, options);
  report.add_timing("train", seconds_since(t0));

  const ferns::OobReport oob = ferns::oob_report(model, data);
  ferns::OobSummary summary;
  summary.error_rate = oob.error_rate;
  summary.covered_objects = oob.covered_objects;

  const auto t1 = Clock::now();
  ferns::save_model(model, args.out, summary);
  report.add_timing("save", seconds_since(t1));

  std::cout << "oob_error: "
            << (oob.error_rate ? fixed(*oob.error_rate, 6) : "undefined")
            << "\n";
  std::cout << "oob_covered: " << oob.covered_objects << "/"
            << data.n_objects() << "\n";

  if (args.importance) {
    const char sep = delimiter_of(args.format);
    const ferns::ImportanceReport& imp = ferns::importance(model);
    std::cout << "attribute" << sep << "name" << sep << "importance" << sep
              << "ferns_used\n";
    for (std::size_t j = 0; j < imp.per_attribute.size(); ++j) {
      const auto& entry = imp.per_attribute[j];
      std::cout << j << sep << data.schema[j].name << sep
                << (entry.importance ? shortest(*entry.importance)
                                     : "undefined")
                << sep << entry.ferns_used << "\n";
    }
  }
  return kExitOk;
}

// --- predict -------------------------------------------------------------

struct PredictArgs {
  DataFlags data;
  std::string model_path;
  std::vector<double> prior;
  bool scores = false;
};

int run_predict(const PredictArgs& args, RunReport& report) {
  const ferns::LoadedModel loaded = ferns::load_model(args.model_path);
  const ferns::Model& model = loaded.model;
  report.add("model", args.model_path);
  report.add("model_ferns", model.fern_count);
  report.add("model_depth", static_cast<std::uint64_t>(model.depth));

  std::optional<ferns::Prior> prior;
  if (!args.prior.empty()) {
    if (args.prior.size() != model.n_classes()) {
      throw UsageError("--prior needs " + std::to_string(model.n_classes()) +
                       " probabilities, got " +
                       std::to_string(args.prior.size()));
    }
    try {
      prior.emplace(args.prior);
    } catch (const ferns::Error& e) {
      throw UsageError(e.what());
    }
  }

  ferns::Table table;
  std::vector<std::uint32_t> truth;       // row -> model class index
  bool have_truth = false;
  if (!args.data.decision.empty()) {
    const ferns::Dataset labelled = ferns::load_csv(
        args.data.path, args.data.decision, args.data.load_options());
    // map file class labels onto the model's class encoding
    std::vector<std::uint32_t> to_model(labelled.n_classes());
    for (std::size_t c = 0; c < labelled.n_classes(); ++c) {
      const auto& label = labelled.class_names[c];
      const auto it = std::find(model.class_names.begin(),
                                model.class_names.end(), label);
      if (it == model.class_names.end()) {
        throw ferns::Error("class '" + label + "' is unknown to the model");
      }
      to_model[c] =
          static_cast<std::uint32_t>(it - model.class_names.begin());
    }
    truth.reserve(labelled.n_objects());
    for (const auto y : labelled.decision) truth.push_back(to_model[y]);
    have_truth = true;
    table = static_cast<const ferns::Table&>(labelled);
  } else {
    table = ferns::load_table(args.data.path, args.data.load_options());
  }
  report.add("objects", table.n_objects());

  const auto t0 = Clock::now();
  const ferns::Scorer scorer(model, table);
  std::string out;
  std::uint32_t wrong = 0;
  for (std::size_t i = 0; i < table.n_objects(); ++i) {
    ferns::ScoreVector raw = scorer.score(i);
    const std::uint32_t label =
        ferns::argmax_class(prior ? ferns::apply_prior(raw, *prior) : raw);
    out += model.class_names[label];
    if (args.scores) {
      for (const double s : raw) {
        out.push_back(',');
        out += shortest(s);
      }
    }
    out.push_back('\n');
    if (have_truth && label != truth[i]) ++wrong;
  }
  if (have_truth) {
    out += "error: ";
    out += fixed(static_cast<double>(wrong) /
                     static_cast<double>(table.n_objects()),
                 4);
    out.push_back('\n');
  }
  report.add_timing("predict", seconds_since(t0));
  std::cout << out;
  return kExitOk;
}

// --- crossval ------------------------------------------------------------

struct CrossvalArgs {
  DataFlags data;
  std::uint32_t ferns = 1000;
  int depth = 5;
  bool balanced = true;
  std::uint32_t folds = 10;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string format = "csv";
};

int run_crossval(const CrossvalArgs& args, RunReport& report) {
  const ferns::Dataset data =
      ferns::load_csv(args.data.path, args.data.decision,
                      args.data.load_options());
  describe_dataset(report, data);

  ferns::CrossvalOptions options;
  options.fern_count = args.ferns;
  options.depth = args.depth;
  options.balanced = args.balanced;
  options.folds = args.folds;
  options.test_fraction = args.test_fraction;
  options.seed = args.seed;
  options.workers = args.workers;

  const auto t0 = Clock::now();
  const ferns::CrossvalResult result = ferns::crossval(data, options);
  report.add_timing("crossval", seconds_since(t0));

  const char sep = delimiter_of(args.format);
  std::cout << "fold" << sep << "test_error\n";
  for (std::size_t f = 0; f < result.errors.size(); ++f) {
    std::cout << f + 1 << sep << fixed(result.errors[f], 6) << "\n";
  }
  std::cout << "mean" << sep << fixed(result.mean, 6) << "\n";
  std::cout << "stddev" << sep << fixed(result.stddev, 6) << "\n";
  return kExitOk;
}

// --- sweep ---------------------------------------------------------------

struct SweepArgs {
  DataFlags data;
  std::uint32_t ferns = 1000;
  std::string depths = "1:15";
  std::uint32_t reps = 10;
  bool balanced = true;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string format = "csv";
};

std::vector<int> parse_depth_range(const std::string& text) {
  int lo = 0, hi = 0;
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, colon));
      hi = std::stoi(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw UsageError("--depths expects LO:HI or a single depth, got '" +
                     text + "'");
  }
  if (lo < 1 || hi > ferns::kMaxDepth || lo > hi) {
    throw UsageError("--depths range must satisfy 1 <= LO <= HI <= " +
                     std::to_string(ferns::kMaxDepth));
  }
  std::vector<int> depths;
  for (int d = lo; d <= hi; ++d) depths.push_back(d);
  return depths;
}

int run_sweep(const SweepArgs& args, RunReport& report) {
  const ferns::Dataset data =
      ferns::load_csv(args.data.path, args.data.decision,
                      args.data.load_options());
  describe_dataset(report, data);

  ferns::SweepOptions options;
  options.fern_count = args.ferns;
  options.balanced = args.balanced;
  options.depths = parse_depth_range(args.depths);
  options.repetitions = args.reps;
  options.seed = args.seed;
  options.workers = args.workers;

  const auto t0 = Clock::now();
  const ferns::DepthSweepResult result = ferns::depth_sweep(data, options);
  report.add_timing("sweep", seconds_since(t0));
  report.add("best_depth", static_cast<std::uint64_t>(result.best_depth));

  const char sep = delimiter_of(args.format);
  std::cout << "depth" << sep << "mean_oob_error" << sep << "stddev_oob_error"
            << sep << "is_best\n";
  for (const auto& row : result.rows) {
    std::cout << row.depth << sep << fixed(row.mean_oob_error, 6) << sep
              << fixed(row.stddev, 6) << sep
              << (row.depth == result.best_depth ? 1 : 0) << "\n";
  }
  return kExitOk;
}

// --- bench ---------------------------------------------------------------

struct BenchArgs {
  DataFlags data;
  std::uint32_t ferns = 5000;
  int depth = 10;
  std::uint32_t reps = 10;
  bool balanced = true;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string format = "csv";
};

int run_bench(const BenchArgs& args, RunReport& report) {
  const ferns::Dataset data =
      ferns::load_csv(args.data.path, args.data.decision,
                      args.data.load_options());
  describe_dataset(report, data);

  const char sep = delimiter_of(args.format);
  std::cout << "phase" << sep << "ferns" << sep << "depth" << sep << "reps"
            << sep << "mean_seconds" << sep << "stddev_seconds\n";

  for (const bool with_importance : {false, true}) {
    std::vector<double> times;
    times.reserve(args.reps);
    for (std::uint32_t rep = 0; rep < args.reps; ++rep) {
      ferns::TrainOptions options;
      options.fern_count = args.ferns;
      options.depth = args.depth;
      options.balanced = args.balanced;
      options.compute_importance = with_importance;
      options.seed = ferns::mix64(args.seed ^ rep);
      options.workers = args.workers;
      const auto t0 = Clock::now();
      const ferns::Model model = ferns::train(data, options);
      times.push_back(seconds_since(t0));
      (void)model;
    }
    double mean = 0.0;
    for (const double t : times) mean += t;
    mean /= static_cast<double>(times.size());
    double ss = 0.0;
    for (const double t : times) ss += (t - mean) * (t - mean);
    const double sd =
        times.size() > 1 ? std::sqrt(ss / static_cast<double>(times.size() - 1))
                         : 0.0;
    std::cout << (with_importance ? "train_with_importance" : "train") << sep
              << args.ferns << sep << args.depth << sep << args.reps << sep
              << fixed(mean, 6) << sep << fixed(sd, 6) << "\n";
    report.add_timing(with_importance ? "bench_importance" : "bench_train",
                      mean);
  }
  return kExitOk;
}

std::string echo_command(int argc, char** argv) {
  std::string echo;
  for (int i = 0; i < argc; ++i) {
    if (i) echo.push_back(' ');
    echo += argv[i];
  }
  return echo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bagged ensembles of random ferns over tabular data"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model and save it");
  add_data_flags(train_cmd, train_args.data, true);
  train_cmd->add_option("--ferns", train_args.ferns, "ensemble size")
      ->check(CLI::Range(1u, 10000000u));
  train_cmd->add_option("--depth", train_args.depth, "fern depth")
      ->check(CLI::Range(1, ferns::kMaxDepth));
  train_cmd->add_flag("--balanced,!--no-balanced", train_args.balanced,
                      "balance class contributions (default on)");
  train_cmd->add_flag("--importance", train_args.importance,
                      "compute permutational attribute importance");
  train_cmd->add_option("--seed", train_args.seed, "master seed");
  train_cmd->add_option("--workers", train_args.workers,
                        "worker threads (0 = hardware)");
  train_cmd->add_option("--out", train_args.out, "model file to write")
      ->required();
  train_cmd->add_option("--format", train_args.format, "table format")
      ->check(CLI::IsMember({"csv", "tsv"}));

  PredictArgs predict_args;
  auto* predict_cmd =
      app.add_subcommand("predict", "classify a CSV with a saved model");
  add_data_flags(predict_cmd, predict_args.data, false);
  predict_cmd->add_option("--model", predict_args.model_path, "model file")
      ->required();
  predict_cmd
      ->add_option("--prior", predict_args.prior,
                   "test-time class prior probabilities (comma separated)")
      ->delimiter(',');
  predict_cmd->add_flag("--scores", predict_args.scores,
                        "append raw per-class scores to each line");

  CrossvalArgs crossval_args;
  auto* crossval_cmd = app.add_subcommand(
      "crossval", "stochastic cross-validation over repeated splits");
  add_data_flags(crossval_cmd, crossval_args.data, true);
  crossval_cmd->add_option("--ferns", crossval_args.ferns, "ensemble size");
  crossval_cmd->add_option("--depth", crossval_args.depth, "fern depth")
      ->check(CLI::Range(1, ferns::kMaxDepth));
  crossval_cmd->add_flag("--balanced,!--no-balanced", crossval_args.balanced,
                         "balance class contributions (default on)");
  crossval_cmd->add_option("--folds", crossval_args.folds, "iterations")
      ->check(CLI::Range(1u, 100000u));
  crossval_cmd
      ->add_option("--test-fraction", crossval_args.test_fraction,
                   "held-out fraction per class")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  crossval_cmd->add_option("--seed", crossval_args.seed, "master seed");
  crossval_cmd->add_option("--workers", crossval_args.workers,
                           "worker threads (0 = hardware)");
  crossval_cmd->add_option("--format", crossval_args.format, "table format")
      ->check(CLI::IsMember({"csv", "tsv"}));

  SweepArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "depth sweep by mean OOB error with best-depth selection");
  add_data_flags(sweep_cmd, sweep_args.data, true);
  sweep_cmd->add_option("--ferns", sweep_args.ferns, "ensemble size");
  sweep_cmd->add_option("--depths", sweep_args.depths,
                        "depth range LO:HI (or a single depth)");
  sweep_cmd->add_option("--reps", sweep_args.reps, "models per depth")
      ->check(CLI::Range(1u, 100000u));
  sweep_cmd->add_flag("--balanced,!--no-balanced", sweep_args.balanced,
                      "balance class contributions (default on)");
  sweep_cmd->add_option("--seed", sweep_args.seed, "master seed");
  sweep_cmd->add_option("--workers", sweep_args.workers,
                        "worker threads (0 = hardware)");
  sweep_cmd->add_option("--format", sweep_args.format, "table format")
      ->check(CLI::IsMember({"csv", "tsv"}));

  BenchArgs bench_args;
  auto* bench_cmd =
      app.add_subcommand("bench", "training-time benchmark table");
  add_data_flags(bench_cmd, bench_args.data, true);
  bench_cmd->add_option("--ferns", bench_args.ferns, "ensemble size");
  bench_cmd->add_option("--depth", bench_args.depth, "fern depth")
      ->check(CLI::Range(1, ferns::kMaxDepth));
  bench_cmd->add_option("--reps", bench_args.reps, "repetitions")
      ->check(CLI::Range(1u, 100000u));
  bench_cmd->add_flag("--balanced,!--no-balanced", bench_args.balanced,
                      "balance class contributions (default on)");
  bench_cmd->add_option("--seed", bench_args.seed, "master seed");
  bench_cmd->add_option("--workers", bench_args.workers,
                        "worker threads (0 = hardware)");
  bench_cmd->add_option("--format", bench_args.format, "table format")
      ->check(CLI::IsMember({"csv", "tsv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return kExitUsage;
  }

  RunReport report;
  report.command_echo = echo_command(argc, argv);
  int status = kExitOk;
  try {
    if (train_cmd->parsed()) {
      status = run_train(train_args, report);
    } else if (predict_cmd->parsed()) {
      status = run_predict(predict_args, report);
    } else if (crossval_cmd->parsed()) {
      status = run_crossval(crossval_args, report);
    } else if (sweep_cmd->parsed()) {
      status = run_sweep(sweep_args, report);
    } else if (bench_cmd->parsed()) {
      status = run_bench(bench_args, report);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ferns::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  report.print();
  return status;
}
