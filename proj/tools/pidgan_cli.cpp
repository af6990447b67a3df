// pidgan: generate data, train, evaluate, diagnose, plot and report.
//
// Exit codes: 0 success, 2 validation error, 3 numerical divergence, 1 other.

#include "pidgan/cli/experiment.hpp"
#include "pidgan/evaluation/png.hpp"
#include "pidgan/networks/checkpoint.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace pidgan;
using io::Json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

// `want` if free, else want_<timestamp>[_n]. Never reuses an existing path.
// A path that does not exist yet: `want`, or `want` with a timestamp (and
// counter) inserted before the file extension, if any.
fs::path fresh_path(const fs::path& want, bool is_file = false) {
  if (!fs::exists(want)) return want;
  const std::string ext = is_file ? want.extension().string() : "";
  const std::string base = (is_file ? want.parent_path() / want.stem() : want).string() + "_" + timestamp();
  fs::path p = base + ext;
  for (int n = 2; fs::exists(p); ++n) p = base + "_" + std::to_string(n) + ext;
  return p;
}

fs::path fresh_dir(const fs::path& want) {
  const fs::path p = fresh_path(want);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  if (fs::exists(p)) throw std::runtime_error("refusing to overwrite '" + p.string() + "'");
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + p.string() + "' for writing");
  f << text;
}

Json read_json(const fs::path& p) {
  if (!fs::exists(p)) throw ValidationError("'" + p.string() + "' does not exist");
  try {
    return Json::parse(io::read_file(p.string()));
  } catch (const Json::exception& e) {
    throw ValidationError("'" + p.string() + "' is not valid JSON: " + e.what());
  }
}

fs::path output_root(const cli::ExperimentConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (c.output_root) return *c.output_root;
  if (const char* env = std::getenv("PIDGAN_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

std::string noise_tag(double level) {
  std::string s = evaluation::format_number(level);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

// Flags shared by every subcommand that resolves an experiment config.
struct ConfigFlags {
  std::string config_path, experiment, method, mode, noise_scale, dataset, out, learning_rate;
  std::vector<std::uint64_t> seeds;
  std::optional<double> noise, lambda;
  std::optional<int> epochs, batch_size, generator_updates, samples, log_every, checkpoint_every;
  bool lambda_heuristic = false;

  void add(CLI::App* app, bool training_flags) {
    app->add_option("--config", config_path, "JSON experiment configuration file");
    app->add_option("--experiment", experiment, "burgers, schrodinger, darcy, collision or tossing");
    app->add_option("--seed", seeds, "run seed; repeat for several runs");
    app->add_option("--noise", noise, "label noise level, e.g. 0 or 0.1");
    app->add_option("--noise-scale", noise_scale, "std (per column) or relative (per entry)");
    app->add_option("--dataset", dataset, "existing dataset archive");
    app->add_option("--out", out, "output directory");
    if (!training_flags) return;
    app->add_option("--method", method, "pinn, apinn, cgan, pig_gan or pid_gan");
    app->add_option("--mode", mode, "perfect or imperfect");
    app->add_option("--epochs", epochs, "training epochs");
    app->add_option("--lambda", lambda, "consistency sharpness / physics weight");
    app->add_flag("--lambda-heuristic", lambda_heuristic, "set lambda from the initial residual");
    app->add_option("--lr", learning_rate, "learning rate");
    app->add_option("--batch-size", batch_size, "collocation minibatch size, 0 for full batch");
    app->add_option("--generator-updates", generator_updates, "generator steps per epoch");
    app->add_option("--samples", samples, "ensemble size for evaluation");
    app->add_option("--log-every", log_every, "epochs between log records");
    app->add_option("--checkpoint-every", checkpoint_every, "epochs between checkpoints, 0 for none");
  }

  // File values first, then flags; the result is validated before any output.
  cli::ExperimentConfig resolve() const {
    cli::ExperimentConfig c;
    if (!config_path.empty()) c = cli::experiment_config_from_json(read_json(config_path));
    if (!experiment.empty()) c.experiment = experiment;
    if (!seeds.empty()) c.seeds = seeds;
    if (noise) c.noise.level = *noise;
    if (!noise_scale.empty()) c.noise.scale = noise_scale;
    if (!dataset.empty()) c.dataset = dataset;
    if (!method.empty()) c.trainer.method = training::parse_method(method);
    if (!mode.empty()) c.trainer.mode = training::parse_mode(mode);
    if (epochs) c.trainer.epochs = *epochs;
    if (lambda) c.trainer.lambda = *lambda;
    if (lambda_heuristic) c.trainer.lambda_heuristic = true;
    if (!learning_rate.empty()) {
      try {
        c.trainer.learning_rate = std::stod(learning_rate);
      } catch (const std::exception&) {
        throw ValidationError("--lr must be a number");
      }
    }
    if (batch_size) c.trainer.batch_size = *batch_size;
    if (generator_updates) c.trainer.generator_updates = *generator_updates;
    if (samples) c.eval_samples = *samples;
    if (log_every) c.trainer.log_every = *log_every;
    if (checkpoint_every) c.trainer.checkpoint_every = *checkpoint_every;
    c.validate();
    return c;
  }
};

std::string dataset_summary(const datagen::Dataset& d, const std::string& fingerprint) {
  std::ostringstream s;
  s << "experiment: " << d.experiment << "\n"
    << "fingerprint: " << fingerprint << "\n"
    << "labeled: " << d.x_u.rows() << " x (" << d.x_u.cols() << " -> " << d.y_u.cols() << ")\n"
    << "collocation: " << d.x_f.rows() << "\n"
    << "test: " << d.x_test.rows() << " x (" << d.x_test.cols() << " -> " << d.y_test.cols() << ")\n";
  for (Eigen::Index k = 0; k < d.y_test.cols(); ++k)
    s << "y_test[" << k << "]: min " << d.y_test.col(k).minCoeff() << ", max " << d.y_test.col(k).maxCoeff() << "\n";
  s << "meta: " << d.meta.dump(2) << "\n";
  return s.str();
}

int generate_data(const ConfigFlags& flags) {
  const cli::ExperimentConfig c = flags.resolve();
  const fs::path root = flags.out.empty() ? output_root(c, "") / "data" : fs::path(flags.out);
  std::vector<fs::path> written;
  for (std::uint64_t seed : c.seeds) {
    const datagen::Dataset d = datagen::assemble(c.experiment, cli::assemble_options(c, seed));
    const std::string fp = datagen::dataset_fingerprint(d);
    fs::create_directories(root);
    const fs::path base = root / (c.experiment + "-noise" + noise_tag(c.noise.level) + "-seed" + std::to_string(seed));
    const fs::path archive = fresh_path(base.string() + ".pidgan", true);
    datagen::save_dataset(archive.string(), d);
    fs::path summary = archive;
    summary.replace_extension(".txt");
    write_text(fresh_path(summary, true), dataset_summary(d, fp));
    std::cout << archive.string() << "\n";
  }
  return 0;
}

struct RunFiles {
  fs::path dir;
  fs::path config() const { return dir / "config.json"; }
  fs::path dataset() const { return dir / "dataset.pidgan"; }
  fs::path log() const { return dir / "log.jsonl"; }
  fs::path model() const { return dir / "model.ckpt"; }
  fs::path metrics() const { return dir / "metrics.csv"; }
  fs::path gradients() const { return dir / "gradients.json"; }
  fs::path record() const { return dir / "run.json"; }
};

int train_one(const cli::ExperimentConfig& c, const fs::path& root) {
  const auto system = cli::make_system(c);
  const datagen::Dataset d = cli::make_dataset(c, c.trainer.seed);
  const std::string fingerprint = datagen::dataset_fingerprint(d);
  const training::TrainingData data = cli::training_data(d);
  networks::ModelBundle models = training::make_models(c.trainer, data, *system, d.x_norm);

  std::string name = c.experiment + "-" + training::to_string(c.trainer.method);
  if (c.trainer.mode == training::PhysicsMode::imperfect) name += "-imperfect";
  name += "-noise" + noise_tag(c.noise.level) + "-seed" + std::to_string(c.trainer.seed);
  fs::create_directories(root);
  const RunFiles run{fresh_dir(root / name)};
  write_text(run.config(), cli::to_json(c).dump(2) + "\n");
  datagen::save_dataset(run.dataset().string(), d);

  std::vector<std::string> checkpoints;
  training::TrainHooks hooks;
  hooks.checkpoint = [&](int epoch, const networks::ModelBundle& m) {
    fs::create_directories(run.dir / "checkpoints");
    const fs::path p = run.dir / "checkpoints" / ("epoch_" + std::to_string(epoch) + ".ckpt");
    networks::save_checkpoint(p.string(), m, c.trainer.seed, {{"epoch", epoch}});
    checkpoints.push_back(p.filename().string());
  };
  training::TrainResult result;
  try {
    result = training::train(c.trainer, data, *system, std::move(models), hooks);
  } catch (const DivergenceError& e) {
    write_text(run.dir / "divergence.txt", std::string(e.what()) + "\n");
    std::cerr << "error: " << e.what() << " (run directory " << run.dir.string() << ")\n";
    return kExitDivergence;
  }
  write_text(run.log(), result.log.to_jsonl());
  networks::save_checkpoint(run.model().string(), result.models, c.trainer.seed,
                            {{"epoch", c.trainer.epochs}, {"lambda", result.lambda}});
  write_text(run.gradients(), training::to_json(result.final_gradients).dump(2) + "\n");

  const evaluation::UQReport report = cli::evaluate_models(c, d, result.models, *system);
  const evaluation::MetricsRow row = cli::metrics_row(c, report, fingerprint);
  write_text(run.metrics(), evaluation::csv_header() + evaluation::to_csv_line(row));

  Json record = {{"config", cli::to_json(c)},
                 {"config_hash", cli::config_hash(c)},
                 {"dataset_fingerprint", fingerprint},
                 {"training_log", run.log().filename().string()},
                 {"model", run.model().filename().string()},
                 {"checkpoints", checkpoints},
                 {"final_lambda", result.lambda},
                 {"report", cli::to_json(report)},
                 {"metrics", run.metrics().filename().string()},
                 {"diagnostics", {{"gradients", run.gradients().filename().string()}}}};
  write_text(run.record(), record.dump(2) + "\n");
  std::cout << run.dir.string() << "\n";
  return 0;
}

int train(const ConfigFlags& flags) {
  const cli::ExperimentConfig c = flags.resolve();
  const fs::path root = output_root(c, flags.out);
  int status = 0;
  for (std::uint64_t seed : c.seeds) status = std::max(status, train_one(c.for_seed(seed), root));
  return status;
}

// A finished run: its resolved config, dataset and final models.
struct LoadedRun {
  RunFiles files;
  cli::ExperimentConfig config;
  datagen::Dataset dataset;
  networks::ModelBundle models;
  double lambda = 1.0;
};

LoadedRun load_run(const std::string& dir) {
  LoadedRun r{RunFiles{dir}, {}, {}, {}};
  if (!fs::is_directory(dir)) throw ValidationError("run directory '" + dir + "' does not exist");
  r.config = cli::experiment_config_from_json(read_json(r.files.config()));
  if (!fs::exists(r.files.model()))
    throw ValidationError("'" + dir + "' has no model.ckpt; the run did not finish training");
  r.dataset = datagen::load_dataset(r.files.dataset().string());
  const io::Archive ckpt = io::read_archive(r.files.model().string(), networks::kCheckpointFormat);
  r.models = networks::from_archive(ckpt);
  if (ckpt.meta.contains("extra") && ckpt.meta["extra"].contains("lambda"))
    r.lambda = ckpt.meta["extra"]["lambda"].get<double>();
  else
    r.lambda = r.config.trainer.lambda;
  return r;
}

int evaluate(const std::string& dir, std::optional<int> samples) {
  LoadedRun r = load_run(dir);
  if (samples) r.config.eval_samples = *samples;
  const auto system = cli::make_system(r.config);
  const evaluation::UQReport report = cli::evaluate_models(r.config, r.dataset, r.models, *system);
  const std::string line =
      evaluation::to_csv_line(cli::metrics_row(r.config, report, datagen::dataset_fingerprint(r.dataset)));
  const fs::path out = fresh_path(r.files.dir / "evaluation.csv", true);
  write_text(out, evaluation::csv_header() + line);
  std::cout << evaluation::csv_header() << line;
  return 0;
}

Json distributions_json(const std::vector<evaluation::Distribution>& ds) {
  Json j = Json::array();
  for (const auto& d : ds) j.push_back(cli::to_json(d));
  return j;
}

struct Diagnostics {
  evaluation::GradientReport gradients;
  std::vector<evaluation::Distribution> scores, consistency;
};

Diagnostics compute_diagnostics(LoadedRun& r) {
  const auto system = cli::make_system(r.config);
  Diagnostics out;
  const training::TrainingData data = cli::training_data(r.dataset);
  training::TrainerConfig tc = r.config.trainer;
  tc.lambda = r.lambda;
  tc.lambda_heuristic = false;
  {
    networks::ModelBundle copy = r.models;
    training::detail::Trainer t(tc, data, *system, copy);
    out.gradients = t.gradient_report();
  }
  Rng rng(r.config.trainer.seed ^ 0xd1a6a05e5ULL);
  if (r.models.discriminator)
    out.scores = evaluation::discriminator_score_histogram(
        *r.models.discriminator, cli::score_groups(r.dataset, r.models, *system, r.lambda, rng));
  if (!system->derivatives().empty() || system->kind() == physics::PhysicsKind::imperfect) {
    auto eta_pred = [&](const Matrix& x) {
      Rng e(r.config.trainer.seed);
      return physics::consistency_score(
                 physics::ResidualBatch{training::detail::predicted_residuals(r.models.generator, *system, x, e)},
                 r.lambda)
          .eta;
    };
    Matrix eta_prime;
    if (r.dataset.y_u.cols() == system->output_dim()) {
      eta_prime = physics::ground_truth_consistency(r.dataset.x_u, r.dataset.y_u, *system, r.lambda).eta;
    } else {
      eta_prime = Matrix::Ones(r.dataset.x_u.rows(), system->residual_count());  // labels lack the coefficient
    }
    try {
      out.consistency = evaluation::consistency_histogram(eta_pred(r.dataset.x_u), eta_pred(r.dataset.x_f), eta_prime);
    } catch (const ConfigurationError&) {
      // Label derivatives are unavailable for PDE systems; predictions only.
      out.consistency = evaluation::consistency_histogram(eta_pred(r.dataset.x_u), eta_pred(r.dataset.x_f),
                                                          Matrix::Ones(1, 1));
      out.consistency.pop_back();
    }
  }
  return out;
}

int diagnose(const std::string& dir) {
  LoadedRun r = load_run(dir);
  const Diagnostics d = compute_diagnostics(r);
  const Json j = {{"gradients", training::to_json(d.gradients)},
                  {"discriminator_scores", distributions_json(d.scores)},
                  {"consistency", distributions_json(d.consistency)}};
  const fs::path out = fresh_path(r.files.dir / "diagnostics.json", true);
  write_text(out, j.dump(2) + "\n");
  std::cout << out.string() << "\n";
  if (std::isfinite(d.gradients.imbalance_ratio))
    std::cout << "gradient imbalance ratio: " << d.gradients.imbalance_ratio << "\n";
  for (const auto& s : d.scores) std::cout << "score median " << s.name << ": " << s.median << "\n";
  return 0;
}

int plot(const std::string& dir, std::optional<int> samples) {
  LoadedRun r = load_run(dir);
  if (samples) r.config.eval_samples = *samples;
  const auto system = cli::make_system(r.config);
  const fs::path out = fresh_dir(r.files.dir / "plots");
  const auto grid = r.dataset.test_grid();
  if (grid) {
    Rng rng = cli::evaluation_rng(r.config.trainer.seed);
    const auto e =
        evaluation::predictive_ensemble(r.models.generator, r.dataset.x_test, rng, r.config.eval_samples, {});
    const auto [rows, cols] = *grid;
    const Eigen::Index c = std::min(e.mean.cols(), r.dataset.y_test.cols());
    const auto names = r.dataset.meta.value("output_names", Json::array());
    for (Eigen::Index k = 0; k < c; ++k) {
      const std::string tag = k < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(k)].get<std::string>()
                                                                          : std::to_string(k);
      auto field = [&](const Matrix& v) {
        // x_test is row-major over the grid.
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(v.data(), rows, cols)
            .eval();
      };
      const Vector err = (r.dataset.y_test.col(k) - e.mean.col(k)).cwiseAbs();
      const Vector var = e.std.col(k).array().square();
      evaluation::write_png((out / ("abs_error_" + tag + ".png")).string(), evaluation::heatmap(field(err), 2));
      evaluation::write_png((out / ("variance_" + tag + ".png")).string(), evaluation::heatmap(field(var), 2));
      evaluation::write_png((out / ("mean_" + tag + ".png")).string(), evaluation::heatmap(field(e.mean.col(k)), 2));
    }
  }
  const Diagnostics d = compute_diagnostics(r);
  auto counts = [](const std::vector<evaluation::Distribution>& ds) {
    std::vector<std::vector<int>> c;
    for (const auto& x : ds) c.push_back(x.counts);
    return c;
  };
  if (!d.scores.empty())
    evaluation::write_png((out / "discriminator_scores.png").string(), evaluation::histogram_plot(counts(d.scores)));
  if (!d.consistency.empty())
    evaluation::write_png((out / "consistency.png").string(), evaluation::histogram_plot(counts(d.consistency)));
  std::ostringstream legend;
  for (const auto& s : d.scores) legend << "discriminator_scores: " << s.name << "\n";
  for (const auto& s : d.consistency) legend << "consistency: " << s.name << "\n";
  write_text(out / "legend.txt", legend.str());
  std::cout << out.string() << "\n";
  return 0;
}

int report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<evaluation::MetricsRow> rows;
  auto take = [&](const fs::path& csv) {
    for (auto& row : evaluation::parse_csv(io::read_file(csv.string()))) rows.push_back(std::move(row));
  };
  for (const auto& in : inputs) {
    if (fs::is_regular_file(in)) {
      take(in);
    } else if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::recursive_directory_iterator(in))
        if (e.is_regular_file() && e.path().filename() == "metrics.csv") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      for (const auto& p : found) take(p);
    } else {
      throw ValidationError("'" + in + "' is neither a metrics CSV nor a directory");
    }
  }
  if (rows.empty()) throw ValidationError("no metrics.csv files found under the given inputs");
  const auto cells = evaluation::build_report(rows);
  Json j = Json::array();
  for (const auto& cell : cells) {
    Json m = Json::object();
    for (const auto& [name, a] : cell.metrics) m[name] = {{"mean", a.mean}, {"std", a.std}, {"count", a.count}};
    j.push_back({{"experiment", cell.experiment},
                 {"method", cell.method},
                 {"mode", cell.mode},
                 {"noise", cell.noise},
                 {"seeds", cell.seeds},
                 {"metrics", m}});
  }
  const std::string md = "Mean and standard deviation over seeds.\n" + evaluation::report_markdown(cells);
  const fs::path dir = out.empty() ? fs::path("report") : fs::path(out);
  const fs::path target = fresh_dir(dir);
  write_text(target / "report.md", md);
  write_text(target / "report.json", j.dump(2) + "\n");
  std::cout << md << "\n" << target.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed adversarial uncertainty quantification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "pidgan 1.0");

  ConfigFlags gen_flags, train_flags;
  auto* gen = app.add_subcommand("generate-data", "build a dataset archive and summary");
  gen_flags.add(gen, false);

  auto* tr = app.add_subcommand("train", "train one run per seed and evaluate it");
  train_flags.add(tr, true);

  std::string run_dir;
  std::optional<int> samples;
  auto* ev = app.add_subcommand("evaluate", "re-evaluate a finished run");
  ev->add_option("--run", run_dir, "run directory")->required();
  ev->add_option("--samples", samples, "ensemble size override");

  std::string diag_dir;
  auto* dg = app.add_subcommand("diagnose", "gradient report and score histograms of a run");
  dg->add_option("--run", diag_dir, "run directory")->required();

  std::string plot_dir;
  std::optional<int> plot_samples;
  auto* pl = app.add_subcommand("plot", "error, variance and histogram images of a run");
  pl->add_option("--run", plot_dir, "run directory")->required();
  pl->add_option("--samples", plot_samples, "ensemble size override");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* rp = app.add_subcommand("report", "aggregate metrics over seeds");
  rp->add_option("inputs", report_inputs, "run directories, roots or metrics CSV files")->required();
  rp->add_option("--out", report_out, "report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*gen) return generate_data(gen_flags);
    if (*tr) return train(train_flags);
    if (*ev) return evaluate(run_dir, samples);
    if (*dg) return diagnose(diag_dir);
    if (*pl) return plot(plot_dir, plot_samples);
    if (*rp) return report(report_inputs, report_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigurationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
