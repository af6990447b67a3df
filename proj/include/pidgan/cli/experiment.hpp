#pragma once

// Experiment configuration and the data -> train -> evaluate pipeline shared
// by the command-line tool and the acceptance suite.

#include "pidgan/datagen/dataset.hpp"
#include "pidgan/evaluation/csv.hpp"
#include "pidgan/evaluation/histograms.hpp"
#include "pidgan/physics/registry.hpp"
#include "pidgan/training/trainer.hpp"

namespace pidgan::cli {

using io::Json;

struct DataOverrides {
  std::optional<std::uint64_t> seed;  // defaults to the run seed
  std::optional<Eigen::Index> n_u, n_f, n_test, n_initial, n_boundary;
};

struct ExperimentConfig {
  std::string experiment = "burgers";
  std::vector<std::uint64_t> seeds{0};
  datagen::NoiseSpec noise;
  std::optional<std::string> dataset;  // existing archive instead of generating
  DataOverrides data;
  physics::SystemOptions physics;
  datagen::DarcyModel darcy_model;
  datagen::CollisionSpec collision;
  datagen::TossingSpec tossing;
  training::TrainerConfig trainer;
  int eval_samples = 100;
  std::optional<std::string> output_root;

  void validate() const {
    const auto& names = datagen::experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end())
      throw ValidationError("unknown experiment '" + experiment + "'; valid: " + training::join_names(names));
    if (seeds.empty()) throw ValidationError("at least one seed is required");
    noise.validate();
    trainer.validate();
    if (eval_samples < 1) throw ValidationError("evaluation needs at least one sample");
  }

  /// Config of a single run with seed s.
  ExperimentConfig for_seed(std::uint64_t s) const {
    ExperimentConfig c = *this;
    c.seeds = {s};
    c.trainer.seed = s;
    return c;
  }
};

namespace detail {

inline Json opt_json(const std::optional<Eigen::Index>& v) { return v ? Json(*v) : Json(); }

inline void read_opt(const Json& j, const char* key, std::optional<Eigen::Index>& out) {
  if (j.contains(key)) out = j.at(key).is_null() ? std::nullopt : std::optional<Eigen::Index>(j.at(key).get<Eigen::Index>());
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace detail

inline Json to_json(const ExperimentConfig& c) {
  const auto& p = c.physics;
  Json physics = {
      {"burgers", {{"nu", p.burgers.nu}, {"diffusion_sign", p.burgers.diffusion_sign}}},
      {"darcy",
       {{"length1", p.darcy.length1},
        {"length2", p.darcy.length2},
        {"flux", p.darcy.flux},
        {"dirichlet_value", p.darcy.dirichlet_value},
        {"k_s", c.darcy_model.k_s},
        {"alpha", c.darcy_model.alpha}}},
      {"collision", {{"friction", c.collision.friction}, {"gravity", c.collision.gravity}}},
      {"tossing",
       {{"gravity", p.tossing.gravity},
        {"dt", p.tossing.dt},
        {"horizon", p.tossing.horizon},
        {"wind", c.tossing.wind},
        {"damping", c.tossing.damping}}}};
  Json data = {{"n_u", detail::opt_json(c.data.n_u)},
               {"n_f", detail::opt_json(c.data.n_f)},
               {"n_test", detail::opt_json(c.data.n_test)},
               {"n_initial", detail::opt_json(c.data.n_initial)},
               {"n_boundary", detail::opt_json(c.data.n_boundary)}};
  data["seed"] = c.data.seed ? Json(*c.data.seed) : Json();
  Json j = {{"experiment", c.experiment},
            {"seeds", c.seeds},
            {"noise", {{"level", c.noise.level}, {"scale", c.noise.scale}}},
            {"data", data},
            {"physics", physics},
            {"trainer", training::to_json(c.trainer)},
            {"evaluation", {{"samples", c.eval_samples}}}};
  j["dataset"] = c.dataset ? Json(*c.dataset) : Json();
  j["output_root"] = c.output_root ? Json(*c.output_root) : Json();
  return j;
}

/// Overlays the keys present in `j` onto `base`.
inline ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c = {}) {
  using training::detail::reject_unknown;
  try {
    reject_unknown(j, {"experiment", "seeds", "noise", "dataset", "data", "physics", "trainer", "evaluation", "output_root"},
                   "experiment");
    detail::read(j, "experiment", c.experiment);
    detail::read(j, "seeds", c.seeds);
    if (j.contains("noise")) {
      const Json& n = j.at("noise");
      if (n.is_number()) {
        c.noise.level = n.get<double>();
      } else {
        reject_unknown(n, {"level", "scale"}, "noise");
        detail::read(n, "level", c.noise.level);
        detail::read(n, "scale", c.noise.scale);
      }
    }
    if (j.contains("dataset"))
      c.dataset = j.at("dataset").is_null() ? std::nullopt : std::optional<std::string>(j.at("dataset").get<std::string>());
    if (j.contains("output_root"))
      c.output_root =
          j.at("output_root").is_null() ? std::nullopt : std::optional<std::string>(j.at("output_root").get<std::string>());
    if (j.contains("data")) {
      const Json& d = j.at("data");
      reject_unknown(d, {"seed", "n_u", "n_f", "n_test", "n_initial", "n_boundary"}, "data");
      if (d.contains("seed"))
        c.data.seed = d.at("seed").is_null() ? std::nullopt : std::optional<std::uint64_t>(d.at("seed").get<std::uint64_t>());
      detail::read_opt(d, "n_u", c.data.n_u);
      detail::read_opt(d, "n_f", c.data.n_f);
      detail::read_opt(d, "n_test", c.data.n_test);
      detail::read_opt(d, "n_initial", c.data.n_initial);
      detail::read_opt(d, "n_boundary", c.data.n_boundary);
    }
    if (j.contains("physics")) {
      const Json& p = j.at("physics");
      reject_unknown(p, {"burgers", "darcy", "collision", "tossing"}, "physics");
      if (p.contains("burgers")) {
        const Json& b = p.at("burgers");
        reject_unknown(b, {"nu", "diffusion_sign"}, "physics.burgers");
        detail::read(b, "nu", c.physics.burgers.nu);
        detail::read(b, "diffusion_sign", c.physics.burgers.diffusion_sign);
      }
      if (p.contains("darcy")) {
        const Json& d = p.at("darcy");
        reject_unknown(d, {"length1", "length2", "flux", "dirichlet_value", "k_s", "alpha"}, "physics.darcy");
        detail::read(d, "length1", c.physics.darcy.length1);
        detail::read(d, "length2", c.physics.darcy.length2);
        detail::read(d, "flux", c.physics.darcy.flux);
        detail::read(d, "dirichlet_value", c.physics.darcy.dirichlet_value);
        detail::read(d, "k_s", c.darcy_model.k_s);
        detail::read(d, "alpha", c.darcy_model.alpha);
      }
      if (p.contains("collision")) {
        const Json& d = p.at("collision");
        reject_unknown(d, {"friction", "gravity"}, "physics.collision");
        detail::read(d, "friction", c.collision.friction);
        detail::read(d, "gravity", c.collision.gravity);
      }
      if (p.contains("tossing")) {
        const Json& d = p.at("tossing");
        reject_unknown(d, {"gravity", "dt", "horizon", "wind", "damping"}, "physics.tossing");
        detail::read(d, "gravity", c.physics.tossing.gravity);
        detail::read(d, "dt", c.physics.tossing.dt);
        detail::read(d, "horizon", c.physics.tossing.horizon);
        detail::read(d, "wind", c.tossing.wind);
        detail::read(d, "damping", c.tossing.damping);
      }
    }
    if (j.contains("trainer")) c.trainer = training::trainer_config_from_json(j.at("trainer"), c.trainer);
    if (j.contains("evaluation")) {
      reject_unknown(j.at("evaluation"), {"samples"}, "evaluation");
      detail::read(j.at("evaluation"), "samples", c.eval_samples);
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("experiment configuration: ") + e.what());
  }
  c.validate();
  return c;
}

/// Content hash of the resolved configuration snapshot.
inline std::string config_hash(const ExperimentConfig& c) { return io::hex64(io::fnv1a(to_json(c).dump())); }

inline std::unique_ptr<physics::PhysicsSystem> make_system(const ExperimentConfig& c) {
  return physics::make_system(c.experiment, c.physics);
}

inline datagen::AssembleOptions assemble_options(const ExperimentConfig& c, std::uint64_t seed) {
  datagen::AssembleOptions o;
  o.seed = c.data.seed.value_or(seed);
  o.noise = c.noise;
  o.n_u = c.data.n_u;
  o.n_f = c.data.n_f;
  o.n_test = c.data.n_test;
  o.n_initial = c.data.n_initial;
  o.n_boundary = c.data.n_boundary;
  o.burgers.nu = c.physics.burgers.nu;
  o.darcy.domain = c.physics.darcy;
  o.darcy.model = c.darcy_model;
  o.collision = c.collision;
  o.tossing = c.tossing;
  o.tossing.kinematics = c.physics.tossing;
  return o;
}

/// Loads the configured archive or generates the dataset for `seed`.
inline datagen::Dataset make_dataset(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.dataset) {
    if (!std::filesystem::exists(*c.dataset))
      throw ValidationError("dataset '" + *c.dataset + "' does not exist; create it with `pidgan generate-data --experiment " +
                            c.experiment + " --out <dir>` or drop the dataset setting to generate in memory");
    datagen::Dataset d = datagen::load_dataset(*c.dataset);
    if (d.experiment != c.experiment)
      throw ValidationError("dataset '" + *c.dataset + "' holds experiment '" + d.experiment + "', expected '" +
                            c.experiment + "'");
    return d;
  }
  return datagen::assemble(c.experiment, assemble_options(c, seed));
}

inline training::TrainingData training_data(const datagen::Dataset& d) { return {d.x_u, d.y_u, d.x_f, std::nullopt}; }

inline Rng evaluation_rng(std::uint64_t seed) { return Rng(seed ^ 0x3c6ef372fe94f82bULL); }

inline evaluation::UQReport evaluate_models(const ExperimentConfig& c, const datagen::Dataset& d,
                                            const networks::ModelBundle& m, const physics::PhysicsSystem& system) {
  Rng rng = evaluation_rng(c.trainer.seed);
  return evaluation::evaluate(m.generator, d.x_test, d.y_test, system, rng, c.eval_samples);
}

inline evaluation::MetricsRow metrics_row(const ExperimentConfig& c, const evaluation::UQReport& r,
                                          const std::string& fingerprint) {
  evaluation::MetricsRow row = evaluation::make_row(r);
  row.experiment = c.experiment;
  row.method = training::to_string(c.trainer.method);
  row.mode = training::to_string(c.trainer.mode);
  row.seed = c.trainer.seed;
  row.noise = c.noise.level;
  if (r.relative_l2.size() >= 2 && c.experiment == "darcy") row.rel_l2_k = r.relative_l2[1];
  row.config_hash = config_hash(c);
  row.dataset_fingerprint = fingerprint;
  return row;
}

inline Json to_json(const evaluation::UQReport& r) {
  return {{"relative_l2", r.relative_l2}, {"rmse", r.rmse},          {"relative_l2_all", r.relative_l2_all},
          {"rmse_all", r.rmse_all},       {"residual", r.residual},  {"mean_std", r.mean_std},
          {"ci95", r.ci95}};
}

inline Json to_json(const evaluation::Distribution& d) {
  return {{"name", d.name},     {"mean", d.mean},     {"median", d.median}, {"levels", evaluation::summary_levels()},
          {"quantiles", d.quantiles}, {"counts", d.counts}, {"samples", d.samples}};
}

/// Score groups for the discriminator diagnostics: labeled, collocation and
/// test inputs paired with one generated sample each, plus the true labels
/// and test targets.
inline std::vector<evaluation::ScoreGroup> score_groups(const datagen::Dataset& d, const networks::ModelBundle& m,
                                                        const physics::PhysicsSystem& system, double lambda, Rng& rng) {
  const auto& g = m.generator;
  const bool informed = m.discriminator && m.discriminator->physics_informed();
  const Eigen::Index label_dim = d.y_u.cols();
  auto group = [&](const std::string& name, const Matrix& x) {
    ad::Tape tape;
    const auto jet = g.forward(tape, x, g.sample_latent(x.rows(), rng), informed ? system.derivatives() : physics::DerivativeRequest{}, false);
    evaluation::ScoreGroup s{name, x, jet.value.value().leftCols(label_dim), std::nullopt};
    if (informed) s.eta = physics::consistency_score(physics::ResidualBatch{system.residual(x, jet).value()}, lambda).eta;
    return s;
  };
  std::vector<evaluation::ScoreGroup> out{group("generated_labeled", d.x_u), group("generated_collocation", d.x_f),
                                          group("generated_test", d.x_test)};
  auto real = [&](const std::string& name, const Matrix& x, const Matrix& y) {
    evaluation::ScoreGroup s{name, x, y.leftCols(label_dim), std::nullopt};
    if (informed) s.eta = Matrix::Ones(x.rows(), system.residual_count());
    return s;
  };
  out.push_back(real("real_labeled", d.x_u, d.y_u));
  out.push_back(real("real_test", d.x_test, d.y_test));
  return out;
}

}  // namespace pidgan::cli
