#pragma once

// Optimisation loops for the five methods.
//
// One epoch of a GAN method is `generator_updates` generator (+Q) steps
// followed by one discriminator step; each step draws fresh latent noise and
// a fresh collocation minibatch, labeled data is used full-batch. One epoch of
// a dropout baseline is a single step on its loss.

#include "pidgan/evaluation/gradients.hpp"
#include "pidgan/networks/checkpoint.hpp"
#include "pidgan/physics/consistency.hpp"
#include "pidgan/training/apinn.hpp"
#include "pidgan/training/config.hpp"
#include "pidgan/training/optimizer.hpp"

#include <functional>
#include <numeric>

namespace pidgan::training {

using networks::Discriminator;
using networks::Generator;
using networks::InferenceNet;
using networks::ModelBundle;
using networks::Normalizer;
using physics::PhysicsSystem;

struct TrainingData {
  Matrix x_u, y_u;  // labeled inputs and labels (label columns may be fewer than system outputs)
  Matrix x_f;       // collocation inputs
  std::optional<Matrix> eta_prime;  // ground-truth consistency for PDE systems in imperfect mode

  Eigen::Index label_dim() const { return y_u.cols(); }
};

struct EpochRecord {
  int epoch = 0;
  std::string schedule;  // "G" per generator step, "D" per discriminator step
  double lambda = 0.0;
  LossBreakdown generator;
  std::optional<LossBreakdown> discriminator;
  int clamped = 0;
  std::optional<evaluation::GradientReport> gradients;
  io::Json metrics = io::Json::object();
};

inline io::Json to_json(const LossBreakdown& b) {
  io::Json j = io::Json::object();
  for (const auto& [n, v] : b.terms) j[n] = v;
  j["total"] = b.total;
  return j;
}

inline io::Json to_json(const evaluation::GradientReport& r) {
  io::Json terms = io::Json::array();
  for (const auto& t : r.terms)
    terms.push_back({{"term", t.term}, {"mean", t.mean}, {"std", t.std}, {"max_abs", t.max_abs}, {"finite", t.finite}});
  io::Json j = {{"terms", terms}, {"non_finite", r.non_finite}};
  j["imbalance_ratio"] = std::isfinite(r.imbalance_ratio) ? io::Json(r.imbalance_ratio) : io::Json();
  return j;
}

inline io::Json to_json(const EpochRecord& r) {
  io::Json j = {{"epoch", r.epoch}, {"schedule", r.schedule}, {"lambda", r.lambda},
                {"generator", to_json(r.generator)}, {"clamped", r.clamped}};
  if (r.discriminator) j["discriminator"] = to_json(*r.discriminator);
  if (r.gradients) j["gradients"] = to_json(*r.gradients);
  if (!r.metrics.empty()) j["metrics"] = r.metrics;
  return j;
}

struct TrainingLog {
  double initial_lambda = 0.0;
  std::vector<EpochRecord> records;

  /// One JSON object per line.
  std::string to_jsonl() const {
    std::string out;
    for (const auto& r : records) out += to_json(r).dump() + "\n";
    return out;
  }
};

struct TrainHooks {
  std::function<io::Json(int epoch, const ModelBundle&)> metrics;
  int metrics_every = 0;
  std::function<void(int epoch, const ModelBundle&)> checkpoint;
};

struct TrainResult {
  ModelBundle models;
  TrainingLog log;
  double lambda = 0.0;
  evaluation::GradientReport final_gradients;
};

/// Initial networks for a method. A coefficient network is added when the
/// labels carry one column fewer than the system predicts.
inline ModelBundle make_models(const TrainerConfig& c, const TrainingData& d, const PhysicsSystem& system,
                               const Normalizer& x_norm) {
  c.validate();
  const int dx = system.input_dim();
  const int label_dim = static_cast<int>(d.label_dim());
  if (d.x_u.cols() != dx || d.x_f.cols() != dx) throw ValidationError("dataset inputs do not match the system");
  const bool coefficient = label_dim + 1 == system.output_dim();
  if (!coefficient && label_dim != system.output_dim())
    throw ValidationError("labels have " + std::to_string(label_dim) + " columns but " + system.name() + " predicts " +
                          std::to_string(system.output_dim()));
  const auto& a = c.architecture;
  Rng rng(c.seed);
  const Normalizer y_norm = Normalizer::fit(d.y_u);
  const bool dropout = uses_dropout(c.method);
  const int dz = dropout ? 0 : a.latent_dim.value_or(dx);
  networks::GeneratorSpec gs;
  gs.body = {dx + dz, label_dim, a.generator_hidden, a.activation, dropout ? c.dropout : 0.0};
  gs.latent_dim = dz;
  if (coefficient) gs.coefficient = networks::NetworkSpec{1, 1, a.coefficient_hidden, a.activation, 0.0};
  ModelBundle b{Generator(gs, x_norm, y_norm, rng), std::nullopt, std::nullopt};
  if (is_gan(c.method)) {
    const int eta_dim = c.method == Method::pid_gan ? system.residual_count() : 0;
    b.discriminator.emplace(networks::NetworkSpec{dx + label_dim + eta_dim, 1, a.discriminator_hidden, a.activation, 0.0},
                            x_norm, y_norm, eta_dim, rng);
    if (c.inference_net && dz > 0)
      b.inference.emplace(networks::NetworkSpec{dx + label_dim, dz, a.inference_hidden, a.activation, 0.0}, x_norm,
                          y_norm, rng);
  }
  return b;
}

namespace detail {

inline constexpr Eigen::Index kResidualChunk = 2048;

/// Residuals of deterministic predictions (one latent draw, no dropout).
inline Matrix predicted_residuals(const Generator& g, const PhysicsSystem& system, const Matrix& x, Rng& rng) {
  Matrix out(x.rows(), system.residual_count());
  const Matrix z = g.sample_latent(x.rows(), rng);
  for (Eigen::Index s = 0; s < x.rows(); s += kResidualChunk) {
    const Eigen::Index len = std::min(kResidualChunk, x.rows() - s);
    ad::Tape tape;
    const Matrix xs = x.middleRows(s, len);
    out.middleRows(s, len) = system.residual(xs, g.forward(tape, xs, z.middleRows(s, len), system.derivatives(), false)).value();
  }
  return out;
}

inline Matrix minibatch(const Matrix& x, int size, Rng& rng) {
  const Eigen::Index n = x.rows();
  if (size == 0 || size >= n) return x;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(size));
  return select_rows(x, idx);
}

class Trainer {
 public:
  Trainer(const TrainerConfig& c, const TrainingData& d, const PhysicsSystem& s, ModelBundle& m)
      : cfg_(c), data_(d), system_(s), m_(m), rng_(c.seed ^ 0x9e3779b97f4a7c15ULL) {
    cfg_.validate();
    if (d.x_u.rows() == 0) throw ValidationError("labeled set is empty");
    if (d.y_u.rows() != d.x_u.rows()) throw ValidationError("labeled inputs and labels differ in length");
    if (d.x_f.rows() == 0 && cfg_.method != Method::cgan) throw ValidationError("collocation set is empty");
    if (is_gan(cfg_.method) && !m_.discriminator) throw ValidationError(to_string(cfg_.method) + " needs a discriminator");
    if (cfg_.method == Method::pid_gan && !m_.discriminator->physics_informed())
      throw ValidationError("pid_gan needs a physics-informed discriminator");
    req_ = system_.derivatives();
    label_dim_ = d.label_dim();
    const double lr = cfg_.resolved_learning_rate(!req_.empty());
    auto gp = m_.generator.parameters();
    if (m_.inference)
      for (auto* p : m_.inference->parameters()) gp.push_back(p);
    const AdamOptions adam{lr, cfg_.adam_beta1, cfg_.adam_beta2};
    g_opt_ = Adam(gp, adam);
    if (m_.discriminator) d_opt_ = Adam(m_.discriminator->parameters(), adam);
    lambda_ = cfg_.lambda;
    if (cfg_.lambda_heuristic) lambda_ = heuristic_lambda();
    if (cfg_.mode == PhysicsMode::imperfect) {
      if (d.eta_prime) {
        eta_prime_ = *d.eta_prime;
      } else {
        eta_prime_ = physics::ground_truth_consistency(d.x_u, d.y_u, system_, lambda_).eta;
      }
      physics::require_valid_eta(eta_prime_);
    }
  }

  double lambda() const { return lambda_; }

  /// lambda_0 = 1 / mean(R^2) over the collocation set at the initial parameters.
  double heuristic_lambda() {
    Rng r(cfg_.seed ^ 0x51ed2701ULL);
    const Matrix res = predicted_residuals(m_.generator, system_, data_.x_f, r);
    const double ms = res.array().square().mean();
    if (!(ms > 0.0) || !std::isfinite(ms)) {
      warn("lambda heuristic: initial residual is zero or non-finite, keeping lambda = " + std::to_string(cfg_.lambda));
      return cfg_.lambda;
    }
    return 1.0 / ms;
  }

  TrainingLog run(const TrainHooks& hooks, evaluation::GradientReport* final_report) {
    TrainingLog log;
    log.initial_lambda = lambda_;
    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      EpochRecord rec;
      rec.epoch = epoch;
      if (is_gan(cfg_.method)) {
        for (int k = 0; k < cfg_.generator_updates; ++k) {
          rec.generator = generator_step(epoch);
          rec.clamped += rec.generator.clamped;
          rec.schedule += 'G';
        }
        rec.discriminator = discriminator_step(epoch);
        rec.clamped += rec.discriminator->clamped;
        rec.schedule += 'D';
      } else {
        if (cfg_.method == Method::apinn && (epoch - 1) % cfg_.apinn_interval == 0) update_lambda();
        rec.generator = dropout_step(epoch);
        rec.schedule += 'G';
      }
      rec.lambda = lambda_;
      const bool last = epoch == cfg_.epochs;
      if ((cfg_.gradient_report_every > 0 && epoch % cfg_.gradient_report_every == 0) ||
          (last && (cfg_.final_gradient_report || final_report))) {
        auto report = gradient_report();
        if (last && final_report) *final_report = report;
        rec.gradients = std::move(report);
      }
      if (hooks.metrics && hooks.metrics_every > 0 && (epoch % hooks.metrics_every == 0 || last))
        rec.metrics = hooks.metrics(epoch, m_);
      if (hooks.checkpoint && cfg_.checkpoint_every > 0 && epoch % cfg_.checkpoint_every == 0)
        hooks.checkpoint(epoch, m_);
      if (epoch % cfg_.log_every == 0 || last || rec.gradients) log.records.push_back(std::move(rec));
    }
    return log;
  }

  /// Generator objective on a fresh batch, including the Q term.
  Loss generator_loss(ad::Tape& tape, double lambda) {
    const auto& g = m_.generator;
    const Matrix& xu = data_.x_u;
    const Matrix zu = g.sample_latent(xu.rows(), rng_);
    const bool need_f = cfg_.method != Method::cgan;
    const Matrix xf = need_f ? minibatch(data_.x_f, cfg_.batch_size, rng_) : Matrix();
    const Matrix zf = need_f ? g.sample_latent(xf.rows(), rng_) : Matrix();
    const bool pid = cfg_.method == Method::pid_gan;
    const physics::Jet ju = g.forward(tape, xu, zu, pid ? req_ : physics::DerivativeRequest{}, true);
    const ad::Var yu_hat = labels(ju.value);
    Loss loss;
    ad::Var yf_hat;
    switch (cfg_.method) {
      case Method::cgan:
        loss = cgan_generator_loss(m_.discriminator->forward(tape, xu, yu_hat, std::nullopt, false));
        break;
      case Method::pig_gan: {
        const physics::Jet jf = g.forward(tape, xf, zf, req_, true);
        yf_hat = labels(jf.value);
        loss = pig_generator_loss(m_.discriminator->forward(tape, xu, yu_hat, std::nullopt, false),
                                  system_.residual(xf, jf), lambda);
        break;
      }
      case Method::pid_gan: {
        const physics::Jet jf = g.forward(tape, xf, zf, req_, true);
        yf_hat = labels(jf.value);
        const ad::Var eta_u = physics::consistency_score(system_.residual(xu, ju), lambda);
        const ad::Var eta_f = physics::consistency_score(system_.residual(xf, jf), lambda);
        loss = pid_generator_loss(m_.discriminator->forward(tape, xu, yu_hat, eta_u, false),
                                  m_.discriminator->forward(tape, xf, yf_hat, eta_f, false));
        break;
      }
      default:
        throw std::logic_error("generator_loss called for a dropout method");
    }
    if (m_.inference && cfg_.q_weight > 0.0) {
      ad::Var q = q_reconstruction_loss(tape.constant(zu), m_.inference->forward(tape, xu, yu_hat, true));
      if (yf_hat.valid()) {
        const ad::Var qf = q_reconstruction_loss(tape.constant(zf), m_.inference->forward(tape, xf, yf_hat, true));
        q = 0.5 * (q + qf);
      }
      loss = with_q_term(loss, q, cfg_.q_weight);
    }
    return loss;
  }

  /// Dropout-baseline objective on a fresh batch; dropout masks are active.
  Loss dropout_loss(ad::Tape& tape, double lambda) {
    const auto& g = m_.generator;
    const Matrix xf = minibatch(data_.x_f, cfg_.batch_size, rng_);
    const Matrix none_u(data_.x_u.rows(), 0), none_f(xf.rows(), 0);
    const physics::Jet ju = g.forward(tape, data_.x_u, none_u, {}, true, &rng_);
    const physics::Jet jf = g.forward(tape, xf, none_f, req_, true, &rng_);
    return pinn_loss(tape.constant(data_.y_u), labels(ju.value), system_.residual(xf, jf), lambda);
  }

 private:
  ad::Var labels(const ad::Var& y) const {
    return y.cols() == label_dim_ ? y : ad::cols(y, 0, label_dim_);
  }

  static void require_finite_loss(const Loss& l, int epoch, const char* which) {
    for (const auto& t : l.terms)
      if (!std::isfinite(t.value.scalar()))
        throw DivergenceError(std::string(which) + " loss term '" + t.name + "' became non-finite at epoch " +
                                  std::to_string(epoch),
                              epoch);
  }

  LossBreakdown generator_step(int epoch) {
    ad::Tape tape;
    const Loss loss = generator_loss(tape, lambda_);
    require_finite_loss(loss, epoch, "generator");
    tape.backward(loss.total);
    g_opt_.step(tape);
    return loss.breakdown();
  }

  LossBreakdown discriminator_step(int epoch) {
    const auto& g = m_.generator;
    const auto& d = *m_.discriminator;
    ad::Tape tape;
    const Matrix& xu = data_.x_u;
    const Matrix zu = g.sample_latent(xu.rows(), rng_);
    const ad::Var real_u_y = tape.constant(data_.y_u);
    Loss loss;
    if (cfg_.method != Method::pid_gan) {
      const ad::Var yu_hat = tape.constant(labels(g.forward(tape, xu, zu, {}, false).value).value());
      loss = cgan_discriminator_loss(d.forward(tape, xu, yu_hat, std::nullopt, true),
                                     d.forward(tape, xu, real_u_y, std::nullopt, true));
    } else {
      const Matrix xf = minibatch(data_.x_f, cfg_.batch_size, rng_);
      const Matrix zf = g.sample_latent(xf.rows(), rng_);
      const physics::Jet ju = g.forward(tape, xu, zu, req_, false);
      const physics::Jet jf = g.forward(tape, xf, zf, req_, false);
      // Generator outputs enter as constants.
      const ad::Var yu_hat = tape.constant(labels(ju.value).value());
      const ad::Var yf_hat = tape.constant(labels(jf.value).value());
      const ad::Var eta_u = tape.constant(physics::consistency_score(system_.residual(xu, ju), lambda_).value());
      const ad::Var eta_f = tape.constant(physics::consistency_score(system_.residual(xf, jf), lambda_).value());
      const Eigen::Index k = system_.residual_count();
      const ad::Var fake_u = d.forward(tape, xu, yu_hat, eta_u, true);
      const ad::Var fake_f = d.forward(tape, xf, yf_hat, eta_f, true);
      if (cfg_.mode == PhysicsMode::perfect) {
        const ad::Var real_u = d.forward(tape, xu, real_u_y, tape.constant(Matrix::Ones(xu.rows(), k)), true);
        const ad::Var real_f = d.forward(tape, xf, yf_hat, tape.constant(Matrix::Ones(xf.rows(), k)), true);
        loss = pid_discriminator_loss(fake_u, real_u, fake_f, real_f);
      } else {
        const ad::Var real_u = d.forward(tape, xu, real_u_y, tape.constant(eta_prime_), true);
        loss = pid_imperfect_discriminator_loss(fake_u, real_u, fake_f);
      }
    }
    require_finite_loss(loss, epoch, "discriminator");
    tape.backward(loss.total);
    d_opt_.step(tape);
    return loss.breakdown();
  }

  LossBreakdown dropout_step(int epoch) {
    ad::Tape tape;
    const Loss loss = dropout_loss(tape, lambda_);
    require_finite_loss(loss, epoch, "training");
    tape.backward(loss.total);
    g_opt_.step(tape);
    return loss.breakdown();
  }

  void update_lambda() {
    ad::Tape tape;
    const Loss loss = dropout_loss(tape, 1.0);
    auto collect = [&](const ad::Var& term) {
      tape.backward(term);
      std::vector<Matrix> grads;
      for (const auto* p : m_.generator.parameters()) grads.push_back(tape.gradient(*p));
      return grads;
    };
    const auto data = collect(loss.term("data"));
    const auto physics = collect(loss.term("physics"));
    lambda_ = apinn_update(lambda_, apinn_gradient_stats(data, physics), cfg_.apinn_alpha);
  }

 public:
  /// Per-term gradients of the current generator objective on a fresh batch.
  /// The training stream is restored afterwards, so reports never change a run.
  evaluation::GradientReport gradient_report() {
    const Rng saved = rng_;
    struct Restore {
      Rng& rng;
      const Rng& state;
      ~Restore() { rng = state; }
    } restore{rng_, saved};
    ad::Tape tape;
    std::vector<std::string> names;
    Loss loss;
    switch (cfg_.method) {
      case Method::pig_gan:
        loss = generator_loss(tape, lambda_);
        names = {"g_labeled", "physics"};
        break;
      case Method::pid_gan:
        loss = generator_loss(tape, lambda_);
        names = {"g_labeled", "g_collocation"};
        break;
      case Method::cgan:
        loss = generator_loss(tape, lambda_);
        names = {"g_fake"};
        break;
      default:
        loss = dropout_loss(tape, lambda_);
        names = {"data", "physics"};
    }
    return evaluation::record_gradient_report(tape, loss, names, evaluation::last_two_layers(m_.generator));
  }

 private:

  TrainerConfig cfg_;
  const TrainingData& data_;
  const PhysicsSystem& system_;
  ModelBundle& m_;
  Rng rng_;
  physics::DerivativeRequest req_;
  Eigen::Index label_dim_ = 1;
  Adam g_opt_, d_opt_;
  double lambda_ = 1.0;
  Matrix eta_prime_;
};

}  // namespace detail

/// Trains `models` in place semantics-wise and returns them with the log.
inline TrainResult train(const TrainerConfig& config, const TrainingData& data, const PhysicsSystem& system,
                         ModelBundle models, const TrainHooks& hooks = {}) {
  TrainResult result;
  detail::Trainer t(config, data, system, models);
  result.lambda = t.lambda();
  result.log = t.run(hooks, &result.final_gradients);
  result.lambda = t.lambda();
  result.models = std::move(models);
  return result;
}

}  // namespace pidgan::training
