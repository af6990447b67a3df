// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "pidgan/cli/experiment.hpp"
#include "support/fd.hpp"
#include "support/smooth_fields.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

using namespace pidgan;
using pidgan::testing::SmoothVectorField;
using pidgan::testing::uniform;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks so a criterion reports the first few of them.
struct Checks {
  int failed = 0;
  std::ostringstream notes;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failed++ < 3) notes << what << "; ";
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << " got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
  Outcome outcome(const std::string& summary) const {
    return {failed == 0, failed == 0 ? summary : std::to_string(failed) + " failed: " + notes.str()};
  }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1. losses ---------------------------------------------------------------

Outcome loss_oracles() {
  using namespace training;
  Checks c;
  const double ln2 = std::numbers::ln2;
  ad::Tape tape;
  auto k = [&](double v, Eigen::Index rows = 1) { return tape.constant(Matrix::Constant(rows, 1, v)); };
  auto col = [&](std::initializer_list<double> v) {
    Matrix m(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double e : v) m(i++, 0) = e;
    return tape.constant(m);
  };
  c.near(pinn_loss(col({1, 2}), col({1, 2}), col({0, 0}), 3.0).total.scalar(), 0.0, 1e-10, "pinn exact");
  c.near(pinn_loss(col({0, 0}), col({1, -1}), ad::Var{}, 1.0).total.scalar(), 1.0, 1e-10, "pinn mse");
  c.near(pinn_loss(col({0, 0}), col({1, -1}), col({0.5}), 2.0).total.scalar(), 1.5, 1e-10, "pinn physics");
  c.near(cgan_generator_loss(k(0.5, 3)).total.scalar(), 0.5, 1e-10, "cgan G");
  c.near(cgan_discriminator_loss(k(0.5, 3), k(0.5, 3)).total.scalar(), 2 * ln2, 1e-10, "cgan D");
  c.expect(cgan_discriminator_loss(k(1 - 1e-12), k(1e-12)).total.scalar() < 1e-6, "cgan D limit");
  c.near(pig_generator_loss(k(0.5, 4), k(0.0, 7), 3.0).total.scalar(), 0.5, 1e-10, "pig zero residual");
  c.near(pig_generator_loss(k(0.0), k(2.0), 1.0).total.scalar(), 4.0, 1e-10, "pig residual");
  c.near(pid_generator_loss(k(0.5, 3), k(0.5, 5)).total.scalar(), 1.0, 1e-10, "pid G");
  c.near(pid_generator_loss(k(0.2, 2), k(0.4, 6)).total.scalar(), 0.6, 1e-10, "pid G mixed");
  c.near(pid_discriminator_loss(k(0.5, 3), k(0.5, 3), k(0.5, 5), k(0.5, 5)).total.scalar(), 4 * ln2, 1e-10, "pid D");
  c.near(pid_imperfect_discriminator_loss(k(0.5), k(0.5), k(0.5)).total.scalar(), 3 * ln2, 1e-10, "pid imperfect D");
  c.near(q_reconstruction_loss(tape.constant(Matrix{{1.0, 0.0}}), tape.constant(Matrix{{0.0, 0.0}})).scalar(), 0.5,
         1e-10, "q loss");

  Rng rng(5);
  auto nlog = [](const Matrix& p) { return -p.array().log().mean(); };
  auto nlog1m = [](const Matrix& p) { return -(1.0 - p.array()).log().mean(); };
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape t;
    auto C = [&](const Matrix& m) { return t.constant(m); };
    const Matrix fu = uniform(7, 1, 0.01, 0.99, rng), ru = uniform(7, 1, 0.01, 0.99, rng);
    const Matrix ff = uniform(11, 1, 0.01, 0.99, rng), rf = uniform(11, 1, 0.01, 0.99, rng);
    const Matrix res = uniform(11, 2, -2, 2, rng), y = uniform(7, 2, -1, 1, rng), yh = uniform(7, 2, -1, 1, rng);
    const double lambda = std::uniform_real_distribution<double>(0.1, 5)(rng);
    const double phys = lambda / 11.0 * res.array().square().sum();
    c.near(pinn_loss(C(y), C(yh), C(res), lambda).total.scalar(), (y - yh).squaredNorm() / 7.0 + phys, 1e-10, "pinn");
    c.near(pig_generator_loss(C(fu), C(res), lambda).total.scalar(), fu.mean() + phys, 1e-10, "pig G");
    c.near(pig_discriminator_loss(C(fu), C(ru)).total.scalar(), nlog(fu) + nlog1m(ru), 1e-10, "pig D");
    c.near(cgan_generator_loss(C(fu)).total.scalar(), fu.mean(), 1e-10, "cgan G");
    c.near(cgan_discriminator_loss(C(fu), C(ru)).total.scalar(), nlog(fu) + nlog1m(ru), 1e-10, "cgan D");
    c.near(pid_generator_loss(C(fu), C(ff)).total.scalar(), fu.mean() + ff.mean(), 1e-10, "pid G");
    c.near(pid_discriminator_loss(C(fu), C(ru), C(ff), C(rf)).total.scalar(),
           nlog(fu) + nlog1m(ru) + nlog(ff) + nlog1m(rf), 1e-10, "pid D");
    c.near(pid_imperfect_discriminator_loss(C(fu), C(ru), C(ff)).total.scalar(), nlog(fu) + nlog1m(ru) + nlog(ff),
           1e-10, "pid imperfect D");
    c.near(q_reconstruction_loss(C(y), C(yh)).scalar(), (y - yh).squaredNorm() / 14.0, 1e-10, "q");
  }
  return c.outcome("13 hand-computed values and 900 straight-line recomputations within 1e-10");
}

// ---- 2. residuals ------------------------------------------------------------

Outcome residual_oracles() {
  using namespace physics;
  Checks c;
  Rng rng(2024);
  BurgersSystem burgers;
  SchrodingerSystem schrodinger;
  DarcySystem darcy;
  CollisionSystem collision;
  TossingSystem tossing;
  const auto& opt = tossing.options();
  double worst = 0.0;
  auto rel = [&](const Matrix& got, const Matrix& want, const std::string& what) {
    const double e = pidgan::testing::relative_error(got, want);
    worst = std::max(worst, e);
    c.expect(e <= 1e-4, what + " relative error " + std::to_string(e));
  };
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix x = uniform(16, 2, 0.5, 9.5, rng);
    {
      auto f = SmoothVectorField::random(rng, 1);
      auto d = pidgan::testing::fd_derivs(f, x);
      rel(burgers.evaluate(x, f.provider()).values,
          (d.d1.array() + d.v.array() * d.d0.array() - burgers.options().nu * d.d00.array()).matrix(), "burgers");
    }
    {
      auto f = SmoothVectorField::random(rng, 2);
      auto d = pidgan::testing::fd_derivs(f, x);
      Matrix want(x.rows(), 2);
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double u = d.v(i, 0), v = d.v(i, 1), m2 = u * u + v * v;
        want(i, 0) = -d.d1(i, 1) + 0.5 * d.d00(i, 0) + m2 * u;
        want(i, 1) = d.d1(i, 0) + 0.5 * d.d00(i, 1) + m2 * v;
      }
      rel(schrodinger.evaluate(x, f.provider()).values, want, "schrodinger");
    }
    {
      auto f = SmoothVectorField::random(rng, 2);
      auto d = pidgan::testing::fd_derivs(f, x);
      Matrix want = Matrix::Zero(x.rows(), 4);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        want(i, 0) = d.d0(i, 1) * d.d0(i, 0) + d.v(i, 1) * d.d00(i, 0) + d.d1(i, 1) * d.d1(i, 0) +
                     d.v(i, 1) * d.d11(i, 0);
      rel(darcy.evaluate(x, f.provider()).values, want, "darcy");
    }
    {
      Matrix xc = uniform(32, 5, -3, 3, rng);
      xc.col(2) = xc.col(2).cwiseAbs().array() + 0.1;
      xc.col(3) = xc.col(3).cwiseAbs().array() + 0.1;
      const Matrix y = uniform(32, 2, -3, 3, rng);
      Matrix want(32, 2);
      for (Eigen::Index i = 0; i < xc.rows(); ++i) {
        const double va = xc(i, 0), vb = xc(i, 1), ma = xc(i, 2), mb = xc(i, 3), fa = y(i, 0), fb = y(i, 1);
        want(i, 0) = ma * va + mb * vb - ma * fa - mb * fb;
        want(i, 1) = 0.5 * (ma * va * va + mb * vb * vb - ma * fa * fa - mb * fb * fb);
      }
      rel(collision.evaluate(xc, y).values, want, "collision");
    }
    {
      const Matrix xt = uniform(8, 6, -2, 2, rng), yt = uniform(8, 24, -2, 2, rng);
      Matrix want(8, 24);
      for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        const double vx = (xt(i, 2) - xt(i, 0)) / opt.dt;
        const double vy = (xt(i, 3) - xt(i, 1)) / opt.dt + 0.5 * opt.gravity * opt.dt;
        for (int s = 0; s < 12; ++s) {
          const double t = (s + 3) * opt.dt;
          want(i, 2 * s) = yt(i, 2 * s) - (xt(i, 0) + vx * t);
          want(i, 2 * s + 1) = yt(i, 2 * s + 1) - (xt(i, 1) + vy * t - 0.5 * opt.gravity * t * t);
        }
      }
      rel(tossing.evaluate(xt, yt).values, want, "tossing");
    }
  }
  return c.outcome("100 random fields per operator, worst relative error " + fmt("%.2e", worst));
}

// ---- 3. consistency score ------------------------------------------------------

Outcome consistency() {
  using namespace physics;
  Checks c;
  auto eta = [](const Matrix& r, double lambda) { return consistency_score(ResidualBatch{r}, lambda).eta; };
  for (double lambda : {0.01, 1.0, 50.0}) c.expect(eta(Matrix::Zero(3, 2), lambda).isOnes(0.0), "eta(0) != 1");
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const double lambda = std::uniform_real_distribution<double>(0.05, 10)(rng);
    Matrix r = uniform(64, 1, 0, 3, rng);
    std::sort(r.data(), r.data() + r.size());
    Matrix signed_r = r;
    for (Eigen::Index i = 0; i < r.rows(); i += 2) signed_r(i, 0) = -r(i, 0);
    const Matrix e = eta(signed_r, lambda);
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      c.near(e(i, 0), std::exp(-lambda * r(i, 0) * r(i, 0)), 1e-12, "scalar exp");
      if (i > 0 && r(i, 0) > r(i - 1, 0)) c.expect(e(i, 0) < e(i - 1, 0), "not strictly decreasing in |R|");
    }
  }
  const Matrix tiny = eta(Matrix::Constant(1, 1, 1e-3), 1.0), more = eta(Matrix::Constant(1, 1, 2e-3), 1.0);
  c.expect(more(0, 0) < tiny(0, 0) && tiny(0, 0) < 1.0, "small residuals not resolved");
  return c.outcome("eta(0)=1, strict decrease in |R|, scalar exp agreement within 1e-12");
}

// ---- 4. metrics ----------------------------------------------------------------

Outcome metric_oracles() {
  using namespace evaluation;
  Checks c;
  Rng rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix y = uniform(1000, 1, -3, 3, rng), m = uniform(1000, 1, -3, 3, rng), s = uniform(1000, 1, 0, 2, rng);
    double se = 0, yy = 0;
    long inside = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double d = y(i, 0) - m(i, 0);
      se += d * d;
      yy += y(i, 0) * y(i, 0);
      if (std::abs(d) <= 2 * s(i, 0)) ++inside;
    }
    const double want_rmse = std::sqrt(se / 1000.0), want_rel = std::sqrt(se / yy);
    worst = std::max({worst, std::abs(rmse(y, m) - want_rmse) / want_rmse, std::abs(relative_l2(y, m) - want_rel) / want_rel});
    c.near(rmse(y, m), want_rmse, 4 * std::numeric_limits<double>::epsilon() * want_rmse, "rmse");
    c.near(relative_l2(y, m), want_rel, 4 * std::numeric_limits<double>::epsilon() * want_rel, "relative_l2");
    c.expect(ci95_coverage(y, m, s) == static_cast<double>(inside) / 1000.0, "coverage count differs");
  }
  return c.outcome("coverage identical, rmse and relative-L2 within " + fmt("%.1e", worst) + " relative");
}

// ---- 10. reference solvers -------------------------------------------------------

double burgers_trapezoid(double x, double t, double nu, int nodes = 40001) {
  const double pi = std::numbers::pi;
  const double w = std::sqrt(4 * nu * t * (1 / (pi * nu) + 40));
  const double h = 2 * w / (nodes - 1);
  std::vector<double> e(static_cast<std::size_t>(nodes));
  double top = -1e300;
  for (int k = 0; k < nodes; ++k) {
    const double s = -w + k * h;
    e[static_cast<std::size_t>(k)] = -std::cos(pi * (x - s)) / (2 * pi * nu) - s * s / (4 * nu * t);
    top = std::max(top, e[static_cast<std::size_t>(k)]);
  }
  double num = 0, den = 0;
  for (int k = 0; k < nodes; ++k) {
    const double s = -w + k * h;
    const double v = ((k == 0 || k == nodes - 1) ? 0.5 : 1.0) * std::exp(e[static_cast<std::size_t>(k)] - top);
    num += std::sin(pi * (x - s)) * v;
    den += v;
  }
  return -num / den;
}

Outcome solvers() {
  using namespace datagen;
  Checks c;
  const double nu = 0.01 / std::numbers::pi;
  const Grid2D g = solve_burgers_reference(BurgersGridSpec{});
  double burgers_err = 0.0;
  Rng rng(10);
  for (int k = 0; k < 40; ++k) {
    const auto i = std::uniform_int_distribution<Eigen::Index>(1, g.rows() - 1)(rng);
    const auto j = std::uniform_int_distribution<Eigen::Index>(0, g.cols() - 1)(rng);
    burgers_err = std::max(burgers_err, std::abs(g.fields[0](i, j) - burgers_trapezoid(g.col_axis(j), g.row_axis(i), nu)));
  }
  c.expect(burgers_err <= 1e-4, "burgers vs quadrature " + fmt("%.2e", burgers_err));

  const auto s = solve_schrodinger_reference();
  const double drift = (s.mass.array() - s.mass(0)).abs().maxCoeff() / s.mass(0);
  c.expect(drift <= 1e-6, "schrodinger mass drift " + fmt("%.2e", drift));

  DarcyGridSpec ds;
  ds.model.alpha = 0.0;
  ds.model.k_s = 2.0;
  const auto d = solve_darcy_reference(ds);
  double darcy_err = 0.0;
  for (Eigen::Index i = 0; i < d.grid.rows(); ++i)
    for (Eigen::Index j = 0; j < d.grid.cols(); ++j)
      darcy_err = std::max(darcy_err,
                           std::abs(d.grid.fields[0](i, j) - darcy_closed_form(d.grid.col_axis(j), ds.domain, ds.model)));
  c.expect(darcy_err <= 1e-8, "darcy vs closed form " + fmt("%.2e", darcy_err));
  return c.outcome(fmt("burgers %.1e, schrodinger drift %.1e, darcy %.1e", burgers_err, drift, darcy_err));
}

// ---- training-based criteria --------------------------------------------------------

struct Run {
  cli::ExperimentConfig config;
  datagen::Dataset dataset;
  std::unique_ptr<physics::PhysicsSystem> system;
  training::TrainResult result;
  evaluation::UQReport initial, final;
  std::string csv;
  double seconds = 0.0;
};

Run train(const std::string& config_json) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r;
  r.config = cli::experiment_config_from_json(io::Json::parse(config_json)).for_seed(
      io::Json::parse(config_json).at("seeds").at(0).get<std::uint64_t>());
  r.config.trainer.final_gradient_report = true;
  r.config.validate();
  r.dataset = cli::make_dataset(r.config, r.config.trainer.seed);
  r.system = cli::make_system(r.config);
  const auto data = cli::training_data(r.dataset);
  auto models = training::make_models(r.config.trainer, data, *r.system, r.dataset.x_norm);
  r.initial = cli::evaluate_models(r.config, r.dataset, models, *r.system);
  r.result = training::train(r.config.trainer, data, *r.system, models);
  r.final = cli::evaluate_models(r.config, r.dataset, r.result.models, *r.system);
  const auto row = cli::metrics_row(r.config, r.final, datagen::dataset_fingerprint(r.dataset));
  r.csv = evaluation::csv_header() + evaluation::to_csv_line(row);
  r.seconds = seconds_since(t0);
  return r;
}

double test_score_median(const Run& r) {
  Rng rng = cli::evaluation_rng(r.config.trainer.seed);
  const auto groups = cli::score_groups(r.dataset, r.result.models, *r.system, r.result.lambda, rng);
  for (const auto& d : evaluation::discriminator_score_histogram(*r.result.models.discriminator, groups))
    if (d.name == "real_test") return d.median;
  throw std::logic_error("no real_test score group");
}

std::string burgers_config(const std::string& method) {
  return R"({"experiment": "burgers", "seeds": [1], "evaluation": {"samples": 100},
    "trainer": {"method": ")" + method + R"(", "epochs": 10000, "learning_rate": 1e-3, "adam_beta1": 0.5,
      "q_weight": 0.1, "architecture": {"generator_hidden": [24, 24, 24], "discriminator_hidden": [24, 24],
      "latent_dim": 1}}})";
}

std::string schrodinger_config(const std::string& method) {
  return R"({"experiment": "schrodinger", "seeds": [1], "evaluation": {"samples": 20},
    "trainer": {"method": ")" + method + R"(", "epochs": 10000, "learning_rate": 1e-3,
      "architecture": {"generator_hidden": [24, 24, 24], "discriminator_hidden": [24, 24]}}})";
}

std::string collision_config(const std::string& method, const std::string& mode) {
  return R"({"experiment": "collision", "seeds": [1], "evaluation": {"samples": 100},
    "trainer": {"method": ")" + method + R"(", "mode": ")" + mode + R"(", "epochs": 5000}})";
}

}  // namespace

// Optional arguments select criteria by number; 8 and 9 reuse the run of 5.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  if (only.count(8) || only.count(9)) only.insert(5);
  int failures = 0;
  auto report = [&](int n, const std::string& name, const std::function<Outcome()>& f) {
    if (!only.empty() && !only.count(n)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << n << " " << name << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << "; "
              << fmt("%.1f s", seconds_since(t0)) << ")" << std::endl;
  };

  report(1, "loss oracles", loss_oracles);
  report(2, "residual oracles", residual_oracles);
  report(3, "consistency score", consistency);
  report(4, "metric oracles", metric_oracles);

  std::optional<Run> pid, pig;
  report(5, "burgers pid_gan", [&] {
    pid = train(burgers_config("pid_gan"));
    const double rel = pid->final.relative_l2[0], drop = pid->initial.residual / pid->final.residual;
    return Outcome{rel <= 0.35 && drop >= 10.0 && pid->seconds <= 1200,
                   fmt("rel-L2 u %.3f, residual %.3g -> %.3g (%.1fx)", rel, pid->initial.residual, pid->final.residual, drop)};
  });

  report(6, "schrodinger gradient imbalance", [&] {
    const Run a = train(schrodinger_config("pig_gan")), b = train(schrodinger_config("pid_gan"));
    const double ra = a.result.final_gradients.imbalance_ratio, rb = b.result.final_gradients.imbalance_ratio;
    return Outcome{ra >= 2 * rb && a.seconds + b.seconds <= 1800,
                   fmt("pig_gan ratio %.3g, pid_gan ratio %.3g, factor %.2f", ra, rb, ra / rb)};
  });

  report(7, "collision imperfect physics", [&] {
    const Run a = train(collision_config("pid_gan", "imperfect")), b = train(collision_config("pig_gan", "perfect"));
    const double truth = evaluation::residual_metric(a.system->evaluate(a.dataset.x_test, a.dataset.y_test).values);
    Rng rng = cli::evaluation_rng(b.config.trainer.seed);
    const auto e = evaluation::predictive_ensemble(b.result.models.generator, b.dataset.x_f, rng, 100, {});
    const double pig_f = evaluation::residual_metric(b.dataset.x_f, e, *b.system);
    const double gap = std::abs(a.final.residual - truth) / truth;
    return Outcome{gap <= 0.25 && pig_f < 0.5 * truth && a.seconds + b.seconds <= 900,
                   fmt("truth %.4g, pid_gan %.4g (gap %.1f%%), pig_gan collocation %.4g", truth, a.final.residual,
                       100 * gap, pig_f)};
  });

  report(8, "burgers discriminator scores", [&] {
    if (!pid || !pig) pig = train(burgers_config("pig_gan"));
    if (!pid) throw std::runtime_error("criterion 5 run unavailable");
    const double a = test_score_median(*pid), b = test_score_median(*pig);
    return Outcome{std::abs(a - 0.5) <= 0.1 && b >= 0.6, fmt("test-set median pid_gan %.3f, pig_gan %.3f", a, b)};
  });

  report(9, "determinism", [&] {
    if (!pid) throw std::runtime_error("criterion 5 run unavailable");
    const Run again = train(burgers_config("pid_gan"));
    return Outcome{again.csv == pid->csv && again.seconds + pid->seconds <= 2 * 1200,
                   again.csv == pid->csv ? "metric CSVs bitwise identical" : "metric CSVs differ"};
  });

  report(10, "reference solvers", solvers);
  return failures == 0 ? 0 : 1;
}
