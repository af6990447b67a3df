#include "pidgan/datagen/dataset.hpp"
#include "pidgan/physics/registry.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

using namespace pidgan;
using namespace pidgan::datagen;

namespace {

// Independent Cole-Hopf oracle: trapezoid rule on a fine uniform grid.
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
    const double wt = (k == 0 || k == nodes - 1) ? 0.5 : 1.0;
    const double v = wt * std::exp(e[static_cast<std::size_t>(k)] - top);
    num += std::sin(pi * (x - s)) * v;
    den += v;
  }
  return -num / den;
}

}  // namespace

TEST(BurgersReference, InitialAndBoundaryData) {
  BurgersGridSpec spec;
  spec.nt = 5;
  const Grid2D g = solve_burgers_reference(spec);
  // Interior nodes bitwise; the corners hold the exact zero that sin(+-pi) rounds away from.
  for (Eigen::Index j = 1; j + 1 < g.cols(); ++j)
    EXPECT_EQ(g.fields[0](0, j), -std::sin(std::numbers::pi * g.col_axis(j)));
  EXPECT_EQ(g.fields[0](0, 0), 0.0);
  EXPECT_NEAR(-std::sin(std::numbers::pi * g.col_axis(0)), 0.0, 1e-15);
  for (Eigen::Index i = 1; i < g.rows(); ++i) {
    EXPECT_EQ(g.fields[0](i, 0), 0.0);
    EXPECT_EQ(g.fields[0](i, g.cols() - 1), 0.0);
  }
}

TEST(BurgersReference, MatchesIndependentQuadrature) {
  const double nu = 0.01 / std::numbers::pi;
  Rng rng(1);
  std::uniform_real_distribution<double> ux(-0.99, 0.99), ut(0.01, 1.0);
  std::vector<std::pair<double, double>> pts{{0.0, 1.0}, {0.01, 1.0}, {-0.02, 0.8}, {0.005, 0.5}};
  for (int k = 0; k < 26; ++k) pts.emplace_back(ux(rng), ut(rng));
  for (const auto& [x, t] : pts) EXPECT_NEAR(burgers_cole_hopf(x, t, nu), burgers_trapezoid(x, t, nu), 1e-4) << x << "," << t;
}

TEST(BurgersReference, SatisfiesThePdeInSmoothRegions) {
  const double nu = 0.01 / std::numbers::pi, h = 1e-4;
  for (double x : {-0.7, -0.4, 0.3, 0.6})
    for (double t : {0.1, 0.2}) {
      auto u = [&](double a, double b) { return burgers_cole_hopf(a, b, nu); };
      const double ut = (u(x, t + h) - u(x, t - h)) / (2 * h);
      const double ux = (u(x + h, t) - u(x - h, t)) / (2 * h);
      const double uxx = (u(x + h, t) - 2 * u(x, t) + u(x - h, t)) / (h * h);
      EXPECT_LT(std::abs(ut + u(x, t) * ux - nu * uxx), 1e-4);
    }
}

TEST(SchrodingerReference, InitialConditionAndMassConservation) {
  const auto sol = solve_schrodinger_reference();
  const Grid2D& g = sol.grid;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    EXPECT_EQ(g.fields[0](0, j), 2.0 / std::cosh(g.col_axis(j)));
    EXPECT_EQ(g.fields[1](0, j), 0.0);
  }
  EXPECT_LE((sol.mass.array() - sol.mass(0)).abs().maxCoeff() / sol.mass(0), 1e-6);
  EXPECT_LT(sol.max_tail_energy, 1e-6);
}

TEST(SchrodingerReference, SelfConvergenceIsSecondOrder) {
  auto run = [](int substeps) {
    SchrodingerGridSpec s;
    s.nt = 51;
    s.substeps = substeps;
    const auto sol = solve_schrodinger_reference(s);
    return std::make_pair(sol.grid.fields[0], sol.grid.fields[1]);
  };
  auto diff = [](const auto& a, const auto& b) {
    return std::max((a.first - b.first).cwiseAbs().maxCoeff(), (a.second - b.second).cwiseAbs().maxCoeff());
  };
  const auto a = run(10), b = run(20), c = run(40);
  const double ratio = diff(a, b) / diff(b, c);
  EXPECT_GT(ratio, 3.5);
  EXPECT_LT(ratio, 4.5);
  // Default resolution: halving the step moves the solution very little.
  SchrodingerGridSpec fine;
  fine.substeps = 100;
  const auto d = solve_schrodinger_reference(), e = solve_schrodinger_reference(fine);
  EXPECT_LT((d.grid.fields[0] - e.grid.fields[0]).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(SchrodingerReference, UnderResolvedGridIsRejected) {
  SchrodingerGridSpec s;
  s.nx = 16;
  s.nt = 3;
  EXPECT_THROW(solve_schrodinger_reference(s), std::runtime_error);
}

TEST(DarcyReference, ConstantCoefficientMatchesLinearClosedForm) {
  DarcyGridSpec s;
  s.model.alpha = 0.0;
  s.model.k_s = 2.0;
  s.n1 = 21;
  s.n2 = 11;
  const auto sol = solve_darcy_reference(s);
  for (Eigen::Index i = 0; i < sol.grid.rows(); ++i)
    for (Eigen::Index j = 0; j < sol.grid.cols(); ++j)
      EXPECT_NEAR(sol.grid.fields[0](i, j), darcy_closed_form(sol.grid.col_axis(j), s.domain, s.model), 1e-8);
}

TEST(DarcyReference, NonlinearSolutionResidualAndBoundaries) {
  DarcyGridSpec s;
  s.n1 = 31;
  s.n2 = 21;
  const auto sol = solve_darcy_reference(s);
  EXPECT_LE(sol.residual, 1e-6);
  const Grid2D& g = sol.grid;
  const Matrix& u = g.fields[0];
  const double h2 = g.row_axis(1) - g.row_axis(0);
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    EXPECT_LE(std::abs(u(1, j) - u(0, j)) / h2, 1e-6);
    EXPECT_LE(std::abs(u(g.rows() - 1, j) - u(g.rows() - 2, j)) / h2, 1e-6);
    EXPECT_NEAR(u(0, j), darcy_closed_form(g.col_axis(j), s.domain, s.model), 1e-8);
  }
  EXPECT_EQ(u(5, g.cols() - 1), s.domain.dirichlet_value);
  EXPECT_NEAR(g.fields[1](3, 4), s.model.k(u(3, 4)), 1e-15);
}

TEST(Collision, FrictionlessLabelsConserveMomentumAndEnergy) {
  CollisionSpec spec;
  spec.friction = 0.0;
  Rng rng(2);
  const auto sim = simulate_collisions(200, spec, rng);
  physics::CollisionSystem sys;
  EXPECT_LT(sys.evaluate(sim.x, sim.y).values.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Collision, FrictionDissipatesEnergy) {
  Rng rng(3);
  const auto sim = simulate_collisions(300, {}, rng);
  physics::CollisionSystem sys;
  EXPECT_GT(sys.evaluate(sim.x, sim.y).values.col(1).minCoeff(), 0.0);
  Rng again(3);
  EXPECT_EQ((simulate_collisions(300, {}, again).y - sim.y).norm(), 0.0);
}

TEST(Tossing, IdealProjectileHasZeroResidual) {
  TossingSpec spec;
  spec.wind = 0;
  spec.damping = 0;
  Rng rng(4);
  const auto sim = simulate_tossing(50, spec, rng);
  physics::TossingSystem sys(spec.kinematics);
  EXPECT_LT(sys.evaluate(sim.x, sim.y).values.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Tossing, DampingResidualGrowsWithTime) {
  TossingSpec spec;
  spec.wind = 0;
  spec.damping = 0.2;
  Rng rng(5);
  const auto sim = simulate_tossing(50, spec, rng);
  physics::TossingSystem sys(spec.kinematics);
  const Matrix r = sys.evaluate(sim.x, sim.y).values;
  for (int s = 1; s < spec.kinematics.horizon; ++s)
    for (Eigen::Index i = 0; i < r.rows(); ++i) EXPECT_GT(std::abs(r(i, 2 * s)), std::abs(r(i, 2 * (s - 1))));
  Rng again(5);
  EXPECT_EQ((simulate_tossing(50, spec, again).y - sim.y).norm(), 0.0);
}

TEST(LatinHypercube, Stratification) {
  Rng rng(6);
  Matrix b1(1, 2);
  b1 << 2.0, 3.0;
  const Matrix one = latin_hypercube(1, b1, rng);
  EXPECT_GE(one(0, 0), 2.0);
  EXPECT_LE(one(0, 0), 3.0);
  auto check = [](const Matrix& s, const Matrix& b) {
    const Eigen::Index n = s.rows();
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
      std::vector<int> bins(static_cast<std::size_t>(n), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto bin = static_cast<std::size_t>((s(i, k) - b(k, 0)) / (b(k, 1) - b(k, 0)) * static_cast<double>(n));
        ASSERT_LT(bin, bins.size());
        ++bins[bin];
      }
      for (int c : bins) EXPECT_EQ(c, 1);
    }
  };
  Matrix b2(2, 2);
  b2 << -1, 1, 0, 5;
  check(latin_hypercube(10, b1, rng), b1);
  check(latin_hypercube(100, b2, rng), b2);
  Matrix bad(1, 2);
  bad << 1.0, 1.0;
  EXPECT_THROW(latin_hypercube(5, bad, rng), ValidationError);
  EXPECT_THROW(latin_hypercube(0, b1, rng), ValidationError);
}

TEST(LabelNoise, LevelsAndStatistics) {
  Rng rng(7);
  const Matrix y = 3.0 * standard_normal(100000, 1, rng).array() + 2.0;
  Rng r0(1);
  EXPECT_EQ((add_label_noise(y, {0.0}, r0) - y).norm(), 0.0);
  Rng r1(1), r2(1);
  const Matrix a = add_label_noise(y, {0.1}, r1), b = add_label_noise(y, {0.1}, r2);
  EXPECT_EQ((a - b).norm(), 0.0);
  const Matrix e = a - y;
  const double sd_y = std::sqrt((y.array() - y.mean()).square().mean());
  const double sd_e = std::sqrt((e.array() - e.mean()).square().mean());
  EXPECT_NEAR(sd_e / (0.1 * sd_y), 1.0, 0.05);
  EXPECT_THROW(add_label_noise(y, {-0.1}, r1), ValidationError);
}

TEST(Assemble, DefaultSplitSizes) {
  const Dataset b = assemble("burgers");
  EXPECT_EQ(b.x_u.rows(), 150);
  EXPECT_EQ(b.x_f.rows(), 10000);
  EXPECT_EQ(b.x_test.rows(), 256 * 100);
  for (Eigen::Index i = 0; i < b.x_u.rows(); ++i)
    EXPECT_TRUE(b.x_u(i, 1) == 0.0 || std::abs(b.x_u(i, 0)) == 1.0);
  const Dataset s = assemble("schrodinger");
  EXPECT_EQ(s.x_u.rows(), 100);
  EXPECT_EQ((s.x_u.col(1).array() == 0.0).count(), 50);
  EXPECT_EQ(s.x_f.rows(), 20000);
  const Dataset c = assemble("collision");
  EXPECT_EQ(c.x_u.rows(), 108);
  EXPECT_EQ(c.x_f.rows(), 436);
  const Dataset t = assemble("tossing");
  EXPECT_EQ(t.x_u.rows(), 217);
  EXPECT_EQ(t.x_f.rows(), 327);
  EXPECT_EQ(t.y_u.cols(), 24);
  AssembleOptions small;
  small.darcy.n1 = small.darcy.n2 = 21;
  const Dataset d = assemble("darcy", small);
  EXPECT_EQ(d.x_u.rows(), 200);
  EXPECT_EQ(d.y_u.cols(), 1);
  EXPECT_EQ(d.y_test.cols(), 2);
  EXPECT_EQ(d.x_f.rows(), 10400);
}

TEST(Assemble, NormalizationAndErrors) {
  const Dataset c = assemble("collision");
  Matrix all(c.x_u.rows() + c.x_f.rows(), c.x_u.cols());
  all << c.x_u, c.x_f;
  const Matrix n = c.x_norm.apply(all);
  EXPECT_LT(n.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(((n.array().square().colwise().mean()).sqrt() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LT((c.x_norm.invert(n) - all).cwiseAbs().maxCoeff(), 1e-10);
  AssembleOptions too_many;
  too_many.n_u = 100000;
  EXPECT_THROW(assemble("burgers", too_many), ValidationError);
  EXPECT_THROW(assemble("heat"), ValidationError);
}

TEST(Assemble, DeterministicArchiveRoundTrip) {
  AssembleOptions o;
  o.seed = 9;
  o.noise.level = 0.1;
  const Dataset a = assemble("tossing", o), b = assemble("tossing", o);
  EXPECT_EQ(dataset_fingerprint(a), dataset_fingerprint(b));
  const auto path = std::filesystem::temp_directory_path() / "pidgan_dataset_roundtrip.bin";
  save_dataset(path.string(), a);
  const Dataset c = load_dataset(path.string());
  EXPECT_EQ(dataset_fingerprint(a), dataset_fingerprint(c));
  EXPECT_EQ((a.y_u - c.y_u).norm(), 0.0);
  std::filesystem::remove(path);
  o.seed = 10;
  EXPECT_NE(dataset_fingerprint(assemble("tossing", o)), dataset_fingerprint(a));
}
