#include "pidgan/physics/registry.hpp"
#include "pidgan/training/trainer.hpp"
#include "support/fd.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace pidgan;
using namespace pidgan::training;
using pidgan::testing::uniform;

namespace {

const double kLn2 = std::numbers::ln2;

struct Fixture {
  ad::Tape tape;
  ad::Var c(double v, Eigen::Index rows = 1) { return tape.constant(Matrix::Constant(rows, 1, v)); }
  ad::Var m(std::initializer_list<double> v) {
    Matrix x(static_cast<Eigen::Index>(v.size()), 1);
    Eigen::Index i = 0;
    for (double e : v) x(i++, 0) = e;
    return tape.constant(x);
  }
};

void expect_total_is_sum(const LossBreakdown& b) {
  double s = 0;
  for (const auto& t : b.terms) s += t.second;
  EXPECT_NEAR(b.total, s, 1e-10);
}

}  // namespace

TEST(PinnLoss, HandComputedValues) {
  Fixture f;
  EXPECT_EQ(pinn_loss(f.m({1, 2}), f.m({1, 2}), f.m({0, 0}), 3.0).total.scalar(), 0.0);
  EXPECT_NEAR(pinn_loss(f.m({0, 0}), f.m({1, -1}), ad::Var{}, 1.0).total.scalar(), 1.0, 1e-10);
  const auto b = pinn_loss(f.m({0, 0}), f.m({1, -1}), f.m({0.5}), 2.0).breakdown();
  EXPECT_NEAR(b.total, 1.5, 1e-10);
  EXPECT_NEAR(b.term("physics"), 0.5, 1e-10);
  expect_total_is_sum(b);
  EXPECT_THROW(pinn_loss(f.tape.constant(Matrix(0, 1)), f.tape.constant(Matrix(0, 1)), ad::Var{}, 1.0),
               ValidationError);
}

TEST(CganLosses, HandComputedValuesAndLimits) {
  Fixture f;
  EXPECT_NEAR(cgan_generator_loss(f.c(0.5, 3)).total.scalar(), 0.5, 1e-12);
  EXPECT_NEAR(cgan_discriminator_loss(f.c(0.5, 3), f.c(0.5, 3)).total.scalar(), 2 * kLn2, 1e-10);
  EXPECT_LT(cgan_discriminator_loss(f.c(1.0 - 1e-12), f.c(1e-12)).total.scalar(), 1e-6);
  EXPECT_LT(cgan_generator_loss(f.c(1e-12)).total.scalar(), 1e-11);
}

TEST(CganLosses, OutOfRangeProbabilitiesAreClampedWithAWarning) {
  Fixture f;
  int warnings = 0;
  ScopedWarningHandler guard([&](const std::string&) { ++warnings; });
  const Loss l = cgan_discriminator_loss(f.c(1.0), f.c(0.0));
  EXPECT_TRUE(std::isfinite(l.total.scalar()));
  EXPECT_EQ(l.clamped, 2);
  EXPECT_EQ(warnings, 2);
}

TEST(PigLosses, HandComputedValues) {
  Fixture f;
  EXPECT_NEAR(pig_generator_loss(f.c(0.5, 4), f.c(0.0, 7), 3.0).total.scalar(), 0.5, 1e-12);
  EXPECT_NEAR(pig_generator_loss(f.c(0.0), f.c(2.0), 1.0).total.scalar(), 4.0, 1e-12);
  EXPECT_LT(pig_discriminator_loss(f.c(1.0 - 1e-12), f.c(1e-12)).total.scalar(), 1e-6);
}

TEST(PidLosses, HandComputedValues) {
  Fixture f;
  const Loss g = pid_generator_loss(f.c(0.5, 3), f.c(0.5, 5));
  EXPECT_NEAR(g.total.scalar(), 1.0, 1e-12);
  const Loss d = pid_discriminator_loss(f.c(0.5, 3), f.c(0.5, 3), f.c(0.5, 5), f.c(0.5, 5));
  EXPECT_NEAR(d.total.scalar(), 4 * kLn2, 1e-10);
  EXPECT_NEAR(pid_generator_loss(f.c(0.2, 2), f.c(0.4, 6)).total.scalar(), 0.6, 1e-12);
  // Identical inputs to terms 3 and 4 give the pair -log p - log(1 - p) >= 2 ln 2.
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double p = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const auto b = pid_discriminator_loss(f.c(0.5), f.c(0.5), f.c(p), f.c(p)).breakdown();
    EXPECT_GE(b.term("d_term3") + b.term("d_term4"), 2 * kLn2 - 1e-12);
  }
}

TEST(PidLosses, ImperfectDiscriminator) {
  Fixture f;
  EXPECT_NEAR(pid_imperfect_discriminator_loss(f.c(0.5), f.c(0.5), f.c(0.5)).total.scalar(), 3 * kLn2, 1e-10);
  EXPECT_LT(pid_imperfect_discriminator_loss(f.c(1.0 - 1e-12), f.c(1e-12), f.c(1.0 - 1e-12)).total.scalar(), 1e-6);
  const auto b = pid_imperfect_discriminator_loss(f.c(0.3), f.c(0.6), f.c(0.8)).breakdown();
  EXPECT_EQ(b.terms.size(), 3u);
  EXPECT_FALSE(b.has("d_term4"));
}

TEST(PidLosses, GeneratorObjectiveIsSymmetricInItsTwoGroups) {
  Rng rng(4);
  Fixture f;
  const Matrix a = uniform(6, 1, 0.01, 0.99, rng), b = uniform(9, 1, 0.01, 0.99, rng);
  const double ab = pid_generator_loss(f.tape.constant(a), f.tape.constant(b)).total.scalar();
  const double ba = pid_generator_loss(f.tape.constant(b), f.tape.constant(a)).total.scalar();
  EXPECT_NEAR(ab, ba, 1e-15);
}

// Every loss equals a straight-line recomputation from the same inputs.
TEST(LossProperties, StraightLineRecomputation) {
  Rng rng(5);
  auto nlog = [](const Matrix& p) { return -p.array().log().mean(); };
  auto nlog1m = [](const Matrix& p) { return -(1.0 - p.array()).log().mean(); };
  for (int trial = 0; trial < 100; ++trial) {
    Fixture f;
    const Matrix fu = uniform(7, 1, 0.01, 0.99, rng), ru = uniform(7, 1, 0.01, 0.99, rng);
    const Matrix ff = uniform(11, 1, 0.01, 0.99, rng), rf = uniform(11, 1, 0.01, 0.99, rng);
    const Matrix res = uniform(11, 2, -2, 2, rng), y = uniform(7, 2, -1, 1, rng), yh = uniform(7, 2, -1, 1, rng);
    const double lambda = std::uniform_real_distribution<double>(0.1, 5)(rng);
    auto C = [&](const Matrix& m) { return f.tape.constant(m); };
    const double phys = lambda / 11.0 * res.array().square().sum();
    EXPECT_NEAR(pinn_loss(C(y), C(yh), C(res), lambda).total.scalar(), (y - yh).squaredNorm() / 7.0 + phys, 1e-10);
    EXPECT_NEAR(pig_generator_loss(C(fu), C(res), lambda).total.scalar(), fu.mean() + phys, 1e-10);
    EXPECT_NEAR(cgan_discriminator_loss(C(fu), C(ru)).total.scalar(), nlog(fu) + nlog1m(ru), 1e-10);
    const auto d4 = pid_discriminator_loss(C(fu), C(ru), C(ff), C(rf)).breakdown();
    EXPECT_NEAR(d4.total, nlog(fu) + nlog1m(ru) + nlog(ff) + nlog1m(rf), 1e-10);
    expect_total_is_sum(d4);
    EXPECT_NEAR(pid_imperfect_discriminator_loss(C(fu), C(ru), C(ff)).total.scalar(),
                nlog(fu) + nlog1m(ru) + nlog(ff), 1e-10);
    EXPECT_NEAR(pid_generator_loss(C(fu), C(ff)).total.scalar(), fu.mean() + ff.mean(), 1e-12);
  }
}

TEST(QLoss, HandComputedValuesAndSymmetry) {
  Fixture f;
  Matrix z(1, 2), zh(1, 2);
  z << 1, 0;
  zh << 0, 0;
  EXPECT_NEAR(q_reconstruction_loss(f.tape.constant(z), f.tape.constant(zh)).scalar(), 0.5, 1e-15);
  EXPECT_EQ(q_reconstruction_loss(f.tape.constant(z), f.tape.constant(z)).scalar(), 0.0);
  Rng rng(6);
  const Matrix a = uniform(5, 3, -1, 1, rng), b = uniform(5, 3, -1, 1, rng);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
  perm.indices() << 2, 0, 1;
  EXPECT_NEAR(q_reconstruction_loss(f.tape.constant(a), f.tape.constant(b)).scalar(),
              q_reconstruction_loss(f.tape.constant(a * perm), f.tape.constant(b * perm)).scalar(), 1e-15);
  EXPECT_THROW(q_reconstruction_loss(f.tape.constant(a), f.tape.constant(b.leftCols(2))), ValidationError);
}

TEST(ApinnUpdate, MovingAverageRule) {
  EXPECT_DOUBLE_EQ(apinn_update(2.0, {4.0, 2.0}), 2.0);
  EXPECT_NEAR(apinn_update(0.0, {10.0, 1.0}), 1.0, 1e-15);
  int warnings = 0;
  ScopedWarningHandler guard([&](const std::string&) { ++warnings; });
  EXPECT_EQ(apinn_update(3.5, {1.0, 0.0}), 3.5);
  EXPECT_EQ(warnings, 1);
  const auto s = apinn_gradient_stats({Matrix::Constant(2, 2, -3.0)}, {Matrix::Zero(2, 2)});
  EXPECT_EQ(s.max_abs_data, 3.0);
  EXPECT_EQ(s.mean_abs_physics, 0.0);
}

TEST(TrainerConfig, ValidationAndJson) {
  TrainerConfig c;
  c.lambda = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  EXPECT_THROW(parse_method("vae"), ValidationError);
  EXPECT_THROW(trainer_config_from_json({{"epoch", 3}}), ValidationError);
  EXPECT_THROW(trainer_config_from_json({{"method", "pig_gan"}, {"mode", "imperfect"}}), ValidationError);
  TrainerConfig d;
  d.method = Method::apinn;
  d.learning_rate = 0.01;
  d.architecture.latent_dim = 3;
  const TrainerConfig e = trainer_config_from_json(to_json(d));
  EXPECT_EQ(to_json(e), to_json(d));
  EXPECT_DOUBLE_EQ(TrainerConfig{}.resolved_learning_rate(true), 1e-4);
  EXPECT_DOUBLE_EQ(TrainerConfig{}.resolved_learning_rate(false), 1e-3);
}

namespace {

// Small Burgers-like problem: labels from u = -sin(pi x) at t = 0.
struct Toy {
  physics::BurgersSystem system;
  TrainingData data;
  networks::Normalizer x_norm;

  explicit Toy(std::uint64_t seed = 1) {
    Rng rng(seed);
    data.x_u = uniform(20, 2, -1, 1, rng);
    data.x_u.col(1).setZero();
    data.y_u = (-std::numbers::pi * data.x_u.col(0).array()).sin().matrix();
    data.x_f = uniform(200, 2, -1, 1, rng);
    data.x_f.col(1) = data.x_f.col(1).cwiseAbs();
    Matrix all(220, 2);
    all << data.x_u, data.x_f;
    x_norm = networks::Normalizer::fit(all);
  }
};

TrainerConfig small(Method m, int epochs = 3) {
  TrainerConfig c;
  c.method = m;
  c.epochs = epochs;
  c.batch_size = 32;
  c.seed = 42;
  c.architecture.generator_hidden = {8, 8};
  c.architecture.discriminator_hidden = {6};
  c.architecture.inference_hidden = {6};
  return c;
}

}  // namespace

TEST(Train, ZeroEpochsLeavesNetworksUnchanged) {
  Toy toy;
  for (Method m : {Method::pinn, Method::pid_gan}) {
    const auto c = small(m, 0);
    const auto models = make_models(c, toy.data, toy.system, toy.x_norm);
    const auto r = train(c, toy.data, toy.system, models);
    EXPECT_TRUE(r.log.records.empty());
    const auto a = models.generator.parameters(), b = r.models.generator.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ((a[i]->value - b[i]->value).norm(), 0.0);
  }
}

TEST(Train, EveryMethodRunsAndLogsItsSchedule) {
  Toy toy;
  for (Method m : {Method::pinn, Method::apinn, Method::cgan, Method::pig_gan, Method::pid_gan}) {
    const auto c = small(m, 4);
    const auto r = train(c, toy.data, toy.system, make_models(c, toy.data, toy.system, toy.x_norm));
    ASSERT_EQ(r.log.records.size(), 4u) << to_string(m);
    for (const auto& rec : r.log.records) {
      EXPECT_EQ(rec.schedule, is_gan(m) ? "GGGGGD" : "G");
      expect_total_is_sum(rec.generator);
      if (rec.discriminator) expect_total_is_sum(*rec.discriminator);
    }
    EXPECT_TRUE(r.log.records.back().gradients.has_value());
  }
}

TEST(Train, SameSeedGivesBitwiseIdenticalLogs) {
  Toy toy;
  for (Method m : {Method::pid_gan, Method::apinn}) {
    const auto c = small(m, 5);
    const auto a = train(c, toy.data, toy.system, make_models(c, toy.data, toy.system, toy.x_norm));
    const auto b = train(c, toy.data, toy.system, make_models(c, toy.data, toy.system, toy.x_norm));
    EXPECT_EQ(a.log.to_jsonl(), b.log.to_jsonl());
    auto c2 = c;
    c2.seed = 43;
    const auto d = train(c2, toy.data, toy.system, make_models(c2, toy.data, toy.system, toy.x_norm));
    EXPECT_NE(a.log.to_jsonl(), d.log.to_jsonl());
  }
}

TEST(Train, GradientReportsDoNotPerturbTraining) {
  Toy toy;
  const auto c = small(Method::pig_gan, 6);
  auto with = c;
  with.gradient_report_every = 2;
  const auto a = train(c, toy.data, toy.system, make_models(c, toy.data, toy.system, toy.x_norm));
  const auto b = train(with, toy.data, toy.system, make_models(with, toy.data, toy.system, toy.x_norm));
  ASSERT_EQ(a.log.records.size(), b.log.records.size());
  for (std::size_t i = 0; i < a.log.records.size(); ++i)
    EXPECT_EQ(a.log.records[i].generator.total, b.log.records[i].generator.total);
  EXPECT_TRUE(b.log.records[1].gradients.has_value());
}

TEST(Train, LambdaHeuristicNormalizesTheInitialResidual) {
  Toy toy;
  auto c = small(Method::pid_gan, 0);
  c.lambda_heuristic = true;
  const auto models = make_models(c, toy.data, toy.system, toy.x_norm);
  const auto r = train(c, toy.data, toy.system, models);
  Rng rng(c.seed ^ 0x51ed2701ULL);
  const Matrix res = training::detail::predicted_residuals(models.generator, toy.system, toy.data.x_f, rng);
  EXPECT_NEAR(r.lambda * res.array().square().mean(), 1.0, 1e-6);
}

TEST(Train, NonFiniteLossAbortsWithTheEpoch) {
  Toy toy;
  toy.data.y_u(3, 0) = std::nan("");
  const auto c = small(Method::pinn, 5);
  try {
    train(c, toy.data, toy.system, make_models(c, Toy().data, toy.system, toy.x_norm));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1);
  }
}

TEST(Train, ImperfectModeUsesThreeDiscriminatorTerms) {
  physics::CollisionSystem system;
  Rng rng(8);
  TrainingData d;
  d.x_u = uniform(30, 5, 0.5, 3, rng);
  d.y_u = uniform(30, 2, 0, 2, rng);
  d.x_f = uniform(60, 5, 0.5, 3, rng);
  auto c = small(Method::pid_gan, 2);
  c.mode = PhysicsMode::imperfect;
  const auto r = train(c, d, system, make_models(c, d, system, networks::Normalizer::fit(d.x_f)));
  EXPECT_EQ(r.log.records.back().discriminator->terms.size(), 3u);
}

TEST(Train, PinnReducesItsLossOnAToyProblem) {
  Toy toy;
  auto c = small(Method::pinn, 400);
  c.learning_rate = 1e-2;
  c.dropout = 0.0;
  ScopedWarningHandler quiet([](const std::string&) {});
  const auto r = train(c, toy.data, toy.system, make_models(c, toy.data, toy.system, toy.x_norm));
  EXPECT_LT(r.log.records.back().generator.total, 0.2 * r.log.records.front().generator.total);
}
