#pragma once

#include "pidgan/datagen/burgers.hpp"
#include "pidgan/datagen/darcy.hpp"
#include "pidgan/datagen/schrodinger.hpp"
#include "pidgan/datagen/simulators.hpp"
#include "pidgan/io/archive.hpp"
#include "pidgan/networks/models.hpp"

namespace pidgan::datagen {

inline constexpr const char* kDatasetFormat = "pidgan-dataset/1";

struct Dataset {
  std::string experiment;
  Matrix x_u, y_u;       // labeled inputs and (possibly noisy) labels
  Matrix x_f;            // unlabeled collocation inputs
  Matrix x_test, y_test;  // evaluation set; y_test may carry extra columns (Darcy k)
  networks::Normalizer x_norm;  // fitted on x_u and x_f together
  io::Json meta = io::Json::object();

  /// Test-set grid layout (rows x cols, row-major order in x_test) when the
  /// test set is a full grid.
  std::optional<std::pair<Eigen::Index, Eigen::Index>> test_grid() const {
    if (!meta.contains("test_grid")) return std::nullopt;
    return std::make_pair(meta["test_grid"]["rows"].get<Eigen::Index>(), meta["test_grid"]["cols"].get<Eigen::Index>());
  }
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"burgers", "schrodinger", "darcy", "collision", "tossing"};
  return names;
}

struct AssembleOptions {
  std::uint64_t seed = 0;
  NoiseSpec noise;
  // Overrides of the default split sizes. Labeled counts for Schrodinger are
  // n_initial + n_boundary; for Darcy n_boundary counts boundary collocation points.
  std::optional<Eigen::Index> n_u, n_f, n_test, n_initial, n_boundary;
  BurgersGridSpec burgers;
  SchrodingerGridSpec schrodinger;
  DarcyGridSpec darcy;
  CollisionSpec collision;
  TossingSpec tossing;
};

namespace detail {

inline Matrix vstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() + b.rows(), std::max(a.cols(), b.cols()));
  if (a.rows()) out.topRows(a.rows()) = a;
  if (b.rows()) out.bottomRows(b.rows()) = b;
  return out;
}

inline void finish(Dataset& d, const AssembleOptions& opt, Rng& rng) {
  const Matrix clean = d.y_u;
  d.y_u = add_label_noise(clean, opt.noise, rng);
  d.x_norm = networks::Normalizer::fit(vstack(d.x_u, d.x_f));
  d.meta["experiment"] = d.experiment;
  d.meta["seed"] = opt.seed;
  d.meta["noise"] = {{"level", opt.noise.level}, {"scale", opt.noise.scale}};
  d.meta["sizes"] = {{"n_u", d.x_u.rows()}, {"n_f", d.x_f.rows()}, {"n_test", d.x_test.rows()}};
}

inline void set_grid(Dataset& d, const Grid2D& g, const std::string& row_name, const std::string& col_name) {
  d.meta["test_grid"] = {{"rows", g.rows()}, {"cols", g.cols()}, {"row_axis", row_name}, {"col_axis", col_name}};
}

inline Dataset assemble_burgers(const AssembleOptions& opt, Rng& rng) {
  const Grid2D g = solve_burgers_reference(opt.burgers);
  Dataset d;
  d.experiment = "burgers";
  // Candidate labels: the initial row and both boundary columns.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> cand;
  for (Eigen::Index j = 0; j < g.cols(); ++j) cand.emplace_back(0, j);
  for (Eigen::Index i = 1; i < g.rows(); ++i) {
    cand.emplace_back(i, 0);
    cand.emplace_back(i, g.cols() - 1);
  }
  const auto pick = choose_indices(static_cast<Eigen::Index>(cand.size()), opt.n_u.value_or(150), rng,
                                   "initial/boundary points");
  d.x_u.resize(static_cast<Eigen::Index>(pick.size()), 2);
  d.y_u.resize(d.x_u.rows(), 1);
  for (std::size_t p = 0; p < pick.size(); ++p) {
    const auto [i, j] = cand[static_cast<std::size_t>(pick[p])];
    d.x_u(static_cast<Eigen::Index>(p), 0) = g.col_axis(j);
    d.x_u(static_cast<Eigen::Index>(p), 1) = g.row_axis(i);
    d.y_u(static_cast<Eigen::Index>(p), 0) = g.fields[0](i, j);
  }
  Matrix bounds(2, 2);
  bounds << -1, 1, 0, 1;
  d.x_f = latin_hypercube(opt.n_f.value_or(10000), bounds, rng);
  d.x_test = g.points();
  d.y_test = g.values();
  set_grid(d, g, "t", "x");
  d.meta["solver"] = {{"method", "cole-hopf gauss-legendre"}, {"nu", opt.burgers.nu}, {"panels", opt.burgers.panels}};
  d.meta["output_names"] = {"u"};
  return d;
}

inline Dataset assemble_schrodinger(const AssembleOptions& opt, Rng& rng) {
  const SchrodingerSolution sol = solve_schrodinger_reference(opt.schrodinger);
  const Grid2D& g = sol.grid;
  Dataset d;
  d.experiment = "schrodinger";
  const Eigen::Index n0 = opt.n_initial.value_or(50), nb = opt.n_boundary.value_or(50);
  const auto ic = choose_indices(g.cols(), n0, rng, "initial points");
  const auto bc = choose_indices(g.rows(), nb, rng, "boundary time levels");
  d.x_u.resize(n0 + nb, 2);
  d.y_u.resize(n0 + nb, 2);
  for (Eigen::Index p = 0; p < n0; ++p) {
    const Eigen::Index j = ic[static_cast<std::size_t>(p)];
    d.x_u.row(p) << g.col_axis(j), 0.0;
    d.y_u.row(p) << g.fields[0](0, j), g.fields[1](0, j);
  }
  // Half of the boundary points on each side; h(5, t) = h(-5, t) by periodicity.
  for (Eigen::Index p = 0; p < nb; ++p) {
    const Eigen::Index i = bc[static_cast<std::size_t>(p)];
    const double side = p < nb / 2 ? opt.schrodinger.x_min : opt.schrodinger.x_max;
    d.x_u.row(n0 + p) << side, g.row_axis(i);
    d.y_u.row(n0 + p) << g.fields[0](i, 0), g.fields[1](i, 0);
  }
  Matrix bounds(2, 2);
  bounds << opt.schrodinger.x_min, opt.schrodinger.x_max, 0.0, opt.schrodinger.t_max;
  d.x_f = latin_hypercube(opt.n_f.value_or(20000), bounds, rng);
  d.x_test = g.points();
  d.y_test = g.values();
  set_grid(d, g, "t", "x");
  const double drift = (sol.mass.array() - sol.mass(0)).abs().maxCoeff() / sol.mass(0);
  d.meta["solver"] = {{"method", "strang split-step fourier"},
                      {"substeps", opt.schrodinger.substeps},
                      {"mass_drift", drift},
                      {"max_tail_energy", sol.max_tail_energy}};
  d.meta["output_names"] = {"u", "v"};
  return d;
}

inline Dataset assemble_darcy(const AssembleOptions& opt, Rng& rng) {
  const DarcySolution sol = solve_darcy_reference(opt.darcy);
  const Grid2D& g = sol.grid;
  Dataset d;
  d.experiment = "darcy";
  const Matrix pts = g.points(), vals = g.values();
  const auto pick = choose_indices(pts.rows(), opt.n_u.value_or(200), rng, "grid nodes for labels");
  d.x_u = select_rows(pts, pick);
  d.y_u = select_rows(vals, pick).leftCols(1);
  // Boundary points, a quarter on each edge.
  const Eigen::Index nb = opt.n_boundary.value_or(400);
  const auto& dom = opt.darcy.domain;
  std::uniform_real_distribution<double> u1(0.0, dom.length1), u2(0.0, dom.length2);
  Matrix boundary(nb, 2);
  for (Eigen::Index p = 0; p < nb; ++p) {
    switch (p % 4) {
      case 0: boundary.row(p) << 0.0, u2(rng); break;
      case 1: boundary.row(p) << dom.length1, u2(rng); break;
      case 2: boundary.row(p) << u1(rng), 0.0; break;
      default: boundary.row(p) << u1(rng), dom.length2; break;
    }
  }
  Matrix bounds(2, 2);
  bounds << 0.0, dom.length1, 0.0, dom.length2;
  d.x_f = vstack(latin_hypercube(opt.n_f.value_or(10000), bounds, rng), boundary);
  d.x_test = pts;
  d.y_test = vals;
  set_grid(d, g, "x2", "x1");
  d.meta["solver"] = {{"method", "finite-volume newton"},  {"residual", sol.residual},
                      {"iterations", sol.iterations},      {"k_s", opt.darcy.model.k_s},
                      {"alpha", opt.darcy.model.alpha}};
  d.meta["n_boundary"] = nb;
  d.meta["output_names"] = {"u", "k"};
  return d;
}

inline Dataset assemble_simulated(const std::string& name, const Simulation& all, Eigen::Index n_u, Eigen::Index n_f) {
  Dataset d;
  d.experiment = name;
  d.x_u = all.x.topRows(n_u);
  d.y_u = all.y.topRows(n_u);
  d.x_f = all.x.middleRows(n_u, n_f);
  const Eigen::Index rest = all.x.rows() - n_u - n_f;
  d.x_test = all.x.bottomRows(rest);
  d.y_test = all.y.bottomRows(rest);
  return d;
}

}  // namespace detail

/// Builds the labeled / collocation / test splits for an experiment.
inline Dataset assemble(const std::string& experiment, const AssembleOptions& opt = {}) {
  opt.noise.validate();
  Rng rng(opt.seed);
  Dataset d;
  if (experiment == "burgers") {
    d = detail::assemble_burgers(opt, rng);
  } else if (experiment == "schrodinger") {
    d = detail::assemble_schrodinger(opt, rng);
  } else if (experiment == "darcy") {
    d = detail::assemble_darcy(opt, rng);
  } else if (experiment == "collision") {
    const Eigen::Index nu = opt.n_u.value_or(108), nf = opt.n_f.value_or(436), nt = opt.n_test.value_or(1000);
    d = detail::assemble_simulated(experiment, simulate_collisions(nu + nf + nt, opt.collision, rng), nu, nf);
    d.meta["simulator"] = {{"friction", opt.collision.friction}, {"gravity", opt.collision.gravity}};
    d.meta["output_names"] = {"v_a2", "v_b2"};
  } else if (experiment == "tossing") {
    const Eigen::Index nu = opt.n_u.value_or(217), nf = opt.n_f.value_or(327), nt = opt.n_test.value_or(1000);
    d = detail::assemble_simulated(experiment, simulate_tossing(nu + nf + nt, opt.tossing, rng), nu, nf);
    d.meta["simulator"] = {{"wind", opt.tossing.wind},
                           {"damping", opt.tossing.damping},
                           {"dt", opt.tossing.kinematics.dt},
                           {"horizon", opt.tossing.kinematics.horizon}};
  } else {
    std::string valid;
    for (const auto& n : experiment_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ValidationError("unknown experiment '" + experiment + "'; valid: " + valid);
  }
  detail::finish(d, opt, rng);
  return d;
}

inline io::Archive to_archive(const Dataset& d) {
  io::Archive a;
  a.format = kDatasetFormat;
  a.meta = d.meta;
  a.meta["experiment"] = d.experiment;
  a.arrays["x_u"] = d.x_u;
  a.arrays["y_u"] = d.y_u;
  a.arrays["x_f"] = d.x_f;
  a.arrays["x_test"] = d.x_test;
  a.arrays["y_test"] = d.y_test;
  a.arrays["x_norm/mean"] = d.x_norm.mean;
  a.arrays["x_norm/scale"] = d.x_norm.scale;
  return a;
}

inline Dataset dataset_from_archive(const io::Archive& a) {
  if (a.format != kDatasetFormat) throw ValidationError("not a dataset archive (format '" + a.format + "')");
  Dataset d;
  d.experiment = a.meta.at("experiment").get<std::string>();
  d.meta = a.meta;
  d.x_u = a.at("x_u");
  d.y_u = a.at("y_u");
  d.x_f = a.at("x_f");
  d.x_test = a.at("x_test");
  d.y_test = a.at("y_test");
  d.x_norm = {a.at("x_norm/mean"), a.at("x_norm/scale")};
  return d;
}

inline void save_dataset(const std::string& path, const Dataset& d) { io::write_archive(path, to_archive(d)); }

inline Dataset load_dataset(const std::string& path) {
  return dataset_from_archive(io::read_archive(path, kDatasetFormat));
}

/// Content hash of the serialized dataset.
inline std::string dataset_fingerprint(const Dataset& d) { return io::fingerprint(to_archive(d)); }

}  // namespace pidgan::datagen
