#pragma once

#include "pidgan/io/archive.hpp"
#include "pidgan/networks/models.hpp"

namespace pidgan::networks {

inline constexpr const char* kCheckpointFormat = "pidgan-checkpoint/1";

/// The trained networks of one run. Discriminator and inference network are
/// absent for the dropout baselines.
struct ModelBundle {
  Generator generator;
  std::optional<Discriminator> discriminator;
  std::optional<InferenceNet> inference;
};

inline io::Json spec_to_json(const NetworkSpec& s) {
  return {{"input_dim", s.input_dim}, {"output_dim", s.output_dim}, {"hidden", s.hidden},
          {"activation", s.activation}, {"dropout", s.dropout}};
}

inline NetworkSpec spec_from_json(const io::Json& j) {
  NetworkSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  s.hidden = j.at("hidden").get<std::vector<int>>();
  s.activation = j.at("activation").get<std::string>();
  s.dropout = j.at("dropout").get<double>();
  s.validate();
  return s;
}

namespace detail {

inline void put_normalizer(io::Archive& a, const std::string& key, const Normalizer& n) {
  a.arrays[key + "/mean"] = n.mean;
  a.arrays[key + "/scale"] = n.scale;
}

inline Normalizer get_normalizer(const io::Archive& a, const std::string& key) {
  return {a.at(key + "/mean"), a.at(key + "/scale")};
}

inline void put_params(io::Archive& a, const std::vector<const ad::Parameter*>& ps) {
  for (const auto* p : ps) a.arrays[p->name] = p->value;
}

inline void get_params(const io::Archive& a, const std::vector<ad::Parameter*>& ps) {
  for (auto* p : ps) {
    const Matrix& m = a.at(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
      throw ValidationError("checkpoint array '" + p->name + "' has the wrong shape");
    p->value = m;
  }
}

}  // namespace detail

inline io::Archive to_archive(const ModelBundle& b, std::uint64_t seed, const io::Json& extra = io::Json::object()) {
  io::Archive a;
  a.format = kCheckpointFormat;
  const auto& g = b.generator;
  io::Json meta = {{"seed", seed}, {"extra", extra}};
  meta["generator"] = {{"body", spec_to_json(g.spec().body)}, {"latent_dim", g.latent_dim()}};
  if (g.spec().coefficient) meta["generator"]["coefficient"] = spec_to_json(*g.spec().coefficient);
  detail::put_normalizer(a, "generator/x_norm", g.input_normalizer());
  detail::put_normalizer(a, "generator/y_norm", g.output_normalizer());
  detail::put_params(a, g.parameters());
  if (b.discriminator) {
    const auto& d = *b.discriminator;
    meta["discriminator"] = {{"net", spec_to_json(d.net().spec())}, {"eta_dim", d.eta_dim()}};
    detail::put_normalizer(a, "discriminator/x_norm", d.input_normalizer());
    detail::put_normalizer(a, "discriminator/y_norm", d.output_normalizer());
    detail::put_params(a, d.parameters());
  }
  if (b.inference) {
    const auto& q = *b.inference;
    meta["inference"] = {{"net", spec_to_json(q.net().spec())}};
    detail::put_normalizer(a, "inference/x_norm", q.input_normalizer());
    detail::put_normalizer(a, "inference/y_norm", q.output_normalizer());
    detail::put_params(a, q.parameters());
  }
  a.meta = meta;
  return a;
}

inline ModelBundle from_archive(const io::Archive& a) {
  if (a.format != kCheckpointFormat) throw ValidationError("not a checkpoint archive (format '" + a.format + "')");
  Rng scratch(0);  // initial weights are overwritten below
  const auto& gm = a.meta.at("generator");
  GeneratorSpec gs;
  gs.body = spec_from_json(gm.at("body"));
  gs.latent_dim = gm.at("latent_dim").get<int>();
  if (gm.contains("coefficient")) gs.coefficient = spec_from_json(gm.at("coefficient"));
  ModelBundle b{Generator(gs, detail::get_normalizer(a, "generator/x_norm"),
                          detail::get_normalizer(a, "generator/y_norm"), scratch),
                std::nullopt, std::nullopt};
  detail::get_params(a, b.generator.parameters());
  if (a.meta.contains("discriminator")) {
    const auto& dm = a.meta.at("discriminator");
    b.discriminator.emplace(spec_from_json(dm.at("net")), detail::get_normalizer(a, "discriminator/x_norm"),
                            detail::get_normalizer(a, "discriminator/y_norm"), dm.at("eta_dim").get<int>(), scratch);
    detail::get_params(a, b.discriminator->parameters());
  }
  if (a.meta.contains("inference")) {
    const auto& qm = a.meta.at("inference");
    b.inference.emplace(spec_from_json(qm.at("net")), detail::get_normalizer(a, "inference/x_norm"),
                        detail::get_normalizer(a, "inference/y_norm"), scratch);
    detail::get_params(a, b.inference->parameters());
  }
  return b;
}

inline void save_checkpoint(const std::string& path, const ModelBundle& b, std::uint64_t seed,
                            const io::Json& extra = io::Json::object()) {
  io::write_archive(path, to_archive(b, seed, extra));
}

inline ModelBundle load_checkpoint(const std::string& path) { return from_archive(io::read_archive(path)); }

}  // namespace pidgan::networks
