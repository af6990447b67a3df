#pragma once

#include "pidgan/io/archive.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pidgan::training {

enum class Method { pinn, apinn, cgan, pig_gan, pid_gan };
enum class PhysicsMode { perfect, imperfect };

inline const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"pinn", "apinn", "cgan", "pig_gan", "pid_gan"};
  return names;
}

inline std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

inline Method parse_method(const std::string& s) {
  const auto& n = method_names();
  for (std::size_t i = 0; i < n.size(); ++i)
    if (n[i] == s) return static_cast<Method>(i);
  throw ValidationError("unknown method '" + s + "'; valid: " + join_names(n));
}

inline std::string to_string(Method m) { return method_names()[static_cast<std::size_t>(m)]; }

inline PhysicsMode parse_mode(const std::string& s) {
  if (s == "perfect") return PhysicsMode::perfect;
  if (s == "imperfect") return PhysicsMode::imperfect;
  throw ValidationError("unknown physics mode '" + s + "'; valid: perfect, imperfect");
}

inline std::string to_string(PhysicsMode m) { return m == PhysicsMode::perfect ? "perfect" : "imperfect"; }

inline bool is_gan(Method m) { return m == Method::cgan || m == Method::pig_gan || m == Method::pid_gan; }
inline bool uses_dropout(Method m) { return m == Method::pinn || m == Method::apinn; }

/// Network widths for one run. The discriminator is smaller by default.
struct Architecture {
  std::vector<int> generator_hidden{32, 32, 32};
  std::vector<int> discriminator_hidden{16, 16};
  std::vector<int> inference_hidden{16, 16};
  std::vector<int> coefficient_hidden{16};
  std::string activation = "tanh";
  std::optional<int> latent_dim;  // defaults to the input dimension
};

struct TrainerConfig {
  Method method = Method::pid_gan;
  PhysicsMode mode = PhysicsMode::perfect;
  double lambda = 1.0;
  bool lambda_heuristic = false;  // lambda_0 = 1 / mean R^2 at initialization
  int generator_updates = 5;
  std::optional<double> learning_rate;  // 1e-4 for PDEs, 1e-3 otherwise
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  int epochs = 2000;
  int batch_size = 128;  // collocation minibatch; 0 uses the full set
  std::uint64_t seed = 0;
  double dropout = 0.05;
  double q_weight = 1.0;
  bool inference_net = true;
  double apinn_alpha = 0.1;
  int apinn_interval = 10;
  int log_every = 1;
  int gradient_report_every = 0;  // 0: only when requested at the end
  bool final_gradient_report = false;
  int checkpoint_every = 0;
  Architecture architecture;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive");
    if (generator_updates < 1) throw ValidationError("generator updates per step must be at least 1");
    if (learning_rate && !(*learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
      throw ValidationError("Adam moment decay rates must lie in [0, 1)");
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    if (batch_size < 0) throw ValidationError("batch size must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout rate must lie in [0, 1)");
    if (q_weight < 0.0) throw ValidationError("Q-loss weight must be non-negative");
    if (apinn_interval < 1) throw ValidationError("adaptive weight interval must be at least 1");
    if (log_every < 1) throw ValidationError("log interval must be at least 1");
    if (mode == PhysicsMode::imperfect && method != Method::pid_gan)
      throw ValidationError("imperfect physics mode only applies to pid_gan");
  }

  double resolved_learning_rate(bool pde) const { return learning_rate.value_or(pde ? 1e-4 : 1e-3); }
};

inline io::Json to_json(const Architecture& a) {
  io::Json j = {{"generator_hidden", a.generator_hidden},     {"discriminator_hidden", a.discriminator_hidden},
                {"inference_hidden", a.inference_hidden},     {"coefficient_hidden", a.coefficient_hidden},
                {"activation", a.activation}};
  j["latent_dim"] = a.latent_dim ? io::Json(*a.latent_dim) : io::Json();
  return j;
}

inline io::Json to_json(const TrainerConfig& c) {
  io::Json j = {{"method", to_string(c.method)},
                {"mode", to_string(c.mode)},
                {"lambda", c.lambda},
                {"lambda_heuristic", c.lambda_heuristic},
                {"generator_updates", c.generator_updates},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"seed", c.seed},
                {"dropout", c.dropout},
                {"q_weight", c.q_weight},
                {"inference_net", c.inference_net},
                {"apinn_alpha", c.apinn_alpha},
                {"apinn_interval", c.apinn_interval},
                {"log_every", c.log_every},
                {"gradient_report_every", c.gradient_report_every},
                {"final_gradient_report", c.final_gradient_report},
                {"checkpoint_every", c.checkpoint_every},
                {"architecture", to_json(c.architecture)}};
  j["learning_rate"] = c.learning_rate ? io::Json(*c.learning_rate) : io::Json();
  return j;
}

namespace detail {

template <class T>
void read_if(const io::Json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline void reject_unknown(const io::Json& j, const std::vector<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ValidationError("unknown " + where + " key '" + k + "'; valid: " + join_names(known));
}

}  // namespace detail

inline Architecture architecture_from_json(const io::Json& j, Architecture a = {}) {
  detail::reject_unknown(j,
                         {"generator_hidden", "discriminator_hidden", "inference_hidden", "coefficient_hidden",
                          "activation", "latent_dim"},
                         "architecture");
  detail::read_if(j, "generator_hidden", a.generator_hidden);
  detail::read_if(j, "discriminator_hidden", a.discriminator_hidden);
  detail::read_if(j, "inference_hidden", a.inference_hidden);
  detail::read_if(j, "coefficient_hidden", a.coefficient_hidden);
  detail::read_if(j, "activation", a.activation);
  if (j.contains("latent_dim") && !j.at("latent_dim").is_null()) a.latent_dim = j.at("latent_dim").get<int>();
  return a;
}

/// Overlays the keys present in `j` onto `c`.
inline TrainerConfig trainer_config_from_json(const io::Json& j, TrainerConfig c = {}) {
  try {
    detail::reject_unknown(j,
                           {"method", "mode", "lambda", "lambda_heuristic", "generator_updates", "learning_rate",
                            "adam_beta1", "adam_beta2",
                            "epochs", "batch_size", "seed", "dropout", "q_weight", "inference_net", "apinn_alpha",
                            "apinn_interval", "log_every", "gradient_report_every", "final_gradient_report",
                            "checkpoint_every", "architecture"},
                           "trainer");
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    detail::read_if(j, "lambda", c.lambda);
    detail::read_if(j, "lambda_heuristic", c.lambda_heuristic);
    detail::read_if(j, "generator_updates", c.generator_updates);
    if (j.contains("learning_rate"))
      c.learning_rate = j.at("learning_rate").is_null() ? std::nullopt
                                                        : std::optional<double>(j.at("learning_rate").get<double>());
    detail::read_if(j, "adam_beta1", c.adam_beta1);
    detail::read_if(j, "adam_beta2", c.adam_beta2);
    detail::read_if(j, "epochs", c.epochs);
    detail::read_if(j, "batch_size", c.batch_size);
    detail::read_if(j, "seed", c.seed);
    detail::read_if(j, "dropout", c.dropout);
    detail::read_if(j, "q_weight", c.q_weight);
    detail::read_if(j, "inference_net", c.inference_net);
    detail::read_if(j, "apinn_alpha", c.apinn_alpha);
    detail::read_if(j, "apinn_interval", c.apinn_interval);
    detail::read_if(j, "log_every", c.log_every);
    detail::read_if(j, "gradient_report_every", c.gradient_report_every);
    detail::read_if(j, "final_gradient_report", c.final_gradient_report);
    detail::read_if(j, "checkpoint_every", c.checkpoint_every);
    if (j.contains("architecture")) c.architecture = architecture_from_json(j.at("architecture"), c.architecture);
  } catch (const io::Json::exception& e) {
    throw ValidationError(std::string("trainer configuration: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace pidgan::training
