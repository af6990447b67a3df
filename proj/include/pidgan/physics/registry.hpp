#pragma once

#include "pidgan/physics/burgers.hpp"
#include "pidgan/physics/collision.hpp"
#include "pidgan/physics/darcy.hpp"
#include "pidgan/physics/schrodinger.hpp"
#include "pidgan/physics/tossing.hpp"

#include <memory>
#include <vector>

namespace pidgan::physics {

/// Constants for every registered system, settable from experiment configs.
struct SystemOptions {
  BurgersOptions burgers;
  DarcyOptions darcy;
  TossingOptions tossing;
};

inline const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names{"burgers", "schrodinger", "darcy", "collision", "tossing"};
  return names;
}

inline std::string joined_system_names() {
  std::string out;
  for (const auto& n : system_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

inline std::unique_ptr<PhysicsSystem> make_system(const std::string& name, const SystemOptions& opt = {}) {
  if (name == "burgers") return std::make_unique<BurgersSystem>(opt.burgers);
  if (name == "schrodinger") return std::make_unique<SchrodingerSystem>();
  if (name == "darcy") return std::make_unique<DarcySystem>(opt.darcy);
  if (name == "collision") return std::make_unique<CollisionSystem>();
  if (name == "tossing") return std::make_unique<TossingSystem>(opt.tossing);
  throw ValidationError("unknown physics system '" + name + "'; valid names: " + joined_system_names());
}

}  // namespace pidgan::physics
