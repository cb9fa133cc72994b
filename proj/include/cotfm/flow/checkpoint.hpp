#pragma once

#include "cotfm/flow/mlp.hpp"
#include "cotfm/flow/standardize.hpp"
#include "cotfm/flow/train.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>

#include <json.hpp>

namespace cotfm::flow {

inline constexpr const char* kCheckpointFormat = "cotfm-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// A trained model: weights plus the data standardization they expect.
struct Checkpoint {
  VectorFieldParams params;
  Standardizer standardizer;
  TrainConfig config;
};

inline nlohmann::json checkpoint_to_json(const Checkpoint& c) {
  const VectorFieldParams& p = c.params;
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"d_y", p.d_y},
          {"d_u", p.d_u},
          {"activation", "selu"},
          {"layer_sizes", p.sizes},
          {"theta", std::vector<double>(p.theta.data(), p.theta.data() + p.theta.size())},
          {"standardizer", c.standardizer.to_json()},
          {"config", c.config.to_json()},
          {"seed", c.config.seed}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    require(j.value("format", "") == kCheckpointFormat, "checkpoint: not a cotfm checkpoint");
    const int version = j.at("version").get<int>();
    require(version == kCheckpointVersion, "checkpoint: unsupported version " + std::to_string(version));
    Checkpoint c;
    c.params.d_y = j.at("d_y").get<Index>();
    c.params.d_u = j.at("d_u").get<Index>();
    c.params.sizes = j.at("layer_sizes").get<std::vector<Index>>();
    const auto theta = j.at("theta").get<std::vector<double>>();
    c.params.theta = Eigen::Map<const Vector>(theta.data(), static_cast<Index>(theta.size()));
    c.params.validate();
    c.standardizer = Standardizer::from_json(j.at("standardizer"));
    require(c.standardizer.dim() == c.params.d_y + c.params.d_u, "checkpoint: standardizer dimension mismatch");
    c.config = TrainConfig::from_json(j.at("config"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream f(path);
  require(static_cast<bool>(f), "cannot write " + path);
  f << checkpoint_to_json(c).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), "cannot read " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("checkpoint " + path + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

/// Loss trace as CSV with header "step,loss".
inline void write_loss_csv(std::ostream& out, const std::vector<double>& loss) {
  out << "step,loss\n" << std::setprecision(17);
  for (std::size_t k = 0; k < loss.size(); ++k) out << k << ',' << loss[k] << '\n';
}

}  // namespace cotfm::flow
