#pragma once

#include "cotfm/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cotfm::ode {

enum class Method { euler, rk4, dopri };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::euler: return "euler";
    case Method::rk4: return "rk4";
    case Method::dopri: return "dopri";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "euler") return Method::euler;
  if (s == "rk4") return Method::rk4;
  if (s == "dopri") return Method::dopri;
  throw InvalidArgument("unknown integrator '" + s + "' (expected euler, rk4 or dopri)");
}

/// Integration of du/dt = v(t, u) over t in [0, 1].
struct IntegratorConfig {
  Method method = Method::rk4;
  int steps = 100;  // fixed-step methods
  double rtol = 1e-6;  // dopri
  double atol = 1e-8;
  int max_steps = 100000;

  void validate() const {
    require(steps >= 1, "IntegratorConfig: steps must be >= 1");
    require(rtol > 0.0 && atol > 0.0, "IntegratorConfig: tolerances must be > 0");
    require(max_steps >= 1, "IntegratorConfig: max_steps must be >= 1");
  }

  nlohmann::json to_json() const {
    return {{"method", to_string(method)}, {"steps", steps}, {"rtol", rtol}, {"atol", atol}, {"max_steps", max_steps}};
  }

  static IntegratorConfig from_json(const nlohmann::json& j) {
    require(j.is_object(), "integrator config: expected an object");
    IntegratorConfig c;
    try {
      for (const auto& [key, val] : j.items()) {
        if (key == "method") c.method = method_from_string(val.get<std::string>());
        else if (key == "steps") c.steps = val.get<int>();
        else if (key == "rtol") c.rtol = val.get<double>();
        else if (key == "atol") c.atol = val.get<double>();
        else if (key == "max_steps") c.max_steps = val.get<int>();
        else throw InvalidArgument("integrator config: unknown key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument(std::string("integrator config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

namespace detail {
inline void check_state(const RowMatrix& u, double t) {
  if (!u.allFinite()) {
    std::ostringstream msg;
    msg << "integrate: non-finite state at t=" << t;
    throw NumericError(msg.str());
  }
}
}  // namespace detail

/// Integrates a batch of states (one per row) from t = 0 to t = 1.
/// `field(t, u)` returns du/dt with the shape of u. When `trajectory` is
/// given it receives the state after every accepted step, starting with u0.
template <typename Field>
RowMatrix integrate(Field&& field, RowMatrix u, const IntegratorConfig& cfg,
                    std::vector<RowMatrix>* trajectory = nullptr) {
  cfg.validate();
  detail::check_state(u, 0.0);
  if (trajectory) trajectory->push_back(u);
  if (cfg.method != Method::dopri) {
    const double h = 1.0 / cfg.steps;
    for (int k = 0; k < cfg.steps; ++k) {
      const double t = k * h;
      if (cfg.method == Method::euler) {
        u += h * field(t, u);
      } else {
        const RowMatrix k1 = field(t, u);
        const RowMatrix k2 = field(t + 0.5 * h, RowMatrix(u + (0.5 * h) * k1));
        const RowMatrix k3 = field(t + 0.5 * h, RowMatrix(u + (0.5 * h) * k2));
        const RowMatrix k4 = field(t + h, RowMatrix(u + h * k3));
        u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      detail::check_state(u, (k + 1) * h);
      if (trajectory) trajectory->push_back(u);
    }
    return u;
  }

  // Dormand-Prince 5(4) with FSAL and a standard step-size controller.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  double t = 0.0, h = 0.01;
  RowMatrix k1 = field(t, u);
  for (int step = 0; t < 1.0; ++step) {
    if (step >= cfg.max_steps) throw NumericError("integrate: dopri exceeded max_steps");
    h = std::min(h, 1.0 - t);
    const RowMatrix k2 = field(t + c2 * h, RowMatrix(u + h * a21 * k1));
    const RowMatrix k3 = field(t + c3 * h, RowMatrix(u + h * (a31 * k1 + a32 * k2)));
    const RowMatrix k4 = field(t + c4 * h, RowMatrix(u + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const RowMatrix k5 = field(t + c5 * h, RowMatrix(u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const RowMatrix k6 = field(t + h, RowMatrix(u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const RowMatrix next = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const RowMatrix k7 = field(t + h, next);
    const RowMatrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Eigen::ArrayXXd scale = cfg.atol + cfg.rtol * u.array().abs().max(next.array().abs());
    const double norm = std::sqrt((err.array() / scale).square().mean());
    if (!std::isfinite(norm)) detail::check_state(next, t + h);
    if (norm <= 1.0) {
      t = (1.0 - t - h <= 1e-15) ? 1.0 : t + h;
      u = next;
      k1 = k7;
      detail::check_state(u, t);
      if (trajectory) trajectory->push_back(u);
    }
    const double factor = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    if (h < 1e-12) throw NumericError("integrate: dopri step size underflow at t=" + std::to_string(t));
  }
  return u;
}

}  // namespace cotfm::ode
