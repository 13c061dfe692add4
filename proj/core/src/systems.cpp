#include "rfk/systems.hpp"

#include <cmath>
#include <stdexcept>

#include "rfk/errors.hpp"

namespace rfk {

bool is_second_order(SystemClass c) { return c == SystemClass::SecondOrderHomogeneous; }
bool is_heterogeneous(SystemClass c) { return c == SystemClass::FirstOrderHeterogeneous; }

const char* to_string(SystemClass c) {
  switch (c) {
    case SystemClass::FirstOrderHomogeneous: return "first_order_homogeneous";
    case SystemClass::FirstOrderHeterogeneous: return "first_order_heterogeneous";
    case SystemClass::SecondOrderHomogeneous: return "second_order_homogeneous";
  }
  return "?";
}

SystemClass system_class_from_string(const std::string& s) {
  if (s == "first_order_homogeneous") return SystemClass::FirstOrderHomogeneous;
  if (s == "first_order_heterogeneous") return SystemClass::FirstOrderHeterogeneous;
  if (s == "second_order_homogeneous") return SystemClass::SecondOrderHomogeneous;
  throw ConfigError("unknown system class: " + s);
}

SystemSpec SystemSpec::homogeneous(SystemClass cls, int d, int n, Kernel kernel) {
  if (is_heterogeneous(cls)) throw ConfigError("homogeneous() given a heterogeneous class");
  SystemSpec spec;
  spec.cls = cls;
  spec.d = d;
  spec.n = n;
  spec.kernels = {std::move(kernel)};
  spec.validate();
  return spec;
}

SystemSpec SystemSpec::heterogeneous(int d, std::vector<int> types, std::array<Kernel, 4> grid) {
  SystemSpec spec;
  spec.cls = SystemClass::FirstOrderHeterogeneous;
  spec.d = d;
  spec.n = static_cast<int>(types.size());
  spec.types = std::move(types);
  spec.kernels.assign(grid.begin(), grid.end());
  spec.validate();
  return spec;
}

int SystemSpec::count_of_type(int t) const {
  int c = 0;
  for (int v : types)
    if (v == t) ++c;
  return c;
}

const Kernel& SystemSpec::kernel(int a, int b) const { return kernels[a * 2 + b]; }

void SystemSpec::validate() const {
  if (d < 1 || n < 1) throw ConfigError("system needs d >= 1 and n >= 1");
  if (is_heterogeneous(cls)) {
    if (kernels.size() != 4) throw ConfigError("heterogeneous system needs a 2x2 kernel grid");
    if (static_cast<int>(types.size()) != n) throw ConfigError("type labels must cover all agents");
    for (int t : types)
      if (t != 0 && t != 1) throw ConfigError("type labels must be in {1,2}");
  } else {
    if (kernels.size() != 1) throw ConfigError("homogeneous system needs exactly one kernel");
    if (!types.empty()) throw ConfigError("homogeneous system must not carry type labels");
  }
}

namespace {

inline void check_state(const AgentState& state, const SystemSpec& spec, bool need_velocities) {
  if (state.positions.rows() != spec.n || state.positions.cols() != spec.d)
    throw std::invalid_argument("state/spec shape mismatch");
  if (!state.positions.allFinite()) throw std::invalid_argument("non-finite positions");
  if (need_velocities &&
      (state.velocities.rows() != spec.n || state.velocities.cols() != spec.d))
    throw std::invalid_argument("second-order state needs velocities");
}

inline double pair_distance(const Eigen::MatrixXd& x, int i, int j, double floor,
                            RhsStats* stats) {
  double sq = 0;
  for (int c = 0; c < x.cols(); ++c) {
    const double diff = x(j, c) - x(i, c);
    sq += diff * diff;
  }
  double r = std::sqrt(sq);
  if (r < floor) {
    if (stats) ++stats->clamped;
    r = floor;
  }
  return r;
}

}  // namespace

Eigen::MatrixXd rhs_first_order_homog(const AgentState& state, const SystemSpec& spec,
                                      RhsStats* stats) {
  if (spec.cls != SystemClass::FirstOrderHomogeneous)
    throw std::invalid_argument("rhs_first_order_homog: wrong system class");
  check_state(state, spec, false);
  const auto& x = state.positions;
  const Kernel& g = spec.kernel();
  const double inv_n = 1.0 / spec.n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.n, spec.d);
  if (g.is_zero()) return out;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      const double r = pair_distance(x, i, j, g.domain_floor(), stats);
      const double w = inv_n * g.eval(r);
      for (int c = 0; c < spec.d; ++c) {
        const double contrib = w * (x(j, c) - x(i, c));
        out(i, c) += contrib;
        out(j, c) -= contrib;  // antisymmetric: total momentum conserved exactly
      }
    }
  }
  return out;
}

Eigen::MatrixXd rhs_first_order_heterog(const AgentState& state, const SystemSpec& spec,
                                        RhsStats* stats) {
  if (spec.cls != SystemClass::FirstOrderHeterogeneous)
    throw std::invalid_argument("rhs_first_order_heterog: wrong system class");
  check_state(state, spec, false);
  const auto& x = state.positions;
  const double counts[2] = {static_cast<double>(spec.count_of_type(0)),
                            static_cast<double>(spec.count_of_type(1))};
  const double inv_count[2] = {counts[0] > 0 ? 1.0 / counts[0] : 0.0,
                               counts[1] > 0 ? 1.0 / counts[1] : 0.0};
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.n, spec.d);
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      const int a = spec.types[i], b = spec.types[j];
      const Kernel& g_ab = spec.kernel(a, b);
      const Kernel& g_ba = spec.kernel(b, a);
      if (g_ab.is_zero() && g_ba.is_zero()) continue;
      const double floor = std::min(g_ab.domain_floor(), g_ba.domain_floor());
      const double r = pair_distance(x, i, j, floor, stats);
      const double w_i = g_ab.is_zero() ? 0.0 : inv_count[b] * g_ab.eval(r);
      const double w_j = g_ba.is_zero() ? 0.0 : inv_count[a] * g_ba.eval(r);
      for (int c = 0; c < spec.d; ++c) {
        const double diff = x(j, c) - x(i, c);
        out(i, c) += w_i * diff;
        out(j, c) -= w_j * diff;
      }
    }
  }
  return out;
}

Eigen::MatrixXd rhs_second_order_homog(const AgentState& state, const SystemSpec& spec,
                                       RhsStats* stats) {
  if (spec.cls != SystemClass::SecondOrderHomogeneous)
    throw std::invalid_argument("rhs_second_order_homog: wrong system class");
  check_state(state, spec, true);
  const auto& x = state.positions;
  const auto& v = state.velocities;
  const Kernel& g = spec.kernel();
  const double inv_n = 1.0 / spec.n;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(spec.n, spec.d);
  if (g.is_zero()) return out;
  for (int i = 0; i < spec.n; ++i) {
    for (int j = i + 1; j < spec.n; ++j) {
      const double r = pair_distance(x, i, j, g.domain_floor(), stats);
      const double w = inv_n * g.eval(r);
      for (int c = 0; c < spec.d; ++c) {
        const double contrib = w * (v(j, c) - v(i, c));
        out(i, c) += contrib;
        out(j, c) -= contrib;
      }
    }
  }
  return out;
}

Eigen::MatrixXd eval_rhs(const AgentState& state, const SystemSpec& spec, RhsStats* stats) {
  switch (spec.cls) {
    case SystemClass::FirstOrderHomogeneous:
      return rhs_first_order_homog(state, spec, stats);
    case SystemClass::FirstOrderHeterogeneous:
      return rhs_first_order_heterog(state, spec, stats);
    case SystemClass::SecondOrderHomogeneous:
      return rhs_second_order_homog(state, spec, stats);
  }
  throw std::invalid_argument("unknown system class");
}

}  // namespace rfk
