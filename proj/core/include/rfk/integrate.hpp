#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "rfk/systems.hpp"

namespace rfk {

struct IntegratorSettings {
  double rel_tol = 1e-5;
  double abs_tol = 1e-6;
  double max_step = std::numeric_limits<double>::infinity();
  std::int64_t max_steps = 10'000'000;
  enum class Method { AdaptiveRK45, FixedRK4 } method = Method::AdaptiveRK45;
  double fixed_step = 0;  // FixedRK4 step (falls back to max_step, then span/200)

  void validate() const;
};

struct IntegrationStats {
  std::int64_t accepted = 0;
  std::int64_t rejected = 0;
  std::int64_t rhs_evals = 0;
  std::int64_t clamped = 0;     // kernel domain-floor clamps (system integrations)
  bool step_flagged = false;    // rejection rate exceeded the advisory threshold
};

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

/// Integrates dy/dt = rhs(t, y) from timestamps.front() and reports the solution
/// at every requested timestamp (strictly increasing; the first one is the
/// initial time). Output values at interior times come from the method's
/// 4th-order dense interpolant, not nearest-step snapping.
/// Throws IntegrationError if the state leaves the finite range or max_steps is hit.
std::vector<Eigen::VectorXd> integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                           const std::vector<double>& timestamps,
                                           const IntegratorSettings& settings,
                                           IntegrationStats* stats = nullptr);

/// System-level wrapper: packs the AgentState (positions, plus velocities for
/// second-order classes) into a flat vector and integrates eval_rhs.
std::vector<AgentState> integrate_system(const SystemSpec& spec, const AgentState& initial,
                                         const std::vector<double>& timestamps,
                                         const IntegratorSettings& settings,
                                         IntegrationStats* stats = nullptr);

/// J equidistant timestamps spanning [t0, t1].
std::vector<double> equidistant_timestamps(double t0, double t1, int count);

}  // namespace rfk
