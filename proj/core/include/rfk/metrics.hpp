#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>

#include "rfk/datagen.hpp"
#include "rfk/features.hpp"
#include "rfk/solvers.hpp"
#include "rfk/systems.hpp"

namespace rfk {

struct KernelError {
  double absolute = 0;
  double relative = 0;        // NaN when flagged
  bool flagged = false;       // ||G'_true||_{L2(rho)} = 0, relative undefined
  int excluded_bins = 0;      // bins at or below the kernel domain floor
};

struct PathwiseError {
  double mean = 0;
  double stddev = 0;  // sample standard deviation over kept trials
  int trials = 0;
  int dropped = 0;
};

/// Collected evaluation results of one trained model.
struct ErrorReport {
  double empirical_risk = 0;
  KernelError kernel;                                  // homogeneous systems
  std::optional<std::array<KernelError, 4>> per_pair;  // heterogeneous, row-major (a,b)
  PathwiseError pathwise;
  double horizon = 0;
};

/// (1/(n J_used L)) ||V - A c||^2, Eq.-style empirical risk of the training fit.
double empirical_risk(const FeatureMatrix& a, const Eigen::VectorXd& v,
                      const Eigen::VectorXd& c);
double empirical_risk(const CompressedLsq& problem, const Eigen::VectorXd& c, int n, int J_used,
                      int L);

/// L2(rho)-weighted kernel-space error between G'(r) = g(r) r of the two
/// kernels, evaluated at bin midpoints of the empirical density.
KernelError kernel_l2_rho_error(const Kernel& g_true, const Kernel& g_learned,
                                const RadialDensity& rho);

/// Path-wise generalization error: for M fresh ICs, integrate both systems on
/// the same timestamp grid and take the max over grid and agents of the
/// per-agent position discrepancy; returns mean/std over trials. Trials whose
/// integration fails are dropped; more than 20% drops is an error.
PathwiseError pathwise_error(const SystemSpec& spec_true, const SystemSpec& spec_learned,
                             const InitialConditionSet& laws, int trials,
                             const std::vector<double>& timestamps,
                             const IntegratorSettings& settings, std::uint64_t seed,
                             int threads = 0);

}  // namespace rfk
