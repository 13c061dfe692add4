#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rfk/integrate.hpp"
#include "rfk/systems.hpp"

namespace rfk {

/// Probability law for one agent's initial position (or velocity). Heterogeneous
/// systems use one law per type.
struct InitialConditionLaw {
  enum class Kind {
    GaussianStandard,  // i.i.d. N(0,1) per coordinate
    UniformBox,        // independent Uniform[lo_c, hi_c] per coordinate
    UniformRing,       // area-uniform on the annulus r in [r_min, r_max] (d=2)
    UniformDisk,       // area-uniform on the disk of given radius (d=2)
    HeartCurve,        // arclength-uniform on the heart curve, max extent = radius (d=2)
    UniformStrip,      // Uniform on [x0,x1] x [y0,y1] (d=2)
  };
  Kind kind = Kind::GaussianStandard;
  Eigen::VectorXd lo, hi;          // UniformBox / UniformStrip ranges
  double r_min = 0, r_max = 0;     // UniformRing
  double radius = 0;               // UniformDisk / HeartCurve
  Eigen::Vector2d center = Eigen::Vector2d::Zero();

  static InitialConditionLaw gaussian();
  static InitialConditionLaw box(Eigen::VectorXd lo, Eigen::VectorXd hi);
  static InitialConditionLaw ring(double r_min, double r_max,
                                  Eigen::Vector2d center = Eigen::Vector2d::Zero());
  static InitialConditionLaw disk(double radius,
                                  Eigen::Vector2d center = Eigen::Vector2d::Zero());
  static InitialConditionLaw heart(double radius,
                                   Eigen::Vector2d center = Eigen::Vector2d::Zero());
  static InitialConditionLaw strip(double x0, double x1, double y0, double y1);

  void validate(int d) const;
};

/// Per-system initial-condition setup: a position law per agent type plus
/// optional velocity laws (second-order systems).
struct InitialConditionSet {
  std::array<InitialConditionLaw, 2> position;  // [0] also serves homogeneous systems
  std::optional<std::array<InitialConditionLaw, 2>> velocity;
};

/// Training corpus: L trajectories of n agents in d dimensions sampled at J
/// timestamps, with optional estimated velocities/accelerations.
struct TrajectorySet {
  int d = 0, n = 0, J = 0, L = 0;
  double T = 0;
  SystemClass cls = SystemClass::FirstOrderHomogeneous;
  std::vector<int> types;                     // empty for homogeneous
  std::vector<double> timestamps;             // size J
  std::vector<Eigen::MatrixXd> states;        // L*J entries of n x d, index l*J + j
  std::vector<Eigen::MatrixXd> velocities;    // empty or L*J
  std::vector<Eigen::MatrixXd> accelerations; // empty or L*J
  bool noise_applied = false;
  std::uint64_t seed = 0;

  const Eigen::MatrixXd& state(int l, int j) const { return states[static_cast<std::size_t>(l) * J + j]; }
  Eigen::MatrixXd& state(int l, int j) { return states[static_cast<std::size_t>(l) * J + j]; }
  bool has_velocities() const { return !velocities.empty(); }
  bool has_accelerations() const { return !accelerations.empty(); }
  /// Index range [lo, hi) of timestamps whose derivative estimates are centered
  /// (1 boundary stamp trimmed per side for velocities, 2 for accelerations).
  std::pair<int, int> interior_range() const;
  void validate() const;
};

/// Histogram estimate of the pairwise-distance density rho(r).
struct RadialDensity {
  Eigen::VectorXd bin_edges;  // size bins + 1, ascending
  Eigen::VectorXd mass;       // size bins, sums to 1 (when total > 0)
  double total_count = 0;

  double min_observed() const;
  double max_observed() const;
};

/// Density plus per-type-pair breakdown for heterogeneous systems
/// (pairs (1,1), (1,2)=(2,1), (2,2)).
struct DensitySet {
  RadialDensity overall;
  std::array<RadialDensity, 3> per_pair;  // index: 0 -> (1,1), 1 -> (1,2), 2 -> (2,2)
  bool heterogeneous = false;

  const RadialDensity& pair(int a, int b) const;
};

/// L independent draws from the per-type position (and velocity) laws.
/// Deterministic in seed; trajectory l uses a seed derived from (seed, l).
std::vector<AgentState> sample_initial_conditions(const InitialConditionSet& laws,
                                                  const SystemSpec& spec, int L,
                                                  std::uint64_t seed);

/// Integrates the true system from L sampled ICs and records the states at J
/// equidistant timestamps in [0, T]. Velocities are stored for second-order
/// systems (they are state), never estimated here.
TrajectorySet generate_dataset(const SystemSpec& spec, const InitialConditionSet& laws, int L,
                               int J, double T, const IntegratorSettings& settings,
                               std::uint64_t seed, int threads = 0,
                               IntegrationStats* stats = nullptr);

/// x -> x * (1 + sigma * u), u ~ Uniform[-1, 1] i.i.d. per coordinate.
TrajectorySet apply_multiplicative_noise(const TrajectorySet& traj, double sigma_noise,
                                         std::uint64_t seed);

/// Central differences at interior timestamps, one-sided first-order at the ends.
/// Valid for non-equidistant timestamps.
TrajectorySet estimate_velocities_central_difference(const TrajectorySet& traj);

/// Velocities by central difference of positions, then accelerations by central
/// difference of those velocities. Needs J >= 5.
TrajectorySet estimate_accelerations(const TrajectorySet& traj);

/// Histogram over all unordered agent pairs, all timestamps, all trajectories.
/// With bins > 0 the edges span the observed [min, max]; explicit edges are used
/// as-is (out-of-range samples are dropped).
DensitySet empirical_radial_density(const TrajectorySet& traj, int bins);
DensitySet empirical_radial_density(const TrajectorySet& traj, const Eigen::VectorXd& edges);

}  // namespace rfk
