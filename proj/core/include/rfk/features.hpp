#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "rfk/datagen.hpp"
#include "rfk/systems.hpp"

namespace rfk {

/// Column layout of the feature matrix. Homogeneous bases use one block; a
/// heterogeneous basis has one block per kernel pair in the fixed order
/// (1,1), (1,2), (2,1), (2,2), so each agent type's two blocks are contiguous.
struct BlockLayout {
  std::array<int, 4> offset{0, 0, 0, 0};
  std::array<int, 4> count{0, 0, 0, 0};
  bool heterogeneous = false;

  static BlockLayout single(int N);
  static BlockLayout grid(const std::array<int, 4>& counts);
  int total() const { return heterogeneous ? offset[3] + count[3] : count[0]; }
  int block_offset(int a, int b) const { return offset[a * 2 + b]; }
  int block_count(int a, int b) const { return count[a * 2 + b]; }
  /// Column range holding both blocks of type-a rows (contiguous by layout).
  int group_offset(int a) const { return heterogeneous ? offset[a * 2] : 0; }
  int group_count(int a) const {
    return heterogeneous ? count[a * 2] + count[a * 2 + 1] : count[0];
  }
};

/// Sampled random feature basis: frequencies, their layout, and (after
/// training) the coefficient vector in the convention where A*c is the model
/// prediction and g_N(r) = sum_k c_k w(omega_k) exp(-r^2 omega_k^2).
struct FeatureBasis {
  enum class Family { Radial, Fourier };
  Family family = Family::Radial;
  SystemClass cls = SystemClass::FirstOrderHomogeneous;
  int n_context = 0;          // agent count entering the alpha normalization
  double theta_variance = 0;  // variance of the sampling law N(0, sigma^2)
  std::uint64_t seed = 0;
  Eigen::VectorXd omegas;     // size N, all > 0 for radial bases
  Eigen::VectorXd phases;     // Fourier only
  BlockLayout blocks;
  Eigen::VectorXd coefficients;  // empty until trained
  std::vector<int> support;      // sorted; empty = dense solution

  int size() const { return static_cast<int>(omegas.size()); }
  bool has_coefficients() const { return coefficients.size() == omegas.size(); }
  void validate() const;
};

/// |N(0, theta_variance)| draws; deterministic per seed, all strictly positive.
Eigen::VectorXd sample_frequencies(double theta_variance, int N, std::uint64_t seed);

/// alpha(omega) = 2^n omega^(n+1) / pi^((n-1)/2). Throws NumericError instead of
/// returning infinity when the value overflows.
double alpha_normalization(double omega, int n);

/// beta(omega) = sqrt(pi) / (2 omega).
double beta_normalization(double omega);

/// Per-column scale used in assembly and in g_N: alpha for first-order
/// homogeneous bases, beta otherwise (and 1 for Fourier bases).
double column_weight(const FeatureBasis& basis, int column);

FeatureBasis make_radial_basis(SystemClass cls, int n_context, double theta_variance,
                               const BlockLayout& layout, std::uint64_t seed);
FeatureBasis make_fourier_basis(int n_context, double theta_variance, int N, std::uint64_t seed);

/// Dense feature matrix with rows ordered (trajectory, timestamp, agent,
/// coordinate); heterogeneous rows carry zeros outside their type's blocks.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  int d = 0, n = 0, J_used = 0, L = 0, j_lo = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// Row of (trajectory l, timestamp j, agent i, coordinate c); j absolute.
  Eigen::Index row_of(int l, int j, int i, int c) const;
};

/// Feature rows of one trajectory restricted to one row group (agent type for
/// heterogeneous systems, everything otherwise) and that group's columns,
/// paired with the matching target values.
struct RowBlock {
  Eigen::MatrixXd values;
  Eigen::VectorXd targets;
};

int row_group_count(const SystemSpec& spec);
RowBlock assemble_trajectory_rows(const TrajectorySet& traj, const FeatureBasis& basis,
                                  const SystemSpec& spec, int l, int group,
                                  bool include_endpoints = false);

FeatureMatrix assemble_feature_matrix(const TrajectorySet& traj, const FeatureBasis& basis,
                                      const SystemSpec& spec, bool include_endpoints = false);

/// Targets (estimated velocities, or accelerations for second-order systems)
/// in the same row order as assemble_feature_matrix.
Eigen::VectorXd stack_targets(const TrajectorySet& traj, const SystemSpec& spec,
                              bool include_endpoints = false);

/// Random Fourier feature baseline: phi_k = (1/n) sum_i cos(omega_k ||r_i|| + b_k) r_i.
FeatureMatrix assemble_fourier_feature_matrix(const TrajectorySet& traj,
                                              const FeatureBasis& basis,
                                              const SystemSpec& spec,
                                              bool include_endpoints = false);

/// Trained kernel g_N (block (a,b) for heterogeneous bases). Sums over the
/// support when one is present.
double eval_learned_kernel(const FeatureBasis& basis, double r, int a = 0, int b = 0);

/// SystemSpec whose kernels evaluate the trained expansion; forecasting is
/// integrate() of this spec. Empty heterogeneous blocks become Zero kernels.
SystemSpec build_learned_system(const FeatureBasis& basis, const SystemSpec& tmpl);

}  // namespace rfk
