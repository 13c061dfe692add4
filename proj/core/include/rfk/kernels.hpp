#pragma once

#include <Eigen/Dense>
#include <memory>
#include <functional>

namespace rfk {

struct FeatureBasis;

/// Scalar interaction kernel g(r), r > 0. Pairwise velocity (or alignment)
/// contributions are g(r) * displacement, so g > 0 attracts and g < 0 repels.
class Kernel {
 public:
  enum class Id {
    Zero,
    LennardJones,
    CuckerSmale,
    PreyPrey,
    PreyPredator,
    PredatorPrey,
    PredatorPredator,
    SheepSheep,
    SheepFoodAttraction,
    Tabulated,
    Learned,
  };

  Kernel() = default;

  static Kernel zero();
  static Kernel lennard_jones(double eps, double sigma);
  static Kernel cucker_smale();
  static Kernel prey_prey();
  static Kernel prey_predator();
  static Kernel predator_prey();
  static Kernel predator_predator();
  static Kernel sheep_sheep();
  static Kernel sheep_food_attraction();

  /// Cubic-Hermite table over an equispaced r-grid. Slopes are estimated by
  /// central differences; evaluation clamps to the end values outside the grid.
  static Kernel tabulated(const Eigen::VectorXd& r_grid, const Eigen::VectorXd& g_values);

  /// Sum of Gaussians sum_k w_k exp(-r^2 * omega_sq_k) — the trained radial kernel
  /// with coefficient-times-normalization weights already folded in.
  static Kernel radial_mixture(Eigen::ArrayXd weights, Eigen::ArrayXd omega_sq,
                               std::shared_ptr<const FeatureBasis> basis = nullptr);

  /// Trained Fourier kernel sum_k c_k cos(omega_k r + phase_k).
  static Kernel fourier_mixture(Eigen::ArrayXd coeffs, Eigen::ArrayXd omegas,
                                Eigen::ArrayXd phases,
                                std::shared_ptr<const FeatureBasis> basis = nullptr);

  /// Evaluates g(max(r, domain_floor)). Throws std::invalid_argument on non-finite r.
  double eval(double r) const;

  Id id() const { return id_; }
  bool is_zero() const { return id_ == Id::Zero || id_ == Id::PredatorPredator; }
  double domain_floor() const { return domain_floor_; }
  void set_domain_floor(double f) { domain_floor_ = f; }
  const std::shared_ptr<const FeatureBasis>& basis() const { return basis_; }

  /// Resamples this kernel onto a dense Hermite table over [0, r_max] for cheap
  /// evaluation in tight integration loops; falls back to exact evaluation
  /// outside the tabulated range.
  Kernel tabulated_copy(double r_max, int resolution) const;

 private:
  Id id_ = Id::Zero;
  double domain_floor_ = 1e-6;
  // Lennard-Jones parameters.
  double eps_ = 0, sigma_ = 0;
  // Mixture payloads (radial: weights_/omega_sq_; fourier: weights_/omega_sq_ as
  // omegas and phases_).
  Eigen::ArrayXd weights_, omega_sq_, phases_;
  bool fourier_ = false;
  // Hermite table payload.
  double table_r0_ = 0, table_dr_ = 0;
  Eigen::VectorXd table_values_, table_slopes_;
  std::shared_ptr<const Kernel> table_fallback_;
  std::shared_ptr<const FeatureBasis> basis_;

  double eval_clamped(double r) const;
};

/// g(r) := G'(r) / r for a scalar potential, via Richardson-extrapolated central
/// differences (exact for polynomials up to degree 4).
double kernel_from_potential(const std::function<double(double)>& potential, double r);

/// The Lennard-Jones potential G(r) = 4 eps [ (sigma/r)^12 - (sigma/r)^6 ].
double lennard_jones_potential(double eps, double sigma, double r);

}  // namespace rfk
