#include "rfk/kernels.hpp"

#include <cmath>
#include <stdexcept>

#include "rfk/errors.hpp"

namespace rfk {

Kernel Kernel::zero() {
  Kernel k;
  k.id_ = Id::Zero;
  return k;
}

Kernel Kernel::lennard_jones(double eps, double sigma) {
  Kernel k;
  k.id_ = Id::LennardJones;
  k.eps_ = eps;
  k.sigma_ = sigma;
  return k;
}

Kernel Kernel::cucker_smale() {
  Kernel k;
  k.id_ = Id::CuckerSmale;
  return k;
}

Kernel Kernel::prey_prey() {
  Kernel k;
  k.id_ = Id::PreyPrey;
  return k;
}

Kernel Kernel::prey_predator() {
  Kernel k;
  k.id_ = Id::PreyPredator;
  return k;
}

Kernel Kernel::predator_prey() {
  Kernel k;
  k.id_ = Id::PredatorPrey;
  return k;
}

Kernel Kernel::predator_predator() {
  Kernel k;
  k.id_ = Id::PredatorPredator;
  return k;
}

Kernel Kernel::sheep_sheep() {
  Kernel k;
  k.id_ = Id::SheepSheep;
  return k;
}

Kernel Kernel::sheep_food_attraction() {
  Kernel k;
  k.id_ = Id::SheepFoodAttraction;
  return k;
}

Kernel Kernel::tabulated(const Eigen::VectorXd& r_grid, const Eigen::VectorXd& g_values) {
  if (r_grid.size() != g_values.size() || r_grid.size() < 2)
    throw ConfigError("tabulated kernel needs matching r/g arrays with >= 2 nodes");
  const Eigen::Index m = r_grid.size();
  const double dr = r_grid(1) - r_grid(0);
  for (Eigen::Index i = 1; i < m; ++i) {
    if (std::abs((r_grid(i) - r_grid(i - 1)) - dr) > 1e-9 * std::max(1.0, std::abs(dr)))
      throw ConfigError("tabulated kernel grid must be equispaced");
  }
  Kernel k;
  k.id_ = Id::Tabulated;
  k.table_r0_ = r_grid(0);
  k.table_dr_ = dr;
  k.table_values_ = g_values;
  k.table_slopes_.resize(m);
  k.table_slopes_(0) = (g_values(1) - g_values(0)) / dr;
  k.table_slopes_(m - 1) = (g_values(m - 1) - g_values(m - 2)) / dr;
  for (Eigen::Index i = 1; i + 1 < m; ++i)
    k.table_slopes_(i) = (g_values(i + 1) - g_values(i - 1)) / (2 * dr);
  return k;
}

Kernel Kernel::radial_mixture(Eigen::ArrayXd weights, Eigen::ArrayXd omega_sq,
                              std::shared_ptr<const FeatureBasis> basis) {
  Kernel k;
  k.id_ = Id::Learned;
  k.weights_ = std::move(weights);
  k.omega_sq_ = std::move(omega_sq);
  k.fourier_ = false;
  k.basis_ = std::move(basis);
  return k;
}

Kernel Kernel::fourier_mixture(Eigen::ArrayXd coeffs, Eigen::ArrayXd omegas,
                               Eigen::ArrayXd phases,
                               std::shared_ptr<const FeatureBasis> basis) {
  Kernel k;
  k.id_ = Id::Learned;
  k.weights_ = std::move(coeffs);
  k.omega_sq_ = std::move(omegas);
  k.phases_ = std::move(phases);
  k.fourier_ = true;
  k.basis_ = std::move(basis);
  return k;
}

double Kernel::eval(double r) const {
  if (!std::isfinite(r)) throw std::invalid_argument("kernel evaluated at non-finite r");
  if (id_ == Id::Zero) return 0.0;
  return eval_clamped(r < domain_floor_ ? domain_floor_ : r);
}

double Kernel::eval_clamped(double r) const {
  switch (id_) {
    case Id::Zero:
      return 0.0;
    case Id::LennardJones: {
      // G'(r)/r for G = 4 eps [(sigma/r)^12 - (sigma/r)^6].
      const double s2 = sigma_ * sigma_ / (r * r);
      const double s6 = s2 * s2 * s2;
      const double inv_r2 = 1.0 / (r * r);
      return 24.0 * eps_ * s6 * inv_r2 * (1.0 - 2.0 * s6);
    }
    case Id::CuckerSmale:
      return std::pow(1.0 + r * r, -0.25);
    case Id::PreyPrey:
      return 1.0 - 1.0 / (r * r);
    case Id::PreyPredator:
      return -2.0 / (r * r);
    case Id::PredatorPrey:
      return 3.5 / (r * r * r);
    case Id::PredatorPredator:
      return 0.0;
    case Id::SheepSheep:
      return -1.2 / (0.25 * r * r * r * r + 0.05) + 0.02;
    case Id::SheepFoodAttraction:
      return 65.0 * std::exp(-r / 0.45);
    case Id::Tabulated: {
      const Eigen::Index m = table_values_.size();
      const double pos = (r - table_r0_) / table_dr_;
      if (pos <= 0) {
        if (table_fallback_) return table_fallback_->eval(r);
        return table_values_(0);
      }
      if (pos >= static_cast<double>(m - 1)) {
        if (table_fallback_) return table_fallback_->eval(r);
        return table_values_(m - 1);
      }
      const Eigen::Index i = static_cast<Eigen::Index>(pos);
      const double t = pos - static_cast<double>(i);
      const double y0 = table_values_(i), y1 = table_values_(i + 1);
      const double m0 = table_slopes_(i) * table_dr_, m1 = table_slopes_(i + 1) * table_dr_;
      const double t2 = t * t, t3 = t2 * t;
      return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
             (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
    }
    case Id::Learned: {
      if (fourier_)
        return (weights_ * (omega_sq_ * r + phases_).cos()).sum();
      return (weights_ * (-r * r * omega_sq_).exp()).sum();
    }
  }
  return 0.0;
}

Kernel Kernel::tabulated_copy(double r_max, int resolution) const {
  if (resolution < 8) throw ConfigError("tabulated_copy needs resolution >= 8");
  Kernel k;
  k.id_ = Id::Tabulated;
  k.domain_floor_ = domain_floor_;
  k.table_r0_ = 0.0;
  k.table_dr_ = r_max / (resolution - 1);
  k.table_values_.resize(resolution);
  k.table_slopes_.resize(resolution);
  for (int i = 0; i < resolution; ++i) {
    const double r = k.table_r0_ + i * k.table_dr_;
    k.table_values_(i) = eval(r);
  }
  if (id_ == Id::Learned && !fourier_) {
    // Exact node derivatives of the Gaussian mixture keep the Hermite
    // interpolant at O(h^4) accuracy.
    for (int i = 0; i < resolution; ++i) {
      const double r = std::max(k.table_r0_ + i * k.table_dr_, domain_floor_);
      k.table_slopes_(i) = (weights_ * (-2.0 * r * omega_sq_) * (-r * r * omega_sq_).exp()).sum();
    }
  } else {
    const double h = k.table_dr_;
    for (int i = 0; i < resolution; ++i) {
      const double r = k.table_r0_ + i * k.table_dr_;
      k.table_slopes_(i) = (eval(r + h) - eval(std::max(r - h, 0.0))) /
                           (h + std::min(r, h));
    }
  }
  k.table_fallback_ = std::make_shared<const Kernel>(*this);
  return k;
}

double kernel_from_potential(const std::function<double(double)>& potential, double r) {
  if (!std::isfinite(r) || r <= 0)
    throw std::invalid_argument("kernel_from_potential needs finite r > 0");
  const double h = 1e-5 * std::max(1.0, std::abs(r));
  auto central = [&](double step) {
    return (potential(r + step) - potential(r - step)) / (2.0 * step);
  };
  const double d_h = central(h);
  const double d_h2 = central(0.5 * h);
  return (4.0 * d_h2 - d_h) / 3.0 / r;
}

double lennard_jones_potential(double eps, double sigma, double r) {
  const double s6 = std::pow(sigma / r, 6);
  return 4.0 * eps * (s6 * s6 - s6);
}

}  // namespace rfk
