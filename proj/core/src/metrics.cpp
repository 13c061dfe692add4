#include "rfk/metrics.hpp"

#include <cmath>
#include <limits>

#include "rfk/errors.hpp"
#include "rfk/parallel.hpp"

namespace rfk {

double empirical_risk(const FeatureMatrix& a, const Eigen::VectorXd& v,
                      const Eigen::VectorXd& c) {
  if (a.values.rows() != v.size() || a.values.cols() != c.size())
    throw ConfigError("empirical_risk: dimension mismatch");
  const double denom = static_cast<double>(a.n) * a.J_used * a.L;
  return (v - a.values * c).squaredNorm() / denom;
}

double empirical_risk(const CompressedLsq& problem, const Eigen::VectorXd& c, int n, int J_used,
                      int L) {
  const double r = problem.residual_norm(c);
  return r * r / (static_cast<double>(n) * J_used * L);
}

KernelError kernel_l2_rho_error(const Kernel& g_true, const Kernel& g_learned,
                                const RadialDensity& rho) {
  const Eigen::Index bins = rho.mass.size();
  if (bins < 1 || rho.bin_edges.size() != bins + 1)
    throw ConfigError("kernel_l2_rho_error: malformed density");
  KernelError err;
  double diff_sq = 0, ref_sq = 0;
  for (Eigen::Index b = 0; b < bins; ++b) {
    const double r = 0.5 * (rho.bin_edges(b) + rho.bin_edges(b + 1));
    if (r <= g_true.domain_floor()) {
      ++err.excluded_bins;
      continue;
    }
    const double mass = rho.mass(b);
    if (mass == 0) continue;
    const double gt = g_true.eval(r) * r;
    const double gl = g_learned.eval(r) * r;
    diff_sq += mass * (gt - gl) * (gt - gl);
    ref_sq += mass * gt * gt;
  }
  err.absolute = std::sqrt(diff_sq);
  if (ref_sq == 0) {
    err.flagged = true;
    err.relative = std::numeric_limits<double>::quiet_NaN();
  } else {
    err.relative = err.absolute / std::sqrt(ref_sq);
  }
  return err;
}

PathwiseError pathwise_error(const SystemSpec& spec_true, const SystemSpec& spec_learned,
                             const InitialConditionSet& laws, int trials,
                             const std::vector<double>& timestamps,
                             const IntegratorSettings& settings, std::uint64_t seed,
                             int threads) {
  if (trials < 1) throw ConfigError("pathwise_error needs at least one trial");
  if (spec_true.cls != spec_learned.cls || spec_true.d != spec_learned.d ||
      spec_true.n != spec_learned.n)
    throw ConfigError("pathwise_error: spec shape mismatch");

  const auto initials = sample_initial_conditions(laws, spec_true, trials, seed);
  std::vector<double> sup(trials, std::numeric_limits<double>::quiet_NaN());
  parallel_for(
      static_cast<std::size_t>(trials),
      [&](std::size_t m) {
        try {
          const auto path_true = integrate_system(spec_true, initials[m], timestamps, settings);
          const auto path_learned =
              integrate_system(spec_learned, initials[m], timestamps, settings);
          double worst = 0;
          for (std::size_t j = 0; j < timestamps.size(); ++j) {
            for (int i = 0; i < spec_true.n; ++i) {
              const double dist =
                  (path_true[j].positions.row(i) - path_learned[j].positions.row(i)).norm();
              worst = std::max(worst, dist);
            }
          }
          sup[m] = worst;
        } catch (const IntegrationError&) {
          // dropped trial
        }
      },
      threads);

  PathwiseError out;
  double sum = 0;
  for (double s : sup) {
    if (std::isnan(s)) {
      ++out.dropped;
    } else {
      ++out.trials;
      sum += s;
    }
  }
  if (out.dropped * 5 > trials)
    throw NumericError("pathwise_error: more than 20% of trials failed to integrate (" +
                       std::to_string(out.dropped) + "/" + std::to_string(trials) + ")");
  if (out.trials == 0) throw NumericError("pathwise_error: no trial survived");
  out.mean = sum / out.trials;
  double var = 0;
  for (double s : sup)
    if (!std::isnan(s)) var += (s - out.mean) * (s - out.mean);
  out.stddev = out.trials > 1 ? std::sqrt(var / (out.trials - 1)) : 0.0;
  return out;
}

}  // namespace rfk
