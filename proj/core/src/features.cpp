#include "rfk/features.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "rfk/errors.hpp"
#include "rfk/rng.hpp"

namespace rfk {

BlockLayout BlockLayout::single(int N) {
  BlockLayout layout;
  layout.count[0] = N;
  return layout;
}

BlockLayout BlockLayout::grid(const std::array<int, 4>& counts) {
  BlockLayout layout;
  layout.heterogeneous = true;
  int off = 0;
  for (int i = 0; i < 4; ++i) {
    layout.offset[i] = off;
    layout.count[i] = counts[i];
    off += counts[i];
  }
  return layout;
}

void FeatureBasis::validate() const {
  if (omegas.size() == 0) throw ConfigError("feature basis needs N >= 1 frequencies");
  if (blocks.total() != size()) throw ConfigError("block layout does not cover the basis");
  if (family == Family::Radial) {
    for (Eigen::Index k = 0; k < omegas.size(); ++k)
      if (!(omegas(k) > 0)) throw ConfigError("radial basis frequencies must be positive");
  } else if (phases.size() != omegas.size()) {
    throw ConfigError("fourier basis needs one phase per frequency");
  }
  if (blocks.heterogeneous && cls != SystemClass::FirstOrderHeterogeneous)
    throw ConfigError("block grid only applies to heterogeneous bases");
}

Eigen::VectorXd sample_frequencies(double theta_variance, int N, std::uint64_t seed) {
  if (N < 1) throw ConfigError("need N >= 1 feature frequencies");
  if (!(theta_variance > 0)) throw ConfigError("theta variance must be > 0");
  auto eng = rng::engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(theta_variance));
  Eigen::VectorXd omegas(N);
  for (int k = 0; k < N; ++k) {
    double w = 0;
    while (w == 0) w = std::abs(normal(eng));
    omegas(k) = w;
  }
  return omegas;
}

double alpha_normalization(double omega, int n) {
  if (!(omega > 0)) throw std::invalid_argument("alpha needs omega > 0");
  if (n < 1) throw std::invalid_argument("alpha needs n >= 1");
  const double log_value = n * std::numbers::ln2 + (n + 1) * std::log(omega) -
                           0.5 * (n - 1) * std::log(std::numbers::pi);
  if (log_value > 707.0)
    throw NumericError("alpha normalization overflows for omega=" + std::to_string(omega) +
                       ", n=" + std::to_string(n));
  return std::pow(2.0, n) * std::pow(omega, n + 1) /
         std::pow(std::numbers::pi, 0.5 * (n - 1));
}

double beta_normalization(double omega) {
  if (!(omega > 0)) throw std::invalid_argument("beta needs omega > 0");
  return std::sqrt(std::numbers::pi) / (2.0 * omega);
}

double column_weight(const FeatureBasis& basis, int column) {
  if (basis.family == FeatureBasis::Family::Fourier) return 1.0;
  if (basis.cls == SystemClass::FirstOrderHomogeneous)
    return alpha_normalization(basis.omegas(column), basis.n_context);
  return beta_normalization(basis.omegas(column));
}

FeatureBasis make_radial_basis(SystemClass cls, int n_context, double theta_variance,
                               const BlockLayout& layout, std::uint64_t seed) {
  FeatureBasis basis;
  basis.family = FeatureBasis::Family::Radial;
  basis.cls = cls;
  basis.n_context = n_context;
  basis.theta_variance = theta_variance;
  basis.seed = seed;
  basis.blocks = layout;
  basis.omegas.resize(layout.total());
  if (layout.heterogeneous) {
    // Independent draws per kernel block so block sizes can vary freely.
    for (int blk = 0; blk < 4; ++blk) {
      if (layout.count[blk] == 0) continue;
      basis.omegas.segment(layout.offset[blk], layout.count[blk]) = sample_frequencies(
          theta_variance, layout.count[blk], rng::derive(seed, 0, static_cast<std::uint64_t>(blk)));
    }
  } else {
    basis.omegas = sample_frequencies(theta_variance, layout.total(), seed);
  }
  basis.validate();
  return basis;
}

FeatureBasis make_fourier_basis(int n_context, double theta_variance, int N, std::uint64_t seed) {
  if (N < 1) throw ConfigError("need N >= 1 feature frequencies");
  if (!(theta_variance > 0)) throw ConfigError("theta variance must be > 0");
  FeatureBasis basis;
  basis.family = FeatureBasis::Family::Fourier;
  basis.cls = SystemClass::FirstOrderHomogeneous;
  basis.n_context = n_context;
  basis.theta_variance = theta_variance;
  basis.seed = seed;
  basis.blocks = BlockLayout::single(N);
  basis.omegas.resize(N);
  basis.phases.resize(N);
  auto eng = rng::engine(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(theta_variance));
  for (int k = 0; k < N; ++k) basis.omegas(k) = normal(eng);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
  for (int k = 0; k < N; ++k) basis.phases(k) = uniform(eng);
  basis.validate();
  return basis;
}

Eigen::Index FeatureMatrix::row_of(int l, int j, int i, int c) const {
  return ((static_cast<Eigen::Index>(l) * J_used + (j - j_lo)) * n + i) * d + c;
}

int row_group_count(const SystemSpec& spec) { return is_heterogeneous(spec.cls) ? 2 : 1; }

namespace {

void check_training_data(const TrajectorySet& traj, const FeatureBasis& basis,
                         const SystemSpec& spec) {
  if (basis.cls != spec.cls) throw ConfigError("feature basis class does not match the system");
  if (traj.cls != spec.cls) throw ConfigError("trajectory class does not match the system");
  if (traj.n != spec.n || traj.d != spec.d) throw ConfigError("trajectory/spec shape mismatch");
  if (is_second_order(spec.cls)) {
    if (!traj.has_accelerations())
      throw ConfigError("second-order training needs estimated accelerations");
  } else if (!traj.has_velocities()) {
    throw ConfigError("first-order training needs estimated velocities");
  }
  if (basis.family == FeatureBasis::Family::Radial &&
      basis.cls == SystemClass::FirstOrderHomogeneous && basis.n_context != spec.n)
    throw ConfigError("basis n_context does not match the agent count");
}

std::pair<int, int> training_range(const TrajectorySet& traj, bool include_endpoints) {
  const auto range = include_endpoints ? std::pair<int, int>{0, traj.J} : traj.interior_range();
  if (range.second <= range.first)
    throw ConfigError("not enough interior timestamps to assemble training rows");
  return range;
}

// Writes the feature row-block of (trajectory l, group) into `values`
// (rows: (j, agent-in-group, coordinate); cols: the group's columns) and the
// matching targets. The same routine serves every family and system class.
void fill_rows(const TrajectorySet& traj, const FeatureBasis& basis, const SystemSpec& spec,
               int l, int group, int j_lo, int j_hi, Eigen::Ref<Eigen::MatrixXd> values,
               Eigen::VectorXd* targets) {
  const bool heterog = is_heterogeneous(spec.cls);
  const bool second = is_second_order(spec.cls);
  const bool fourier = basis.family == FeatureBasis::Family::Fourier;
  const int d = spec.d;
  const int group_off = basis.blocks.group_offset(group);
  const int group_cols = basis.blocks.group_count(group);

  std::vector<int> group_agents;
  for (int i = 0; i < spec.n; ++i)
    if (!heterog || spec.types[i] == group) group_agents.push_back(i);

  // Per-column scale: weight(omega) / (n or n_b), in group-local column space.
  Eigen::ArrayXd col_scale(group_cols);
  Eigen::ArrayXd omega_sq(group_cols);
  for (int c = 0; c < group_cols; ++c) {
    const int col = group_off + c;
    double denom = spec.n;
    if (heterog) {
      const int b = (c < basis.blocks.block_count(group, 0)) ? 0 : 1;
      denom = spec.count_of_type(b);
    }
    col_scale(c) = column_weight(basis, col) / denom;
    omega_sq(c) = fourier ? basis.omegas(col) : basis.omegas(col) * basis.omegas(col);
  }

  Eigen::ArrayXd pair_profile(group_cols);
  std::vector<Eigen::ArrayXd> acc(d, Eigen::ArrayXd(group_cols));

  Eigen::Index row = 0;
  for (int j = j_lo; j < j_hi; ++j) {
    const Eigen::MatrixXd& x = traj.state(l, j);
    const Eigen::MatrixXd* vel = nullptr;
    if (second) vel = &traj.velocities[static_cast<std::size_t>(l) * traj.J + j];
    for (int ia : group_agents) {
      for (int c = 0; c < d; ++c) acc[c].setZero();
      for (int ib = 0; ib < spec.n; ++ib) {
        if (ib == ia) continue;
        double r_sq = 0;
        for (int c = 0; c < d; ++c) {
          const double diff = x(ib, c) - x(ia, c);
          r_sq += diff * diff;
        }
        int seg_lo = 0, seg_len = group_cols;
        if (heterog) {
          const int b = spec.types[ib];
          seg_lo = (b == 0) ? 0 : basis.blocks.block_count(group, 0);
          seg_len = basis.blocks.block_count(group, b);
        }
        if (seg_len == 0) continue;
        auto profile = pair_profile.segment(seg_lo, seg_len);
        if (fourier)
          profile = (omega_sq.segment(seg_lo, seg_len) * std::sqrt(r_sq) +
                     Eigen::Map<const Eigen::ArrayXd>(basis.phases.data() + group_off + seg_lo,
                                                      seg_len))
                        .cos();
        else
          profile = (-r_sq * omega_sq.segment(seg_lo, seg_len)).exp();
        for (int c = 0; c < d; ++c) {
          const double component =
              second ? (*vel)(ib, c) - (*vel)(ia, c) : x(ib, c) - x(ia, c);
          acc[c].segment(seg_lo, seg_len) += component * profile;
        }
      }
      for (int c = 0; c < d; ++c) {
        values.row(row) = (acc[c] * col_scale).matrix().transpose();
        if (targets) {
          const Eigen::MatrixXd& target_field =
              second ? traj.accelerations[static_cast<std::size_t>(l) * traj.J + j]
                     : traj.velocities[static_cast<std::size_t>(l) * traj.J + j];
          (*targets)(row) = target_field(ia, c);
        }
        ++row;
      }
    }
  }
}

}  // namespace

RowBlock assemble_trajectory_rows(const TrajectorySet& traj, const FeatureBasis& basis,
                                  const SystemSpec& spec, int l, int group,
                                  bool include_endpoints) {
  check_training_data(traj, basis, spec);
  const auto [j_lo, j_hi] = training_range(traj, include_endpoints);
  const bool heterog = is_heterogeneous(spec.cls);
  const int agents = heterog ? spec.count_of_type(group) : spec.n;
  RowBlock block;
  const Eigen::Index rows = static_cast<Eigen::Index>(j_hi - j_lo) * agents * spec.d;
  block.values.resize(rows, basis.blocks.group_count(group));
  block.targets.resize(rows);
  fill_rows(traj, basis, spec, l, group, j_lo, j_hi, block.values, &block.targets);
  return block;
}

FeatureMatrix assemble_feature_matrix(const TrajectorySet& traj, const FeatureBasis& basis,
                                      const SystemSpec& spec, bool include_endpoints) {
  check_training_data(traj, basis, spec);
  const auto [j_lo, j_hi] = training_range(traj, include_endpoints);
  FeatureMatrix out;
  out.d = spec.d;
  out.n = spec.n;
  out.J_used = j_hi - j_lo;
  out.L = traj.L;
  out.j_lo = j_lo;
  const Eigen::Index rows = static_cast<Eigen::Index>(out.L) * out.J_used * out.n * out.d;
  out.values = Eigen::MatrixXd::Zero(rows, basis.size());

  const bool heterog = is_heterogeneous(spec.cls);
  for (int l = 0; l < traj.L; ++l) {
    if (!heterog) {
      auto dest = out.values.middleRows(out.row_of(l, j_lo, 0, 0),
                                        static_cast<Eigen::Index>(out.J_used) * out.n * out.d);
      fill_rows(traj, basis, spec, l, 0, j_lo, j_hi, dest, nullptr);
    } else {
      for (int group = 0; group < 2; ++group) {
        RowBlock block = assemble_trajectory_rows(traj, basis, spec, l, group, include_endpoints);
        // Scatter group rows back into agent order and the global column span.
        const int group_off = basis.blocks.group_offset(group);
        const int group_cols = basis.blocks.group_count(group);
        Eigen::Index src = 0;
        for (int j = j_lo; j < j_hi; ++j) {
          for (int i = 0; i < spec.n; ++i) {
            if (spec.types[i] != group) continue;
            for (int c = 0; c < spec.d; ++c) {
              out.values.block(out.row_of(l, j, i, c), group_off, 1, group_cols) =
                  block.values.row(src);
              ++src;
            }
          }
        }
      }
    }
  }
  if (!out.values.allFinite()) throw NumericError("feature matrix contains non-finite entries");
  return out;
}

Eigen::VectorXd stack_targets(const TrajectorySet& traj, const SystemSpec& spec,
                              bool include_endpoints) {
  const bool second = is_second_order(spec.cls);
  if (second && !traj.has_accelerations())
    throw ConfigError("second-order targets need estimated accelerations");
  if (!second && !traj.has_velocities())
    throw ConfigError("first-order targets need estimated velocities");
  const auto [j_lo, j_hi] = training_range(traj, include_endpoints);
  const Eigen::Index rows =
      static_cast<Eigen::Index>(traj.L) * (j_hi - j_lo) * traj.n * traj.d;
  Eigen::VectorXd targets(rows);
  Eigen::Index row = 0;
  for (int l = 0; l < traj.L; ++l)
    for (int j = j_lo; j < j_hi; ++j) {
      const Eigen::MatrixXd& field =
          second ? traj.accelerations[static_cast<std::size_t>(l) * traj.J + j]
                 : traj.velocities[static_cast<std::size_t>(l) * traj.J + j];
      for (int i = 0; i < traj.n; ++i)
        for (int c = 0; c < traj.d; ++c) targets(row++) = field(i, c);
    }
  return targets;
}

FeatureMatrix assemble_fourier_feature_matrix(const TrajectorySet& traj,
                                              const FeatureBasis& basis,
                                              const SystemSpec& spec, bool include_endpoints) {
  if (basis.family != FeatureBasis::Family::Fourier)
    throw ConfigError("assemble_fourier_feature_matrix needs a Fourier basis");
  if (spec.cls != SystemClass::FirstOrderHomogeneous)
    throw ConfigError("the Fourier baseline supports first-order homogeneous systems only");
  return assemble_feature_matrix(traj, basis, spec, include_endpoints);
}

double eval_learned_kernel(const FeatureBasis& basis, double r, int a, int b) {
  if (!basis.has_coefficients())
    throw std::logic_error("eval_learned_kernel: basis has no trained coefficients");
  const int blk_off = basis.blocks.heterogeneous ? basis.blocks.block_offset(a, b) : 0;
  const int blk_cnt = basis.blocks.heterogeneous ? basis.blocks.block_count(a, b) : basis.size();
  const bool fourier = basis.family == FeatureBasis::Family::Fourier;
  double sum = 0;
  auto term = [&](int k) {
    const double c = basis.coefficients(k);
    if (fourier) return c * std::cos(basis.omegas(k) * r + basis.phases(k));
    const double w = basis.omegas(k);
    return c * column_weight(basis, k) * std::exp(-r * r * w * w);
  };
  if (!basis.support.empty()) {
    for (int k : basis.support)
      if (k >= blk_off && k < blk_off + blk_cnt) sum += term(k);
  } else {
    for (int k = blk_off; k < blk_off + blk_cnt; ++k) sum += term(k);
  }
  return sum;
}

SystemSpec build_learned_system(const FeatureBasis& basis, const SystemSpec& tmpl) {
  if (!basis.has_coefficients())
    throw std::logic_error("build_learned_system: basis has no trained coefficients");
  if (basis.cls != tmpl.cls) throw ConfigError("basis/system class mismatch");
  if (basis.cls == SystemClass::FirstOrderHomogeneous && basis.n_context != tmpl.n)
    throw ConfigError("basis was built for a different agent count");
  auto shared = std::make_shared<const FeatureBasis>(basis);

  auto block_kernel = [&](int a, int b) {
    const int off = basis.blocks.heterogeneous ? basis.blocks.block_offset(a, b) : 0;
    const int cnt = basis.blocks.heterogeneous ? basis.blocks.block_count(a, b) : basis.size();
    std::vector<int> cols;
    if (!basis.support.empty()) {
      for (int k : basis.support)
        if (k >= off && k < off + cnt) cols.push_back(k);
    } else {
      for (int k = off; k < off + cnt; ++k) cols.push_back(k);
    }
    if (cols.empty()) return Kernel::zero();
    Eigen::ArrayXd weights(cols.size()), second_arg(cols.size()), phases(cols.size());
    for (std::size_t idx = 0; idx < cols.size(); ++idx) {
      const int k = cols[idx];
      if (basis.family == FeatureBasis::Family::Fourier) {
        weights(idx) = basis.coefficients(k);
        second_arg(idx) = basis.omegas(k);
        phases(idx) = basis.phases(k);
      } else {
        weights(idx) = basis.coefficients(k) * column_weight(basis, k);
        second_arg(idx) = basis.omegas(k) * basis.omegas(k);
      }
    }
    if (basis.family == FeatureBasis::Family::Fourier)
      return Kernel::fourier_mixture(std::move(weights), std::move(second_arg),
                                     std::move(phases), shared);
    return Kernel::radial_mixture(std::move(weights), std::move(second_arg), shared);
  };

  SystemSpec learned = tmpl;
  if (is_heterogeneous(tmpl.cls)) {
    if (!basis.blocks.heterogeneous)
      throw ConfigError("heterogeneous system needs a block-grid basis");
    learned.kernels = {block_kernel(0, 0), block_kernel(0, 1), block_kernel(1, 0),
                       block_kernel(1, 1)};
  } else {
    learned.kernels = {block_kernel(0, 0)};
  }
  return learned;
}

}  // namespace rfk
