#include "rfk/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "rfk/errors.hpp"
#include "rfk/parallel.hpp"
#include "rfk/rng.hpp"

namespace rfk {

InitialConditionLaw InitialConditionLaw::gaussian() { return {}; }

InitialConditionLaw InitialConditionLaw::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  InitialConditionLaw law;
  law.kind = Kind::UniformBox;
  law.lo = std::move(lo);
  law.hi = std::move(hi);
  return law;
}

InitialConditionLaw InitialConditionLaw::ring(double r_min, double r_max, Eigen::Vector2d center) {
  InitialConditionLaw law;
  law.kind = Kind::UniformRing;
  law.r_min = r_min;
  law.r_max = r_max;
  law.center = center;
  return law;
}

InitialConditionLaw InitialConditionLaw::disk(double radius, Eigen::Vector2d center) {
  InitialConditionLaw law;
  law.kind = Kind::UniformDisk;
  law.radius = radius;
  law.center = center;
  return law;
}

InitialConditionLaw InitialConditionLaw::heart(double radius, Eigen::Vector2d center) {
  InitialConditionLaw law;
  law.kind = Kind::HeartCurve;
  law.radius = radius;
  law.center = center;
  return law;
}

InitialConditionLaw InitialConditionLaw::strip(double x0, double x1, double y0, double y1) {
  InitialConditionLaw law;
  law.kind = Kind::UniformStrip;
  law.lo = Eigen::Vector2d(x0, y0);
  law.hi = Eigen::Vector2d(x1, y1);
  return law;
}

void InitialConditionLaw::validate(int d) const {
  switch (kind) {
    case Kind::GaussianStandard:
      return;
    case Kind::UniformBox:
      if (lo.size() != d || hi.size() != d)
        throw ConfigError("uniform box law needs lo/hi of the spatial dimension");
      for (int c = 0; c < d; ++c)
        if (!(lo(c) < hi(c))) throw ConfigError("uniform box law needs lo < hi per dimension");
      return;
    case Kind::UniformRing:
      if (d != 2) throw ConfigError("ring law requires d = 2");
      if (!(0 <= r_min && r_min < r_max)) throw ConfigError("ring law needs 0 <= r_min < r_max");
      return;
    case Kind::UniformDisk:
      if (d != 2) throw ConfigError("disk law requires d = 2");
      if (!(radius > 0)) throw ConfigError("disk law needs radius > 0");
      return;
    case Kind::HeartCurve:
      if (d != 2) throw ConfigError("heart law requires d = 2");
      if (!(radius > 0)) throw ConfigError("heart law needs radius > 0");
      return;
    case Kind::UniformStrip:
      if (d != 2) throw ConfigError("strip law requires d = 2");
      if (lo.size() != 2 || hi.size() != 2 || !(lo(0) < hi(0)) || !(lo(1) < hi(1)))
        throw ConfigError("strip law needs x0 < x1 and y0 < y1");
      return;
  }
  throw ConfigError("unknown initial-condition law");
}

namespace {

// Heart curve (x, y) = (16 sin^3 t, 13 cos t - 5 cos 2t - 2 cos 3t - cos 4t) / 16,
// whose max coordinate extent is 17/16.
Eigen::Vector2d heart_point(double theta) {
  const double s = std::sin(theta);
  return {s * s * s, (13.0 * std::cos(theta) - 5.0 * std::cos(2.0 * theta) -
                      2.0 * std::cos(3.0 * theta) - std::cos(4.0 * theta)) / 16.0};
}

class HeartSampler {
 public:
  HeartSampler() {
    const int segments = 4096;
    thetas_.resize(segments + 1);
    cumlen_.resize(segments + 1);
    cumlen_[0] = 0;
    Eigen::Vector2d prev = heart_point(0);
    for (int i = 1; i <= segments; ++i) {
      thetas_[i] = 2.0 * std::numbers::pi * i / segments;
      const Eigen::Vector2d p = heart_point(thetas_[i]);
      cumlen_[i] = cumlen_[i - 1] + (p - prev).norm();
      prev = p;
    }
  }

  // Arclength-uniform point, scaled so the curve's max extent equals `radius`.
  Eigen::Vector2d sample(double u, double radius, const Eigen::Vector2d& center) const {
    const double target = u * cumlen_.back();
    const auto it = std::upper_bound(cumlen_.begin(), cumlen_.end(), target);
    const std::size_t hi = std::min<std::size_t>(it - cumlen_.begin(), cumlen_.size() - 1);
    const std::size_t lo = hi - 1;
    const double seg = cumlen_[hi] - cumlen_[lo];
    const double frac = seg > 0 ? (target - cumlen_[lo]) / seg : 0.0;
    const double theta = thetas_[lo] + frac * (thetas_[hi] - thetas_[lo]);
    const double scale = radius / (17.0 / 16.0);
    return center + scale * heart_point(theta);
  }

 private:
  std::vector<double> thetas_, cumlen_;
};

const HeartSampler& heart_sampler() {
  static const HeartSampler sampler;
  return sampler;
}

void draw_agent(const InitialConditionLaw& law, int d, std::mt19937_64& eng,
                Eigen::MatrixXd& out, int row) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (law.kind) {
    case InitialConditionLaw::Kind::GaussianStandard: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int c = 0; c < d; ++c) out(row, c) = normal(eng);
      return;
    }
    case InitialConditionLaw::Kind::UniformBox:
    case InitialConditionLaw::Kind::UniformStrip: {
      for (int c = 0; c < d; ++c) out(row, c) = law.lo(c) + (law.hi(c) - law.lo(c)) * unit(eng);
      return;
    }
    case InitialConditionLaw::Kind::UniformRing: {
      const double u = unit(eng), phi = 2.0 * std::numbers::pi * unit(eng);
      const double r = std::sqrt(law.r_min * law.r_min +
                                 u * (law.r_max * law.r_max - law.r_min * law.r_min));
      out(row, 0) = law.center(0) + r * std::cos(phi);
      out(row, 1) = law.center(1) + r * std::sin(phi);
      return;
    }
    case InitialConditionLaw::Kind::UniformDisk: {
      const double u = unit(eng), phi = 2.0 * std::numbers::pi * unit(eng);
      const double r = law.radius * std::sqrt(u);
      out(row, 0) = law.center(0) + r * std::cos(phi);
      out(row, 1) = law.center(1) + r * std::sin(phi);
      return;
    }
    case InitialConditionLaw::Kind::HeartCurve: {
      const Eigen::Vector2d p = heart_sampler().sample(unit(eng), law.radius, law.center);
      out(row, 0) = p(0);
      out(row, 1) = p(1);
      return;
    }
  }
}

}  // namespace

std::pair<int, int> TrajectorySet::interior_range() const {
  if (has_accelerations()) return {2, J - 2};
  if (has_velocities()) return {1, J - 1};
  return {0, J};
}

void TrajectorySet::validate() const {
  if (static_cast<std::size_t>(L) * J != states.size())
    throw ConfigError("trajectory set: state count != L*J");
  if (static_cast<int>(timestamps.size()) != J)
    throw ConfigError("trajectory set: timestamp count != J");
}

double RadialDensity::min_observed() const { return bin_edges.size() ? bin_edges(0) : 0; }
double RadialDensity::max_observed() const {
  return bin_edges.size() ? bin_edges(bin_edges.size() - 1) : 0;
}

const RadialDensity& DensitySet::pair(int a, int b) const {
  return per_pair[a + b];  // (0,0)->0, mixed->1, (1,1)->2
}

std::vector<AgentState> sample_initial_conditions(const InitialConditionSet& laws,
                                                  const SystemSpec& spec, int L,
                                                  std::uint64_t seed) {
  if (L < 1) throw ConfigError("need L >= 1 initial conditions");
  const bool heterog = is_heterogeneous(spec.cls);
  const bool second = is_second_order(spec.cls);
  laws.position[0].validate(spec.d);
  if (heterog) laws.position[1].validate(spec.d);
  if (second && !laws.velocity) throw ConfigError("second-order systems need a velocity law");
  if (laws.velocity) {
    (*laws.velocity)[0].validate(spec.d);
    if (heterog) (*laws.velocity)[1].validate(spec.d);
  }

  std::vector<AgentState> out(L);
  for (int l = 0; l < L; ++l) {
    auto eng = rng::engine(rng::derive(seed, 0, static_cast<std::uint64_t>(l)));
    AgentState s;
    s.time = 0;
    s.positions.resize(spec.n, spec.d);
    for (int i = 0; i < spec.n; ++i) {
      const int type = heterog ? spec.types[i] : 0;
      draw_agent(laws.position[type], spec.d, eng, s.positions, i);
    }
    if (second) {
      s.velocities.resize(spec.n, spec.d);
      for (int i = 0; i < spec.n; ++i) {
        const int type = heterog ? spec.types[i] : 0;
        draw_agent((*laws.velocity)[type], spec.d, eng, s.velocities, i);
      }
    }
    out[l] = std::move(s);
  }
  return out;
}

TrajectorySet generate_dataset(const SystemSpec& spec, const InitialConditionSet& laws, int L,
                               int J, double T, const IntegratorSettings& settings,
                               std::uint64_t seed, int threads, IntegrationStats* stats) {
  if (J < 3) throw ConfigError("generate_dataset needs J >= 3");
  if (!(T > 0)) throw ConfigError("generate_dataset needs T > 0");
  spec.validate();

  TrajectorySet traj;
  traj.d = spec.d;
  traj.n = spec.n;
  traj.J = J;
  traj.L = L;
  traj.T = T;
  traj.cls = spec.cls;
  traj.types = spec.types;
  traj.seed = seed;
  traj.timestamps = equidistant_timestamps(0.0, T, J);
  traj.states.resize(static_cast<std::size_t>(L) * J);
  if (is_second_order(spec.cls)) traj.velocities.resize(static_cast<std::size_t>(L) * J);

  const auto initials = sample_initial_conditions(laws, spec, L, seed);
  std::vector<IntegrationStats> per_traj(L);
  std::vector<std::string> failures(L);
  parallel_for(
      static_cast<std::size_t>(L),
      [&](std::size_t l) {
        try {
          auto states = integrate_system(spec, initials[l], traj.timestamps, settings,
                                         &per_traj[l]);
          for (int j = 0; j < J; ++j) {
            traj.states[l * J + j] = std::move(states[j].positions);
            if (is_second_order(spec.cls))
              traj.velocities[l * J + j] = std::move(states[j].velocities);
          }
        } catch (const std::exception& e) {
          failures[l] = e.what();
        }
      },
      threads);
  for (int l = 0; l < L; ++l)
    if (!failures[l].empty())
      throw NumericError("trajectory " + std::to_string(l) + ": " + failures[l]);
  if (stats) {
    for (const auto& s : per_traj) {
      stats->accepted += s.accepted;
      stats->rejected += s.rejected;
      stats->rhs_evals += s.rhs_evals;
      stats->clamped += s.clamped;
      stats->step_flagged = stats->step_flagged || s.step_flagged;
    }
  }
  return traj;
}

TrajectorySet apply_multiplicative_noise(const TrajectorySet& traj, double sigma_noise,
                                         std::uint64_t seed) {
  if (sigma_noise < 0) throw ConfigError("noise magnitude must be >= 0");
  if (traj.noise_applied) throw std::logic_error("noise already applied to this trajectory set");
  TrajectorySet out = traj;
  out.noise_applied = true;
  if (sigma_noise == 0) return out;
  for (int l = 0; l < traj.L; ++l) {
    auto eng = rng::engine(rng::derive(seed, 0, static_cast<std::uint64_t>(l)));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int j = 0; j < traj.J; ++j) {
      Eigen::MatrixXd& x = out.state(l, j);
      for (int i = 0; i < traj.n; ++i)
        for (int c = 0; c < traj.d; ++c) x(i, c) *= 1.0 + sigma_noise * u(eng);
    }
  }
  return out;
}

TrajectorySet estimate_velocities_central_difference(const TrajectorySet& traj) {
  if (traj.J < 3) throw ConfigError("central differences need J >= 3");
  TrajectorySet out = traj;
  out.velocities.resize(out.states.size());
  const auto& t = traj.timestamps;
  for (int l = 0; l < traj.L; ++l) {
    out.velocities[static_cast<std::size_t>(l) * traj.J] =
        (traj.state(l, 1) - traj.state(l, 0)) / (t[1] - t[0]);
    for (int j = 1; j + 1 < traj.J; ++j)
      out.velocities[static_cast<std::size_t>(l) * traj.J + j] =
          (traj.state(l, j + 1) - traj.state(l, j - 1)) / (t[j + 1] - t[j - 1]);
    out.velocities[static_cast<std::size_t>(l) * traj.J + traj.J - 1] =
        (traj.state(l, traj.J - 1) - traj.state(l, traj.J - 2)) / (t[traj.J - 1] - t[traj.J - 2]);
  }
  out.accelerations.clear();
  return out;
}

TrajectorySet estimate_accelerations(const TrajectorySet& traj) {
  if (traj.J < 5) throw ConfigError("acceleration estimation needs J >= 5");
  TrajectorySet out = estimate_velocities_central_difference(traj);
  out.accelerations.resize(out.states.size());
  const auto& t = traj.timestamps;
  auto vel = [&](int l, int j) -> const Eigen::MatrixXd& {
    return out.velocities[static_cast<std::size_t>(l) * traj.J + j];
  };
  for (int l = 0; l < traj.L; ++l) {
    out.accelerations[static_cast<std::size_t>(l) * traj.J] =
        (vel(l, 1) - vel(l, 0)) / (t[1] - t[0]);
    for (int j = 1; j + 1 < traj.J; ++j)
      out.accelerations[static_cast<std::size_t>(l) * traj.J + j] =
          (vel(l, j + 1) - vel(l, j - 1)) / (t[j + 1] - t[j - 1]);
    out.accelerations[static_cast<std::size_t>(l) * traj.J + traj.J - 1] =
        (vel(l, traj.J - 1) - vel(l, traj.J - 2)) / (t[traj.J - 1] - t[traj.J - 2]);
  }
  return out;
}

namespace {

struct PairCounts {
  std::vector<std::uint64_t> overall;
  std::array<std::vector<std::uint64_t>, 3> per_pair;
};

template <typename Visit>
void for_each_pair_distance(const TrajectorySet& traj, int l, Visit&& visit) {
  for (int j = 0; j < traj.J; ++j) {
    const Eigen::MatrixXd& x = traj.state(l, j);
    for (int i = 0; i < traj.n; ++i) {
      for (int k = i + 1; k < traj.n; ++k) {
        double sq = 0;
        for (int c = 0; c < traj.d; ++c) {
          const double diff = x(k, c) - x(i, c);
          sq += diff * diff;
        }
        visit(std::sqrt(sq), i, k);
      }
    }
  }
}

RadialDensity finalize(const Eigen::VectorXd& edges, const std::vector<std::uint64_t>& counts) {
  RadialDensity density;
  density.bin_edges = edges;
  density.mass.resize(static_cast<Eigen::Index>(counts.size()));
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  density.total_count = static_cast<double>(total);
  for (std::size_t b = 0; b < counts.size(); ++b)
    density.mass(static_cast<Eigen::Index>(b)) =
        total ? static_cast<double>(counts[b]) / static_cast<double>(total) : 0.0;
  return density;
}

DensitySet histogram_with_edges(const TrajectorySet& traj, const Eigen::VectorXd& edges) {
  const int bins = static_cast<int>(edges.size()) - 1;
  if (bins < 1) throw ConfigError("density needs at least one bin");
  const double lo = edges(0), hi = edges(bins);
  const double width = (hi - lo) / bins;
  bool uniform = true;
  for (int b = 0; b <= bins; ++b)
    if (std::abs(edges(b) - (lo + width * b)) > 1e-12 * std::max(1.0, std::abs(hi))) {
      uniform = false;
      break;
    }
  const bool heterog = !traj.types.empty();

  std::vector<PairCounts> per_traj(traj.L);
  parallel_for(static_cast<std::size_t>(traj.L), [&](std::size_t l) {
    PairCounts& counts = per_traj[l];
    counts.overall.assign(bins, 0);
    if (heterog)
      for (auto& v : counts.per_pair) v.assign(bins, 0);
    for_each_pair_distance(traj, static_cast<int>(l), [&](double r, int i, int k) {
      if (r < lo || r > hi) return;
      int b;
      if (uniform) {
        b = width > 0 ? static_cast<int>((r - lo) / width) : 0;
      } else {
        b = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), r) - edges.begin()) - 1;
      }
      b = std::clamp(b, 0, bins - 1);
      ++counts.overall[b];
      if (heterog) ++counts.per_pair[traj.types[i] + traj.types[k]][b];
    });
  });

  PairCounts total;
  total.overall.assign(bins, 0);
  for (auto& v : total.per_pair) v.assign(bins, 0);
  for (const auto& c : per_traj) {
    for (int b = 0; b < bins; ++b) total.overall[b] += c.overall[b];
    if (heterog)
      for (int p = 0; p < 3; ++p)
        for (int b = 0; b < bins; ++b) total.per_pair[p][b] += c.per_pair[p][b];
  }

  DensitySet out;
  out.heterogeneous = heterog;
  out.overall = finalize(edges, total.overall);
  for (int p = 0; p < 3; ++p) out.per_pair[p] = finalize(edges, total.per_pair[p]);
  return out;
}

}  // namespace

DensitySet empirical_radial_density(const TrajectorySet& traj, int bins) {
  if (traj.L < 1 || traj.states.empty()) throw ConfigError("density needs at least one trajectory");
  if (bins < 1) throw ConfigError("density needs bins >= 1");
  if (traj.n < 2) throw ConfigError("density needs at least two agents");

  std::vector<double> mins(traj.L, std::numeric_limits<double>::infinity());
  std::vector<double> maxs(traj.L, -std::numeric_limits<double>::infinity());
  parallel_for(static_cast<std::size_t>(traj.L), [&](std::size_t l) {
    for_each_pair_distance(traj, static_cast<int>(l), [&](double r, int, int) {
      mins[l] = std::min(mins[l], r);
      maxs[l] = std::max(maxs[l], r);
    });
  });
  double lo = *std::min_element(mins.begin(), mins.end());
  double hi = *std::max_element(maxs.begin(), maxs.end());
  if (!(hi > lo)) {
    const double pad = std::max(1e-12, 1e-9 * std::max(1.0, std::abs(lo)));
    lo -= pad;
    hi += pad;
  }
  Eigen::VectorXd edges(bins + 1);
  for (int b = 0; b <= bins; ++b)
    edges(b) = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  return histogram_with_edges(traj, edges);
}

DensitySet empirical_radial_density(const TrajectorySet& traj, const Eigen::VectorXd& edges) {
  if (traj.L < 1 || traj.states.empty()) throw ConfigError("density needs at least one trajectory");
  for (Eigen::Index i = 1; i < edges.size(); ++i)
    if (!(edges(i) > edges(i - 1))) throw ConfigError("density edges must be ascending");
  return histogram_with_edges(traj, edges);
}

}  // namespace rfk
