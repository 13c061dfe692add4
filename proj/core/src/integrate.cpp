#include "rfk/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "rfk/errors.hpp"

namespace rfk {

void IntegratorSettings::validate() const {
  if (!(rel_tol > 0) || !(abs_tol > 0)) throw ConfigError("integrator tolerances must be > 0");
  if (max_steps < 1) throw ConfigError("integrator max_steps must be >= 1");
  if (!(max_step > 0)) throw ConfigError("integrator max_step must be > 0");
}

namespace {

// Dormand-Prince 5(4) tableau (FSAL, 7 stages).
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 5th-order minus embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output weights for the 4th-order continuous extension.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

class Dopri5 {
 public:
  Dopri5(const OdeRhs& rhs, const Eigen::VectorXd& y0, const IntegratorSettings& s,
         IntegrationStats* stats)
      : rhs_(rhs), settings_(s), stats_(stats), y_(y0), n_(y0.size()) {
    for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &y_stage_, &y_new_, &err_})
      k->resize(n_);
    cont_.resize(5, n_);
  }

  double t() const { return t_; }
  double t_new() const { return t_new_; }

  void start(double t0) {
    t_ = t0;
    eval(t_, y_, k1_);
    h_ = initial_step();
  }

  // Advances one accepted step; on return the interval [t, t_new] has a valid
  // dense interpolant.
  void step(double t_end) {
    for (std::int64_t tries = 0;; ++tries) {
      if (total_steps() >= settings_.max_steps)
        throw IntegrationError("integration exceeded max_steps", t_);
      double h = std::min({h_, settings_.max_step, t_end - t_});
      const bool clipped = h < h_;
      if (!(h > 0)) h = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_));

      y_stage_ = y_ + h * a21 * k1_;
      eval(t_ + c2 * h, y_stage_, k2_);
      y_stage_ = y_ + h * (a31 * k1_ + a32 * k2_);
      eval(t_ + c3 * h, y_stage_, k3_);
      y_stage_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      eval(t_ + c4 * h, y_stage_, k4_);
      y_stage_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      eval(t_ + c5 * h, y_stage_, k5_);
      y_stage_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      eval(t_ + h, y_stage_, k6_);
      y_new_ = y_ + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
      eval(t_ + h, y_new_, k7_);

      err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      double err_norm_sq = 0;
      for (Eigen::Index i = 0; i < n_; ++i) {
        const double scale =
            settings_.abs_tol +
            settings_.rel_tol * std::max(std::abs(y_(i)), std::abs(y_new_(i)));
        const double e = err_(i) / scale;
        err_norm_sq += e * e;
      }
      const double err_norm = std::sqrt(err_norm_sq / static_cast<double>(n_));
      if (!std::isfinite(err_norm) || !y_new_.allFinite()) {
        ++rejected_;
        if (stats_) ++stats_->rejected;
        h_ = 0.25 * h;
        if (h_ < 1e-14 * std::max(1.0, std::abs(t_)))
          throw IntegrationError("state became non-finite", t_);
        continue;
      }
      if (err_norm <= 1.0) {
        prepare_dense(h);
        t_new_ = t_ + h;
        ++accepted_;
        if (stats_) ++stats_->accepted;
        const double factor =
            err_norm == 0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
        const double h_next = h * factor;
        h_ = clipped ? std::max(h_, h_next) : h_next;
        y_.swap(y_new_);
        k1_.swap(k7_);  // FSAL
        t_ = t_new_;
        return;
      }
      ++rejected_;
      if (stats_) ++stats_->rejected;
      h_ = h * std::clamp(0.9 * std::pow(err_norm, -0.2), 0.1, 1.0);
    }
  }

  // Dense interpolant on the last accepted step, theta in [0, 1].
  void interpolate(double theta, Eigen::VectorXd& out) const {
    const double t1 = 1.0 - theta;
    out = cont_.row(0).transpose() +
          theta * (cont_.row(1).transpose() +
                   t1 * (cont_.row(2).transpose() +
                         theta * (cont_.row(3).transpose() + t1 * cont_.row(4).transpose())));
  }

  const Eigen::VectorXd& current() const { return y_; }

  std::int64_t total_steps() const { return accepted_ + rejected_; }

 private:
  void eval(double t, const Eigen::VectorXd& y, Eigen::VectorXd& out) {
    rhs_(t, y, out);
    if (stats_) ++stats_->rhs_evals;
  }

  double initial_step() const {
    // Hairer-style heuristic trimmed down: relate the state scale to the
    // derivative scale, heavily capped.
    const double d0 = y_.norm();
    const double d1 = k1_.norm();
    double h = (d1 > 1e-10) ? 0.01 * std::max(d0, settings_.abs_tol) / d1 : 1e-6;
    return std::min(h, settings_.max_step);
  }

  void prepare_dense(double h) {
    // Continuous extension coefficients (classic dopri5 contd5 layout).
    cont_.row(0) = y_.transpose();
    cont_.row(1) = (y_new_ - y_).transpose();
    cont_.row(2) = (h * k1_ - (y_new_ - y_)).transpose();
    cont_.row(3) = ((y_new_ - y_) - h * k7_ - cont_.row(2).transpose()).transpose();
    cont_.row(4) =
        (h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_)).transpose();
  }

  const OdeRhs& rhs_;
  const IntegratorSettings& settings_;
  IntegrationStats* stats_;
  Eigen::VectorXd y_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, y_stage_, y_new_, err_;
  Eigen::MatrixXd cont_;
  Eigen::Index n_;
  double t_ = 0, t_new_ = 0, h_ = 0;
  std::int64_t accepted_ = 0, rejected_ = 0;
};

std::vector<Eigen::VectorXd> run_fixed_rk4(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                           const std::vector<double>& timestamps,
                                           const IntegratorSettings& settings,
                                           IntegrationStats* stats) {
  const double span = timestamps.back() - timestamps.front();
  double h = settings.fixed_step > 0 ? settings.fixed_step
             : std::isfinite(settings.max_step) ? settings.max_step
                                                : span / 200.0;
  std::vector<Eigen::VectorXd> out;
  out.reserve(timestamps.size());
  Eigen::VectorXd y = y0, k1(y0.size()), k2(y0.size()), k3(y0.size()), k4(y0.size()),
                  tmp(y0.size());
  double t = timestamps.front();
  out.push_back(y);
  std::int64_t steps = 0;
  for (std::size_t j = 1; j < timestamps.size(); ++j) {
    const double target = timestamps[j];
    const auto substeps =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil((target - t) / h - 1e-12)));
    const double hs = (target - t) / static_cast<double>(substeps);
    for (std::int64_t s = 0; s < substeps; ++s) {
      if (++steps > settings.max_steps)
        throw IntegrationError("integration exceeded max_steps", t);
      rhs(t, y, k1);
      tmp = y + 0.5 * hs * k1;
      rhs(t + 0.5 * hs, tmp, k2);
      tmp = y + 0.5 * hs * k2;
      rhs(t + 0.5 * hs, tmp, k3);
      tmp = y + hs * k3;
      rhs(t + hs, tmp, k4);
      y += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += hs;
      if (stats) {
        ++stats->accepted;
        stats->rhs_evals += 4;
      }
      if (!y.allFinite()) throw IntegrationError("state became non-finite", t - hs);
    }
    t = target;
    out.push_back(y);
  }
  return out;
}

}  // namespace

std::vector<Eigen::VectorXd> integrate_ode(const OdeRhs& rhs, const Eigen::VectorXd& y0,
                                           const std::vector<double>& timestamps,
                                           const IntegratorSettings& settings,
                                           IntegrationStats* stats) {
  settings.validate();
  if (timestamps.empty()) throw ConfigError("integrate: empty timestamp list");
  for (std::size_t j = 1; j < timestamps.size(); ++j)
    if (!(timestamps[j] > timestamps[j - 1]))
      throw ConfigError("integrate: timestamps must be strictly increasing");
  if (!y0.allFinite()) throw std::invalid_argument("integrate: non-finite initial state");

  if (timestamps.size() == 1) return {y0};
  if (settings.method == IntegratorSettings::Method::FixedRK4)
    return run_fixed_rk4(rhs, y0, timestamps, settings, stats);

  std::vector<Eigen::VectorXd> out;
  out.reserve(timestamps.size());
  out.push_back(y0);

  Dopri5 stepper(rhs, y0, settings, stats);
  stepper.start(timestamps.front());
  const double t_end = timestamps.back();
  std::size_t next = 1;
  Eigen::VectorXd interp(y0.size());
  while (next < timestamps.size()) {
    const double t_prev = stepper.t();
    stepper.step(t_end);
    const double t_new = stepper.t_new();
    const double width = t_new - t_prev;
    while (next < timestamps.size() && timestamps[next] <= t_new + 1e-14 * std::abs(t_new)) {
      if (timestamps[next] >= t_new) {
        out.push_back(stepper.current());
      } else {
        stepper.interpolate((timestamps[next] - t_prev) / width, interp);
        out.push_back(interp);
      }
      ++next;
    }
  }
  if (stats && stats->accepted > 0 &&
      stats->rejected > stats->accepted / 2)
    stats->step_flagged = true;
  return out;
}

std::vector<AgentState> integrate_system(const SystemSpec& spec, const AgentState& initial,
                                         const std::vector<double>& timestamps,
                                         const IntegratorSettings& settings,
                                         IntegrationStats* stats) {
  const bool second = is_second_order(spec.cls);
  const Eigen::Index block = static_cast<Eigen::Index>(spec.n) * spec.d;
  Eigen::VectorXd y0(second ? 2 * block : block);
  for (int i = 0; i < spec.n; ++i)
    for (int c = 0; c < spec.d; ++c) y0(i * spec.d + c) = initial.positions(i, c);
  if (second) {
    if (initial.velocities.rows() != spec.n || initial.velocities.cols() != spec.d)
      throw std::invalid_argument("second-order initial state needs velocities");
    for (int i = 0; i < spec.n; ++i)
      for (int c = 0; c < spec.d; ++c) y0(block + i * spec.d + c) = initial.velocities(i, c);
  }

  AgentState work;
  work.positions.resize(spec.n, spec.d);
  if (second) work.velocities.resize(spec.n, spec.d);
  RhsStats rhs_stats;
  OdeRhs rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) {
    for (int i = 0; i < spec.n; ++i)
      for (int c = 0; c < spec.d; ++c) work.positions(i, c) = y(i * spec.d + c);
    if (second)
      for (int i = 0; i < spec.n; ++i)
        for (int c = 0; c < spec.d; ++c) work.velocities(i, c) = y(block + i * spec.d + c);
    work.time = t;
    const Eigen::MatrixXd f = eval_rhs(work, spec, &rhs_stats);
    if (second) {
      dydt.head(block) = y.tail(block);
      for (int i = 0; i < spec.n; ++i)
        for (int c = 0; c < spec.d; ++c) dydt(block + i * spec.d + c) = f(i, c);
    } else {
      for (int i = 0; i < spec.n; ++i)
        for (int c = 0; c < spec.d; ++c) dydt(i * spec.d + c) = f(i, c);
    }
  };

  const auto flat = integrate_ode(rhs, y0, timestamps, settings, stats);
  if (stats) stats->clamped += rhs_stats.clamped;

  std::vector<AgentState> out;
  out.reserve(flat.size());
  for (std::size_t j = 0; j < flat.size(); ++j) {
    AgentState s;
    s.time = timestamps[j];
    s.positions.resize(spec.n, spec.d);
    for (int i = 0; i < spec.n; ++i)
      for (int c = 0; c < spec.d; ++c) s.positions(i, c) = flat[j](i * spec.d + c);
    if (second) {
      s.velocities.resize(spec.n, spec.d);
      for (int i = 0; i < spec.n; ++i)
        for (int c = 0; c < spec.d; ++c) s.velocities(i, c) = flat[j](block + i * spec.d + c);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> equidistant_timestamps(double t0, double t1, int count) {
  if (count < 1) throw ConfigError("timestamp count must be >= 1");
  std::vector<double> ts(count);
  if (count == 1) {
    ts[0] = t0;
    return ts;
  }
  const double dt = (t1 - t0) / static_cast<double>(count - 1);
  for (int j = 0; j < count; ++j) ts[j] = t0 + dt * j;
  ts.back() = t1;
  return ts;
}

}  // namespace rfk
