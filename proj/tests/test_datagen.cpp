#include <doctest.h>

#include <cmath>

#include "rfk/datagen.hpp"
#include "rfk/errors.hpp"
#include "rfk/rng.hpp"

using namespace rfk;

namespace {

SystemSpec pair_spec() {
  return SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 2, Kernel::zero());
}

InitialConditionSet gaussian_laws() {
  InitialConditionSet laws;
  laws.position[0] = InitialConditionLaw::gaussian();
  return laws;
}

// Hand-built trajectory set: one trajectory, explicit states.
TrajectorySet manual_set(const std::vector<Eigen::MatrixXd>& states,
                         const std::vector<double>& times) {
  TrajectorySet traj;
  traj.d = static_cast<int>(states[0].cols());
  traj.n = static_cast<int>(states[0].rows());
  traj.J = static_cast<int>(states.size());
  traj.L = 1;
  traj.T = times.back();
  traj.timestamps = times;
  traj.states = states;
  return traj;
}

}  // namespace

TEST_CASE("ring law support containment and determinism") {
  InitialConditionSet laws;
  laws.position[0] = InitialConditionLaw::ring(0.5, 1.5);
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 6,
                                            Kernel::zero());
  const auto a = sample_initial_conditions(laws, spec, 40, 9);
  const auto b = sample_initial_conditions(laws, spec, 40, 9);
  for (int l = 0; l < 40; ++l) {
    CHECK((a[l].positions - b[l].positions).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 6; ++i) {
      const double r = a[l].positions.row(i).norm();
      CHECK(r >= 0.5);
      CHECK(r <= 1.5);
    }
  }
}

TEST_CASE("gaussian law sample mean obeys the law of large numbers") {
  InitialConditionSet laws = gaussian_laws();
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 1,
                                            Kernel::zero());
  const int L = 10000;
  const auto draws = sample_initial_conditions(laws, spec, L, 123);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& s : draws) mean += s.positions.row(0).transpose();
  mean /= L;
  CHECK(std::abs(mean(0)) <= 0.05);
  CHECK(std::abs(mean(1)) <= 0.05);
}

TEST_CASE("strip, disk, and heart laws stay inside their supports") {
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 8,
                                            Kernel::zero());
  InitialConditionSet laws;

  laws.position[0] = InitialConditionLaw::strip(-5, 5, -10, -9);
  for (const auto& s : sample_initial_conditions(laws, spec, 20, 3))
    for (int i = 0; i < 8; ++i) {
      CHECK(s.positions(i, 0) >= -5);
      CHECK(s.positions(i, 0) <= 5);
      CHECK(s.positions(i, 1) >= -10);
      CHECK(s.positions(i, 1) <= -9);
    }

  laws.position[0] = InitialConditionLaw::disk(0.1);
  for (const auto& s : sample_initial_conditions(laws, spec, 20, 4))
    for (int i = 0; i < 8; ++i) CHECK(s.positions.row(i).norm() <= 0.1 + 1e-12);

  // Heart curve scaled so the maximum coordinate extent equals the radius.
  laws.position[0] = InitialConditionLaw::heart(5.0);
  double extent = 0;
  for (const auto& s : sample_initial_conditions(laws, spec, 200, 5))
    extent = std::max(extent, s.positions.cwiseAbs().maxCoeff());
  CHECK(extent <= 5.0 + 1e-9);
  CHECK(extent >= 4.5);  // the curve reaches its extreme often enough
}

TEST_CASE("generate_dataset") {
  IntegratorSettings settings;

  SUBCASE("zero kernel keeps states constant in time") {
    const auto traj = generate_dataset(pair_spec(), gaussian_laws(), 3, 10, 1.0, settings, 2);
    for (int l = 0; l < 3; ++l)
      for (int j = 1; j < 10; ++j)
        CHECK((traj.state(l, j) - traj.state(l, 0)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("same seed gives identical trajectory sets") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                              Kernel::cucker_smale());
    const auto a = generate_dataset(spec, gaussian_laws(), 4, 8, 0.5, settings, 77);
    const auto b = generate_dataset(spec, gaussian_laws(), 4, 8, 0.5, settings, 77);
    for (std::size_t k = 0; k < a.states.size(); ++k)
      CHECK((a.states[k] - b.states[k]).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("parallel generation equals sequential") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                              Kernel::cucker_smale());
    const auto seq = generate_dataset(spec, gaussian_laws(), 6, 8, 0.5, settings, 7, 1);
    const auto par = generate_dataset(spec, gaussian_laws(), 6, 8, 0.5, settings, 7, 4);
    for (std::size_t k = 0; k < seq.states.size(); ++k)
      CHECK((seq.states[k] - par.states[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("multiplicative noise") {
  IntegratorSettings settings;
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                            Kernel::cucker_smale());
  const auto clean = generate_dataset(spec, gaussian_laws(), 2, 6, 0.5, settings, 5);

  SUBCASE("sigma = 0 leaves states untouched") {
    const auto same = apply_multiplicative_noise(clean, 0.0, 1);
    for (std::size_t k = 0; k < clean.states.size(); ++k)
      CHECK((same.states[k] - clean.states[k]).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("per-coordinate relative bound") {
    const double sigma = 0.05;
    const auto noisy = apply_multiplicative_noise(clean, sigma, 1);
    for (std::size_t k = 0; k < clean.states.size(); ++k) {
      const Eigen::MatrixXd diff = (noisy.states[k] - clean.states[k]).cwiseAbs();
      const Eigen::MatrixXd bound = sigma * clean.states[k].cwiseAbs();
      CHECK(((diff.array() <= bound.array() + 1e-15).all()));
    }
  }

  SUBCASE("noise factor is centered (moments of Uniform[-1,1])") {
    // Large-sample mean of (x_noisy - x)/x = sigma * u.
    TrajectorySet big;
    big.d = 1;
    big.n = 1;
    big.J = 1000000;
    big.L = 1;
    big.T = 1;
    big.timestamps.assign(big.J, 0.0);
    big.states.assign(big.J, Eigen::MatrixXd::Ones(1, 1));
    const double sigma = 0.1;
    const auto noisy = apply_multiplicative_noise(big, sigma, 99);
    double mean = 0;
    for (int j = 0; j < big.J; ++j) mean += noisy.states[j](0, 0) - 1.0;
    mean /= big.J;
    // std of the mean is sigma/sqrt(3 J); allow 3 standard deviations.
    CHECK(std::abs(mean) <= 3.0 * sigma / std::sqrt(3.0 * big.J));
  }

  SUBCASE("double application is rejected") {
    const auto once = apply_multiplicative_noise(clean, 0.01, 1);
    CHECK_THROWS_AS(apply_multiplicative_noise(once, 0.01, 1), std::logic_error);
  }
}

TEST_CASE("central-difference velocities") {
  SUBCASE("exact for quadratic paths") {
    std::vector<double> times = {0.0, 0.1, 0.2};
    std::vector<Eigen::MatrixXd> states;
    for (double t : times) {
      Eigen::MatrixXd x(1, 1);
      x(0, 0) = t * t;
      states.push_back(x);
    }
    const auto est = estimate_velocities_central_difference(manual_set(states, times));
    CHECK(est.velocities[1](0, 0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(est.interior_range().first == 1);
    CHECK(est.interior_range().second == 2);
  }

  SUBCASE("constant path gives zero velocities") {
    std::vector<double> times = {0.0, 0.5, 1.0, 1.5};
    std::vector<Eigen::MatrixXd> states(4, Eigen::MatrixXd::Constant(2, 2, 3.0));
    const auto est = estimate_velocities_central_difference(manual_set(states, times));
    for (const auto& v : est.velocities) CHECK(v.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("second-order convergence on cubic paths") {
    auto interior_error = [](double dt) {
      const int J = 21;
      std::vector<double> times;
      std::vector<Eigen::MatrixXd> states;
      for (int j = 0; j < J; ++j) {
        const double t = j * dt;
        times.push_back(t);
        Eigen::MatrixXd x(1, 1);
        x(0, 0) = t * t * t;
        states.push_back(x);
      }
      const auto est = estimate_velocities_central_difference(manual_set(states, times));
      double worst = 0;
      for (int j = 1; j + 1 < J; ++j)
        worst = std::max(worst,
                         std::abs(est.velocities[j](0, 0) - 3.0 * times[j] * times[j]));
      return worst;
    };
    const double ratio = interior_error(0.1) / interior_error(0.05);
    CHECK(ratio >= 3.5);
  }
}

TEST_CASE("acceleration estimation") {
  SUBCASE("exact for quadratic paths at interior points") {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> states;
    for (int j = 0; j < 7; ++j) {
      const double t = 0.1 * j;
      times.push_back(t);
      Eigen::MatrixXd x(1, 1);
      x(0, 0) = t * t;
      states.push_back(x);
    }
    const auto est = estimate_accelerations(manual_set(states, times));
    const auto [lo, hi] = est.interior_range();
    CHECK(lo == 2);
    CHECK(hi == 5);
    for (int j = lo; j < hi; ++j)
      CHECK(est.accelerations[j](0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  }

  SUBCASE("linear paths have zero acceleration") {
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> states;
    for (int j = 0; j < 6; ++j) {
      times.push_back(0.2 * j);
      Eigen::MatrixXd x(1, 1);
      x(0, 0) = 3.0 * times.back() + 1.0;
      states.push_back(x);
    }
    const auto est = estimate_accelerations(manual_set(states, times));
    for (const auto& a : est.accelerations)
      CHECK(a.cwiseAbs().maxCoeff() <= 1e-13);
  }

  SUBCASE("sin path acceleration error is O(dt^2)") {
    const double dt = 1e-3;
    std::vector<double> times;
    std::vector<Eigen::MatrixXd> states;
    for (int j = 0; j < 101; ++j) {
      times.push_back(j * dt);
      Eigen::MatrixXd x(1, 1);
      x(0, 0) = std::sin(times.back());
      states.push_back(x);
    }
    const auto est = estimate_accelerations(manual_set(states, times));
    const auto [lo, hi] = est.interior_range();
    double worst = 0;
    for (int j = lo; j < hi; ++j)
      worst = std::max(worst, std::abs(est.accelerations[j](0, 0) + std::sin(times[j])));
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("empirical radial density") {
  SUBCASE("two stationary agents put all mass at their distance") {
    Eigen::MatrixXd x(2, 2);
    x << 0, 0, 1, 0;
    const auto density = empirical_radial_density(manual_set({x, x, x}, {0, 0.5, 1.0}), 7);
    const auto& rho = density.overall;
    CHECK(rho.mass.sum() == doctest::Approx(1.0).epsilon(1e-14));
    // Locate the bin containing r = 1 and check it owns everything.
    for (Eigen::Index b = 0; b < rho.mass.size(); ++b) {
      const bool contains = rho.bin_edges(b) <= 1.0 && 1.0 <= rho.bin_edges(b + 1);
      if (contains)
        CHECK(rho.mass(b) == doctest::Approx(1.0).epsilon(1e-14));
      else
        CHECK(rho.mass(b) == 0.0);
    }
  }

  SUBCASE("three agents with distances {1,1,2}") {
    Eigen::MatrixXd x(3, 1);
    x << 0.0, 1.0, 2.0;  // pairs: (0,1)->1, (1,2)->1, (0,2)->2
    const auto density = empirical_radial_density(manual_set({x}, {0.0}), 2);
    CHECK(density.overall.mass(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(density.overall.mass(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }

  SUBCASE("mass is zero outside the observed support") {
    Eigen::MatrixXd x(2, 1);
    x << 0.0, 1.0;
    Eigen::VectorXd edges = Eigen::VectorXd::LinSpaced(11, 0.0, 5.0);
    const auto density = empirical_radial_density(manual_set({x}, {0.0}), edges);
    for (Eigen::Index b = 0; b < density.overall.mass.size(); ++b) {
      if (density.overall.bin_edges(b + 1) < 1.0 || density.overall.bin_edges(b) > 1.0)
        CHECK(density.overall.mass(b) == 0.0);
    }
    CHECK(density.overall.mass.sum() == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("heterogeneous sets get per-pair densities") {
    Eigen::MatrixXd x(3, 1);
    x << 0.0, 1.0, 3.0;
    TrajectorySet traj = manual_set({x}, {0.0});
    traj.cls = SystemClass::FirstOrderHeterogeneous;
    traj.types = {0, 0, 1};
    const auto density = empirical_radial_density(traj, 4);
    CHECK(density.heterogeneous);
    CHECK(density.pair(0, 0).total_count == 1);  // (0,1)
    CHECK(density.pair(0, 1).total_count == 2);  // (0,2), (1,2)
    CHECK(density.pair(1, 1).total_count == 0);
  }
}

TEST_CASE("dataset determinism across noise and estimation") {
  IntegratorSettings settings;
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                            Kernel::cucker_smale());
  auto make = [&]() {
    auto t = generate_dataset(spec, gaussian_laws(), 3, 9, 0.3, settings, 21);
    t = apply_multiplicative_noise(t, 0.01, 22);
    return estimate_velocities_central_difference(t);
  };
  const auto a = make(), b = make();
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK((a.states[k] - b.states[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.velocities[k] - b.velocities[k]).cwiseAbs().maxCoeff() == 0.0);
  }
}
