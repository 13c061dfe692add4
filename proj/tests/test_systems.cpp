#include <doctest.h>

#include <cmath>
#include <random>

#include "rfk/kernels.hpp"
#include "rfk/systems.hpp"

using namespace rfk;

namespace {

// Independent O(n^2) reference: literal double loop over the governing sums,
// no pair symmetry tricks.
Eigen::MatrixXd brute_force_rhs(const AgentState& state, const SystemSpec& spec) {
  const int n = spec.n, d = spec.d;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, d);
  for (int i = 0; i < n; ++i) {
    for (int ip = 0; ip < n; ++ip) {
      if (ip == i) continue;
      const Eigen::VectorXd r_vec = state.positions.row(ip) - state.positions.row(i);
      const double r = r_vec.norm();
      switch (spec.cls) {
        case SystemClass::FirstOrderHomogeneous:
          out.row(i) += (spec.kernel().eval(r) / n) * r_vec.transpose();
          break;
        case SystemClass::FirstOrderHeterogeneous: {
          const int a = spec.types[i], b = spec.types[ip];
          out.row(i) += (spec.kernel(a, b).eval(r) / spec.count_of_type(b)) * r_vec.transpose();
          break;
        }
        case SystemClass::SecondOrderHomogeneous: {
          const Eigen::VectorXd v_vec = state.velocities.row(ip) - state.velocities.row(i);
          out.row(i) += (spec.kernel().eval(r) / n) * v_vec.transpose();
          break;
        }
      }
    }
  }
  return out;
}

AgentState random_state(int n, int d, unsigned seed, bool with_velocities = false) {
  std::mt19937 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  AgentState s;
  s.positions.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) s.positions(i, c) = normal(eng);
  if (with_velocities) {
    s.velocities.resize(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) s.velocities(i, c) = normal(eng);
  }
  return s;
}

Kernel unit_kernel() {
  Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(2, 0.0, 10.0);
  return Kernel::tabulated(r, Eigen::VectorXd::Ones(2));
}

}  // namespace

TEST_CASE("kernel spot values") {
  CHECK(Kernel::cucker_smale().eval(0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(Kernel::prey_prey().eval(1.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(Kernel::zero().eval(3.7) == 0.0);
  CHECK(Kernel::predator_predator().eval(0.5) == 0.0);

  // Lennard-Jones: g(r) = G'(r)/r, checked against a finite-difference oracle.
  const Kernel lj = Kernel::lennard_jones(10.0, 1.0);
  CHECK(lj.eval(1.0) == doctest::Approx(-240.0).epsilon(1e-12));
  auto potential = [](double r) { return lennard_jones_potential(10.0, 1.0, r); };
  const double fd = (potential(1.0 + 1e-6) - potential(1.0 - 1e-6)) / (2e-6) / 1.0;
  CHECK(lj.eval(1.0) == doctest::Approx(fd).epsilon(1e-6));
  CHECK(lj.eval(std::pow(2.0, 1.0 / 6.0)) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(lj.eval(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("kernel domain floor clamps the singularity") {
  Kernel lj = Kernel::lennard_jones(10.0, 1.0);
  CHECK(std::isfinite(lj.eval(0.0)));
  CHECK(lj.eval(0.0) == lj.eval(lj.domain_floor()));
  CHECK(lj.eval(1e-12) == lj.eval(lj.domain_floor()));
}

TEST_CASE("kernel_from_potential") {
  CHECK(kernel_from_potential([](double r) { return 0.5 * r * r; }, 3.0) ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(kernel_from_potential([](double) { return 4.2; }, 1.7) == 0.0);
  const double via_potential =
      kernel_from_potential([](double r) { return lennard_jones_potential(10.0, 1.0, r); }, 1.0);
  CHECK(via_potential == doctest::Approx(-240.0).epsilon(1e-7));
  CHECK_THROWS_AS(kernel_from_potential([](double r) { return r; }, -1.0),
                  std::invalid_argument);
}

TEST_CASE("tabulated kernel reproduces smooth functions") {
  Eigen::VectorXd r = Eigen::VectorXd::LinSpaced(400, 0.0, 5.0);
  Eigen::VectorXd g(400);
  for (int i = 0; i < 400; ++i) g(i) = std::exp(-r(i));
  Kernel tab = Kernel::tabulated(r, g);
  CHECK(tab.eval(1.2345) == doctest::Approx(std::exp(-1.2345)).epsilon(1e-6));
  CHECK(tab.eval(10.0) == doctest::Approx(g(399)).epsilon(1e-12));  // clamped past the grid
}

TEST_CASE("first-order homogeneous RHS") {
  SUBCASE("two agents, g == 1 gives +-1/2") {
    SystemSpec pair =
        SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 1, 2, unit_kernel());
    AgentState s;
    s.positions.resize(2, 1);
    s.positions << 0.0, 1.0;
    const Eigen::MatrixXd v = rhs_first_order_homog(s, pair);
    CHECK(v(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(v(1, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  }

  SUBCASE("zero kernel gives zero field") {
    SystemSpec pair =
        SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 1, 2, Kernel::zero());
    AgentState s;
    s.positions.resize(2, 1);
    s.positions << 0.0, 1.0;
    CHECK(rhs_first_order_homog(s, pair).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("matches the brute-force oracle on a random LJ state") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                              Kernel::lennard_jones(10.0, 1.0));
    const AgentState state = random_state(3, 2, 11);
    const Eigen::MatrixXd fast = rhs_first_order_homog(state, spec);
    const Eigen::MatrixXd slow = brute_force_rhs(state, spec);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("first-order heterogeneous RHS") {
  SUBCASE("prey/predator hand example") {
    SystemSpec spec = SystemSpec::heterogeneous(
        2, {0, 1},
        {Kernel::prey_prey(), Kernel::prey_predator(), Kernel::predator_prey(),
         Kernel::predator_predator()});
    AgentState s;
    s.positions.resize(2, 2);
    s.positions << 0.0, 0.0, 1.0, 0.0;
    const Eigen::MatrixXd v = rhs_first_order_heterog(s, spec);
    CHECK(v(0, 0) == doctest::Approx(-2.0).epsilon(1e-14));  // g12(1) = -2, away from predator
    CHECK(v(0, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v(1, 0) == doctest::Approx(-3.5).epsilon(1e-14));  // g21(1) = 3.5, toward the prey
    CHECK(v(1, 1) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("all-zero kernels give a zero field") {
    SystemSpec spec = SystemSpec::heterogeneous(
        2, {0, 0, 1}, {Kernel::zero(), Kernel::zero(), Kernel::zero(), Kernel::zero()});
    const AgentState state = random_state(3, 2, 5);
    CHECK(rhs_first_order_heterog(state, spec).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("single populated type reduces to the homogeneous RHS") {
    const int n = 4;
    SystemSpec heterog = SystemSpec::heterogeneous(
        2, std::vector<int>(n, 0),
        {Kernel::cucker_smale(), Kernel::cucker_smale(), Kernel::cucker_smale(),
         Kernel::cucker_smale()});
    SystemSpec homog = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, n,
                                               Kernel::cucker_smale());
    const AgentState state = random_state(n, 2, 6);
    const Eigen::MatrixXd a = rhs_first_order_heterog(state, heterog);
    const Eigen::MatrixXd b = rhs_first_order_homog(state, homog);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff()));
  }

  SUBCASE("matches the brute-force oracle") {
    SystemSpec spec = SystemSpec::heterogeneous(
        2, {0, 0, 0, 1, 1},
        {Kernel::prey_prey(), Kernel::prey_predator(), Kernel::predator_prey(),
         Kernel::predator_predator()});
    const AgentState state = random_state(5, 2, 12);
    const Eigen::MatrixXd fast = rhs_first_order_heterog(state, spec);
    const Eigen::MatrixXd slow = brute_force_rhs(state, spec);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("second-order homogeneous RHS") {
  SUBCASE("two agents, unit kernel") {
    SystemSpec spec =
        SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 2, unit_kernel());
    AgentState s;
    s.positions.resize(2, 2);
    s.positions << 0.0, 0.0, 1.0, 0.0;
    s.velocities.resize(2, 2);
    s.velocities << 1.0, 0.0, 0.0, 0.0;
    const Eigen::MatrixXd a = rhs_second_order_homog(s, spec);
    CHECK(a(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(a(1, 0) == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("equal velocities give zero accelerations") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 5,
                                              Kernel::cucker_smale());
    AgentState state = random_state(5, 2, 7, true);
    state.velocities.rowwise() = Eigen::RowVector2d(1.5, -0.5);
    CHECK(rhs_second_order_homog(state, spec).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("matches the brute-force oracle") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 4,
                                              Kernel::cucker_smale());
    const AgentState state = random_state(4, 2, 13, true);
    const Eigen::MatrixXd fast = rhs_second_order_homog(state, spec);
    const Eigen::MatrixXd slow = brute_force_rhs(state, spec);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
  }

  SUBCASE("missing velocities is an input error") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 3,
                                              Kernel::cucker_smale());
    const AgentState state = random_state(3, 2, 8);
    CHECK_THROWS_AS(rhs_second_order_homog(state, spec), std::invalid_argument);
  }
}

TEST_CASE("RHS invariants") {
  SUBCASE("translation invariance for every class") {
    for (int cls = 0; cls < 3; ++cls) {
      SystemSpec spec =
          cls == 1 ? SystemSpec::heterogeneous(2, {0, 0, 1, 1},
                                               {Kernel::sheep_sheep(),
                                                Kernel::sheep_food_attraction(), Kernel::zero(),
                                                Kernel::zero()})
                   : SystemSpec::homogeneous(cls == 0 ? SystemClass::FirstOrderHomogeneous
                                                      : SystemClass::SecondOrderHomogeneous,
                                             2, 4, Kernel::cucker_smale());
      AgentState state = random_state(4, 2, 20 + cls, cls == 2);
      const Eigen::MatrixXd before = eval_rhs(state, spec);
      state.positions.rowwise() += Eigen::RowVector2d(17.5, -3.25);
      const Eigen::MatrixXd after = eval_rhs(state, spec);
      CHECK((before - after).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, before.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("homogeneous momentum conservation is exact") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 3, 6,
                                              Kernel::lennard_jones(10.0, 1.0));
    const AgentState state = random_state(6, 3, 31);
    const Eigen::MatrixXd v = rhs_first_order_homog(state, spec);
    const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
    CHECK(v.colwise().sum().cwiseAbs().maxCoeff() <= 1e-13 * scale);
  }

  SUBCASE("brute-force equivalence for n up to 10") {
    for (int n : {2, 5, 10}) {
      SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, n,
                                                Kernel::lennard_jones(10.0, 1.0));
      const AgentState state = random_state(n, 2, 40 + n);
      const Eigen::MatrixXd fast = rhs_first_order_homog(state, spec);
      const Eigen::MatrixXd slow = brute_force_rhs(state, spec);
      CHECK((fast - slow).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, slow.cwiseAbs().maxCoeff()));
    }
  }

  SUBCASE("coincident agents with a singular kernel are clamped, not infinite") {
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                              Kernel::lennard_jones(10.0, 1.0));
    AgentState state = random_state(3, 2, 50);
    state.positions.row(1) = state.positions.row(0);
    RhsStats stats;
    const Eigen::MatrixXd v = rhs_first_order_homog(state, spec, &stats);
    CHECK(v.allFinite());
    CHECK(stats.clamped > 0);
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS(SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 0, 3,
                                       Kernel::cucker_smale()));
  std::vector<int> bad_types = {0, 2};
  CHECK_THROWS(SystemSpec::heterogeneous(
      2, bad_types, {Kernel::zero(), Kernel::zero(), Kernel::zero(), Kernel::zero()}));
}
