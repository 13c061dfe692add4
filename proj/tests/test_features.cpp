#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rfk/errors.hpp"
#include "rfk/features.hpp"
#include "rfk/systems.hpp"

using namespace rfk;

namespace {

// One effective timestep (J=3, interior row j=1) holding a fixed configuration.
TrajectorySet single_snapshot(const Eigen::MatrixXd& positions, SystemClass cls,
                              std::vector<int> types = {},
                              const Eigen::MatrixXd& velocities = {}) {
  TrajectorySet traj;
  traj.d = static_cast<int>(positions.cols());
  traj.n = static_cast<int>(positions.rows());
  traj.J = 3;
  traj.L = 1;
  traj.T = 1.0;
  traj.cls = cls;
  traj.types = std::move(types);
  traj.timestamps = {0.0, 0.5, 1.0};
  traj.states.assign(3, positions);
  traj.velocities.assign(3, velocities.size() ? velocities
                                              : Eigen::MatrixXd::Zero(traj.n, traj.d));
  if (is_second_order(cls)) traj.accelerations.assign(3, Eigen::MatrixXd::Zero(traj.n, traj.d));
  return traj;
}

FeatureBasis manual_radial_basis(SystemClass cls, int n_context, Eigen::VectorXd omegas) {
  FeatureBasis basis;
  basis.cls = cls;
  basis.n_context = n_context;
  basis.theta_variance = 1.0;
  basis.blocks = BlockLayout::single(static_cast<int>(omegas.size()));
  basis.omegas = std::move(omegas);
  basis.validate();
  return basis;
}

}  // namespace

TEST_CASE("sample_frequencies") {
  const auto a = sample_frequencies(35.0, 1000, 42);
  const auto b = sample_frequencies(35.0, 1000, 42);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.minCoeff() > 0.0);

  // E[omega^2] = variance for |N(0, var)| draws.
  const auto big = sample_frequencies(35.0, 100000, 7);
  const double mean_sq = big.array().square().mean();
  CHECK(std::abs(mean_sq - 35.0) <= 0.02 * 35.0);

  CHECK_THROWS_AS(sample_frequencies(35.0, 0, 1), ConfigError);
}

TEST_CASE("alpha normalization closed form") {
  CHECK(alpha_normalization(1.0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(alpha_normalization(1.0, 2) ==
        doctest::Approx(4.0 / std::sqrt(std::numbers::pi)).epsilon(1e-15));
  CHECK(alpha_normalization(2.0, 2) ==
        doctest::Approx(32.0 / std::sqrt(std::numbers::pi)).epsilon(1e-15));
  CHECK_THROWS_AS(alpha_normalization(1e6, 60), NumericError);  // would overflow
}

TEST_CASE("beta normalization closed form") {
  const double half_sqrt_pi = std::sqrt(std::numbers::pi) / 2.0;
  CHECK(beta_normalization(1.0) == doctest::Approx(half_sqrt_pi).epsilon(1e-15));
  CHECK(beta_normalization(half_sqrt_pi) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(beta_normalization(10.0) == doctest::Approx(0.0886226925452758).epsilon(1e-12));
}

TEST_CASE("feature matrix shape and row bookkeeping") {
  // Scaled-down analogue of the shape contract rows = d*n*J_used*L, cols = N.
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 4,
                                            Kernel::cucker_smale());
  TrajectorySet traj;
  traj.d = 2; traj.n = 4; traj.J = 6; traj.L = 3; traj.T = 1.0;
  traj.cls = spec.cls;
  traj.timestamps = {0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::mt19937 eng(3);
  std::normal_distribution<double> normal;
  traj.states.assign(18, Eigen::MatrixXd());
  traj.velocities.assign(18, Eigen::MatrixXd::Zero(4, 2));
  for (auto& x : traj.states) {
    x.resize(4, 2);
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < 2; ++c) x(i, c) = normal(eng);
  }
  const FeatureBasis basis = make_radial_basis(spec.cls, 4, 2.0, BlockLayout::single(25), 5);
  const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
  CHECK(a.rows() == 2 * 4 * (6 - 2) * 3);
  CHECK(a.cols() == 25);
  CHECK(a.row_of(0, 1, 0, 0) == 0);
  CHECK(a.row_of(2, 4, 3, 1) == a.rows() - 1);
}

TEST_CASE("single-feature hand value") {
  // n=2, d=1, agents at 0 and 1, omega=1, first-order homogeneous:
  // row of agent 1 = (alpha(1,2)/2) e^{-1} = (4/sqrt(pi))/2 * e^{-1}.
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 1, 2,
                                            Kernel::zero());
  TrajectorySet traj = single_snapshot(x, spec.cls);
  FeatureBasis basis = manual_radial_basis(spec.cls, 2, Eigen::VectorXd::Ones(1));
  const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
  const double expected = (4.0 / std::sqrt(std::numbers::pi)) / 2.0 * std::exp(-1.0);
  CHECK(a.values(0, 0) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(a.values(1, 0) == doctest::Approx(-expected).epsilon(1e-14));
}

TEST_CASE("coincident displacements produce a zero row") {
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 2.0, 1.0, 2.0, 1.0, 2.0;  // all agents at the same point
  SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                            Kernel::zero());
  TrajectorySet traj = single_snapshot(x, spec.cls);
  FeatureBasis basis = manual_radial_basis(spec.cls, 3, Eigen::VectorXd::Ones(4));
  const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
  CHECK(a.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval_learned_kernel") {
  SUBCASE("single-term substitution at r=0") {
    FeatureBasis basis = manual_radial_basis(SystemClass::FirstOrderHomogeneous, 2,
                                             Eigen::VectorXd::Ones(1));
    basis.coefficients = Eigen::VectorXd::Ones(1);
    CHECK(eval_learned_kernel(basis, 0.0) ==
          doctest::Approx(4.0 / std::sqrt(std::numbers::pi)).epsilon(1e-14));
  }

  SUBCASE("zero coefficients give the zero kernel") {
    FeatureBasis basis = manual_radial_basis(SystemClass::FirstOrderHomogeneous, 3,
                                             sample_frequencies(2.0, 20, 9));
    basis.coefficients = Eigen::VectorXd::Zero(20);
    for (double r : {0.0, 0.5, 2.0}) CHECK(eval_learned_kernel(basis, r) == 0.0);
  }

  SUBCASE("missing coefficients is a state error") {
    FeatureBasis basis = manual_radial_basis(SystemClass::FirstOrderHomogeneous, 3,
                                             Eigen::VectorXd::Ones(2));
    CHECK_THROWS_AS(eval_learned_kernel(basis, 1.0), std::logic_error);
  }
}

TEST_CASE("F_N / g_N consistency identity") {
  std::mt19937 eng(17);
  std::normal_distribution<double> normal;

  SUBCASE("first-order homogeneous") {
    const int n = 4, d = 2, N = 15;
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) x(i, c) = normal(eng);
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, d, n,
                                              Kernel::zero());
    TrajectorySet traj = single_snapshot(x, spec.cls);
    FeatureBasis basis = manual_radial_basis(spec.cls, n, sample_frequencies(3.0, N, 2));
    basis.coefficients.resize(N);
    for (int k = 0; k < N; ++k) basis.coefficients(k) = normal(eng);

    const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
    const Eigen::VectorXd model = a.values * basis.coefficients;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
      for (int ip = 0; ip < n; ++ip) {
        if (ip == i) continue;
        const Eigen::VectorXd r_vec = x.row(ip) - x.row(i);
        f += eval_learned_kernel(basis, r_vec.norm()) / n * r_vec;
      }
      for (int c = 0; c < d; ++c)
        CHECK(model(a.row_of(0, 1, i, c)) ==
              doctest::Approx(f(c)).epsilon(1e-10).scale(std::max(1.0, f.cwiseAbs().maxCoeff())));
    }
  }

  SUBCASE("heterogeneous per-block analogue") {
    const int d = 2;
    std::vector<int> types = {0, 0, 1, 1, 1};
    const int n = static_cast<int>(types.size());
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) x(i, c) = normal(eng);
    SystemSpec spec = SystemSpec::heterogeneous(
        d, types, {Kernel::zero(), Kernel::zero(), Kernel::zero(), Kernel::zero()});
    TrajectorySet traj = single_snapshot(x, spec.cls, types);
    FeatureBasis basis;
    basis.cls = spec.cls;
    basis.n_context = n;
    basis.theta_variance = 2.0;
    basis.blocks = BlockLayout::grid({6, 5, 4, 3});
    basis.omegas = sample_frequencies(2.0, 18, 4);
    basis.coefficients.resize(18);
    for (int k = 0; k < 18; ++k) basis.coefficients(k) = normal(eng);
    basis.validate();

    const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
    const Eigen::VectorXd model = a.values * basis.coefficients;
    const double counts[2] = {2.0, 3.0};
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
      for (int ip = 0; ip < n; ++ip) {
        if (ip == i) continue;
        const Eigen::VectorXd r_vec = x.row(ip) - x.row(i);
        const int ai = types[i], b = types[ip];
        f += eval_learned_kernel(basis, r_vec.norm(), ai, b) / counts[b] * r_vec;
      }
      for (int c = 0; c < d; ++c)
        CHECK(model(a.row_of(0, 1, i, c)) ==
              doctest::Approx(f(c)).epsilon(1e-10).scale(std::max(1.0, f.cwiseAbs().maxCoeff())));
    }
  }

  SUBCASE("second-order with velocity differences") {
    const int n = 3, d = 2, N = 12;
    Eigen::MatrixXd x(n, d), v(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) {
        x(i, c) = normal(eng);
        v(i, c) = normal(eng);
      }
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, d, n,
                                              Kernel::zero());
    TrajectorySet traj = single_snapshot(x, spec.cls, {}, v);
    traj.accelerations.assign(3, Eigen::MatrixXd::Zero(n, d));
    FeatureBasis basis = manual_radial_basis(spec.cls, n, sample_frequencies(1.0, N, 6));
    basis.coefficients.resize(N);
    for (int k = 0; k < N; ++k) basis.coefficients(k) = normal(eng);

    // J=3 leaves no centered acceleration rows; assemble with endpoints instead.
    const FeatureMatrix a_all = assemble_feature_matrix(traj, basis, spec, true);
    const Eigen::VectorXd model_all = a_all.values * basis.coefficients;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
      for (int ip = 0; ip < n; ++ip) {
        if (ip == i) continue;
        const double r = (x.row(ip) - x.row(i)).norm();
        f += eval_learned_kernel(basis, r) / n * (v.row(ip) - v.row(i)).transpose();
      }
      for (int c = 0; c < d; ++c)
        CHECK(model_all(a_all.row_of(0, 0, i, c)) ==
              doctest::Approx(f(c)).epsilon(1e-10).scale(std::max(1.0, f.cwiseAbs().maxCoeff())));
    }
  }
}

TEST_CASE("sparse evaluation equals dense with zero off-support") {
  FeatureBasis basis = manual_radial_basis(SystemClass::FirstOrderHomogeneous, 3,
                                           sample_frequencies(4.0, 30, 8));
  std::mt19937 eng(9);
  std::normal_distribution<double> normal;
  basis.coefficients = Eigen::VectorXd::Zero(30);
  FeatureBasis sparse = basis;
  sparse.support = {2, 7, 19};
  for (int k : sparse.support) {
    const double v = normal(eng);
    basis.coefficients(k) = v;
    sparse.coefficients(k) = v;
  }
  for (double r : {0.0, 0.3, 1.1, 2.7})
    CHECK(std::abs(eval_learned_kernel(basis, r) - eval_learned_kernel(sparse, r)) <= 1e-12);
}

TEST_CASE("non-negative coefficients give a non-negative kernel") {
  FeatureBasis basis = manual_radial_basis(SystemClass::FirstOrderHomogeneous, 4,
                                           sample_frequencies(3.0, 25, 10));
  std::mt19937 eng(11);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  basis.coefficients.resize(25);
  for (int k = 0; k < 25; ++k) basis.coefficients(k) = unif(eng);
  for (int i = 0; i <= 100; ++i) CHECK(eval_learned_kernel(basis, 0.05 * i) >= 0.0);
}

TEST_CASE("radial feature profile is strictly positive") {
  for (double omega : {0.1, 1.0, 5.0})
    for (double r : {0.0, 0.5, 3.0})
      CHECK(alpha_normalization(omega, 3) * std::exp(-r * r * omega * omega) > 0.0);
}

TEST_CASE("fourier features") {
  SUBCASE("omega=0, phase=0 reduces to the mean displacement") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 1, 0, 0, 2;
    SystemSpec spec = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, 2, 3,
                                              Kernel::zero());
    TrajectorySet traj = single_snapshot(x, spec.cls);
    FeatureBasis basis;
    basis.family = FeatureBasis::Family::Fourier;
    basis.cls = spec.cls;
    basis.n_context = 3;
    basis.theta_variance = 1.0;
    basis.blocks = BlockLayout::single(1);
    basis.omegas = Eigen::VectorXd::Zero(1);
    basis.phases = Eigen::VectorXd::Zero(1);
    const FeatureMatrix a = assemble_fourier_feature_matrix(traj, basis, spec);
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (int ip = 0; ip < 3; ++ip) mean += (x.row(ip) - x.row(i)).transpose();
      mean /= 3.0;
      CHECK(a.values(a.row_of(0, 1, i, 0), 0) == doctest::Approx(mean(0)).epsilon(1e-14));
      CHECK(a.values(a.row_of(0, 1, i, 1), 0) == doctest::Approx(mean(1)).epsilon(1e-14));
    }
  }

  SUBCASE("shape matches the radial case and non-homogeneous classes are rejected") {
    const FeatureBasis basis = make_fourier_basis(3, 2.0, 12, 3);
    CHECK(basis.omegas.size() == 12);
    CHECK(basis.phases.size() == 12);
    SystemSpec second = SystemSpec::homogeneous(SystemClass::SecondOrderHomogeneous, 2, 3,
                                                Kernel::cucker_smale());
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
    TrajectorySet traj = single_snapshot(x, second.cls, {}, Eigen::MatrixXd::Zero(3, 2));
    CHECK_THROWS_AS(assemble_fourier_feature_matrix(traj, basis, second), ConfigError);
  }
}

TEST_CASE("heterogeneous rows live only in their type's blocks") {
  std::vector<int> types = {0, 1, 1};
  SystemSpec spec = SystemSpec::heterogeneous(
      2, types, {Kernel::zero(), Kernel::zero(), Kernel::zero(), Kernel::zero()});
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
  TrajectorySet traj = single_snapshot(x, spec.cls, types);
  FeatureBasis basis;
  basis.cls = spec.cls;
  basis.n_context = 3;
  basis.theta_variance = 1.0;
  basis.blocks = BlockLayout::grid({4, 3, 2, 5});
  basis.omegas = sample_frequencies(1.0, 14, 12);
  basis.validate();
  CHECK(basis.blocks.offset[0] == 0);
  CHECK(basis.blocks.offset[1] == 4);
  CHECK(basis.blocks.offset[2] == 7);
  CHECK(basis.blocks.offset[3] == 9);
  CHECK(basis.blocks.total() == 14);

  const FeatureMatrix a = assemble_feature_matrix(traj, basis, spec);
  // Agent 0 is type 1: columns of blocks (2,*) must be zero on its rows.
  for (int c = 0; c < 2; ++c) {
    CHECK(a.values.block(a.row_of(0, 1, 0, c), 7, 1, 7).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.values.block(a.row_of(0, 1, 1, c), 0, 1, 7).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("build_learned_system matches feature-matrix predictions") {
  std::mt19937 eng(23);
  std::normal_distribution<double> normal;
  const int n = 5, d = 2, N = 20;
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = normal(eng);
  SystemSpec tmpl = SystemSpec::homogeneous(SystemClass::FirstOrderHomogeneous, d, n,
                                            Kernel::zero());
  TrajectorySet traj = single_snapshot(x, tmpl.cls);
  FeatureBasis basis = manual_radial_basis(tmpl.cls, n, sample_frequencies(2.0, N, 31));
  basis.coefficients.resize(N);
  for (int k = 0; k < N; ++k) basis.coefficients(k) = normal(eng);

  const SystemSpec learned = build_learned_system(basis, tmpl);
  AgentState state;
  state.positions = x;
  const Eigen::MatrixXd rhs = eval_rhs(state, learned);
  const FeatureMatrix a = assemble_feature_matrix(traj, basis, tmpl);
  const Eigen::VectorXd model = a.values * basis.coefficients;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c)
      CHECK(rhs(i, c) == doctest::Approx(model(a.row_of(0, 1, i, c))).epsilon(1e-10));

  SUBCASE("zero coefficients forecast a constant path") {
    FeatureBasis zero_basis = basis;
    zero_basis.coefficients.setZero();
    const SystemSpec frozen = build_learned_system(zero_basis, tmpl);
    const Eigen::MatrixXd f = eval_rhs(state, frozen);
    CHECK(f.cwiseAbs().maxCoeff() == 0.0);
  }
}
