#include "rfk/solvers.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rfk/errors.hpp"

namespace rfk {

const char* to_string(SolverKind k) {
  switch (k) {
    case SolverKind::LeastSquares: return "ols";
    case SolverKind::Ridge: return "ridge";
    case SolverKind::Htp: return "htp";
    case SolverKind::Nnls: return "nnls";
  }
  return "?";
}

double CompressedLsq::residual_norm(const Eigen::VectorXd& c) const {
  return std::sqrt((R * c - qtb).squaredNorm() + extra_sq);
}

Eigen::VectorXd CompressedLsq::normal_residual(const Eigen::VectorXd& c) const {
  return R.transpose() * (qtb - R * c);
}

LsqCompressor::LsqCompressor(int cols, int block_capacity)
    : cols_(cols), capacity_(block_capacity > 0 ? block_capacity : std::max(4096, 4 * cols)) {
  if (cols < 1) throw ConfigError("compressor needs at least one column");
  work_ = Eigen::MatrixXd::Zero(cols_ + capacity_, cols_ + 1);
}

void LsqCompressor::add(const Eigen::Ref<const Eigen::MatrixXd>& a_rows,
                        const Eigen::Ref<const Eigen::VectorXd>& v_rows) {
  if (a_rows.cols() != cols_) throw ConfigError("compressor column mismatch");
  if (a_rows.rows() != v_rows.size()) throw ConfigError("row/target count mismatch");
  if (!a_rows.allFinite() || !v_rows.allFinite())
    throw std::invalid_argument("least-squares input contains non-finite entries");
  Eigen::Index consumed = 0;
  while (consumed < a_rows.rows()) {
    const Eigen::Index take = std::min<Eigen::Index>(capacity_ - filled_, a_rows.rows() - consumed);
    work_.block(cols_ + filled_, 0, take, cols_) = a_rows.middleRows(consumed, take);
    work_.block(cols_ + filled_, cols_, take, 1) = v_rows.segment(consumed, take);
    filled_ += static_cast<int>(take);
    consumed += take;
    rows_ += take;
    if (filled_ == capacity_) reduce();
  }
}

void LsqCompressor::reduce() {
  if (filled_ == 0) return;
  const lapack_int m = cols_ + filled_;
  const lapack_int n = cols_ + 1;
  const lapack_int lda = static_cast<lapack_int>(work_.rows());
  std::vector<double> tau(std::min(m, n));
  const lapack_int info =
      LAPACKE_dgeqrf(LAPACK_COL_MAJOR, m, n, work_.data(), lda, tau.data());
  if (info != 0) throw NumericError("dgeqrf failed with info " + std::to_string(info));
  // Fold the orthogonal remainder of the target column into the scalar residual.
  if (m > cols_) {
    const double rho = work_(cols_, cols_);
    extra_sq_ += rho * rho;
  }
  // Keep only [R | qtb]; clear the reflector storage below the diagonal.
  for (int col = 0; col < n; ++col)
    for (int row = col + 1; row < cols_ + 1; ++row) work_(row, col) = 0.0;
  filled_ = 0;
  has_r_ = true;
}

CompressedLsq LsqCompressor::finish() {
  reduce();
  CompressedLsq out;
  out.R = work_.topLeftCorner(cols_, cols_).triangularView<Eigen::Upper>();
  out.qtb = work_.col(cols_).head(cols_);
  out.extra_sq = extra_sq_;
  out.rows = rows_;
  return out;
}

CompressedLsq compress(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  LsqCompressor compressor(static_cast<int>(a.cols()));
  compressor.add(a, v);
  return compressor.finish();
}

namespace {

std::vector<int> nonzero_support(const Eigen::VectorXd& c) {
  std::vector<int> support;
  for (Eigen::Index k = 0; k < c.size(); ++k)
    if (c(k) != 0.0) support.push_back(static_cast<int>(k));
  return support;
}

// Least squares restricted to a column subset, minimum-norm inside the subset.
Eigen::VectorXd restricted_solve(const CompressedLsq& problem, const std::vector<int>& cols,
                                 bool* rank_deficient) {
  Eigen::MatrixXd r_sub(problem.R.rows(), cols.size());
  for (std::size_t idx = 0; idx < cols.size(); ++idx) r_sub.col(idx) = problem.R.col(cols[idx]);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(r_sub);
  if (rank_deficient && cod.rank() < static_cast<Eigen::Index>(cols.size()))
    *rank_deficient = true;
  return cod.solve(problem.qtb);
}

void fix_residual_from_data(SolveReport& report, const Eigen::MatrixXd& a,
                            const Eigen::VectorXd& v) {
  report.residual_norm = (v - a * report.coefficients).norm();
}

}  // namespace

SolveReport solve_least_squares(const CompressedLsq& problem) {
  SolveReport report;
  report.solver = SolverKind::LeastSquares;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(problem.R);
  report.coefficients = cod.solve(problem.qtb);
  report.rank_deficient = cod.rank() < problem.R.cols();
  report.support = nonzero_support(report.coefficients);
  report.residual_norm = problem.residual_norm(report.coefficients);
  report.iterations = 1;
  report.converged = true;
  return report;
}

SolveReport solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& v) {
  SolveReport report = solve_least_squares(compress(a, v));
  fix_residual_from_data(report, a, v);
  return report;
}

SolveReport solve_ridge(const CompressedLsq& problem, double lambda) {
  if (lambda < 0) throw ConfigError("ridge penalty must be >= 0");
  if (lambda == 0) {
    SolveReport report = solve_least_squares(problem);
    report.solver = SolverKind::Ridge;
    return report;
  }
  const int n = problem.cols();
  Eigen::MatrixXd stacked(2 * n, n);
  stacked.topRows(n) = problem.R;
  stacked.bottomRows(n) =
      std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
  rhs.head(n) = problem.qtb;

  SolveReport report;
  report.solver = SolverKind::Ridge;
  report.coefficients = stacked.householderQr().solve(rhs);
  report.support = nonzero_support(report.coefficients);
  report.residual_norm = problem.residual_norm(report.coefficients);
  report.iterations = 1;
  report.converged = true;
  return report;
}

SolveReport solve_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, double lambda) {
  SolveReport report = solve_ridge(compress(a, v), lambda);
  fix_residual_from_data(report, a, v);
  return report;
}

SolveReport solve_htp(const CompressedLsq& problem, int sparsity, int max_iters, double tol) {
  const int n = problem.cols();
  if (sparsity < 1 || sparsity > n) throw ConfigError("htp sparsity must be in [1, N]");
  const double gradient_scale =
      problem.normal_residual(Eigen::VectorXd::Zero(n)).cwiseAbs().maxCoeff();

  SolveReport report;
  report.solver = SolverKind::Htp;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  std::vector<int> current_support;
  std::set<std::vector<int>> visited;
  std::vector<int> order(n);

  for (int h = 0; h < max_iters; ++h) {
    const Eigen::VectorXd gradient_step = c + problem.normal_residual(c);
    std::iota(order.begin(), order.end(), 0);
    // Ties at the sparsity boundary keep the lower column index.
    std::partial_sort(order.begin(), order.begin() + sparsity, order.end(),
                      [&](int x, int y) {
                        const double ax = std::abs(gradient_step(x));
                        const double ay = std::abs(gradient_step(y));
                        return ax > ay || (ax == ay && x < y);
                      });
    std::vector<int> support(order.begin(), order.begin() + sparsity);
    std::sort(support.begin(), support.end());

    if (support == current_support) {
      report.converged = true;
      break;
    }
    if (!visited.insert(support).second) {
      report.converged = false;  // support cycle
      break;
    }
    const Eigen::VectorXd c_sub = restricted_solve(problem, support, &report.rank_deficient);
    c.setZero();
    for (std::size_t idx = 0; idx < support.size(); ++idx)
      c(support[idx]) = c_sub(static_cast<Eigen::Index>(idx));
    // Restricted optimality: the residual must be orthogonal to the active columns.
    const Eigen::VectorXd check = problem.normal_residual(c);
    for (int k : support)
      if (std::abs(check(k)) > tol * std::max(1.0, gradient_scale)) {
        report.rank_deficient = true;
        break;
      }
    current_support = std::move(support);
    ++report.iterations;
  }

  report.coefficients = std::move(c);
  report.support = current_support;
  report.residual_norm = problem.residual_norm(report.coefficients);
  return report;
}

SolveReport solve_htp(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, int sparsity,
                      int max_iters, double tol) {
  SolveReport report = solve_htp(compress(a, v), sparsity, max_iters, tol);
  fix_residual_from_data(report, a, v);
  return report;
}

SolveReport solve_nonnegative(const CompressedLsq& problem, int max_iters) {
  const int n = problem.cols();
  if (max_iters <= 0) max_iters = 3 * n + 30;

  SolveReport report;
  report.solver = SolverKind::Nnls;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(n, false);
  std::vector<int> passive_list;
  const double scale = problem.normal_residual(Eigen::VectorXd::Zero(n)).cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(1.0, scale);

  for (int outer = 0; outer < max_iters; ++outer) {
    const Eigen::VectorXd w = problem.normal_residual(c);
    int best = -1;
    double best_w = tol;
    for (int k = 0; k < n; ++k)
      if (!passive[k] && w(k) > best_w) {
        best_w = w(k);
        best = k;
      }
    if (best < 0) {
      report.converged = true;
      break;
    }
    passive[best] = true;
    passive_list.push_back(best);
    std::sort(passive_list.begin(), passive_list.end());

    // Inner loop: restricted solve, stepping back while any passive entry
    // would go non-positive.
    for (int inner = 0; inner <= n; ++inner) {
      const Eigen::VectorXd z = restricted_solve(problem, passive_list, nullptr);
      bool all_positive = true;
      for (Eigen::Index idx = 0; idx < z.size(); ++idx)
        if (z(idx) <= 0) {
          all_positive = false;
          break;
        }
      if (all_positive) {
        c.setZero();
        for (std::size_t idx = 0; idx < passive_list.size(); ++idx)
          c(passive_list[idx]) = z(static_cast<Eigen::Index>(idx));
        break;
      }
      double alpha = 1.0;
      for (std::size_t idx = 0; idx < passive_list.size(); ++idx) {
        if (z(static_cast<Eigen::Index>(idx)) > 0) continue;
        const double ck = c(passive_list[idx]);
        const double zk = z(static_cast<Eigen::Index>(idx));
        if (ck - zk > 0) alpha = std::min(alpha, ck / (ck - zk));
      }
      double c_max = 0;
      for (std::size_t idx = 0; idx < passive_list.size(); ++idx) {
        const int k = passive_list[idx];
        c(k) += alpha * (z(static_cast<Eigen::Index>(idx)) - c(k));
        c_max = std::max(c_max, c(k));
      }
      const double zero_cut = 1e-14 * std::max(1.0, c_max);
      std::vector<int> kept;
      for (int k : passive_list) {
        if (c(k) > zero_cut) {
          kept.push_back(k);
        } else {
          c(k) = 0;
          passive[k] = false;
        }
      }
      passive_list = std::move(kept);
      if (passive_list.empty()) break;
    }
    ++report.iterations;
  }

  report.coefficients = std::move(c);
  report.support = nonzero_support(report.coefficients);
  report.residual_norm = problem.residual_norm(report.coefficients);
  return report;
}

SolveReport solve_nonnegative(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, int max_iters) {
  SolveReport report = solve_nonnegative(compress(a, v), max_iters);
  fix_residual_from_data(report, a, v);
  return report;
}

}  // namespace rfk
