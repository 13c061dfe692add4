#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace rfk {

enum class SolverKind { LeastSquares, Ridge, Htp, Nnls };
const char* to_string(SolverKind k);

struct SolveReport {
  Eigen::VectorXd coefficients;
  std::vector<int> support;  // sorted column indices with (possibly) nonzero entries
  double residual_norm = 0;  // ||V - A c||_2
  int iterations = 0;
  bool converged = false;
  SolverKind solver = SolverKind::LeastSquares;
  bool rank_deficient = false;
};

/// Orthogonal compression of a least-squares problem: for the processed rows,
/// ||A c - V||^2 = ||R c - qtb||^2 + extra_sq for every c. All solvers run on
/// this form, so the full matrix never needs to stay in memory.
struct CompressedLsq {
  Eigen::MatrixXd R;    // cols x cols, upper triangular
  Eigen::VectorXd qtb;  // cols
  double extra_sq = 0;  // squared residual component orthogonal to the column space
  std::int64_t rows = 0;

  int cols() const { return static_cast<int>(R.cols()); }
  double residual_norm(const Eigen::VectorXd& c) const;
  /// A^T (V - A c) = R^T (qtb - R c), exact on the processed rows.
  Eigen::VectorXd normal_residual(const Eigen::VectorXd& c) const;
};

/// Streaming QR reducer (sequential tall-skinny QR over row blocks).
class LsqCompressor {
 public:
  explicit LsqCompressor(int cols, int block_capacity = 0);
  void add(const Eigen::Ref<const Eigen::MatrixXd>& a_rows,
           const Eigen::Ref<const Eigen::VectorXd>& v_rows);
  CompressedLsq finish();

 private:
  void reduce();
  int cols_;
  int capacity_;
  int filled_ = 0;
  bool has_r_ = false;
  std::int64_t rows_ = 0;
  double extra_sq_ = 0;
  Eigen::MatrixXd work_;  // (cols + capacity) x (cols + 1): [R | qtb] over the buffer
};

CompressedLsq compress(const Eigen::MatrixXd& a, const Eigen::VectorXd& v);

/// Minimum-norm least squares via complete orthogonal decomposition.
SolveReport solve_least_squares(const CompressedLsq& problem);
SolveReport solve_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& v);

/// Minimizes ||V - A c||^2 + lambda ||c||^2 (reported residual is the data term).
SolveReport solve_ridge(const CompressedLsq& problem, double lambda);
SolveReport solve_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, double lambda);

/// Hard thresholding pursuit: from c = 0, alternate (1) keep the s largest
/// entries of c + A^T(V - A c), (2) least squares restricted to that support.
/// Stops on support repetition, a detected support cycle, or max_iters.
SolveReport solve_htp(const CompressedLsq& problem, int sparsity, int max_iters = 50,
                      double tol = 1e-8);
SolveReport solve_htp(const Eigen::MatrixXd& a, const Eigen::VectorXd& v, int sparsity,
                      int max_iters = 50, double tol = 1e-8);

/// Non-negative least squares (Lawson-Hanson active set).
SolveReport solve_nonnegative(const CompressedLsq& problem, int max_iters = 0);
SolveReport solve_nonnegative(const Eigen::MatrixXd& a, const Eigen::VectorXd& v,
                              int max_iters = 0);

}  // namespace rfk
