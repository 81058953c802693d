#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "fairaudit/error.hpp"
#include "fairaudit/regressors.hpp"

namespace fairaudit::learners {

// Weighted least squares through the normal equations. A singular Gram
// matrix (collinear one-hot blocks, constant columns) gets a 1e-10 ridge on
// the diagonal so the solve stays finite.
LinearParams fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
  const Eigen::Index n = X.rows(), d = X.cols();
  Eigen::MatrixXd A(n, d + 1);
  A.leftCols(d) = X;
  A.col(d).setOnes();

  const Eigen::MatrixXd Aw = A.array().colwise() * w.array();
  Eigen::MatrixXd gram = A.transpose() * Aw;
  const Eigen::VectorXd rhs = Aw.transpose() * y;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
  if (lu.rank() < gram.rows()) gram.diagonal().array() += 1e-10;
  const Eigen::VectorXd beta = gram.ldlt().solve(rhs);
  if (!beta.allFinite()) fail(ErrorCode::internal, "linear solve produced non-finite coefficients");

  return {beta.head(d), beta(d)};
}

}  // namespace fairaudit::learners
