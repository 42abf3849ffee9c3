#include "mintood/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mintood/error.hpp"
#include "mintood/kernels.hpp"

namespace mintood {
namespace {

void require_square(const Tensor2& m, const char* op) {
  if (m.rows() != m.cols()) {
    throw ParameterError("numerics", std::string(op) + " needs a square matrix, got " +
                                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

Tensor2 covariance(const Tensor2& rows) {
  return rows.rows() * rows.cols() * rows.cols() >= (1u << 16) ? kernels::parallel::covariance(rows)
                                                               : kernels::serial::covariance(rows);
}

Tensor2 cholesky(const Tensor2& m) {
  require_square(m, "cholesky");
  const std::size_t n = m.rows();
  Tensor2 l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) {
      throw NumericalError("numerics", "matrix is not positive definite (pivot " +
                                           std::to_string(j) + ")");
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double acc = m(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * l(j, k);
      l(i, j) = acc / l(j, j);
    }
  }
  return l;
}

Tensor2 regularized_inverse(const Tensor2& m, double eps) {
  require_square(m, "regularized_inverse");
  if (!(eps >= 0.0)) throw ParameterError("numerics", "regularization eps must be >= 0");
  Tensor2 shifted = m;
  for (std::size_t i = 0; i < m.rows(); ++i) shifted(i, i) += eps;
  const Tensor2 l = cholesky(shifted);
  const std::size_t n = m.rows();

  // L^{-1} by forward substitution, then inverse = L^{-T} L^{-1}.
  Tensor2 linv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = c; i < n; ++i) {
      double acc = (i == c) ? 1.0 : 0.0;
      for (std::size_t k = c; k < i; ++k) acc -= l(i, k) * linv(k, c);
      linv(i, c) = acc / l(i, i);
    }
  }
  Tensor2 inv = kernels::matmul_tn(linv, linv);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = avg;
      inv(j, i) = avg;
    }
  if (!inv.all_finite()) throw NumericalError("numerics", "regularized inverse is not finite");
  return inv;
}

double covariance_ridge(const Tensor2& m, double relative, double floor) {
  require_square(m, "covariance_ridge");
  if (m.rows() == 0) return floor;
  double trace = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) trace += m(i, i);
  return std::max(relative * trace / static_cast<double>(m.rows()), floor);
}

SymmetricEigen symmetric_eigen(const Tensor2& m) {
  require_square(m, "symmetric_eigen");
  const auto n = static_cast<Eigen::Index>(m.rows());
  Eigen::MatrixXd dense(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      dense(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) throw NumericalError("numerics", "eigensolver did not converge");

  // Eigen returns ascending order.
  SymmetricEigen out{Vector(m.rows()), Tensor2(m.rows(), m.rows())};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;
    out.values[static_cast<std::size_t>(k)] = solver.eigenvalues()(src);
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    for (Eigen::Index i = 0; i < n; ++i)
      out.vectors(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = v(i);
  }
  return out;
}

Tensor2 principal_subspace(const Tensor2& cov, std::size_t d) {
  require_square(cov, "principal_subspace");
  if (d < 1 || d > cov.cols()) {
    throw ParameterError("numerics", "principal_subspace dimension d=" + std::to_string(d) +
                                         " outside [1, " + std::to_string(cov.cols()) + "]");
  }
  const SymmetricEigen eig = symmetric_eigen(cov);
  Tensor2 basis(cov.rows(), d);
  for (std::size_t r = 0; r < cov.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) basis(r, c) = eig.vectors(r, c);
  return basis;
}

}  // namespace mintood
