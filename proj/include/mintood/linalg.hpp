#pragma once

#include "mintood/tensor.hpp"

namespace mintood {

/// Unbiased (N-1) sample covariance of the rows; exactly symmetric.
Tensor2 covariance(const Tensor2& rows);

/// Lower-triangular L with m = L L^T. Throws NumericalError if m is not
/// positive definite.
Tensor2 cholesky(const Tensor2& m);

/// (m + eps I)^{-1} through a Cholesky factorization.
Tensor2 regularized_inverse(const Tensor2& m, double eps);

/// Scale-aware ridge: max(relative * trace(m) / dim, floor).
double covariance_ridge(const Tensor2& m, double relative = 1e-6, double floor = 1e-12);

struct SymmetricEigen {
  Vector values;   // descending
  Tensor2 vectors; // columns, matching `values`
};

/// Full eigendecomposition of a symmetric matrix. Each eigenvector's
/// largest-magnitude component is made positive so the output is canonical.
SymmetricEigen symmetric_eigen(const Tensor2& m);

/// Orthonormal basis (cols x d) of the top-d eigenvectors of `cov`.
Tensor2 principal_subspace(const Tensor2& cov, std::size_t d);

}  // namespace mintood
