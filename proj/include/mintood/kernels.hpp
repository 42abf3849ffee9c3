#pragma once

#include <exception>
#include <span>

#include "mintood/tensor.hpp"

// Dense kernels in two builds: `serial` is the reference, `parallel` splits
// output rows across OpenMP threads. Every output element is accumulated in
// the same order in both, so results are bit-identical for any thread count.
namespace mintood::kernels {

namespace serial {
Tensor2 matmul(const Tensor2& a, const Tensor2& b);     // a * b
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);  // a^T * b
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);  // a * b^T
Tensor2 covariance(const Tensor2& rows);
Vector quadratic_forms(const Tensor2& points, std::span<const double> center, const Tensor2& m);
}  // namespace serial

namespace parallel {
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 covariance(const Tensor2& rows);
Vector quadratic_forms(const Tensor2& points, std::span<const double> center, const Tensor2& m);
}  // namespace parallel

// Dispatch on problem size; small products stay serial.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);

int max_threads();

/// Runs body(i) for i in [0, n) across OpenMP threads. The first exception
/// thrown by any iteration is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(mintood_parallel_for)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mintood::kernels
