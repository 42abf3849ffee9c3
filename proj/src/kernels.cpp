#include "mintood/kernels.hpp"

#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mintood/error.hpp"

namespace mintood::kernels {
namespace {

constexpr std::size_t kParallelWork = 1u << 16;

void check_inner(std::size_t lhs, std::size_t rhs, const char* op) {
  if (lhs != rhs) {
    throw ParameterError("numerics", std::string(op) + " inner dimension mismatch (" +
                                         std::to_string(lhs) + " vs " + std::to_string(rhs) + ")");
  }
}

void matmul_row(const Tensor2& a, const Tensor2& b, Tensor2& out, std::size_t i) {
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  double* o = out.row(i).data();
  for (std::size_t k = 0; k < inner; ++k) {
    const double aik = a(i, k);
    if (aik == 0.0) continue;
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
  }
}

// Row p of a^T * b.
void matmul_tn_row(const Tensor2& a, const Tensor2& b, Tensor2& out, std::size_t p) {
  const std::size_t n = b.cols();
  double* o = out.row(p).data();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double akp = a(k, p);
    if (akp == 0.0) continue;
    const double* brow = b.row(k).data();
    for (std::size_t j = 0; j < n; ++j) o[j] += akp * brow[j];
  }
}

void matmul_nt_row(const Tensor2& a, const Tensor2& b, Tensor2& out, std::size_t i) {
  const auto arow = a.row(i);
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const auto brow = b.row(j);
    double acc = 0.0;
    for (std::size_t k = 0; k < arow.size(); ++k) acc += arow[k] * brow[k];
    out(i, j) = acc;
  }
}

Vector column_means(const Tensor2& x) {
  Vector mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) mean[c] += x(r, c);
  for (double& m : mean) m /= static_cast<double>(x.rows());
  return mean;
}

// Upper-triangular entries of row i, mirrored afterwards.
void covariance_row(const Tensor2& centered, Tensor2& out, std::size_t i) {
  const double denom = static_cast<double>(centered.rows() - 1);
  for (std::size_t j = i; j < centered.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < centered.rows(); ++r) acc += centered(r, i) * centered(r, j);
    out(i, j) = acc / denom;
  }
}

Tensor2 centered_rows(const Tensor2& rows) {
  if (rows.rows() < 2) {
    throw InsufficientDataError("numerics", "covariance needs at least 2 rows, got " +
                                                std::to_string(rows.rows()));
  }
  const Vector mean = column_means(rows);
  Tensor2 centered = rows;
  for (std::size_t r = 0; r < centered.rows(); ++r)
    for (std::size_t c = 0; c < centered.cols(); ++c) centered(r, c) -= mean[c];
  return centered;
}

void mirror_upper(Tensor2& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
}

double quadratic_form_row(const Tensor2& points, std::span<const double> center, const Tensor2& m,
                          std::size_t i, Vector& diff) {
  const auto p = points.row(i);
  for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = p[c] - center[c];
  double acc = 0.0;
  for (std::size_t r = 0; r < diff.size(); ++r) {
    const auto mrow = m.row(r);
    double inner = 0.0;
    for (std::size_t c = 0; c < diff.size(); ++c) inner += mrow[c] * diff[c];
    acc += diff[r] * inner;
  }
  return acc;
}

void check_quadratic(const Tensor2& points, std::span<const double> center, const Tensor2& m) {
  check_inner(points.cols(), center.size(), "quadratic_forms");
  check_inner(points.cols(), m.rows(), "quadratic_forms");
  check_inner(m.rows(), m.cols(), "quadratic_forms");
}

}  // namespace

namespace serial {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Tensor2 out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
  return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Tensor2 out(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.cols(); ++p) matmul_tn_row(a, b, out, p);
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Tensor2 out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
  return out;
}

Tensor2 covariance(const Tensor2& rows) {
  const Tensor2 centered = centered_rows(rows);
  Tensor2 out(rows.cols(), rows.cols());
  for (std::size_t i = 0; i < rows.cols(); ++i) covariance_row(centered, out, i);
  mirror_upper(out);
  return out;
}

Vector quadratic_forms(const Tensor2& points, std::span<const double> center, const Tensor2& m) {
  check_quadratic(points, center, m);
  Vector out(points.rows());
  Vector diff(points.cols());
  for (std::size_t i = 0; i < points.rows(); ++i)
    out[i] = quadratic_form_row(points, center, m, i, diff);
  return out;
}

}  // namespace serial

namespace parallel {

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  check_inner(a.cols(), b.rows(), "matmul");
  Tensor2 out(a.rows(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  check_inner(a.rows(), b.rows(), "matmul_tn");
  Tensor2 out(a.cols(), b.cols());
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) matmul_tn_row(a, b, out, static_cast<std::size_t>(p));
  return out;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  check_inner(a.cols(), b.cols(), "matmul_nt");
  Tensor2 out(a.rows(), b.rows());
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
  return out;
}

Tensor2 covariance(const Tensor2& rows) {
  const Tensor2 centered = centered_rows(rows);
  Tensor2 out(rows.cols(), rows.cols());
  const auto n = static_cast<std::ptrdiff_t>(rows.cols());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) covariance_row(centered, out, static_cast<std::size_t>(i));
  mirror_upper(out);
  return out;
}

Vector quadratic_forms(const Tensor2& points, std::span<const double> center, const Tensor2& m) {
  check_quadratic(points, center, m);
  Vector out(points.rows());
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel
  {
    Vector diff(points.cols());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] =
          quadratic_form_row(points, center, m, static_cast<std::size_t>(i), diff);
  }
  return out;
}

}  // namespace parallel

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  return a.rows() * a.cols() * b.cols() >= kParallelWork ? parallel::matmul(a, b)
                                                         : serial::matmul(a, b);
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  return a.rows() * a.cols() * b.cols() >= kParallelWork ? parallel::matmul_tn(a, b)
                                                         : serial::matmul_tn(a, b);
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  return a.rows() * a.cols() * b.rows() >= kParallelWork ? parallel::matmul_nt(a, b)
                                                         : serial::matmul_nt(a, b);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace mintood::kernels
