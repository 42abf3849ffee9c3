#pragma once

#include <span>

#include "mintood/tensor.hpp"

namespace mintood {

inline constexpr double kNormEps = 1e-12;

/// Max-shifted softmax; never overflows for finite input.
Vector softmax(std::span<const double> v);

/// Overflow-free log(sum(exp(v))). Throws ParameterError on empty input.
double logsumexp(std::span<const double> v);

/// v / ||v||, or the zero vector when ||v|| <= eps.
Vector l2_normalize(std::span<const double> v, double eps = kNormEps);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Gradient of l2_normalize: maps dL/d(unit) to dL/d(v). Zero when ||v|| <= eps.
Vector l2_normalize_backward(std::span<const double> v, std::span<const double> grad_unit,
                             double eps = kNormEps);

/// Row-wise softmax of a matrix.
Tensor2 softmax_rows(const Tensor2& logits);

}  // namespace mintood
