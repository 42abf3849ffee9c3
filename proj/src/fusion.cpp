#include "mintood/fusion.hpp"

#include <string>

#include "mintood/error.hpp"
#include "mintood/ops.hpp"

namespace mintood {
namespace {

void check_rows(const ModalityRows& xs) {
  for (Modality m : kModalities) {
    const auto& x = xs[static_cast<std::size_t>(m)];
    if (!same_shape(x, xs[0])) {
      throw ParameterError("fusion", "modality " + std::string(modality_name(m)) +
                                         " rows do not match the text rows' shape");
    }
  }
}

}  // namespace

std::string_view fusion_mode_name(FusionMode mode) {
  switch (mode) {
    case FusionMode::Weighted: return "weighted";
    case FusionMode::Add: return "add";
    case FusionMode::Concat: return "concat";
  }
  return "?";
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "weighted") return FusionMode::Weighted;
  if (name == "add") return FusionMode::Add;
  if (name == "concat") return FusionMode::Concat;
  throw ParameterError("fusion", "unknown fusion mode '" + std::string(name) + "'");
}

FusionParams FusionParams::init(FusionMode mode, std::size_t text_dim, std::size_t hidden, Rng& rng) {
  FusionParams p;
  if (mode == FusionMode::Weighted) {
    if (hidden == 0) throw ParameterError("fusion", "hidden width H_w must be > 0");
    for (auto& s : p.scorers) {
      s.hidden = Linear::glorot(text_dim, hidden, rng);
      s.out = Linear::glorot(hidden, 1, rng);
    }
  } else if (mode == FusionMode::Concat) {
    p.concat = Linear::glorot(3 * text_dim, text_dim, rng);
  }
  return p;
}

Tensor2 modality_scores(const ModalityRows& xs, const FusionParams& params, double dropout,
                        Rng* dropout_rng, FusionTrace* trace) {
  check_rows(xs);
  const std::size_t batch = xs[0].rows();
  Tensor2 scores(batch, 3);
  for (std::size_t m = 0; m < 3; ++m) {
    const ScoreNet& net = params.scorers[m];
    if (net.hidden.empty()) throw ParameterError("fusion", "score networks are not initialized");
    Tensor2 pre = net.hidden.forward(xs[m]);
    Tensor2 mask = dropout_rng != nullptr ? dropout_mask(pre.rows(), pre.cols(), dropout, *dropout_rng)
                                          : Tensor2(pre.rows(), pre.cols(), 1.0);
    const Tensor2 s = net.out.forward(hadamard(relu(pre), mask));
    for (std::size_t b = 0; b < batch; ++b) scores(b, m) = s(b, 0);
    if (trace != nullptr) {
      trace->score_pre[m] = std::move(pre);
      trace->score_mask[m] = std::move(mask);
    }
  }
  return scores;
}

FusionOutput fuse(const ModalityRows& xs, const FusionParams& params, FusionMode mode,
                  double dropout, Rng* dropout_rng, FusionTrace* trace) {
  check_rows(xs);
  const std::size_t batch = xs[0].rows();
  const std::size_t dim = xs[0].cols();
  FusionOutput out;
  out.fused = Tensor2(batch, dim);
  if (trace != nullptr) {
    trace->mode = mode;
    trace->inputs = xs;
  }

  switch (mode) {
    case FusionMode::Weighted: {
      out.scores = modality_scores(xs, params, dropout, dropout_rng, trace);
      out.weights = softmax_rows(out.scores);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t m = 0; m < 3; ++m)
          for (std::size_t c = 0; c < dim; ++c) out.fused(b, c) += out.weights(b, m) * xs[m](b, c);
      break;
    }
    case FusionMode::Add: {
      out.weights = Tensor2(batch, 3, 1.0 / 3.0);
      for (std::size_t m = 0; m < 3; ++m) out.fused += xs[m];
      break;
    }
    case FusionMode::Concat: {
      if (params.concat.empty()) throw ParameterError("fusion", "concat projection is not initialized");
      Tensor2 joined(batch, 3 * dim);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t m = 0; m < 3; ++m)
          for (std::size_t c = 0; c < dim; ++c) joined(b, m * dim + c) = xs[m](b, c);
      out.fused = params.concat.forward(joined);
      if (trace != nullptr) trace->concat_input = std::move(joined);
      break;
    }
  }
  if (trace != nullptr) trace->weights = out.weights;
  return out;
}

ModalityRows fuse_backward(const FusionTrace& trace, const Tensor2& grad_fused,
                           const FusionParams& params, FusionParams& grad) {
  const auto& xs = trace.inputs;
  const std::size_t batch = xs[0].rows();
  const std::size_t dim = xs[0].cols();
  ModalityRows dx;
  for (auto& d : dx) d = Tensor2(batch, dim);

  switch (trace.mode) {
    case FusionMode::Weighted: {
      const Tensor2& w = trace.weights;
      Tensor2 d_scores(batch, 3);
      for (std::size_t b = 0; b < batch; ++b) {
        double dw[3];
        for (std::size_t m = 0; m < 3; ++m) {
          dw[m] = 0.0;
          for (std::size_t c = 0; c < dim; ++c) {
            dx[m](b, c) += w(b, m) * grad_fused(b, c);
            dw[m] += grad_fused(b, c) * xs[m](b, c);
          }
        }
        const double inner = w(b, 0) * dw[0] + w(b, 1) * dw[1] + w(b, 2) * dw[2];
        for (std::size_t m = 0; m < 3; ++m) d_scores(b, m) = w(b, m) * (dw[m] - inner);
      }
      for (std::size_t m = 0; m < 3; ++m) {
        const ScoreNet& net = params.scorers[m];
        Tensor2 ds(batch, 1);
        for (std::size_t b = 0; b < batch; ++b) ds(b, 0) = d_scores(b, m);
        const Tensor2 act = hadamard(relu(trace.score_pre[m]), trace.score_mask[m]);
        const Tensor2 d_act = net.out.backward(act, ds, &grad.scorers[m].out);
        const Tensor2 d_pre = relu_backward(trace.score_pre[m], hadamard(d_act, trace.score_mask[m]));
        dx[m] += net.hidden.backward(xs[m], d_pre, &grad.scorers[m].hidden);
      }
      break;
    }
    case FusionMode::Add:
      for (auto& d : dx) d = grad_fused;
      break;
    case FusionMode::Concat: {
      const Tensor2 d_joined = params.concat.backward(trace.concat_input, grad_fused, &grad.concat);
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t m = 0; m < 3; ++m)
          for (std::size_t c = 0; c < dim; ++c) dx[m](b, c) = d_joined(b, m * dim + c);
      break;
    }
  }
  return dx;
}

}  // namespace mintood
