#include "mintood/encoders.hpp"

#include <cmath>
#include <string>

#include "mintood/error.hpp"
#include "mintood/kernels.hpp"
#include "mintood/ops.hpp"

namespace mintood {
namespace {

// Columns [h*dh, (h+1)*dh) of m.
Tensor2 head_slice(const Tensor2& m, std::size_t h, std::size_t dh) {
  Tensor2 out(m.rows(), dh);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < dh; ++c) out(r, c) = m(r, h * dh + c);
  return out;
}

void add_head_slice(Tensor2& m, const Tensor2& part, std::size_t h, std::size_t dh) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < dh; ++c) m(r, h * dh + c) += part(r, c);
}

}  // namespace

void EncoderConfig::validate(std::size_t dim) const {
  if (heads == 0 || dim % heads != 0) {
    throw ParameterError("encoders", "model dim " + std::to_string(dim) +
                                         " is not divisible by heads=" + std::to_string(heads));
  }
  if (ffn_factor == 0) throw ParameterError("encoders", "ffn_factor must be > 0");
}

ModalityEncoder ModalityEncoder::init(Modality m, std::size_t dim, std::size_t text_dim,
                                      const EncoderConfig& cfg, Rng& rng) {
  cfg.validate(dim);
  ModalityEncoder enc;
  enc.query = Linear::glorot(dim, dim, rng);
  enc.key = Linear::glorot(dim, dim, rng);
  enc.value = Linear::glorot(dim, dim, rng);
  enc.output = Linear::glorot(dim, dim, rng);
  enc.ffn_in = Linear::glorot(dim, cfg.ffn_factor * dim, rng);
  enc.ffn_out = Linear::glorot(cfg.ffn_factor * dim, dim, rng);
  if (m == Modality::Text) {
    if (dim != text_dim) throw ParameterError("encoders", "text encoder dim must equal D_T");
    enc.cls = glorot_uniform(1, dim, rng);
  } else {
    enc.projection = Linear::glorot(dim, text_dim, rng);
  }
  return enc;
}

Tensor2 sinusoidal_encoding(std::size_t length, std::size_t dim) {
  Tensor2 pe(length, dim);
  for (std::size_t pos = 0; pos < length; ++pos)
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return pe;
}

Vector encode(const Tensor2& seq, Modality m, const ModalityEncoder& params,
              const EncoderConfig& cfg, EncoderTrace* trace) {
  const std::size_t dim = params.query.in_dim();
  if (seq.cols() != dim || seq.rows() == 0) {
    throw ParameterError("encoders", "modality " + std::string(modality_name(m)) + " expects rows of width " +
                                         std::to_string(dim) + ", got " + std::to_string(seq.rows()) +
                                         "x" + std::to_string(seq.cols()));
  }
  const bool text = m == Modality::Text;
  const std::size_t offset = text ? 1 : 0;
  const std::size_t n = seq.rows() + offset;

  EncoderTrace local;
  EncoderTrace& t = trace != nullptr ? *trace : local;

  t.input = Tensor2(n, dim);
  if (text) {
    for (std::size_t c = 0; c < dim; ++c) t.input(0, c) = params.cls(0, c);
  }
  const Tensor2 pe = cfg.positional ? sinusoidal_encoding(seq.rows(), dim) : Tensor2();
  for (std::size_t r = 0; r < seq.rows(); ++r)
    for (std::size_t c = 0; c < dim; ++c)
      t.input(r + offset, c) = seq(r, c) + (cfg.positional ? pe(r, c) : 0.0);

  t.q = params.query.forward(t.input);
  t.k = params.key.forward(t.input);
  t.v = params.value.forward(t.input);

  const std::size_t dh = dim / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  t.context = Tensor2(n, dim);
  t.attention.assign(cfg.heads, Tensor2());
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Tensor2 qh = head_slice(t.q, h, dh);
    const Tensor2 kh = head_slice(t.k, h, dh);
    const Tensor2 vh = head_slice(t.v, h, dh);
    Tensor2 scores = kernels::matmul_nt(qh, kh);
    scores *= scale;
    t.attention[h] = softmax_rows(scores);
    add_head_slice(t.context, kernels::matmul(t.attention[h], vh), h, dh);
  }

  t.hidden = params.output.forward(t.context);
  t.hidden += t.input;
  t.ffn_pre = params.ffn_in.forward(t.hidden);
  t.ffn_act = relu(t.ffn_pre);
  t.block_out = params.ffn_out.forward(t.ffn_act);
  t.block_out += t.hidden;

  if (text) {
    const auto row = t.block_out.row(0);
    return Vector(row.begin(), row.end());
  }
  t.pooled = Tensor2(1, dim);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < dim; ++c) t.pooled(0, c) += t.block_out(r, c);
  t.pooled *= 1.0 / static_cast<double>(n);
  const Tensor2 projected = params.projection.forward(t.pooled);
  return Vector(projected.values().begin(), projected.values().end());
}

void encode_backward(const EncoderTrace& t, Modality m, std::span<const double> grad_out,
                     const ModalityEncoder& params, const EncoderConfig& cfg, ModalityEncoder& grad) {
  const std::size_t n = t.input.rows();
  const std::size_t dim = t.input.cols();

  Tensor2 d_block(n, dim);
  if (m == Modality::Text) {
    for (std::size_t c = 0; c < dim; ++c) d_block(0, c) = grad_out[c];
  } else {
    const Tensor2 d_pooled =
        params.projection.backward(t.pooled, Tensor2::row_vector(grad_out), &grad.projection);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < dim; ++c) d_block(r, c) = d_pooled(0, c) * inv;
  }

  // Feed-forward residual.
  Tensor2 d_hidden = d_block;
  const Tensor2 d_act = params.ffn_out.backward(t.ffn_act, d_block, &grad.ffn_out);
  d_hidden += params.ffn_in.backward(t.hidden, relu_backward(t.ffn_pre, d_act), &grad.ffn_in);

  // Attention residual.
  Tensor2 d_input = d_hidden;
  const Tensor2 d_context = params.output.backward(t.context, d_hidden, &grad.output);

  const std::size_t dh = dim / cfg.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Tensor2 dq(n, dim), dk(n, dim), dv(n, dim);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const Tensor2& attn = t.attention[h];
    const Tensor2 qh = head_slice(t.q, h, dh);
    const Tensor2 kh = head_slice(t.k, h, dh);
    const Tensor2 vh = head_slice(t.v, h, dh);
    const Tensor2 d_out = head_slice(d_context, h, dh);

    const Tensor2 d_attn = kernels::matmul_nt(d_out, vh);
    add_head_slice(dv, kernels::matmul_tn(attn, d_out), h, dh);

    // Softmax Jacobian per row: dS = A * (dA - sum(dA * A)).
    Tensor2 d_scores(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      double inner = 0.0;
      for (std::size_t c = 0; c < n; ++c) inner += d_attn(r, c) * attn(r, c);
      for (std::size_t c = 0; c < n; ++c) d_scores(r, c) = attn(r, c) * (d_attn(r, c) - inner) * scale;
    }
    add_head_slice(dq, kernels::matmul(d_scores, kh), h, dh);
    add_head_slice(dk, kernels::matmul_tn(d_scores, qh), h, dh);
  }
  d_input += params.query.backward(t.input, dq, &grad.query);
  d_input += params.key.backward(t.input, dk, &grad.key);
  d_input += params.value.backward(t.input, dv, &grad.value);

  if (m == Modality::Text) {
    for (std::size_t c = 0; c < dim; ++c) grad.cls(0, c) += d_input(0, c);
  }
}

}  // namespace mintood
