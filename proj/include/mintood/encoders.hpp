#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "mintood/corpus.hpp"
#include "mintood/layers.hpp"

namespace mintood {

struct EncoderConfig {
  std::size_t heads = 4;
  std::size_t ffn_factor = 2;  // feed-forward width = ffn_factor * D_M
  bool positional = false;     // add sinusoidal position encodings

  void validate(std::size_t dim) const;
};

/// One transformer-style block (multi-head self-attention and a feed-forward
/// layer, both residual) followed by modality-specific pooling. Text prepends
/// a learned class token and returns its output row; video/audio mean-pool
/// the rows and project D_M -> D_T.
struct ModalityEncoder {
  Linear query, key, value, output;
  Linear ffn_in, ffn_out;
  Tensor2 cls;        // 1 x D_T, text only
  Linear projection;  // D_M x D_T, video/audio only

  static ModalityEncoder init(Modality m, std::size_t dim, std::size_t text_dim,
                              const EncoderConfig& cfg, Rng& rng);

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    const std::string p(prefix);
    query.visit(p + ".query", f);
    key.visit(p + ".key", f);
    value.visit(p + ".value", f);
    output.visit(p + ".output", f);
    ffn_in.visit(p + ".ffn_in", f);
    ffn_out.visit(p + ".ffn_out", f);
    f(p + ".cls", cls);
    projection.visit(p + ".projection", f);
  }
};

struct EncoderParams {
  std::array<ModalityEncoder, 3> modality;

  ModalityEncoder& at(Modality m) { return modality[static_cast<std::size_t>(m)]; }
  const ModalityEncoder& at(Modality m) const { return modality[static_cast<std::size_t>(m)]; }

  template <class F>
  void visit(std::string_view prefix, F&& f) {
    for (Modality m : kModalities)
      at(m).visit(std::string(prefix) + "." + std::string(modality_name(m)), f);
  }
};

/// Forward intermediates kept for the backward pass.
struct EncoderTrace {
  Tensor2 input;  // rows fed to the block (class token first for text)
  Tensor2 q, k, v;
  std::vector<Tensor2> attention;  // per head, softmax-normalized (n x n)
  Tensor2 context;                 // concatenated head outputs
  Tensor2 hidden;                  // after the attention residual
  Tensor2 ffn_pre;
  Tensor2 ffn_act;
  Tensor2 block_out;
  Tensor2 pooled;                  // 1 x D_M, video/audio only
};

Tensor2 sinusoidal_encoding(std::size_t length, std::size_t dim);

Vector encode(const Tensor2& seq, Modality m, const ModalityEncoder& params,
              const EncoderConfig& cfg, EncoderTrace* trace = nullptr);

/// Accumulates dL/d(params) into `grad` given dL/d(encoded vector).
void encode_backward(const EncoderTrace& trace, Modality m, std::span<const double> grad_out,
                     const ModalityEncoder& params, const EncoderConfig& cfg, ModalityEncoder& grad);

}  // namespace mintood
