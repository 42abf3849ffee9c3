#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "gradcheck.hpp"
#include "mintood/encoders.hpp"
#include "mintood/error.hpp"

using namespace mintood;

namespace {

Tensor2 random_seq(std::size_t l, std::size_t d, Rng& rng) {
  Tensor2 t(l, d);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

ModalityEncoder zero_encoder(Modality m, std::size_t dim, std::size_t text_dim, const EncoderConfig& cfg) {
  Rng rng(0);
  ModalityEncoder e = ModalityEncoder::init(m, dim, text_dim, cfg, rng);
  e.visit("e", [](const std::string&, Tensor2& t) { t.fill(0.0); });
  return e;
}

}  // namespace

TEST_SUITE("encoders") {
  TEST_CASE("output dimension is D_T for every modality") {
    EncoderConfig cfg;
    cfg.heads = 2;
    Rng rng(1);
    const std::size_t text_dim = 6;
    for (auto [m, dim] : {std::pair{Modality::Text, std::size_t{6}}, std::pair{Modality::Video, std::size_t{4}},
                          std::pair{Modality::Audio, std::size_t{10}}}) {
      const auto enc = ModalityEncoder::init(m, dim, text_dim, cfg, rng);
      CHECK(encode(random_seq(5, dim, rng), m, enc, cfg).size() == text_dim);
      CHECK(enc.cls.empty() == (m != Modality::Text));
      CHECK(enc.projection.empty() == (m == Modality::Text));
      CHECK_THROWS_AS(encode(random_seq(5, dim + 1, rng), m, enc, cfg), ParameterError);
    }
  }

  TEST_CASE("heads must divide the width") {
    EncoderConfig cfg;
    cfg.heads = 3;
    CHECK_THROWS_AS(cfg.validate(8), ParameterError);
    cfg.heads = 4;
    CHECK_NOTHROW(cfg.validate(8));
  }

  TEST_CASE("single timestep: pooling returns the transformed row") {
    EncoderConfig cfg;
    cfg.heads = 2;
    Rng rng(2);
    const auto enc = ModalityEncoder::init(Modality::Video, 4, 6, cfg, rng);
    EncoderTrace trace;
    const Vector out = encode(random_seq(1, 4, rng), Modality::Video, enc, cfg, &trace);
    for (const auto& a : trace.attention) CHECK(a(0, 0) == 1.0);
    for (std::size_t c = 0; c < 4; ++c) CHECK(trace.pooled(0, c) == trace.block_out(0, c));
    const Tensor2 projected = enc.projection.forward(trace.pooled);
    for (std::size_t c = 0; c < 6; ++c) CHECK(out[c] == projected(0, c));
  }

  TEST_CASE("zero parameters give a zero output") {
    EncoderConfig cfg;
    cfg.heads = 2;
    Rng rng(3);
    for (Modality m : kModalities) {
      const std::size_t dim = m == Modality::Text ? 6 : 4;
      const auto enc = zero_encoder(m, dim, 6, cfg);
      const Vector zero_in = encode(Tensor2(3, dim), m, enc, cfg);
      for (double v : zero_in) CHECK(v == 0.0);
      if (m != Modality::Text) {
        for (double v : encode(random_seq(3, dim, rng), m, enc, cfg)) CHECK(v == 0.0);
      }
    }
  }

  TEST_CASE("audio/video pooling is invariant to timestep order without positions") {
    EncoderConfig cfg;
    cfg.heads = 2;
    Rng rng(4);
    const auto enc = ModalityEncoder::init(Modality::Audio, 4, 6, cfg, rng);
    const Tensor2 seq = random_seq(7, 4, rng);
    std::vector<std::size_t> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    Tensor2 shuffled(7, 4);
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 4; ++c) shuffled(r, c) = seq(perm[r], c);
    const Vector a = encode(seq, Modality::Audio, enc, cfg);
    const Vector b = encode(shuffled, Modality::Audio, enc, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-10);

    cfg.positional = true;
    const Vector c = encode(seq, Modality::Audio, enc, cfg);
    const Vector d = encode(shuffled, Modality::Audio, enc, cfg);
    double gap = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) gap = std::max(gap, std::abs(c[i] - d[i]));
    CHECK(gap > 1e-6);
  }

  TEST_CASE("sinusoidal encoding") {
    const Tensor2 pe = sinusoidal_encoding(3, 4);
    CHECK(pe(0, 0) == 0.0);
    CHECK(pe(0, 1) == 1.0);
    CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    CHECK(pe(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
  }

  TEST_CASE("evaluation is deterministic") {
    EncoderConfig cfg;
    cfg.heads = 2;
    Rng rng(5);
    const auto enc = ModalityEncoder::init(Modality::Text, 6, 6, cfg, rng);
    const Tensor2 seq = random_seq(4, 6, rng);
    CHECK(encode(seq, Modality::Text, enc, cfg) == encode(seq, Modality::Text, enc, cfg));
  }

  TEST_CASE("gradients of a scalar readout match central differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      for (Modality m : kModalities) {
        for (bool positional : {false, true}) {
          CAPTURE(seed);
          CAPTURE(positional);
          const auto s = gradcheck::encoder_point(m, positional, seed);
          CHECK_MESSAGE(s.ok(), s.worst_name);
          CHECK(s.checked > 50);
        }
      }
    }
  }
}
