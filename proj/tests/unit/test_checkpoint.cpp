#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sstream>

#include "gradcheck.hpp"
#include "mintood/checkpoint.hpp"
#include "mintood/error.hpp"
#include "scratch.hpp"

using namespace mintood;

TEST_SUITE("checkpoint") {
  TEST_CASE("round trip is bit-exact for every variant") {
    int n = 0;
    for (FusionMode f : {FusionMode::Weighted, FusionMode::Add, FusionMode::Concat})
      for (HeadKind h : {HeadKind::Cosine, HeadKind::Linear}) {
        ModelConfig cfg = gradcheck::tiny_config(f, h);
        cfg.encoder.positional = true;
        cfg.dropout = 0.25;
        ModelParams p = gradcheck::random_params(cfg, 7);
        const auto dir = scratch_dir("ckpt_" + std::to_string(n++));
        save_checkpoint(p, cfg, dir);
        Checkpoint back = load_checkpoint(dir);
        CHECK(back.config.schema == cfg.schema);
        CHECK(back.config.fusion == f);
        CHECK(back.config.head == h);
        CHECK(back.config.encoder.positional);
        CHECK(back.config.dropout == 0.25);
        CHECK(back.config.gamma == cfg.gamma);
        const auto a = named_tensors(p);
        const auto b = named_tensors(back.params);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i].name == b[i].name);
          CHECK(*a[i].tensor == *b[i].tensor);
        }
      }
  }

  TEST_CASE("linear head checkpoints carry no cosine weights") {
    const ModelConfig cfg = gradcheck::tiny_config(FusionMode::Weighted, HeadKind::Linear);
    const auto dir = scratch_dir("ckpt_linear");
    save_checkpoint(gradcheck::random_params(cfg, 1), cfg, dir);
    const std::string text = slurp(dir / "checkpoint.jsonl");
    CHECK(text.find("\"head.cosine\"") == std::string::npos);
    CHECK(text.find("\"head.linear.weight\"") != std::string::npos);
  }

  TEST_CASE("missing, extra or mis-shaped tensors are format errors") {
    const ModelConfig cfg = gradcheck::tiny_config();
    const auto dir = scratch_dir("ckpt_bad");
    save_checkpoint(gradcheck::random_params(cfg, 2), cfg, dir);
    const auto manifest = dir / "checkpoint.jsonl";
    const std::string good = slurp(manifest);

    std::string missing;
    std::string extra;
    std::string reshaped;
    std::istringstream in(good);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (first || line.find("\"head.cosine\"") == std::string::npos) missing += line + "\n";
      extra += line + "\n";
      if (!first && line.find("\"head.cosine\"") != std::string::npos) {
        auto j = nlohmann::json::parse(line);
        j["name"] = "head.bonus";
        extra += j.dump() + "\n";
        j = nlohmann::json::parse(line);
        j["rows"] = j["rows"].get<int>() + 1;
        j["cols"] = 1;
        reshaped += j.dump() + "\n";
      } else {
        reshaped += line + "\n";
      }
      first = false;
    }
    for (const std::string& text : {missing, extra, reshaped}) {
      spit(manifest, text);
      CHECK_THROWS_AS(load_checkpoint(dir), FormatError);
    }
    spit(manifest, good);
    std::filesystem::resize_file(dir / "params.f64", std::filesystem::file_size(dir / "params.f64") - 8);
    CHECK_THROWS_AS(load_checkpoint(dir), FormatError);
    CHECK_THROWS_AS(load_checkpoint(scratch_dir("ckpt_empty")), FormatError);
  }
}
