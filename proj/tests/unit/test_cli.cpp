#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "mintood/checkpoint.hpp"
#include "scratch.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = 0;
  std::string output;
};

// Runs the CLI with stdout and stderr captured to a file next to `dir`.
Run cli(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = std::string(MINTOOD_CLI) + " " + args + " > \"" + log.string() + "\" 2>&1";
  Run r;
  r.status = std::system(cmd.c_str());
  r.output = slurp(log);
  return r;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n' ? 1 : 0;
  return n;
}

// A small corpus that trains in well under a second per epoch.
const char* kSmallConfig = R"([synth]
train_count = 48
valid_count = 24
test_id_count = 30
test_ood_count = 15
T_length = 3
T_dim = 8
V_length = 4
V_dim = 6
A_length = 5
A_dim = 4
[model]
heads = 2
fusion_hidden = 8
[train]
batch_size = 16
epochs = 2
)";

fs::path small_corpus(const fs::path& dir) {
  spit(dir / "small.ini", kSmallConfig);
  const Run r = cli("synth --config " + quoted(dir / "small.ini") + " --out " + quoted(dir / "corpus"), dir);
  REQUIRE_MESSAGE(r.status == 0, r.output);
  return dir / "corpus";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth writes a manifest and three blobs, reproducibly") {
    const fs::path dir = scratch_dir("cli_synth");
    REQUIRE(cli("synth --out " + quoted(dir / "a"), dir).status == 0);
    REQUIRE(cli("synth --seed 0 --out " + quoted(dir / "b"), dir).status == 0);
    for (const char* f : {"manifest.jsonl", "T.f32", "V.f32", "A.f32"}) {
      CAPTURE(f);
      CHECK(fs::exists(dir / "a" / f));
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(line_count(slurp(dir / "a" / "manifest.jsonl")) >= 1000);
    REQUIRE(cli("synth --seed 1 --out " + quoted(dir / "c"), dir).status == 0);
    CHECK(slurp(dir / "a" / "T.f32") != slurp(dir / "c" / "T.f32"));
  }

  TEST_CASE("invalid class count fails and names the field") {
    const fs::path dir = scratch_dir("cli_badk");
    spit(dir / "k1.ini", "[synth]\nnum_classes = 1\n");
    const Run r = cli("synth --config " + quoted(dir / "k1.ini") + " --out " + quoted(dir / "out"), dir);
    CHECK(r.status != 0);
    CHECK(r.output.find("num_classes") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out" / "manifest.jsonl"));
  }

  TEST_CASE("missing corpus and unknown ablation fail cleanly") {
    const fs::path dir = scratch_dir("cli_missing");
    CHECK(cli("train --corpus " + quoted(dir / "nowhere") + " --out " + quoted(dir / "t"), dir).status != 0);
    const fs::path corpus = small_corpus(dir);
    const Run r = cli("train --corpus " + quoted(corpus) + " --ablation bogus --out " + quoted(dir / "t"), dir);
    CHECK(r.status != 0);
    CHECK(r.output.find("bogus") != std::string::npos);
  }

  TEST_CASE("train, eval and report") {
    const fs::path dir = scratch_dir("cli_train");
    const fs::path corpus = small_corpus(dir);
    const std::string cfg = " --config " + quoted(dir / "small.ini");

    Run r = cli("train" + cfg + " --corpus " + quoted(corpus) + " --out " + quoted(dir / "full"), dir);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    const mintood::Checkpoint ck = mintood::load_checkpoint(dir / "full" / "seed-0");
    CHECK(ck.config.head == mintood::HeadKind::Cosine);
    CHECK(ck.config.schema.num_classes == 3);
    CHECK(line_count(slurp(dir / "full" / "results.csv")) == 2);
    CHECK(line_count(slurp(dir / "full" / "summary.csv")) == 2);

    r = cli("train" + cfg + " --corpus " + quoted(corpus) + " --ablation no_cosine --out " + quoted(dir / "lin"), dir);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(mintood::load_checkpoint(dir / "lin" / "seed-0").config.head == mintood::HeadKind::Linear);

    r = cli("train" + cfg + " --seed 0,1,2,3,4 --corpus " + quoted(corpus) + " --out " + quoted(dir / "five"), dir);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(line_count(slurp(dir / "five" / "results.csv")) == 6);
    for (int s = 0; s < 5; ++s) CHECK(fs::exists(dir / "five" / ("seed-" + std::to_string(s)) / "checkpoint.jsonl"));

    const std::string eval_args = "eval --checkpoint " + quoted(dir / "full" / "seed-0") + " --corpus " + quoted(corpus) +
                                  " --scorer all --out ";
    REQUIRE(cli(eval_args + quoted(dir / "e1"), dir).status == 0);
    REQUIRE(cli(eval_args + quoted(dir / "e2"), dir).status == 0);
    for (const char* f : {"report.json", "report.csv", "scores.jsonl"}) {
      CAPTURE(f);
      CHECK(slurp(dir / "e1" / f) == slurp(dir / "e2" / f));
    }
    CHECK(line_count(slurp(dir / "e1" / "report.csv")) == 7);
    CHECK(line_count(slurp(dir / "e1" / "scores.jsonl")) == 6 * 45);

    r = cli("eval --checkpoint " + quoted(dir / "full" / "seed-0") + " --corpus " + quoted(corpus) +
                " --scorer energy --out " + quoted(dir / "e3"),
            dir);
    REQUIRE(r.status == 0);
    CHECK(line_count(slurp(dir / "e3" / "report.csv")) == 2);

    r = cli("report --in " + quoted(dir / "e1") + " --bins 10 --out " + quoted(dir / "plots"), dir);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(line_count(slurp(dir / "plots" / "score_histogram.csv")) == 1 + 6 * 10);
    CHECK(line_count(slurp(dir / "plots" / "confusion.csv")) == 1 + 9);
  }

  TEST_CASE("eval rejects a checkpoint from another schema") {
    const fs::path dir = scratch_dir("cli_schema");
    const fs::path corpus = small_corpus(dir);
    REQUIRE(cli("train --config " + quoted(dir / "small.ini") + " --corpus " + quoted(corpus) + " --out " +
                    quoted(dir / "t"),
                dir)
                .status == 0);
    REQUIRE(cli("synth --out " + quoted(dir / "other"), dir).status == 0);
    const Run r = cli("eval --checkpoint " + quoted(dir / "t" / "seed-0") + " --corpus " + quoted(dir / "other") +
                          " --out " + quoted(dir / "e"),
                      dir);
    CHECK(r.status != 0);
    CHECK(r.output.find("schema") != std::string::npos);
  }

  TEST_CASE("ablate writes every variant and the ordering flags") {
    const fs::path dir = scratch_dir("cli_ablate");
    const fs::path corpus = small_corpus(dir);
    const Run r = cli("ablate --config " + quoted(dir / "small.ini") + " --seed 0,1 --corpus " + quoted(corpus) +
                          " --out " + quoted(dir / "abl"),
                      dir);
    REQUIRE_MESSAGE(r.status == 0, r.output);
    CHECK(line_count(slurp(dir / "abl" / "ablation_runs.csv")) == 1 + 6 * 2);
    CHECK(line_count(slurp(dir / "abl" / "ablation_summary.csv")) == 1 + 6);
    CHECK(line_count(slurp(dir / "abl" / "ablation_orderings.csv")) == 1 + 3);
    for (const char* v : {"full", "add", "concat", "no_contrast", "no_cosine", "no_binary"})
      CHECK(fs::exists(dir / "abl" / v / "seed-1" / "checkpoint.jsonl"));
  }
}
