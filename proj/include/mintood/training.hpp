#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mintood/corpus.hpp"
#include "mintood/model.hpp"
#include "mintood/oodgen.hpp"

namespace mintood {

struct TrainConfig {
  std::size_t batch_size = 32;       // B, half ID and half pseudo-OOD
  std::size_t epochs = 100;          // both stages together
  double stage1_fraction = 0.2;      // share of epochs spent on the coarse objective
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t patience = 8;          // stage-2 epochs without a WF1 gain before stopping
  std::uint64_t seed = 0;
  bool no_contrast = false;
  bool no_binary = false;
  bool joint_objective = false;      // one stage minimizing coarse + fine throughout

  void validate() const;
  std::size_t stage1_epochs() const;
};

/// Adam with bias correction and decoupled weight decay. Moments and step
/// counts are kept per tensor, so groups that sit out a stage resume with
/// correct bias correction.
class AdamW {
 public:
  AdamW(const ModelParams& params, const TrainConfig& cfg);

  /// Updates every tensor whose group is in `active`.
  void step(ModelParams& params, ModelParams& grad, const std::vector<ParamGroup>& active);

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  ModelParams m_;
  ModelParams v_;
  std::vector<std::size_t> steps_;
};

struct EpochLog {
  std::size_t epoch = 0;
  std::string stage;  // "coarse", "fine" or "joint"
  double coarse = 0.0;
  double multiclass = 0.0;
  double contrastive = 0.0;
  double total = 0.0;
  bool validated = false;
  double valid_acc = 0.0;
  double valid_wf1 = 0.0;
};

struct TrainResult {
  ModelParams params;  // best checkpoint restored
  std::vector<EpochLog> log;
  std::size_t stage1_epochs = 0;
  std::size_t best_epoch = 0;
  double best_valid_wf1 = 0.0;
  bool stopped_early = false;
};

/// Groups optimized under each objective.
std::vector<ParamGroup> active_groups(Objective objective, bool use_contrast);

/// Argmax predictions and ID metrics on one split.
double validation_wf1(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus,
                      double* acc = nullptr);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Two-stage training. Stage 1 minimizes the coarse objective; stage 2 the
/// multi-class plus contrastive objective with early stopping on validation
/// WF1. Throws TrainingError naming epoch and batch on a non-finite loss.
TrainResult train(const Corpus& corpus, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const OodGenConfig& ood_cfg, const EpochCallback& on_epoch = {});

}  // namespace mintood
