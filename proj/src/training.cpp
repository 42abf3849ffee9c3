#include "mintood/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mintood/error.hpp"
#include "mintood/metrics.hpp"

namespace mintood {
namespace {

// RNG streams split off the run seed; each consumer owns one.
enum Stream : std::uint64_t { kInitStream = 1, kBatchStream = 2, kOodStream = 3, kDropoutStream = 4 };

bool contains(const std::vector<ParamGroup>& groups, ParamGroup g) {
  return std::find(groups.begin(), groups.end(), g) != groups.end();
}

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::Coarse: return "coarse";
    case Objective::Fine: return "fine";
    case Objective::Joint: return "joint";
  }
  return "?";
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ParameterError("heads_losses", "batch_size (B) must be even and >= 2, got " + std::to_string(batch_size));
  }
  if (epochs == 0) throw ParameterError("heads_losses", "epochs must be > 0");
  if (!(stage1_fraction >= 0.0 && stage1_fraction <= 1.0)) {
    throw ParameterError("heads_losses", "stage1_fraction must lie in [0, 1]");
  }
  if (!(learning_rate >= 0.0)) throw ParameterError("heads_losses", "learning_rate must be >= 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("heads_losses", "weight_decay must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ParameterError("heads_losses", "beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ParameterError("heads_losses", "beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ParameterError("heads_losses", "adam_eps must be > 0");
  if (patience == 0) throw ParameterError("heads_losses", "patience must be > 0");
}

std::size_t TrainConfig::stage1_epochs() const {
  if (no_binary || joint_objective) return 0;
  return static_cast<std::size_t>(std::llround(stage1_fraction * static_cast<double>(epochs)));
}

AdamW::AdamW(const ModelParams& params, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      wd_(cfg.weight_decay),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      m_(zeros_like(params)),
      v_(zeros_like(params)) {
  steps_.assign(named_tensors(m_).size(), 0);
}

void AdamW::step(ModelParams& params, ModelParams& grad, const std::vector<ParamGroup>& active) {
  const auto p = named_tensors(params);
  const auto g = named_tensors(grad);
  const auto m = named_tensors(m_);
  const auto v = named_tensors(v_);
  if (p.size() != g.size() || p.size() != steps_.size()) {
    throw ContractError("heads_losses", "gradient layout does not match the parameters");
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!contains(active, p[t].group)) continue;
    const std::size_t step = ++steps_[t];
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step));
    auto w = p[t].tensor->values();
    const auto gw = g[t].tensor->values();
    auto mw = m[t].tensor->values();
    auto vw = v[t].tensor->values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mw[i] = beta1_ * mw[i] + (1.0 - beta1_) * gw[i];
      vw[i] = beta2_ * vw[i] + (1.0 - beta2_) * gw[i] * gw[i];
      const double mhat = mw[i] / c1;
      const double vhat = vw[i] / c2;
      w[i] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + wd_ * w[i]);
    }
  }
}

std::vector<ParamGroup> active_groups(Objective objective, bool use_contrast) {
  std::vector<ParamGroup> out = {ParamGroup::Encoder, ParamGroup::Fusion};
  if (objective != Objective::Fine) out.push_back(ParamGroup::Binary);
  if (objective != Objective::Coarse) {
    out.push_back(ParamGroup::Classifier);
    if (use_contrast) out.push_back(ParamGroup::Contrastive);
  }
  return out;
}

double validation_wf1(const ModelParams& params, const ModelConfig& cfg, const Corpus& corpus, double* acc) {
  const auto idx = corpus.indices(Split::Valid);
  if (idx.empty()) throw InsufficientDataError("heads_losses", "validation split is empty");
  const Features f = extract_features(params, cfg, corpus, idx);
  std::vector<int> preds(idx.size());
  std::vector<int> golds(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto row = f.logits.row(i);
    preds[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    golds[i] = corpus.records[idx[i]].label;
  }
  const IdMetrics m = id_metrics(preds, golds, cfg.num_classes());
  if (acc != nullptr) *acc = m.acc;
  return m.weighted_f1;
}

TrainResult train(const Corpus& corpus, const ModelConfig& model_cfg, const TrainConfig& cfg,
                  const OodGenConfig& ood_cfg, const EpochCallback& on_epoch) {
  model_cfg.validate();
  cfg.validate();
  ood_cfg.validate();
  if (model_cfg.schema != corpus.schema) {
    throw ParameterError("heads_losses", "model schema does not match the corpus schema");
  }
  const auto train_idx = corpus.indices(Split::Train);
  std::vector<Sample> pool;
  pool.reserve(train_idx.size());
  for (std::size_t i : train_idx) pool.push_back(sample_from_record(corpus.records[i]));
  std::vector<std::size_t> positions(pool.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;

  const Rng root(cfg.seed);
  Rng init_rng = root.split(kInitStream);
  Rng batch_rng = root.split(kBatchStream);
  Rng ood_rng = root.split(kOodStream);
  Rng dropout_rng = root.split(kDropoutStream);

  TrainResult result;
  result.params = ModelParams::init(model_cfg, init_rng);
  result.stage1_epochs = std::min(cfg.stage1_epochs(), cfg.epochs);
  const bool use_contrast = !cfg.no_contrast;
  AdamW opt(result.params, cfg);

  ModelParams best = result.params;
  bool have_best = false;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Objective objective = cfg.joint_objective          ? Objective::Joint
                                : epoch < result.stage1_epochs ? Objective::Coarse
                                                               : Objective::Fine;
    const auto groups = active_groups(objective, use_contrast);
    EpochLog log;
    log.epoch = epoch + 1;
    log.stage = std::string(objective_name(objective));

    const auto batches = make_batches(positions, cfg.batch_size, batch_rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<Sample> id_half;
      id_half.reserve(batches[b].size());
      for (std::size_t i : batches[b]) id_half.push_back(pool[i]);
      const Batch batch = build_mixed_batch(id_half, ood_cfg, ood_rng);
      ModelParams grad = zeros_like(result.params);
      const ObjectiveValue v = compute_objective(result.params, model_cfg, batch, objective, use_contrast,
                                                 dropout_rng.next_u64(), &grad);
      if (!std::isfinite(v.total)) {
        throw TrainingError("heads_losses", "non-finite loss at epoch " + std::to_string(epoch + 1) +
                                                ", batch " + std::to_string(b + 1));
      }
      opt.step(result.params, grad, groups);
      log.coarse += v.coarse;
      log.multiclass += v.multiclass;
      log.contrastive += v.contrastive;
      log.total += v.total;
    }
    if (!batches.empty()) {
      const auto n = static_cast<double>(batches.size());
      log.coarse /= n;
      log.multiclass /= n;
      log.contrastive /= n;
      log.total /= n;
    }

    if (objective != Objective::Coarse) {
      log.validated = true;
      log.valid_wf1 = validation_wf1(result.params, model_cfg, corpus, &log.valid_acc);
      if (!have_best || log.valid_wf1 > result.best_valid_wf1) {
        have_best = true;
        best = result.params;
        result.best_valid_wf1 = log.valid_wf1;
        result.best_epoch = epoch + 1;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (have_best && since_best >= cfg.patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (have_best) {
    result.params = std::move(best);
  } else {
    result.best_epoch = result.log.size();
  }
  return result;
}

}  // namespace mintood
