#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mtab/classifier.hpp"
#include "mtab/encoder.hpp"
#include "mtab/metrics.hpp"
#include "mtab/optimizer.hpp"
#include "mtab/records.hpp"
#include "mtab/rng.hpp"
#include "mtab/tokenizer.hpp"

namespace mtab {

// joint: encoder+classifier treated as one model (the plain fine-tuned
// baseline). split: same optimization, but the bundles stay separately
// addressable so adaptation can later freeze the classifier. The update math
// is identical; the distinction is structural.
enum class TrainMode { Joint, Split };

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "joint") return TrainMode::Joint;
  if (s == "split") return TrainMode::Split;
  throw ConfigError("unknown train mode '" + s + "'");
}

inline std::string to_string(TrainMode m) {
  return m == TrainMode::Joint ? "joint" : "split";
}

struct TrainConfig {
  int epochs = 9;
  int batch_size = 32;
  double learning_rate = 5e-5;
  std::uint64_t seed = 7;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double weight_decay = 0.01;  // applied only under adamw

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  }
};

struct EpochLog {
  int epoch = 0;           // 1-based
  double mean_loss = 0.0;  // mean cross-entropy over the epoch's batches
  double dev_macro_f1 = -1.0;  // -1 when no dev set was given
};

struct TrainLog {
  std::vector<EpochLog> epochs;
};

namespace detail {

inline std::vector<Tokenizer::Encoded> encode_records(
    const Tokenizer& tok, const std::vector<TweetRecord>& records) {
  std::vector<Tokenizer::Encoded> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(tok.encode(r.text()));
  return out;
}

}  // namespace detail

struct Prediction {
  StanceLabel label;
  std::array<double, kNumClasses> probs;
};

// Deterministic eval-mode prediction (dropout off).
inline std::vector<Prediction> predict(const EncoderParams& enc,
                                       const ClassifierParams& cls,
                                       const Tokenizer& tok,
                                       const std::vector<TweetRecord>& records,
                                       int batch_size = 64) {
  std::vector<Prediction> out;
  out.reserve(records.size());
  const auto encoded = detail::encode_records(tok, records);
  for (std::size_t start = 0; start < encoded.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop =
        std::min(encoded.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Tokenizer::Encoded> chunk(encoded.begin() + start,
                                          encoded.begin() + stop);
    auto cache = encoder_forward_packed(enc, PackedBatch::pack(chunk));
    const Matrix probs = softmax_rows(classifier_logits(cls, cache.pooled));
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Prediction p;
      p.label = predict_row(probs.row(r));
      for (int c = 0; c < kNumClasses; ++c) p.probs[c] = probs(r, c);
      out.push_back(p);
    }
  }
  return out;
}

inline double eval_macro_f1(const EncoderParams& enc,
                            const ClassifierParams& cls, const Tokenizer& tok,
                            const Dataset& data) {
  std::vector<StanceLabel> gold, pred;
  gold.reserve(data.size());
  for (const auto& r : data.records()) {
    if (!r.label)
      throw PreconditionError("evaluation requires labeled records");
    gold.push_back(*r.label);
  }
  for (const auto& p : predict(enc, cls, tok, data.records()))
    pred.push_back(p.label);
  return macro_f1(confusion_matrix(gold, pred));
}

// Step-1 supervised fine-tuning: mean cross-entropy over shuffled
// mini-batches. `dev` may be empty (no per-epoch F1 then).
inline TrainLog train_supervised(EncoderParams& enc, ClassifierParams& cls,
                                 const Tokenizer& tok, const Dataset& train,
                                 const Dataset* dev, const TrainConfig& cfg,
                                 TrainMode mode) {
  (void)mode;  // numerically identical under both modes; see enum note
  cfg.validate();
  if (train.size() == 0) throw EmptyCorpusError("training set is empty");

  std::vector<int> labels;
  labels.reserve(train.size());
  for (const auto& r : train.records()) {
    if (!r.label)
      throw PreconditionError("record '" + r.id + "' is unlabeled");
    labels.push_back(label_code(*r.label));
  }
  const auto encoded = detail::encode_records(tok, train.records());

  OptimizerConfig ocfg;
  ocfg.kind = cfg.optimizer;
  ocfg.lr = cfg.learning_rate;
  ocfg.weight_decay =
      cfg.optimizer == OptimizerKind::AdamW ? cfg.weight_decay : 0.0;
  auto params = enc.param_refs();
  for (auto ref : cls.param_refs()) params.push_back(ref);
  Optimizer opt(params, ocfg);

  EncoderParams enc_grads = EncoderParams::zeros_like(enc);
  ClassifierParams cls_grads = ClassifierParams::zeros_like(cls);

  Rng shuffle_rng(Rng(cfg.seed).fork(0x5f5fULL));
  Rng dropout_rng(Rng(cfg.seed).fork(0xd0d0ULL));

  std::vector<std::size_t> order(encoded.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Tokenizer::Encoded> chunk;
      std::vector<int> chunk_labels;
      chunk.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        chunk.push_back(encoded[order[i]]);
        chunk_labels.push_back(labels[order[i]]);
      }
      auto cache =
          encoder_forward_packed(enc, PackedBatch::pack(chunk), &dropout_rng);
      const Matrix logits = classifier_logits(cls, cache.pooled);
      auto ce = cross_entropy(logits, chunk_labels);
      if (!std::isfinite(ce.loss))
        throw DivergenceError("non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(batches));
      loss_sum += ce.loss;
      ++batches;

      for (auto ref : enc_grads.param_refs()) ref.tensor->setZero();
      cls_grads.w.setZero();
      cls_grads.b.setZero();
      auto back = classifier_backward(cls, cache.pooled, ce.d_logits, cls_grads);
      encoder_backward_pooled(enc, cache, back.d_pooled, enc_grads);

      auto grads = enc_grads.param_refs();
      for (auto ref : cls_grads.param_refs()) grads.push_back(ref);
      opt.step(grads);
    }
    EpochLog el;
    el.epoch = epoch;
    el.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
    if (dev != nullptr && dev->size() > 0)
      el.dev_macro_f1 = eval_macro_f1(enc, cls, tok, *dev);
    log.epochs.push_back(el);
  }
  return log;
}

}  // namespace mtab
