#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mtab/adversarial.hpp"
#include "mtab/classifier.hpp"
#include "mtab/encoder.hpp"
#include "mtab/optimizer.hpp"
#include "mtab/records.hpp"
#include "mtab/tokenizer.hpp"
#include "mtab/train.hpp"

namespace mtab {

enum class UpdateScope { TargetEncoderOnly, EncoderAndClassifier };

inline UpdateScope update_scope_from_string(const std::string& s) {
  if (s == "target_encoder_only") return UpdateScope::TargetEncoderOnly;
  if (s == "encoder_and_classifier") return UpdateScope::EncoderAndClassifier;
  throw ConfigError("unknown update scope '" + s + "'");
}

inline std::string to_string(UpdateScope s) {
  return s == UpdateScope::TargetEncoderOnly ? "target_encoder_only"
                                             : "encoder_and_classifier";
}

struct AdaptationConfig {
  int epochs = 5;
  double lr_discriminator = 1e-5;
  double lr_generator = 1e-5;
  int batch_size = 32;
  double distill_weight = 1.0;       // lambda
  double distill_temperature = 2.0;  // T
  int d_steps_per_batch = 1;
  int g_steps_per_batch = 1;
  UpdateScope update_scope = UpdateScope::TargetEncoderOnly;
  std::uint64_t seed = 7;
  // Records held out of each pool for the per-epoch discriminator probe
  // (capped at a fifth of the pool; probing is skipped when too few).
  int probe_size = 200;

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (lr_discriminator <= 0.0 || lr_generator <= 0.0)
      throw ConfigError("learning rates must be positive");
    if (batch_size <= 0) throw ConfigError("batch_size must be positive");
    if (!(distill_weight >= 0.0) || !std::isfinite(distill_weight))
      throw ConfigError("distill_weight must be finite and >= 0");
    if (distill_temperature <= 0.0)
      throw ConfigError("distill_temperature must be positive");
    if (d_steps_per_batch < 0 || g_steps_per_batch < 0)
      throw ConfigError("step counts must be >= 0");
    if (probe_size < 0) throw ConfigError("probe_size must be >= 0");
  }
};

struct AdaptationEpoch {
  int epoch = 0;  // 1-based
  double d_loss = 0.0;
  double g_adv_loss = 0.0;
  double distill_loss = 0.0;
  double probe_accuracy = -1.0;  // -1 when the probe pools were too small
};

struct AdaptationState {
  double probe_pre = -1.0;
  std::vector<AdaptationEpoch> epochs;
};

inline nlohmann::json adaptation_state_to_json(const AdaptationState& s) {
  nlohmann::json j;
  j["schema"] = "mtab.adaptation.v1";
  j["probe_pre"] = s.probe_pre;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : s.epochs)
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"d_loss", e.d_loss},
                           {"g_adv_loss", e.g_adv_loss},
                           {"distill_loss", e.distill_loss},
                           {"probe_accuracy", e.probe_accuracy}});
  return j;
}

inline std::string adaptation_state_to_csv(const AdaptationState& s) {
  std::string out = "epoch,d_loss,g_adv_loss,distill_loss,probe_accuracy\n";
  char buf[160];
  for (const auto& e : s.epochs) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                  e.d_loss, e.g_adv_loss, e.distill_loss, e.probe_accuracy);
    out += buf;
  }
  return out;
}

namespace detail {

// Fresh discriminator fitted on half of each embedding pool, accuracy
// reported on the other half. 0.5 = indistinguishable.
inline double probe_on_embeddings(const Matrix& src_emb, const Matrix& tgt_emb,
                                  std::uint64_t seed, int steps = 200,
                                  double lr = 5e-3) {
  const Eigen::Index ns = src_emb.rows(), nt = tgt_emb.rows();
  if (ns < 2 || nt < 2) return -1.0;
  Rng rng(seed);
  std::vector<int> si(ns), ti(nt);
  for (Eigen::Index i = 0; i < ns; ++i) si[i] = static_cast<int>(i);
  for (Eigen::Index i = 0; i < nt; ++i) ti[i] = static_cast<int>(i);
  rng.shuffle(si);
  rng.shuffle(ti);
  const Eigen::Index ns_train = ns / 2, nt_train = nt / 2;
  Matrix s_train(ns_train, src_emb.cols()), s_test(ns - ns_train, src_emb.cols());
  Matrix t_train(nt_train, tgt_emb.cols()), t_test(nt - nt_train, tgt_emb.cols());
  for (Eigen::Index i = 0; i < ns; ++i) {
    if (i < ns_train) s_train.row(i) = src_emb.row(si[i]);
    else s_test.row(i - ns_train) = src_emb.row(si[i]);
  }
  for (Eigen::Index i = 0; i < nt; ++i) {
    if (i < nt_train) t_train.row(i) = tgt_emb.row(ti[i]);
    else t_test.row(i - nt_train) = tgt_emb.row(ti[i]);
  }

  // Standardize by the train halves; without this the fixed 200-step budget
  // routinely underfits and the probe reads as aligned when it is not.
  {
    Matrix both(ns_train + nt_train, src_emb.cols());
    both << s_train, t_train;
    const RowVector mu = both.colwise().mean();
    const RowVector sd =
        ((both.rowwise() - mu).array().square().colwise().mean() + 1e-8)
            .sqrt()
            .matrix();
    for (Matrix* m : {&s_train, &s_test, &t_train, &t_test})
      *m = ((m->rowwise() - mu).array().rowwise() / sd.array()).matrix();
  }

  const int d = static_cast<int>(src_emb.cols());
  DiscriminatorParams probe =
      DiscriminatorParams::init(d, 2 * d, rng.fork(0x9eULL));
  OptimizerConfig ocfg;
  ocfg.kind = OptimizerKind::Adam;
  ocfg.lr = lr;
  ocfg.weight_decay = 0.0;
  Optimizer opt(probe.param_refs(), ocfg);
  DiscriminatorParams grads = DiscriminatorParams::zeros_like(probe);
  for (int step = 0; step < steps; ++step) {
    for (auto ref : grads.param_refs()) ref.tensor->setZero();
    discriminator_loss_backward(probe, s_train, t_train, grads);
    opt.step(grads.param_refs());
  }
  const Vector ps = discriminator_forward(probe, s_test);
  const Vector pt = discriminator_forward(probe, t_test);
  long correct = 0;
  for (Eigen::Index i = 0; i < ps.size(); ++i) correct += ps(i) >= 0.5 ? 1 : 0;
  for (Eigen::Index i = 0; i < pt.size(); ++i) correct += pt(i) < 0.5 ? 1 : 0;
  return static_cast<double>(correct) /
         static_cast<double>(ps.size() + pt.size());
}

inline Matrix pooled_embeddings(const EncoderParams& enc, const Tokenizer& tok,
                                const std::vector<TweetRecord>& records,
                                int batch_size = 64) {
  Matrix out(records.size(), enc.config.d_model);
  Eigen::Index row = 0;
  for (std::size_t start = 0; start < records.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop =
        std::min(records.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<Tokenizer::Encoded> chunk;
    for (std::size_t i = start; i < stop; ++i)
      chunk.push_back(tok.encode(records[i].text()));
    auto cache = encoder_forward_packed(enc, PackedBatch::pack(chunk));
    out.middleRows(row, cache.pooled.rows()) = cache.pooled;
    row += cache.pooled.rows();
  }
  return out;
}

}  // namespace detail

// Public probe: embeds both held-out pools and fits a fresh discriminator.
inline double discriminator_probe(const EncoderParams& enc_src,
                                  const EncoderParams& enc_tgt,
                                  const Tokenizer& tok,
                                  const std::vector<TweetRecord>& held_src,
                                  const std::vector<TweetRecord>& held_tgt,
                                  std::uint64_t seed) {
  if (held_src.size() < 2 || held_tgt.size() < 2)
    throw EmptyPoolError("probe pools need at least two records per side");
  const Matrix src_emb = detail::pooled_embeddings(enc_src, tok, held_src);
  const Matrix tgt_emb = detail::pooled_embeddings(enc_tgt, tok, held_tgt);
  return detail::probe_on_embeddings(src_emb, tgt_emb, seed);
}

struct AdaptationResult {
  EncoderParams tgt_enc;
  DiscriminatorParams discriminator;
  AdaptationState state;
};

// ADDA-style Step 2. The target encoder starts as a copy of src_enc and is
// trained against a language discriminator; a frozen snapshot of
// (src_enc, cls) taken at entry acts as the distillation teacher on the same
// target-language batches. src_enc is never touched; cls is updated only
// under UpdateScope::EncoderAndClassifier.
inline AdaptationResult adapt_target_encoder(const EncoderParams& src_enc,
                                             ClassifierParams& cls,
                                             const Tokenizer& tok,
                                             const Dataset& tgt_texts,
                                             const Dataset& src_texts,
                                             const AdaptationConfig& cfg) {
  cfg.validate();
  if (tgt_texts.size() == 0)
    throw EmptyPoolError("target adaptation pool is empty");
  if (src_texts.size() == 0)
    throw EmptyPoolError("source adaptation pool is empty");
  if (tgt_texts.languages().size() > 1)
    throw PreconditionError("target pool must be a single language");

  AdaptationResult res;
  res.tgt_enc = src_enc;
  res.discriminator = DiscriminatorParams::init(
      src_enc.config.d_model, 2 * src_enc.config.d_model,
      Rng(cfg.seed).fork(0xd15cULL));
  if (cfg.epochs == 0) return res;

  const ClassifierParams teacher_cls = cls;  // frozen snapshot

  // Hold out probe pools, keep the rest for adaptation.
  Rng setup_rng(Rng(cfg.seed).fork(0x5e7ULL));
  auto carve = [&](const std::vector<TweetRecord>& pool, int cap,
                   std::vector<TweetRecord>& held,
                   std::vector<TweetRecord>& active) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    setup_rng.shuffle(idx);
    const std::size_t h =
        std::min<std::size_t>(static_cast<std::size_t>(cap), pool.size() / 5);
    for (std::size_t i = 0; i < idx.size(); ++i)
      (i < h ? held : active).push_back(pool[idx[i]]);
  };
  std::vector<TweetRecord> held_src, active_src, held_tgt, active_tgt;
  carve(src_texts.records(), cfg.probe_size, held_src, active_src);
  carve(tgt_texts.records(), cfg.probe_size, held_tgt, active_tgt);
  if (active_src.empty() || active_tgt.empty())
    throw EmptyPoolError("adaptation pools exhausted by probe hold-out");
  const bool probing = held_src.size() >= 2 && held_tgt.size() >= 2;

  // Everything computed from frozen parts is hoisted out of the loop: source
  // pooled embeddings, teacher probabilities on target text, probe source
  // embeddings.
  const Matrix src_pool_emb =
      detail::pooled_embeddings(src_enc, tok, active_src);
  std::vector<Tokenizer::Encoded> tgt_encoded;
  tgt_encoded.reserve(active_tgt.size());
  for (const auto& r : active_tgt) tgt_encoded.push_back(tok.encode(r.text()));
  const Matrix teacher_probs = [&] {
    const Matrix emb = detail::pooled_embeddings(src_enc, tok, active_tgt);
    return softmax_rows(classifier_logits(teacher_cls, emb));
  }();
  Matrix probe_src_emb;
  if (probing) {
    probe_src_emb = detail::pooled_embeddings(src_enc, tok, held_src);
    res.state.probe_pre = detail::probe_on_embeddings(
        probe_src_emb, detail::pooled_embeddings(res.tgt_enc, tok, held_tgt),
        Rng(cfg.seed).fork(0xa0ULL));
  }

  OptimizerConfig dcfg;
  dcfg.kind = OptimizerKind::Adam;
  dcfg.lr = cfg.lr_discriminator;
  dcfg.weight_decay = 0.0;
  Optimizer opt_d(res.discriminator.param_refs(), dcfg);

  OptimizerConfig gcfg = dcfg;
  gcfg.lr = cfg.lr_generator;
  auto gen_params = res.tgt_enc.param_refs();
  if (cfg.update_scope == UpdateScope::EncoderAndClassifier)
    for (auto ref : cls.param_refs()) gen_params.push_back(ref);
  Optimizer opt_g(gen_params, gcfg);

  EncoderParams enc_grads = EncoderParams::zeros_like(res.tgt_enc);
  ClassifierParams cls_grads = ClassifierParams::zeros_like(cls);
  DiscriminatorParams d_grads =
      DiscriminatorParams::zeros_like(res.discriminator);

  Rng shuffle_rng(Rng(cfg.seed).fork(0x0badULL));
  const bool src_is_large = active_src.size() >= active_tgt.size();
  std::vector<std::size_t> large_order(
      src_is_large ? active_src.size() : active_tgt.size());
  std::vector<std::size_t> small_order(
      src_is_large ? active_tgt.size() : active_src.size());
  for (std::size_t i = 0; i < large_order.size(); ++i) large_order[i] = i;
  for (std::size_t i = 0; i < small_order.size(); ++i) small_order[i] = i;
  std::size_t small_cursor = 0;
  shuffle_rng.shuffle(small_order);

  const auto bsz = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(large_order);
    double d_sum = 0.0, adv_sum = 0.0, kd_sum = 0.0;
    long n_batches = 0;
    for (std::size_t start = 0; start < large_order.size(); start += bsz) {
      const std::size_t stop = std::min(large_order.size(), start + bsz);
      std::vector<std::size_t> large_batch(large_order.begin() + start,
                                           large_order.begin() + stop);
      std::vector<std::size_t> small_batch;
      for (std::size_t i = 0; i < bsz; ++i) {
        if (small_cursor == small_order.size()) {
          shuffle_rng.shuffle(small_order);
          small_cursor = 0;
        }
        small_batch.push_back(small_order[small_cursor++]);
      }
      const auto& src_idx = src_is_large ? large_batch : small_batch;
      const auto& tgt_idx = src_is_large ? small_batch : large_batch;

      Matrix src_batch_emb(src_idx.size(), src_enc.config.d_model);
      for (std::size_t i = 0; i < src_idx.size(); ++i)
        src_batch_emb.row(i) = src_pool_emb.row(src_idx[i]);
      std::vector<Tokenizer::Encoded> tgt_batch;
      for (auto i : tgt_idx) tgt_batch.push_back(tgt_encoded[i]);

      // Discriminator phase: encoders fixed, so compute target embeddings
      // once for all d-steps.
      if (cfg.d_steps_per_batch > 0) {
        auto tgt_cache =
            encoder_forward_packed(res.tgt_enc, PackedBatch::pack(tgt_batch));
        for (int s = 0; s < cfg.d_steps_per_batch; ++s) {
          const double ld = discriminator_loss(res.discriminator,
                                               src_batch_emb, tgt_cache.pooled);
          if (!std::isfinite(ld))
            throw DivergenceError("non-finite discriminator loss at epoch " +
                                  std::to_string(epoch) + ", batch " +
                                  std::to_string(n_batches));
          if (s == 0) d_sum += ld;
          for (auto ref : d_grads.param_refs()) ref.tensor->setZero();
          discriminator_loss_backward(res.discriminator, src_batch_emb,
                                      tgt_cache.pooled, d_grads);
          opt_d.step(d_grads.param_refs());
        }
      }

      // Generator phase: discriminator fixed.
      for (int s = 0; s < cfg.g_steps_per_batch; ++s) {
        auto cache =
            encoder_forward_packed(res.tgt_enc, PackedBatch::pack(tgt_batch));
        const double l_adv =
            generator_adv_loss(res.discriminator, cache.pooled);
        Matrix d_pooled = generator_adv_backward(res.discriminator, cache.pooled);

        Matrix batch_teacher(tgt_idx.size(), kNumClasses);
        for (std::size_t i = 0; i < tgt_idx.size(); ++i)
          batch_teacher.row(i) = teacher_probs.row(tgt_idx[i]);
        const Matrix student_logits = classifier_logits(cls, cache.pooled);
        auto kd =
            distillation_loss(batch_teacher, student_logits, cfg.distill_temperature);
        if (!std::isfinite(l_adv) || !std::isfinite(kd.loss))
          throw DivergenceError("non-finite generator loss at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(n_batches));
        if (s == 0) {
          adv_sum += l_adv;
          kd_sum += kd.loss;
        }

        for (auto ref : enc_grads.param_refs()) ref.tensor->setZero();
        cls_grads.w.setZero();
        cls_grads.b.setZero();
        const Matrix d_logits = cfg.distill_weight * kd.d_logits;
        auto back = classifier_backward(cls, cache.pooled, d_logits, cls_grads);
        d_pooled += back.d_pooled;
        encoder_backward_pooled(res.tgt_enc, cache, d_pooled, enc_grads);

        auto grad_refs = enc_grads.param_refs();
        if (cfg.update_scope == UpdateScope::EncoderAndClassifier)
          for (auto ref : cls_grads.param_refs()) grad_refs.push_back(ref);
        opt_g.step(grad_refs);
      }
      ++n_batches;
    }

    AdaptationEpoch entry;
    entry.epoch = epoch;
    if (n_batches > 0) {
      entry.d_loss = d_sum / static_cast<double>(n_batches);
      entry.g_adv_loss = adv_sum / static_cast<double>(n_batches);
      entry.distill_loss = kd_sum / static_cast<double>(n_batches);
    }
    if (probing)
      entry.probe_accuracy = detail::probe_on_embeddings(
          probe_src_emb,
          detail::pooled_embeddings(res.tgt_enc, tok, held_tgt),
          Rng(cfg.seed).fork(0xa0ULL + static_cast<std::uint64_t>(epoch)));
    res.state.epochs.push_back(entry);
  }
  return res;
}

}  // namespace mtab
