#include <catch2/catch_amalgamated.hpp>

#include <functional>

#include "mtab/adversarial.hpp"
#include "mtab/classifier.hpp"
#include "mtab/encoder.hpp"

using namespace mtab;

namespace {

// Central finite differences against the analytic gradient over every entry
// of every tensor. Gradients are made O(1e-2) by the wide init below so the
// finite-difference quotient is far above cancellation noise.
constexpr double kTol = 1e-4;
constexpr double kInit = 0.5;

double check_all(std::vector<ParamRef> params, std::vector<ParamRef> grads,
                 const std::function<double()>& loss, double h) {
  double worst = 0.0;
  REQUIRE(params.size() == grads.size());
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Matrix& t = *params[pi].tensor;
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        const double orig = t(i, j);
        t(i, j) = orig + h;
        const double lp = loss();
        t(i, j) = orig - h;
        const double lm = loss();
        t(i, j) = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = (*grads[pi].tensor)(i, j);
        const double rel =
            std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.vocab_size = 12;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.dropout = 0.0;
  cfg.max_len = 10;
  return cfg;
}

std::vector<Tokenizer::Encoded> tiny_batch() {
  std::vector<Tokenizer::Encoded> batch(2);
  batch[0].ids = {2, 4, 5, 6, 3, 0, 0, 0, 0, 0};
  batch[0].mask = {1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  batch[1].ids = {2, 7, 8, 9, 10, 11, 3, 0, 0, 0};
  batch[1].mask = {1, 1, 1, 1, 1, 1, 1, 0, 0, 0};
  return batch;
}

}  // namespace

TEST_CASE("cross-entropy gradients match finite differences everywhere") {
  const EncoderConfig cfg = tiny_config();
  EncoderParams enc = EncoderParams::init(cfg, 3, kInit);
  ClassifierParams cls = ClassifierParams::init(cfg.d_model, 4, kInit);
  const auto batch = tiny_batch();
  const std::vector<int> labels = {0, 2};

  const auto loss = [&]() {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    return cross_entropy(classifier_logits(cls, cache.pooled), labels).loss;
  };

  EncoderParams eg = EncoderParams::zeros_like(enc);
  ClassifierParams cg = ClassifierParams::zeros_like(cls);
  {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    const auto ce = cross_entropy(classifier_logits(cls, cache.pooled), labels);
    const auto back = classifier_backward(cls, cache.pooled, ce.d_logits, cg);
    encoder_backward_pooled(enc, cache, back.d_pooled, eg);
  }

  auto params = enc.param_refs();
  auto grads = eg.param_refs();
  for (auto r : cls.param_refs()) params.push_back(r);
  for (auto r : cg.param_refs()) grads.push_back(r);

  const double worst = check_all(params, grads, loss, 1e-5);
  INFO("worst relative error " << worst);
  REQUIRE(worst < kTol);
}

TEST_CASE("discriminator loss gradients match finite differences") {
  const int d = 8;
  DiscriminatorParams D = DiscriminatorParams::init(d, 2 * d, 11, kInit);
  Rng rng(5);
  Matrix src(3, d), tgt(4, d);
  fill_normal(src, rng, 1.0);
  fill_normal(tgt, rng, 1.0);

  DiscriminatorParams dg = DiscriminatorParams::zeros_like(D);
  discriminator_loss_backward(D, src, tgt, dg);

  const double worst = check_all(
      D.param_refs(), dg.param_refs(),
      [&]() { return discriminator_loss(D, src, tgt); }, 1e-6);
  INFO("worst relative error " << worst);
  REQUIRE(worst < kTol);
}

TEST_CASE("generator adversarial gradients match finite differences") {
  const EncoderConfig cfg = tiny_config();
  EncoderParams enc = EncoderParams::init(cfg, 3, kInit);
  const DiscriminatorParams D =
      DiscriminatorParams::init(cfg.d_model, 2 * cfg.d_model, 11, kInit);
  const auto batch = tiny_batch();

  const auto loss = [&]() {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    return generator_adv_loss(D, cache.pooled);
  };

  EncoderParams eg = EncoderParams::zeros_like(enc);
  {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    const Matrix d_pooled = generator_adv_backward(D, cache.pooled);
    encoder_backward_pooled(enc, cache, d_pooled, eg);
  }

  const double worst = check_all(enc.param_refs(), eg.param_refs(), loss, 1e-5);
  INFO("worst relative error " << worst);
  REQUIRE(worst < kTol);
}

TEST_CASE("distillation gradients match finite differences through the encoder") {
  const EncoderConfig cfg = tiny_config();
  EncoderParams enc = EncoderParams::init(cfg, 6, kInit);
  ClassifierParams cls = ClassifierParams::init(cfg.d_model, 8, kInit);
  const auto batch = tiny_batch();
  Matrix teacher(2, 3);
  teacher << 0.5, 0.3, 0.2, 0.1, 0.2, 0.7;
  const double T = 2.0;

  const auto loss = [&]() {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    return distillation_loss(teacher, classifier_logits(cls, cache.pooled), T)
        .loss;
  };

  EncoderParams eg = EncoderParams::zeros_like(enc);
  ClassifierParams cg = ClassifierParams::zeros_like(cls);
  {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    const auto kd =
        distillation_loss(teacher, classifier_logits(cls, cache.pooled), T);
    const auto back = classifier_backward(cls, cache.pooled, kd.d_logits, cg);
    encoder_backward_pooled(enc, cache, back.d_pooled, eg);
  }

  auto params = enc.param_refs();
  auto grads = eg.param_refs();
  for (auto r : cls.param_refs()) params.push_back(r);
  for (auto r : cg.param_refs()) grads.push_back(r);

  const double worst = check_all(params, grads, loss, 1e-5);
  INFO("worst relative error " << worst);
  REQUIRE(worst < kTol);
}

TEST_CASE("combined adversarial plus distillation objective gradient") {
  const EncoderConfig cfg = tiny_config();
  EncoderParams enc = EncoderParams::init(cfg, 3, kInit);
  ClassifierParams cls = ClassifierParams::init(cfg.d_model, 4, kInit);
  const DiscriminatorParams D =
      DiscriminatorParams::init(cfg.d_model, 2 * cfg.d_model, 11, kInit);
  const auto batch = tiny_batch();
  Matrix teacher(2, 3);
  teacher << 0.5, 0.3, 0.2, 0.1, 0.2, 0.7;
  const double lambda = 1.7, T = 2.0;

  const auto loss = [&]() {
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    const double adv = generator_adv_loss(D, cache.pooled);
    const auto kd =
        distillation_loss(teacher, classifier_logits(cls, cache.pooled), T);
    return adv + lambda * kd.loss;
  };

  EncoderParams eg = EncoderParams::zeros_like(enc);
  {
    ClassifierParams scratch = ClassifierParams::zeros_like(cls);
    const auto cache = encoder_forward_packed(enc, PackedBatch::pack(batch));
    Matrix d_pooled = generator_adv_backward(D, cache.pooled);
    const auto kd =
        distillation_loss(teacher, classifier_logits(cls, cache.pooled), T);
    const Matrix d_logits = lambda * kd.d_logits;
    d_pooled += classifier_backward(cls, cache.pooled, d_logits, scratch).d_pooled;
    encoder_backward_pooled(enc, cache, d_pooled, eg);
  }

  const double worst = check_all(enc.param_refs(), eg.param_refs(), loss, 1e-5);
  INFO("worst relative error " << worst);
  REQUIRE(worst < kTol);
}
