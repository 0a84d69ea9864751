#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mtab/adversarial.hpp"
#include "mtab/classifier.hpp"

using namespace mtab;

namespace {

DiscriminatorParams zero_disc(int d, int h) {
  DiscriminatorParams p = DiscriminatorParams::init(d, h, 1, 0.5);
  for (auto ref : p.param_refs()) ref.tensor->setZero();
  return p;
}

}  // namespace

TEST_CASE("zero-weight discriminator outputs one half everywhere") {
  const auto p = zero_disc(6, 9);
  Matrix x(4, 6);
  Rng rng(3);
  fill_normal(x, rng, 2.0);
  const Vector probs = discriminator_forward(p, x);
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    REQUIRE(probs(i) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("discriminator loss at chance equals ln 2") {
  // D(x) = 0.5 for all inputs makes both halves of the loss -log(1/2).
  const auto p = zero_disc(6, 9);
  Matrix src(3, 6), tgt(5, 6);
  Rng rng(4);
  fill_normal(src, rng, 1.0);
  fill_normal(tgt, rng, 1.0);
  REQUIRE(discriminator_loss(p, src, tgt) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
  REQUIRE(generator_adv_loss(p, tgt) ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("discriminator loss favours separation") {
  // A confident, correct discriminator should score below chance level,
  // and the generator loss seen through it should rise above ln 2.
  DiscriminatorParams p = DiscriminatorParams::init(2, 8, 7, 0.5);
  // Hand-build a separator on the first coordinate. Negative activations
  // pass through two leaky stages (x0.04), so the output weight is large.
  for (auto ref : p.param_refs()) ref.tensor->setZero();
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 1.0;
  p.w3(0, 0) = 200.0;
  Matrix src(2, 2), tgt(2, 2);
  src << 1.0, 0.3, 1.2, -0.4;   // z = 200, 240 -> prob ~ 1
  tgt << -1.0, 0.5, -1.1, 0.2;  // z = -8, -8.8 -> prob ~ 3e-4
  REQUIRE(discriminator_loss(p, src, tgt) < 0.05);
  REQUIRE(generator_adv_loss(p, tgt) > 2.0);
}

TEST_CASE("adversarial losses stay finite under saturation") {
  // Extreme logits drive sigmoid to exactly 0/1 in floating point; the
  // clamp keeps the logs finite.
  DiscriminatorParams p = DiscriminatorParams::init(2, 4, 7, 0.5);
  for (auto ref : p.param_refs()) ref.tensor->setZero();
  p.w1(0, 0) = 10.0;
  p.w2(0, 0) = 10.0;
  p.w3(0, 0) = 10.0;
  Matrix src(1, 2), tgt(1, 2);
  src << -100.0, 0.0;  // prob -> 0 although labelled source
  tgt << 100.0, 0.0;   // prob -> 1 although labelled target
  const double ld = discriminator_loss(p, src, tgt);
  REQUIRE(std::isfinite(ld));
  REQUIRE(ld <= -std::log(kAdvClamp) + 1.0);
  const double lg = generator_adv_loss(p, src);
  REQUIRE(std::isfinite(lg));
  DiscriminatorParams g = DiscriminatorParams::zeros_like(p);
  discriminator_loss_backward(p, src, tgt, g);
  for (auto ref : g.param_refs()) REQUIRE(ref.tensor->allFinite());
}

TEST_CASE("adversarial losses reject empty pools") {
  const auto p = zero_disc(4, 4);
  Matrix empty(0, 4), some(2, 4);
  some.setZero();
  REQUIRE_THROWS_AS(discriminator_loss(p, empty, some), EmptyPoolError);
  REQUIRE_THROWS_AS(discriminator_loss(p, some, empty), EmptyPoolError);
  REQUIRE_THROWS_AS(generator_adv_loss(p, empty), EmptyPoolError);
}

TEST_CASE("discriminator rejects mismatched input width") {
  const auto p = zero_disc(4, 4);
  Matrix wrong(2, 5);
  wrong.setZero();
  REQUIRE_THROWS_AS(discriminator_forward(p, wrong), ShapeError);
}

TEST_CASE("distillation matches the hand-computed value at T=1") {
  // teacher [0.5, 0.25, 0.25] against a uniform student:
  // KL = 0.5 ln(3/2) + 0.5 ln(3/4) = 0.05889151782...
  Matrix teacher(1, 3);
  teacher << 0.5, 0.25, 0.25;
  Matrix logits = Matrix::Zero(1, 3);
  const auto res = distillation_loss(teacher, logits, 1.0);
  const double expected =
      0.5 * std::log(0.5 * 3.0) + 0.5 * std::log(0.25 * 3.0);
  REQUIRE(res.loss == Catch::Approx(expected).epsilon(1e-12));
  REQUIRE(res.loss == Catch::Approx(0.0588915178).epsilon(1e-8));
}

TEST_CASE("distillation is zero when student matches teacher") {
  Matrix teacher(2, 3);
  teacher << 0.2, 0.3, 0.5, 0.6, 0.1, 0.3;
  Matrix logits(2, 3);
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 3; ++c)
      logits(r, c) = std::log(teacher(r, c));
  const auto res = distillation_loss(teacher, logits, 1.0);
  REQUIRE(res.loss == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(res.d_logits.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("distillation is non-negative for random inputs") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix raw(3, 3), logits(3, 3);
    fill_normal(raw, rng, 1.0);
    fill_normal(logits, rng, 2.0);
    Matrix teacher = raw.array().exp().matrix();
    for (Eigen::Index r = 0; r < teacher.rows(); ++r)
      teacher.row(r) /= teacher.row(r).sum();
    const double T = 1.0 + 0.5 * (trial % 5);
    REQUIRE(distillation_loss(teacher, logits, T).loss >= -1e-12);
  }
}

TEST_CASE("temperature scaling multiplies the loss by T squared at matched softness") {
  // With soften() applied to an already-uniform teacher the KL term is
  // invariant in shape, so the T^2 prefactor is visible directly.
  Matrix teacher(1, 4);
  teacher.setConstant(0.25);
  Matrix logits(1, 4);
  logits << 1.0, 0.0, -1.0, 0.5;
  const auto at1 = distillation_loss(teacher, logits, 1.0);
  const auto at3 = distillation_loss(teacher, 3.0 * logits, 3.0);
  REQUIRE(at3.loss == Catch::Approx(9.0 * at1.loss).epsilon(1e-10));
}

TEST_CASE("soften_probs edge cases") {
  RowVector uniform = soften_probs(RowVector::Zero(5), 2.0);
  for (Eigen::Index i = 0; i < 5; ++i)
    REQUIRE(uniform(i) == Catch::Approx(0.2).margin(1e-15));

  RowVector probs(3);
  probs << 0.64, 0.32, 0.04;
  const RowVector identity = soften_probs(probs, 1.0);
  for (Eigen::Index i = 0; i < 3; ++i)
    REQUIRE(identity(i) == Catch::Approx(probs(i)).epsilon(1e-12));

  const RowVector flat = soften_probs(probs, 1e9);
  for (Eigen::Index i = 0; i < 3; ++i)
    REQUIRE(flat(i) == Catch::Approx(1.0 / 3.0).epsilon(1e-6));
  REQUIRE(soften_probs(probs, 2.0).sum() == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("distillation validates its inputs") {
  Matrix teacher(1, 3), logits(1, 3), wide(1, 4);
  teacher << 0.5, 0.25, 0.25;
  logits.setZero();
  wide.setZero();
  REQUIRE_THROWS_AS(distillation_loss(teacher, logits, 0.0), ConfigError);
  REQUIRE_THROWS_AS(distillation_loss(teacher, logits, -1.0), ConfigError);
  REQUIRE_THROWS_AS(distillation_loss(teacher, wide, 1.0), ShapeError);
  const auto empty = distillation_loss(Matrix(0, 3), Matrix(0, 3), 1.0);
  REQUIRE(empty.loss == 0.0);
}

TEST_CASE("cross entropy hand value and gradient direction") {
  // Uniform logits over three classes: loss = ln 3 per example.
  Matrix logits = Matrix::Zero(2, 3);
  const auto res = cross_entropy(logits, {0, 2});
  REQUIRE(res.loss == Catch::Approx(std::log(3.0)).epsilon(1e-12));
  // Gradient is (softmax - onehot)/B: negative at the true class.
  REQUIRE(res.d_logits(0, 0) < 0.0);
  REQUIRE(res.d_logits(0, 1) > 0.0);
  REQUIRE(res.d_logits(1, 2) < 0.0);
  REQUIRE(res.d_logits.sum() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("cross entropy rejects bad shapes and labels") {
  Matrix logits = Matrix::Zero(2, 3);
  REQUIRE_THROWS_AS(cross_entropy(logits, {0}), ShapeError);
  REQUIRE_THROWS_AS(cross_entropy(logits, {0, 3}), ShapeError);
  REQUIRE_THROWS_AS(cross_entropy(logits, {-1, 0}), ShapeError);
}

TEST_CASE("softmax rows are stable under large offsets") {
  Matrix logits(1, 3);
  logits << 1000.0, 1001.0, 999.0;
  const Matrix probs = softmax_rows(logits);
  REQUIRE(probs.allFinite());
  REQUIRE(probs.row(0).sum() == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(probs(0, 1) > probs(0, 0));
  REQUIRE(probs(0, 0) > probs(0, 2));
}
