#pragma once

#include <cmath>
#include <vector>

#include "mtab/core.hpp"
#include "mtab/rng.hpp"
#include "mtab/tensor.hpp"

namespace mtab {

inline constexpr double kAdvClamp = 1e-7;
inline constexpr double kLeakySlope = 0.2;

// d_model -> h -> h -> 1 MLP with leaky-ReLU hidden activations; sigmoid
// output = probability the embedding came from the source language.
struct DiscriminatorParams {
  Matrix w1, b1;  // d x h, 1 x h
  Matrix w2, b2;  // h x h, 1 x h
  Matrix w3, b3;  // h x 1, 1 x 1

  static DiscriminatorParams init(int d_model, int hidden, std::uint64_t seed,
                                  double init_std = 0.02) {
    if (d_model <= 0 || hidden <= 0)
      throw ConfigError("discriminator dims must be positive");
    Rng rng(seed);
    DiscriminatorParams p;
    p.w1.resize(d_model, hidden);
    fill_normal(p.w1, rng, init_std);
    p.b1 = Matrix::Zero(1, hidden);
    p.w2.resize(hidden, hidden);
    fill_normal(p.w2, rng, init_std);
    p.b2 = Matrix::Zero(1, hidden);
    p.w3.resize(hidden, 1);
    fill_normal(p.w3, rng, init_std);
    p.b3 = Matrix::Zero(1, 1);
    return p;
  }

  static DiscriminatorParams zeros_like(const DiscriminatorParams& other) {
    DiscriminatorParams z = other;
    for (auto ref : z.param_refs()) ref.tensor->setZero();
    return z;
  }

  std::vector<ParamRef> param_refs() {
    return {{"disc.w1", &w1}, {"disc.b1", &b1}, {"disc.w2", &w2},
            {"disc.b2", &b2}, {"disc.w3", &w3}, {"disc.b3", &b3}};
  }
};

namespace detail {

inline double leaky(double a) { return a > 0.0 ? a : kLeakySlope * a; }
inline double leaky_grad(double a) { return a > 0.0 ? 1.0 : kLeakySlope; }
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct DiscCache {
  Matrix x;        // B x d
  Matrix a1, h1;   // B x h
  Matrix a2, h2;   // B x h
  Vector z;        // B
  Vector prob;     // B (unclamped sigmoid)
};

inline DiscCache disc_forward_cached(const DiscriminatorParams& p,
                                     const Matrix& pooled) {
  if (pooled.cols() != p.w1.rows())
    throw ShapeError("discriminator input width mismatch");
  DiscCache c;
  c.x = pooled;
  c.a1 = (pooled * p.w1).rowwise() + p.b1.row(0);
  c.h1 = c.a1.unaryExpr([](double v) { return leaky(v); });
  c.a2 = (c.h1 * p.w2).rowwise() + p.b2.row(0);
  c.h2 = c.a2.unaryExpr([](double v) { return leaky(v); });
  c.z = ((c.h2 * p.w3).col(0).array() + p.b3(0, 0)).matrix();
  c.prob = c.z.unaryExpr([](double v) { return sigmoid(v); });
  return c;
}

// Backprop a gradient on the pre-sigmoid logit z. Accumulates parameter
// grads; returns the gradient on the input batch.
inline Matrix disc_backward(const DiscriminatorParams& p, const DiscCache& c,
                            const Vector& dz, DiscriminatorParams& grads) {
  grads.w3 += c.h2.transpose() * dz;
  grads.b3(0, 0) += dz.sum();
  Matrix dh2 = dz * p.w3.transpose();
  Matrix da2 = dh2.cwiseProduct(
      c.a2.unaryExpr([](double v) { return leaky_grad(v); }));
  grads.w2 += c.h1.transpose() * da2;
  grads.b2.row(0) += da2.colwise().sum();
  Matrix dh1 = da2 * p.w2.transpose();
  Matrix da1 = dh1.cwiseProduct(
      c.a1.unaryExpr([](double v) { return leaky_grad(v); }));
  grads.w1 += c.x.transpose() * da1;
  grads.b1.row(0) += da1.colwise().sum();
  return da1 * p.w1.transpose();
}

}  // namespace detail

inline Vector discriminator_forward(const DiscriminatorParams& p,
                                    const Matrix& pooled) {
  return detail::disc_forward_cached(p, pooled).prob;
}

// L_D = -1/2 [ mean log D(src) + mean log(1 - D(tgt)) ], probabilities
// clamped to [eps, 1-eps].
inline double discriminator_loss(const DiscriminatorParams& p,
                                 const Matrix& src_pooled,
                                 const Matrix& tgt_pooled) {
  if (src_pooled.rows() == 0 || tgt_pooled.rows() == 0)
    throw EmptyPoolError("discriminator loss needs non-empty batches");
  const Vector ps = discriminator_forward(p, src_pooled);
  const Vector pt = discriminator_forward(p, tgt_pooled);
  double src_term = 0.0, tgt_term = 0.0;
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    src_term += std::log(clamp_prob(ps(i), kAdvClamp));
  for (Eigen::Index i = 0; i < pt.size(); ++i)
    tgt_term += std::log(clamp_prob(1.0 - pt(i), kAdvClamp));
  return -0.5 * (src_term / static_cast<double>(ps.size()) +
                 tgt_term / static_cast<double>(pt.size()));
}

// Gradient of discriminator_loss wrt D's parameters (accumulated).
inline void discriminator_loss_backward(const DiscriminatorParams& p,
                                        const Matrix& src_pooled,
                                        const Matrix& tgt_pooled,
                                        DiscriminatorParams& grads) {
  auto cs = detail::disc_forward_cached(p, src_pooled);
  auto ct = detail::disc_forward_cached(p, tgt_pooled);
  // d/dz of -1/2 mean log sigma(z) = -(1-p) / (2 n); of the target term
  // -1/2 mean log(1-sigma(z)) = p / (2 n).
  Vector dzs = ((cs.prob.array() - 1.0) /
                (2.0 * static_cast<double>(cs.prob.size())))
                   .matrix();
  Vector dzt = ct.prob / (2.0 * static_cast<double>(ct.prob.size()));
  detail::disc_backward(p, cs, dzs, grads);
  detail::disc_backward(p, ct, dzt, grads);
}

// Non-saturating generator objective L_Gadv = -mean log D(tgt).
inline double generator_adv_loss(const DiscriminatorParams& p,
                                 const Matrix& tgt_pooled) {
  if (tgt_pooled.rows() == 0)
    throw EmptyPoolError("generator loss needs a non-empty batch");
  const Vector pt = discriminator_forward(p, tgt_pooled);
  double term = 0.0;
  for (Eigen::Index i = 0; i < pt.size(); ++i)
    term += std::log(clamp_prob(pt(i), kAdvClamp));
  return -term / static_cast<double>(pt.size());
}

// Gradient of L_Gadv wrt the pooled target batch; D itself is frozen.
inline Matrix generator_adv_backward(const DiscriminatorParams& p,
                                     const Matrix& tgt_pooled) {
  auto c = detail::disc_forward_cached(p, tgt_pooled);
  Vector dz = ((c.prob.array() - 1.0) /
               static_cast<double>(c.prob.size()))
                  .matrix();
  DiscriminatorParams scratch = DiscriminatorParams::zeros_like(p);
  return detail::disc_backward(p, c, dz, scratch);
}

// soften(p, T): renormalized p^(1/T).
inline RowVector soften_probs(const RowVector& probs, double temperature) {
  RowVector out(probs.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    out(i) = probs(i) <= 0.0 ? 0.0 : std::pow(probs(i), 1.0 / temperature);
    sum += out(i);
  }
  if (sum <= 0.0) {
    out.setConstant(1.0 / static_cast<double>(probs.size()));
    return out;
  }
  return out / sum;
}

struct DistillResult {
  double loss = 0.0;
  Matrix d_logits;  // same shape as student logits
};

// L_KD = T^2 * mean_batch KL( soften(teacher,T) || softmax(student/T) ).
inline DistillResult distillation_loss(const Matrix& teacher_probs,
                                       const Matrix& student_logits,
                                       double temperature) {
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  if (teacher_probs.rows() != student_logits.rows() ||
      teacher_probs.cols() != student_logits.cols())
    throw ShapeError("teacher/student shape mismatch");
  const auto b = student_logits.rows();
  DistillResult out;
  out.d_logits = Matrix::Zero(b, student_logits.cols());
  if (b == 0) return out;
  const double t2 = temperature * temperature;
  double total = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    const RowVector soft_teacher = soften_probs(teacher_probs.row(r), temperature);
    const RowVector soft_student =
        softmax_row(student_logits.row(r) / temperature);
    double kl = 0.0;
    for (Eigen::Index c = 0; c < soft_teacher.size(); ++c) {
      if (soft_teacher(c) <= 0.0) continue;
      kl += soft_teacher(c) * (std::log(soft_teacher(c)) -
                               std::log(clamp_prob(soft_student(c), kAdvClamp)));
    }
    total += t2 * kl;
    // d/dlogits of T^2 * KL = T * (softmax(student/T) - soft_teacher)
    out.d_logits.row(r) = temperature * (soft_student - soft_teacher);
  }
  out.loss = total / static_cast<double>(b);
  out.d_logits /= static_cast<double>(b);
  return out;
}

}  // namespace mtab
