#pragma once

#include <cmath>
#include <vector>

#include "mtab/core.hpp"
#include "mtab/labels.hpp"
#include "mtab/rng.hpp"
#include "mtab/tensor.hpp"

namespace mtab {

// Linear softmax head over the pooled encoder output.
struct ClassifierParams {
  Matrix w;  // kNumClasses x d_model
  Matrix b;  // 1 x kNumClasses

  static ClassifierParams init(int d_model, std::uint64_t seed,
                               double init_std = 0.02) {
    if (d_model <= 0) throw ConfigError("classifier d_model must be positive");
    Rng rng(seed);
    ClassifierParams p;
    p.w.resize(kNumClasses, d_model);
    fill_normal(p.w, rng, init_std);
    p.b = Matrix::Zero(1, kNumClasses);
    return p;
  }

  static ClassifierParams zeros_like(const ClassifierParams& other) {
    ClassifierParams z = other;
    z.w.setZero();
    z.b.setZero();
    return z;
  }

  std::vector<ParamRef> param_refs() {
    return {{"cls.w", &w}, {"cls.b", &b}};
  }

  bool same_values(const ClassifierParams& other) const {
    return w == other.w && b == other.b;
  }
};

inline Matrix classifier_logits(const ClassifierParams& p,
                                const Matrix& pooled) {
  if (pooled.cols() != p.w.cols())
    throw ShapeError("pooled width does not match classifier weights");
  return (pooled * p.w.transpose()).rowwise() + p.b.row(0);
}

inline Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r)
    probs.row(r) = softmax_row(logits.row(r));
  return probs;
}

struct CrossEntropyResult {
  double loss = 0.0;   // mean over the batch
  Matrix d_logits;     // same shape as logits
  Matrix probs;
};

// Mean negative log-likelihood with the usual (softmax - onehot)/B gradient.
inline CrossEntropyResult cross_entropy(const Matrix& logits,
                                        const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows())
    throw ShapeError("label count does not match logits rows");
  const auto b = logits.rows();
  CrossEntropyResult out;
  out.probs = softmax_rows(logits);
  out.d_logits = out.probs;
  double total = 0.0;
  for (Eigen::Index r = 0; r < b; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= static_cast<int>(logits.cols()))
      throw ShapeError("label code out of range");
    total += -std::log(clamp_prob(out.probs(r, y)));
    out.d_logits(r, y) -= 1.0;
  }
  out.d_logits /= static_cast<double>(b);
  out.loss = total / static_cast<double>(b);
  return out;
}

struct ClassifierGradResult {
  Matrix d_pooled;  // B x d_model
};

// Accumulates dW/db into `grads` and returns the gradient wrt pooled inputs.
inline ClassifierGradResult classifier_backward(const ClassifierParams& p,
                                                const Matrix& pooled,
                                                const Matrix& d_logits,
                                                ClassifierParams& grads) {
  grads.w += d_logits.transpose() * pooled;
  grads.b.row(0) += d_logits.colwise().sum();
  return {d_logits * p.w};
}

// Argmax with ties resolved toward the lowest label code.
inline StanceLabel predict_row(const RowVector& probs) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(probs.size()); ++c)
    if (probs(c) > probs(best)) best = c;
  return label_from_code(best);
}

}  // namespace mtab
