#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtab/core.hpp"
#include "mtab/rng.hpp"

namespace mtab {

// Double precision throughout: gradient checks against central finite
// differences need more headroom than float offers, and the models are desk
// scale anyway.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Named view of one learnable tensor; the unit optimizers and the
// finite-difference harness both walk parameters through this.
struct ParamRef {
  std::string name;
  Matrix* tensor;
};

inline std::size_t param_count(const std::vector<ParamRef>& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.tensor->size());
  return n;
}

inline void fill_normal(Matrix& m, Rng& rng, double stddev) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal(0.0, stddev);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Numerically stable softmax over a row vector.
inline RowVector softmax_row(const RowVector& logits) {
  const double m = logits.maxCoeff();
  RowVector e = (logits.array() - m).exp();
  return e / e.sum();
}

// exact GELU; smooth activations keep finite-difference checks clean
inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

inline double clamp_prob(double p, double eps = 1e-7) {
  return std::min(std::max(p, eps), 1.0 - eps);
}

}  // namespace mtab
