#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mtab/core.hpp"
#include "mtab/tensor.hpp"

namespace mtab {

enum class OptimizerKind { Adam, AdamW };

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "adamw") return OptimizerKind::AdamW;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or adamw)");
}

inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "adamw";
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdamW;
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled; ignored under plain Adam
};

// Adam / AdamW over a fixed list of parameter views. Gradients are passed as
// a parallel list in the same order (see *_refs() on the param structs).
class Optimizer {
 public:
  Optimizer(std::vector<ParamRef> params, OptimizerConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.push_back(Matrix::Zero(p.tensor->rows(), p.tensor->cols()));
      v_.push_back(Matrix::Zero(p.tensor->rows(), p.tensor->cols()));
    }
  }

  void step(const std::vector<ParamRef>& grads) {
    if (grads.size() != params_.size())
      throw ShapeError("gradient list does not match optimizer parameters");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Matrix& theta = *params_[i].tensor;
      const Matrix& g = *grads[i].tensor;
      if (g.rows() != theta.rows() || g.cols() != theta.cols())
        throw ShapeError("gradient shape mismatch for " + params_[i].name);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      const Matrix m_hat = m_[i] / bc1;
      const Matrix v_hat = v_[i] / bc2;
      if (cfg_.kind == OptimizerKind::AdamW && cfg_.weight_decay > 0.0)
        theta -= cfg_.lr * cfg_.weight_decay * theta;
      theta -= cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps))
                             .matrix();
    }
  }

  long steps_taken() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  std::vector<ParamRef> params_;
  OptimizerConfig cfg_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

}  // namespace mtab
