#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mtab/core.hpp"
#include "mtab/rng.hpp"
#include "mtab/tensor.hpp"
#include "mtab/tokenizer.hpp"

namespace mtab {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 128;
  double dropout = 0.1;
  int max_len = 128;

  void validate() const {
    if (vocab_size <= 0 || d_model <= 0 || n_layers <= 0 || n_heads <= 0 ||
        d_ff <= 0 || max_len <= 2)
      throw ConfigError("encoder config dimensions must be positive");
    if (d_model % n_heads != 0)
      throw ConfigError("d_model must be divisible by n_heads");
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("dropout must be in [0, 1)");
  }

  int head_dim() const { return d_model / n_heads; }
};

namespace detail {
inline constexpr double kLnEps = 1e-5;
}

// Post-norm transformer encoder layer parameters.
struct EncoderLayerParams {
  Matrix w_q, w_k, w_v, w_o;          // d_model x d_model
  Matrix b_q, b_k, b_v, b_o;          // 1 x d_model
  Matrix ln1_gamma, ln1_beta;         // 1 x d_model
  Matrix w_ff1, b_ff1;                // d_model x d_ff, 1 x d_ff
  Matrix w_ff2, b_ff2;                // d_ff x d_model, 1 x d_model
  Matrix ln2_gamma, ln2_beta;         // 1 x d_model
};

struct EncoderParams {
  EncoderConfig config;
  Matrix tok_emb;                      // vocab_size x d_model
  Matrix pos_emb;                      // max_len x d_model
  Matrix emb_ln_gamma, emb_ln_beta;    // 1 x d_model
  std::vector<EncoderLayerParams> layers;

  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed,
                            double init_std = 0.02) {
    cfg.validate();
    Rng rng(seed);
    EncoderParams p;
    p.config = cfg;
    p.tok_emb.resize(cfg.vocab_size, cfg.d_model);
    fill_normal(p.tok_emb, rng, init_std);
    p.pos_emb.resize(cfg.max_len, cfg.d_model);
    fill_normal(p.pos_emb, rng, init_std);
    p.emb_ln_gamma = Matrix::Ones(1, cfg.d_model);
    p.emb_ln_beta = Matrix::Zero(1, cfg.d_model);
    p.layers.resize(cfg.n_layers);
    for (auto& l : p.layers) {
      for (Matrix* w : {&l.w_q, &l.w_k, &l.w_v, &l.w_o}) {
        w->resize(cfg.d_model, cfg.d_model);
        fill_normal(*w, rng, init_std);
      }
      for (Matrix* b : {&l.b_q, &l.b_k, &l.b_v, &l.b_o})
        *b = Matrix::Zero(1, cfg.d_model);
      l.ln1_gamma = Matrix::Ones(1, cfg.d_model);
      l.ln1_beta = Matrix::Zero(1, cfg.d_model);
      l.w_ff1.resize(cfg.d_model, cfg.d_ff);
      fill_normal(l.w_ff1, rng, init_std);
      l.b_ff1 = Matrix::Zero(1, cfg.d_ff);
      l.w_ff2.resize(cfg.d_ff, cfg.d_model);
      fill_normal(l.w_ff2, rng, init_std);
      l.b_ff2 = Matrix::Zero(1, cfg.d_model);
      l.ln2_gamma = Matrix::Ones(1, cfg.d_model);
      l.ln2_beta = Matrix::Zero(1, cfg.d_model);
    }
    return p;
  }

  static EncoderParams zeros_like(const EncoderParams& other) {
    EncoderParams z = other;
    for (auto ref : z.param_refs()) ref.tensor->setZero();
    return z;
  }

  std::vector<ParamRef> param_refs() {
    std::vector<ParamRef> refs = {{"tok_emb", &tok_emb},
                                  {"pos_emb", &pos_emb},
                                  {"emb_ln_gamma", &emb_ln_gamma},
                                  {"emb_ln_beta", &emb_ln_beta}};
    for (std::size_t i = 0; i < layers.size(); ++i) {
      auto& l = layers[i];
      const std::string pre = "layer" + std::to_string(i) + ".";
      refs.push_back({pre + "w_q", &l.w_q});
      refs.push_back({pre + "b_q", &l.b_q});
      refs.push_back({pre + "w_k", &l.w_k});
      refs.push_back({pre + "b_k", &l.b_k});
      refs.push_back({pre + "w_v", &l.w_v});
      refs.push_back({pre + "b_v", &l.b_v});
      refs.push_back({pre + "w_o", &l.w_o});
      refs.push_back({pre + "b_o", &l.b_o});
      refs.push_back({pre + "ln1_gamma", &l.ln1_gamma});
      refs.push_back({pre + "ln1_beta", &l.ln1_beta});
      refs.push_back({pre + "w_ff1", &l.w_ff1});
      refs.push_back({pre + "b_ff1", &l.b_ff1});
      refs.push_back({pre + "w_ff2", &l.w_ff2});
      refs.push_back({pre + "b_ff2", &l.b_ff2});
      refs.push_back({pre + "ln2_gamma", &l.ln2_gamma});
      refs.push_back({pre + "ln2_beta", &l.ln2_beta});
    }
    return refs;
  }

  bool same_values(const EncoderParams& other) const {
    auto a = const_cast<EncoderParams*>(this)->param_refs();
    auto b = const_cast<EncoderParams&>(other).param_refs();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (*a[i].tensor != *b[i].tensor) return false;
    return true;
  }
};

// A mini-batch with padding stripped: token rows of all sequences are
// concatenated, example e occupying rows [offsets[e], offsets[e+1]).
// Attention never crosses example boundaries, so computing only real rows is
// exact (padding invariance).
struct PackedBatch {
  std::vector<int> ids;
  std::vector<int> positions;
  std::vector<int> offsets;  // size B+1

  int examples() const { return static_cast<int>(offsets.size()) - 1; }
  int rows() const { return static_cast<int>(ids.size()); }
  int length(int e) const { return offsets[e + 1] - offsets[e]; }

  static PackedBatch pack(const std::vector<Tokenizer::Encoded>& encoded) {
    PackedBatch b;
    b.offsets.push_back(0);
    for (const auto& e : encoded) {
      const int len = e.real_len();
      for (int p = 0; p < len; ++p) {
        b.ids.push_back(e.ids[p]);
        b.positions.push_back(p);
      }
      b.offsets.push_back(b.rows());
    }
    return b;
  }
};

// Everything the backward pass needs, cached layer by layer.
struct EncoderLayerCache {
  Matrix x_in;
  Matrix q, k, v;
  std::vector<std::vector<Matrix>> attn;  // [example][head] -> L x L probs
  Matrix ctx;
  Matrix attn_dropout;
  Matrix ln1_xhat;
  Vector ln1_inv_std;
  Matrix y;
  Matrix ffn_pre;
  Matrix ffn_act;
  Matrix ffn_dropout;
  Matrix ln2_xhat;
  Vector ln2_inv_std;
  Matrix x_out;
};

struct EncoderForwardCache {
  PackedBatch batch;
  Matrix emb_sum;
  Matrix emb_ln_xhat;
  Vector emb_inv_std;
  Matrix emb_dropout;
  Matrix x0;
  std::vector<EncoderLayerCache> layers;
  Matrix pooled;  // B x d_model, CLS rows of the final states

  const Matrix& states() const { return layers.back().x_out; }
};

namespace detail {

inline void layer_norm_forward(const Matrix& x, const Matrix& gamma,
                               const Matrix& beta, Matrix& out, Matrix& xhat,
                               Vector& inv_std) {
  const auto n = x.rows();
  const double d = static_cast<double>(x.cols());
  out.resize(x.rows(), x.cols());
  xhat.resize(x.rows(), x.cols());
  inv_std.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().sum() / d;
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std(r) = is;
    xhat.row(r) = (x.row(r).array() - mu) * is;
    out.row(r) =
        xhat.row(r).cwiseProduct(gamma.row(0)) + beta.row(0);
  }
}

inline void layer_norm_backward(const Matrix& d_out, const Matrix& xhat,
                                const Vector& inv_std, const Matrix& gamma,
                                Matrix& d_in, Matrix& d_gamma,
                                Matrix& d_beta) {
  const auto n = d_out.rows();
  const double d = static_cast<double>(d_out.cols());
  d_in.resize(d_out.rows(), d_out.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    d_beta.row(0) += d_out.row(r);
    d_gamma.row(0) += d_out.row(r).cwiseProduct(xhat.row(r));
    const RowVector dxhat = d_out.row(r).cwiseProduct(gamma.row(0));
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
    d_in.row(r) =
        ((dxhat.array() - m1) - xhat.row(r).array() * m2) * inv_std(r);
  }
}

// Inverted-scale dropout mask; entries are 0 or 1/(1-p).
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                           Rng& rng) {
  Matrix m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i)
      m(i, j) = rng.uniform() < p ? 0.0 : scale;
  return m;
}

}  // namespace detail

// Forward over a packed batch. If `dropout_rng` is null the pass is
// deterministic eval mode regardless of config.dropout.
inline EncoderForwardCache encoder_forward_packed(const EncoderParams& p,
                                                  PackedBatch batch,
                                                  Rng* dropout_rng = nullptr) {
  const EncoderConfig& cfg = p.config;
  const int n = batch.rows();
  const int b = batch.examples();
  const int hd = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const bool use_dropout = dropout_rng != nullptr && cfg.dropout > 0.0;

  EncoderForwardCache cache;
  cache.batch = std::move(batch);
  const PackedBatch& pb = cache.batch;

  cache.emb_sum.resize(n, cfg.d_model);
  for (int r = 0; r < n; ++r) {
    const int id = pb.ids[r];
    if (id < 0 || id >= cfg.vocab_size)
      throw ShapeError("token id " + std::to_string(id) +
                       " outside vocabulary of size " +
                       std::to_string(cfg.vocab_size));
    if (pb.positions[r] >= cfg.max_len)
      throw ShapeError("position exceeds max_len");
    cache.emb_sum.row(r) = p.tok_emb.row(id) + p.pos_emb.row(pb.positions[r]);
  }
  Matrix x;
  detail::layer_norm_forward(cache.emb_sum, p.emb_ln_gamma, p.emb_ln_beta, x,
                             cache.emb_ln_xhat, cache.emb_inv_std);
  if (use_dropout) {
    cache.emb_dropout =
        detail::dropout_mask(n, cfg.d_model, cfg.dropout, *dropout_rng);
    x = x.cwiseProduct(cache.emb_dropout);
  }
  cache.x0 = x;

  cache.layers.resize(cfg.n_layers);
  for (int li = 0; li < cfg.n_layers; ++li) {
    const auto& lp = p.layers[li];
    auto& lc = cache.layers[li];
    lc.x_in = x;

    lc.q = (x * lp.w_q).rowwise() + lp.b_q.row(0);
    lc.k = (x * lp.w_k).rowwise() + lp.b_k.row(0);
    lc.v = (x * lp.w_v).rowwise() + lp.b_v.row(0);

    lc.ctx.resize(n, cfg.d_model);
    lc.attn.resize(b);
    for (int e = 0; e < b; ++e) {
      const int o = pb.offsets[e];
      const int len = pb.length(e);
      lc.attn[e].resize(cfg.n_heads);
      for (int h = 0; h < cfg.n_heads; ++h) {
        const auto qh = lc.q.block(o, h * hd, len, hd);
        const auto kh = lc.k.block(o, h * hd, len, hd);
        const auto vh = lc.v.block(o, h * hd, len, hd);
        Matrix s = qh * kh.transpose() * scale;
        Matrix& probs = lc.attn[e][h];
        probs.resize(len, len);
        for (int r = 0; r < len; ++r)
          probs.row(r) = softmax_row(s.row(r));
        lc.ctx.block(o, h * hd, len, hd) = probs * vh;
      }
    }

    Matrix attn_out = (lc.ctx * lp.w_o).rowwise() + lp.b_o.row(0);
    if (use_dropout) {
      lc.attn_dropout =
          detail::dropout_mask(n, cfg.d_model, cfg.dropout, *dropout_rng);
      attn_out = attn_out.cwiseProduct(lc.attn_dropout);
    }
    Matrix r1 = lc.x_in + attn_out;
    detail::layer_norm_forward(r1, lp.ln1_gamma, lp.ln1_beta, lc.y,
                               lc.ln1_xhat, lc.ln1_inv_std);

    lc.ffn_pre = (lc.y * lp.w_ff1).rowwise() + lp.b_ff1.row(0);
    lc.ffn_act = lc.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix ffn_out = (lc.ffn_act * lp.w_ff2).rowwise() + lp.b_ff2.row(0);
    if (use_dropout) {
      lc.ffn_dropout =
          detail::dropout_mask(n, cfg.d_model, cfg.dropout, *dropout_rng);
      ffn_out = ffn_out.cwiseProduct(lc.ffn_dropout);
    }
    Matrix r2 = lc.y + ffn_out;
    detail::layer_norm_forward(r2, lp.ln2_gamma, lp.ln2_beta, lc.x_out,
                               lc.ln2_xhat, lc.ln2_inv_std);
    x = lc.x_out;
  }

  cache.pooled.resize(b, cfg.d_model);
  for (int e = 0; e < b; ++e)
    cache.pooled.row(e) = x.row(pb.offsets[e]);
  return cache;
}

// Backward from a gradient on the pooled (CLS) outputs. Accumulates into
// `grads`, which must be shaped like `p` (see zeros_like).
inline void encoder_backward_pooled(const EncoderParams& p,
                                    const EncoderForwardCache& cache,
                                    const Matrix& d_pooled,
                                    EncoderParams& grads) {
  const EncoderConfig& cfg = p.config;
  const PackedBatch& pb = cache.batch;
  const int n = pb.rows();
  const int b = pb.examples();
  const int hd = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  if (d_pooled.rows() != b || d_pooled.cols() != cfg.d_model)
    throw ShapeError("pooled gradient shape mismatch");

  Matrix dx = Matrix::Zero(n, cfg.d_model);
  for (int e = 0; e < b; ++e)
    dx.row(pb.offsets[e]) = d_pooled.row(e);

  for (int li = cfg.n_layers - 1; li >= 0; --li) {
    const auto& lp = p.layers[li];
    const auto& lc = cache.layers[li];
    auto& lg = grads.layers[li];

    // LN2
    Matrix dr2;
    detail::layer_norm_backward(dx, lc.ln2_xhat, lc.ln2_inv_std, lp.ln2_gamma,
                                dr2, lg.ln2_gamma, lg.ln2_beta);
    // r2 = y + dropout(ffn_out)
    Matrix d_ffn_out = dr2;
    if (lc.ffn_dropout.size() > 0)
      d_ffn_out = d_ffn_out.cwiseProduct(lc.ffn_dropout);
    Matrix dy = dr2;

    lg.w_ff2 += lc.ffn_act.transpose() * d_ffn_out;
    lg.b_ff2.row(0) += d_ffn_out.colwise().sum();
    Matrix d_act = d_ffn_out * lp.w_ff2.transpose();
    Matrix d_pre =
        d_act.cwiseProduct(lc.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    lg.w_ff1 += lc.y.transpose() * d_pre;
    lg.b_ff1.row(0) += d_pre.colwise().sum();
    dy += d_pre * lp.w_ff1.transpose();

    // LN1
    Matrix dr1;
    detail::layer_norm_backward(dy, lc.ln1_xhat, lc.ln1_inv_std, lp.ln1_gamma,
                                dr1, lg.ln1_gamma, lg.ln1_beta);
    // r1 = x_in + dropout(attn_out)
    Matrix d_attn_out = dr1;
    if (lc.attn_dropout.size() > 0)
      d_attn_out = d_attn_out.cwiseProduct(lc.attn_dropout);
    Matrix dx_in = dr1;

    lg.w_o += lc.ctx.transpose() * d_attn_out;
    lg.b_o.row(0) += d_attn_out.colwise().sum();
    Matrix d_ctx = d_attn_out * lp.w_o.transpose();

    Matrix dq = Matrix::Zero(n, cfg.d_model);
    Matrix dk = Matrix::Zero(n, cfg.d_model);
    Matrix dv = Matrix::Zero(n, cfg.d_model);
    for (int e = 0; e < b; ++e) {
      const int o = pb.offsets[e];
      const int len = pb.length(e);
      for (int h = 0; h < cfg.n_heads; ++h) {
        const Matrix& probs = lc.attn[e][h];
        const auto qh = lc.q.block(o, h * hd, len, hd);
        const auto kh = lc.k.block(o, h * hd, len, hd);
        const auto vh = lc.v.block(o, h * hd, len, hd);
        const auto d_ctx_h = d_ctx.block(o, h * hd, len, hd);

        Matrix d_probs = d_ctx_h * vh.transpose();
        dv.block(o, h * hd, len, hd) += probs.transpose() * d_ctx_h;
        // softmax rows: ds = p .* (dp - rowsum(dp .* p))
        Matrix ds(len, len);
        for (int r = 0; r < len; ++r) {
          const double dot = d_probs.row(r).dot(probs.row(r));
          ds.row(r) = probs.row(r).cwiseProduct(
              (d_probs.row(r).array() - dot).matrix());
        }
        dq.block(o, h * hd, len, hd) += ds * kh * scale;
        dk.block(o, h * hd, len, hd) += ds.transpose() * qh * scale;
      }
    }

    lg.w_q += lc.x_in.transpose() * dq;
    lg.b_q.row(0) += dq.colwise().sum();
    lg.w_k += lc.x_in.transpose() * dk;
    lg.b_k.row(0) += dk.colwise().sum();
    lg.w_v += lc.x_in.transpose() * dv;
    lg.b_v.row(0) += dv.colwise().sum();
    dx_in += dq * lp.w_q.transpose() + dk * lp.w_k.transpose() +
             dv * lp.w_v.transpose();
    dx = std::move(dx_in);
  }

  if (cache.emb_dropout.size() > 0) dx = dx.cwiseProduct(cache.emb_dropout);
  Matrix d_emb_sum;
  detail::layer_norm_backward(dx, cache.emb_ln_xhat, cache.emb_inv_std,
                              p.emb_ln_gamma, d_emb_sum, grads.emb_ln_gamma,
                              grads.emb_ln_beta);
  for (int r = 0; r < n; ++r) {
    grads.tok_emb.row(pb.ids[r]) += d_emb_sum.row(r);
    grads.pos_emb.row(pb.positions[r]) += d_emb_sum.row(r);
  }
}

struct EncoderOutput {
  Matrix states;  // max_len x d_model
  Vector pooled;  // d_model
};

// Single-sequence forward over the padded encoding, attention restricted to
// mask=1 key positions. Reference route for the packed implementation; eval
// mode only.
inline EncoderOutput encoder_forward(const EncoderParams& p,
                                     const std::vector<int>& ids,
                                     const std::vector<int>& mask) {
  const EncoderConfig& cfg = p.config;
  if (static_cast<int>(ids.size()) > cfg.max_len ||
      mask.size() != ids.size())
    throw ShapeError("encode length exceeds encoder max_len");
  const int n = static_cast<int>(ids.size());
  const int hd = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  Matrix x(n, cfg.d_model);
  for (int r = 0; r < n; ++r) {
    if (ids[r] < 0 || ids[r] >= cfg.vocab_size)
      throw ShapeError("token id outside vocabulary");
    x.row(r) = p.tok_emb.row(ids[r]) + p.pos_emb.row(r);
  }
  Matrix xhat;
  Vector inv_std;
  Matrix normed;
  detail::layer_norm_forward(x, p.emb_ln_gamma, p.emb_ln_beta, normed, xhat,
                             inv_std);
  x = normed;

  for (const auto& lp : p.layers) {
    Matrix q = (x * lp.w_q).rowwise() + lp.b_q.row(0);
    Matrix k = (x * lp.w_k).rowwise() + lp.b_k.row(0);
    Matrix v = (x * lp.w_v).rowwise() + lp.b_v.row(0);
    Matrix ctx(n, cfg.d_model);
    for (int h = 0; h < cfg.n_heads; ++h) {
      Matrix s = q.middleCols(h * hd, hd) *
                 k.middleCols(h * hd, hd).transpose() * scale;
      for (int r = 0; r < n; ++r) {
        RowVector row = s.row(r);
        for (int c = 0; c < n; ++c)
          if (mask[c] == 0) row(c) = -std::numeric_limits<double>::infinity();
        s.row(r) = softmax_row(row);
      }
      ctx.middleCols(h * hd, hd) = s * v.middleCols(h * hd, hd);
    }
    Matrix attn_out = (ctx * lp.w_o).rowwise() + lp.b_o.row(0);
    Matrix r1 = x + attn_out;
    detail::layer_norm_forward(r1, lp.ln1_gamma, lp.ln1_beta, normed, xhat,
                               inv_std);
    Matrix y = normed;
    Matrix pre = (y * lp.w_ff1).rowwise() + lp.b_ff1.row(0);
    Matrix act = pre.unaryExpr([](double val) { return gelu(val); });
    Matrix ffn_out = (act * lp.w_ff2).rowwise() + lp.b_ff2.row(0);
    Matrix r2 = y + ffn_out;
    detail::layer_norm_forward(r2, lp.ln2_gamma, lp.ln2_beta, normed, xhat,
                               inv_std);
    x = normed;
  }
  EncoderOutput out;
  out.states = x;
  out.pooled = x.row(0).transpose();
  return out;
}

}  // namespace mtab
