// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace headgen {

void ModelConfig::Validate() const {
  if (n_layers < 1) Fail(ErrorKind::kInvalidArgument, "n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_model % n_heads != 0) {
    Fail(ErrorKind::kInvalidArgument, "n_heads must divide d_model");
  }
  if (context < 1) Fail(ErrorKind::kInvalidArgument, "context must be >= 1");
  if (vocab_size < 1) Fail(ErrorKind::kInvalidArgument, "vocab size must be >= 1");
}

ParamLayout::ParamLayout(const ModelConfig& c) {
  c.Validate();
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  Add("token_embedding", static_cast<std::size_t>(c.vocab_size), d, true);
  Add("position_embedding", static_cast<std::size_t>(c.context), d, true);
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    Block b{};
    b.ln1_g = Add(p + "ln1.gain", 1, d, false);
    b.ln1_b = Add(p + "ln1.bias", 1, d, false);
    b.qkv_w = Add(p + "attn.qkv.weight", d, 3 * d, true);
    b.qkv_b = Add(p + "attn.qkv.bias", 1, 3 * d, false);
    b.proj_w = Add(p + "attn.proj.weight", d, d, true, true);
    b.proj_b = Add(p + "attn.proj.bias", 1, d, false);
    b.ln2_g = Add(p + "ln2.gain", 1, d, false);
    b.ln2_b = Add(p + "ln2.bias", 1, d, false);
    b.fc_w = Add(p + "mlp.fc.weight", d, 4 * d, true);
    b.fc_b = Add(p + "mlp.fc.bias", 1, 4 * d, false);
    b.out_w = Add(p + "mlp.proj.weight", 4 * d, d, true, true);
    b.out_b = Add(p + "mlp.proj.bias", 1, d, false);
    blocks_.push_back(b);
  }
  final_g_ = Add("final_ln.gain", 1, d, false);
  final_b_ = Add("final_ln.bias", 1, d, false);
}

std::size_t ParamLayout::Add(std::string name, std::size_t rows,
                             std::size_t cols, bool decay, bool residual) {
  TensorInfo t;
  t.name = std::move(name);
  t.offset = total_;
  t.rows = rows;
  t.cols = cols;
  t.decay = decay;
  t.residual_proj = residual;
  total_ += rows * cols;
  tensors_.push_back(std::move(t));
  return tensors_.size() - 1;
}

const TensorInfo& ParamLayout::Find(std::string_view name) const {
  for (const TensorInfo& t : tensors_) {
    if (t.name == name) return t;
  }
  Fail(ErrorKind::kInvalidArgument, "no tensor named " + std::string(name));
}

std::vector<std::uint8_t> ParamLayout::DecayMask() const {
  std::vector<std::uint8_t> mask(total_, 0);
  for (const TensorInfo& t : tensors_) {
    if (t.decay) {
      std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(t.offset),
                  t.size(), std::uint8_t{1});
    }
  }
  return mask;
}

namespace {

constexpr double kLnEps = 1e-5;

using Block = ParamLayout::Block;

template <typename T>
using MatT = typename Model<T>::Mat;
template <typename T>
using RowT = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using ConstMap = Eigen::Map<const MatT<T>>;
template <typename T>
using MutMap = Eigen::Map<MatT<T>>;
template <typename T>
using ConstRow = Eigen::Map<const RowT<T>>;
template <typename T>
using MutRow = Eigen::Map<RowT<T>>;

template <typename T>
ConstMap<T> View(const AlignedVector<T>& p, const TensorInfo& t) {
  return ConstMap<T>(p.data() + t.offset, static_cast<Eigen::Index>(t.rows),
                     static_cast<Eigen::Index>(t.cols));
}
template <typename T>
ConstRow<T> RowView(const AlignedVector<T>& p, const TensorInfo& t) {
  return ConstRow<T>(p.data() + t.offset, static_cast<Eigen::Index>(t.size()));
}
template <typename T>
MutMap<T> GradView(T* g, const TensorInfo& t) {
  return MutMap<T>(g + t.offset, static_cast<Eigen::Index>(t.rows),
                   static_cast<Eigen::Index>(t.cols));
}
template <typename T>
MutRow<T> GradRow(T* g, const TensorInfo& t) {
  return MutRow<T>(g + t.offset, static_cast<Eigen::Index>(t.size()));
}

template <typename T>
struct LnCache {
  MatT<T> xhat;
  std::vector<T> rstd;
};

template <typename T>
void LayerNorm(const MatT<T>& x, const ConstRow<T>& gain,
               const ConstRow<T>& bias, MatT<T>* y, LnCache<T>* cache) {
  const Eigen::Index rows = x.rows();
  const Eigen::Index d = x.cols();
  y->resize(rows, d);
  if (cache != nullptr) {
    cache->xhat.resize(rows, d);
    cache->rstd.resize(static_cast<std::size_t>(rows));
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mean = x.row(r).mean();
    RowT<T> centered = x.row(r).array() - mean;
    const T var = centered.squaredNorm() / static_cast<T>(d);
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLnEps));
    centered *= rstd;
    y->row(r) = centered.cwiseProduct(gain) + bias;
    if (cache != nullptr) {
      cache->xhat.row(r) = centered;
      cache->rstd[static_cast<std::size_t>(r)] = rstd;
    }
  }
}

// Adds the input gradient to *dx and parameter gradients to dgain/dbias.
template <typename T>
void LayerNormBackward(const MatT<T>& dy, const ConstRow<T>& gain,
                       const LnCache<T>& cache, MatT<T>* dx, MutRow<T> dgain,
                       MutRow<T> dbias) {
  const Eigen::Index d = dy.cols();
  dgain += dy.cwiseProduct(cache.xhat).colwise().sum();
  dbias += dy.colwise().sum();
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowT<T> dxhat = dy.row(r).cwiseProduct(gain);
    const T sum = dxhat.sum();
    const T dot = dxhat.dot(cache.xhat.row(r));
    const T scale = cache.rstd[static_cast<std::size_t>(r)] / static_cast<T>(d);
    dx->row(r).array() +=
        scale * (static_cast<T>(d) * dxhat.array() - sum -
                 cache.xhat.row(r).array() * dot);
  }
}

template <typename T>
T Gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * static_cast<T>(1.0 / std::numbers::sqrt2)));
}

template <typename T>
T GeluGrad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * static_cast<T>(1.0 / std::numbers::sqrt2)));
  const T pdf = std::exp(T(-0.5) * x * x) * static_cast<T>(std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

template <typename T>
struct BlockCache {
  MatT<T> x_in, h1, qkv, att, x_mid, h2, fc_pre, fc_act;
  LnCache<T> ln1, ln2;
  std::vector<MatT<T>> probs;  // per head, L x L lower triangular
};

}  // namespace

template <typename T>
Model<T>::Model(const ModelConfig& config)
    : config_(config), layout_(config), params_(layout_.total(), T(0)) {}

template <typename T>
Model<T> Model<T>::Init(const ModelConfig& config) {
  Model<T> m(config);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> base(0.0, 0.02);
  std::normal_distribution<double> residual(0.0, config.residual_init_std());
  for (const TensorInfo& t : m.layout_.tensors()) {
    T* p = m.params_.data() + t.offset;
    const bool is_gain = t.name.ends_with(".gain");
    const bool is_bias = t.name.ends_with(".bias");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (is_gain) {
        p[i] = T(1);
      } else if (is_bias) {
        p[i] = T(0);
      } else if (t.residual_proj) {
        p[i] = static_cast<T>(residual(rng));
      } else {
        p[i] = static_cast<T>(base(rng));
      }
    }
  }
  return m;
}

template <typename T>
void Model<T>::CheckTokens(std::span<const TokenId> tokens,
                           std::size_t offset) const {
  if (tokens.empty()) Fail(ErrorKind::kInvalidArgument, "empty token sequence");
  if (offset + tokens.size() > static_cast<std::size_t>(config_.context)) {
    Fail(ErrorKind::kInvalidArgument,
         "sequence of " + std::to_string(offset + tokens.size()) +
             " tokens exceeds the context of " +
             std::to_string(config_.context));
  }
  for (TokenId id : tokens) {
    if (id < 0 || id >= config_.vocab_size) {
      Fail(ErrorKind::kInvalidArgument,
           "token id " + std::to_string(id) + " outside the vocabulary");
    }
  }
}

template <typename T>
typename Model<T>::KvPtr Model<T>::Extend(const KvPtr& parent,
                                          std::span<const TokenId> tokens,
                                          Mat* logits_out,
                                          bool all_rows) const {
  const int start = parent ? parent->end() : 0;
  CheckTokens(tokens, static_cast<std::size_t>(start));
  const Eigen::Index n = static_cast<Eigen::Index>(tokens.size());
  const Eigen::Index d = config_.d_model;
  const Eigen::Index heads = config_.n_heads;
  const Eigen::Index dh = d / heads;
  const Eigen::Index m = start;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  std::vector<const KvNode<T>*> chain;
  for (const KvNode<T>* p = parent.get(); p != nullptr; p = p->parent.get()) {
    chain.push_back(p);
  }
  std::reverse(chain.begin(), chain.end());

  auto node = std::make_shared<KvNode<T>>();
  node->parent = parent;
  node->start = start;
  node->length = static_cast<int>(n);

  const auto& P = params_;
  const auto wte = View(P, layout_.tensor(layout_.token_embedding()));
  const auto wpe = View(P, layout_.tensor(layout_.position_embedding()));
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = wte.row(tokens[i]) + wpe.row(m + i);
  }

  Mat h, qkv, keys(m + n, d), vals(m + n, d), att(n, d);
  RowT<T> scores;
  for (int l = 0; l < config_.n_layers; ++l) {
    const Block& b = layout_.block(l);
    LayerNorm<T>(x, RowView(P, layout_.tensor(b.ln1_g)),
                 RowView(P, layout_.tensor(b.ln1_b)), &h, nullptr);
    qkv = h * View(P, layout_.tensor(b.qkv_w));
    qkv.rowwise() += RowView(P, layout_.tensor(b.qkv_b));

    Eigen::Index row = 0;
    for (const KvNode<T>* c : chain) {
      keys.middleRows(row, c->length) = c->keys[l];
      vals.middleRows(row, c->length) = c->values[l];
      row += c->length;
    }
    keys.bottomRows(n) = qkv.middleCols(d, d);
    vals.bottomRows(n) = qkv.rightCols(d);
    node->keys.push_back(qkv.middleCols(d, d));
    node->values.push_back(qkv.rightCols(d));

    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index visible = m + i + 1;
        scores = (keys.block(0, hd * dh, visible, dh) *
                  qkv.row(i).segment(hd * dh, dh).transpose())
                     .transpose() *
                 scale;
        const T mx = scores.maxCoeff();
        scores = (scores.array() - mx).exp();
        scores /= scores.sum();
        att.row(i).segment(hd * dh, dh) =
            scores * vals.block(0, hd * dh, visible, dh);
      }
    }
    x += att * View(P, layout_.tensor(b.proj_w));
    x.rowwise() += RowView(P, layout_.tensor(b.proj_b));

    LayerNorm<T>(x, RowView(P, layout_.tensor(b.ln2_g)),
                 RowView(P, layout_.tensor(b.ln2_b)), &h, nullptr);
    Mat fc = h * View(P, layout_.tensor(b.fc_w));
    fc.rowwise() += RowView(P, layout_.tensor(b.fc_b));
    fc = fc.unaryExpr([](T v) { return Gelu(v); });
    x += fc * View(P, layout_.tensor(b.out_w));
    x.rowwise() += RowView(P, layout_.tensor(b.out_b));
  }

  if (logits_out != nullptr) {
    Mat hf;
    LayerNorm<T>(x, RowView(P, layout_.tensor(layout_.final_gain())),
                 RowView(P, layout_.tensor(layout_.final_bias())), &hf,
                 nullptr);
    if (all_rows) {
      *logits_out = hf * wte.transpose();
    } else {
      *logits_out = hf.bottomRows(1) * wte.transpose();
    }
  }
  return node;
}

template <typename T>
typename Model<T>::Mat Model<T>::Forward(std::span<const TokenId> tokens) const {
  Mat logits;
  Extend(nullptr, tokens, &logits, /*all_rows=*/true);
  return logits;
}

template <typename T>
typename Model<T>::NllSum Model<T>::Accumulate(
    std::span<const TokenId> tokens, std::span<const std::uint8_t> mask,
    T grad_scale, T* grads_out) const {
  CheckTokens(tokens, 0);
  // The backward pass writes into aligned scratch, then adds to the caller.
  Eigen::Matrix<T, Eigen::Dynamic, 1> scratch;
  T* grads = nullptr;
  if (grads_out != nullptr) {
    scratch.setZero(static_cast<Eigen::Index>(params_.size()));
    grads = scratch.data();
  }
  if (mask.size() + 1 != tokens.size()) {
    Fail(ErrorKind::kInvalidArgument,
         "loss mask must be one shorter than the token sequence");
  }
  NllSum result;
  std::vector<Eigen::Index> targets;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (mask[t]) targets.push_back(static_cast<Eigen::Index>(t));
  }
  if (targets.empty()) return result;

  const Eigen::Index L = static_cast<Eigen::Index>(tokens.size());
  const Eigen::Index d = config_.d_model;
  const Eigen::Index heads = config_.n_heads;
  const Eigen::Index dh = d / heads;
  const Eigen::Index V = config_.vocab_size;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const auto& P = params_;
  const auto wte = View(P, layout_.tensor(layout_.token_embedding()));
  const auto wpe = View(P, layout_.tensor(layout_.position_embedding()));

  // Forward with caches.
  std::vector<BlockCache<T>> cache(static_cast<std::size_t>(config_.n_layers));
  Mat x(L, d);
  for (Eigen::Index t = 0; t < L; ++t) x.row(t) = wte.row(tokens[t]) + wpe.row(t);

  for (int l = 0; l < config_.n_layers; ++l) {
    const Block& b = layout_.block(l);
    BlockCache<T>& c = cache[static_cast<std::size_t>(l)];
    c.x_in = x;
    LayerNorm<T>(x, RowView(P, layout_.tensor(b.ln1_g)),
                 RowView(P, layout_.tensor(b.ln1_b)), &c.h1, &c.ln1);
    c.qkv = c.h1 * View(P, layout_.tensor(b.qkv_w));
    c.qkv.rowwise() += RowView(P, layout_.tensor(b.qkv_b));
    c.att.resize(L, d);
    c.probs.resize(static_cast<std::size_t>(heads));
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const auto q = c.qkv.middleCols(hd * dh, dh);
      const auto k = c.qkv.middleCols(d + hd * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + hd * dh, dh);
      Mat& pr = c.probs[static_cast<std::size_t>(hd)];
      pr.noalias() = (q * k.transpose()) * scale;
      for (Eigen::Index i = 0; i < L; ++i) {
        auto row = pr.row(i).head(i + 1);
        const T mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
        pr.row(i).tail(L - i - 1).setZero();
      }
      c.att.middleCols(hd * dh, dh).noalias() =
          pr.template triangularView<Eigen::Lower>() * v;
    }
    x += c.att * View(P, layout_.tensor(b.proj_w));
    x.rowwise() += RowView(P, layout_.tensor(b.proj_b));
    c.x_mid = x;
    LayerNorm<T>(x, RowView(P, layout_.tensor(b.ln2_g)),
                 RowView(P, layout_.tensor(b.ln2_b)), &c.h2, &c.ln2);
    c.fc_pre = c.h2 * View(P, layout_.tensor(b.fc_w));
    c.fc_pre.rowwise() += RowView(P, layout_.tensor(b.fc_b));
    c.fc_act = c.fc_pre.unaryExpr([](T v) { return Gelu(v); });
    x += c.fc_act * View(P, layout_.tensor(b.out_w));
    x.rowwise() += RowView(P, layout_.tensor(b.out_b));
  }
  Mat hf;
  LnCache<T> lnf;
  LayerNorm<T>(x, RowView(P, layout_.tensor(layout_.final_gain())),
               RowView(P, layout_.tensor(layout_.final_bias())), &hf, &lnf);

  // Logits only for rows that carry a target.
  const Eigen::Index S = static_cast<Eigen::Index>(targets.size());
  Mat hsel(S, d);
  for (Eigen::Index s = 0; s < S; ++s) hsel.row(s) = hf.row(targets[s]);
  Mat logits = hsel * wte.transpose();
  for (Eigen::Index s = 0; s < S; ++s) {
    auto row = logits.row(s);
    const T mx = row.maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < V; ++j) {
      sum += std::exp(static_cast<double>(row(j) - mx));
    }
    const double lse = static_cast<double>(mx) + std::log(sum);
    const TokenId target = tokens[static_cast<std::size_t>(targets[s]) + 1];
    result.nll += lse - static_cast<double>(row(target));
    if (grads != nullptr) {
      for (Eigen::Index j = 0; j < V; ++j) {
        row(j) = static_cast<T>(std::exp(static_cast<double>(row(j)) - lse));
      }
      row(target) -= T(1);
      row *= grad_scale;
    }
  }
  result.count = targets.size();
  if (grads == nullptr) return result;

  // Backward. `logits` now holds dLoss/dlogits.
  auto dwte = GradView(grads, layout_.tensor(layout_.token_embedding()));
  auto dwpe = GradView(grads, layout_.tensor(layout_.position_embedding()));
  dwte.noalias() += logits.transpose() * hsel;
  Mat dsel = logits * wte;
  Mat dhf = Mat::Zero(L, d);
  for (Eigen::Index s = 0; s < S; ++s) dhf.row(targets[s]) = dsel.row(s);
  Mat dx = Mat::Zero(L, d);
  LayerNormBackward<T>(dhf, RowView(P, layout_.tensor(layout_.final_gain())),
                       lnf, &dx,
                       GradRow(grads, layout_.tensor(layout_.final_gain())),
                       GradRow(grads, layout_.tensor(layout_.final_bias())));

  Mat dln, dfc, datt, dqkv(L, 3 * d), dp, ds;
  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const Block& b = layout_.block(l);
    const BlockCache<T>& c = cache[static_cast<std::size_t>(l)];

    // MLP branch: dx is the gradient w.r.t. the block output.
    GradRow(grads, layout_.tensor(b.out_b)) += dx.colwise().sum();
    GradView(grads, layout_.tensor(b.out_w)).noalias() += c.fc_act.transpose() * dx;
    dfc = dx * View(P, layout_.tensor(b.out_w)).transpose();
    for (Eigen::Index i = 0; i < dfc.rows(); ++i) {
      for (Eigen::Index j = 0; j < dfc.cols(); ++j) {
        dfc(i, j) *= GeluGrad(c.fc_pre(i, j));
      }
    }
    GradRow(grads, layout_.tensor(b.fc_b)) += dfc.colwise().sum();
    GradView(grads, layout_.tensor(b.fc_w)).noalias() += c.h2.transpose() * dfc;
    dln = dfc * View(P, layout_.tensor(b.fc_w)).transpose();
    LayerNormBackward<T>(dln, RowView(P, layout_.tensor(b.ln2_g)), c.ln2, &dx,
                         GradRow(grads, layout_.tensor(b.ln2_g)),
                         GradRow(grads, layout_.tensor(b.ln2_b)));

    // Attention branch: dx is now the gradient w.r.t. x_mid.
    GradRow(grads, layout_.tensor(b.proj_b)) += dx.colwise().sum();
    GradView(grads, layout_.tensor(b.proj_w)).noalias() += c.att.transpose() * dx;
    datt = dx * View(P, layout_.tensor(b.proj_w)).transpose();
    for (Eigen::Index hd = 0; hd < heads; ++hd) {
      const auto q = c.qkv.middleCols(hd * dh, dh);
      const auto k = c.qkv.middleCols(d + hd * dh, dh);
      const auto v = c.qkv.middleCols(2 * d + hd * dh, dh);
      const Mat& pr = c.probs[static_cast<std::size_t>(hd)];
      const auto dy = datt.middleCols(hd * dh, dh);
      dqkv.middleCols(2 * d + hd * dh, dh).noalias() =
          pr.transpose().template triangularView<Eigen::Upper>() * dy;
      dp.noalias() = dy * v.transpose();
      ds.resize(L, L);
      for (Eigen::Index i = 0; i < L; ++i) {
        const T inner = pr.row(i).head(i + 1).dot(dp.row(i).head(i + 1));
        ds.row(i).head(i + 1) =
            pr.row(i).head(i + 1).array() * (dp.row(i).head(i + 1).array() - inner);
        ds.row(i).tail(L - i - 1).setZero();
      }
      ds *= scale;
      dqkv.middleCols(hd * dh, dh).noalias() =
          ds.template triangularView<Eigen::Lower>() * k;
      dqkv.middleCols(d + hd * dh, dh).noalias() =
          ds.transpose().template triangularView<Eigen::Upper>() * q;
    }
    GradRow(grads, layout_.tensor(b.qkv_b)) += dqkv.colwise().sum();
    GradView(grads, layout_.tensor(b.qkv_w)).noalias() += c.h1.transpose() * dqkv;
    dln = dqkv * View(P, layout_.tensor(b.qkv_w)).transpose();
    LayerNormBackward<T>(dln, RowView(P, layout_.tensor(b.ln1_g)), c.ln1, &dx,
                         GradRow(grads, layout_.tensor(b.ln1_g)),
                         GradRow(grads, layout_.tensor(b.ln1_b)));
  }

  for (Eigen::Index t = 0; t < L; ++t) {
    dwte.row(tokens[t]) += dx.row(t);
    dwpe.row(t) += dx.row(t);
  }
  for (std::size_t i = 0; i < params_.size(); ++i) grads_out[i] += grads[i];
  return result;
}

template <typename T>
double Model<T>::LossAndGrads(std::span<const TokenId> tokens,
                              std::span<const std::uint8_t> mask,
                              std::vector<T>* grads) const {
  const std::size_t count =
      static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(),
                                             [](std::uint8_t m) { return m != 0; }));
  if (count == 0) {
    Fail(ErrorKind::kInvalidArgument, "loss mask selects no positions");
  }
  T* g = nullptr;
  if (grads != nullptr) {
    grads->assign(params_.size(), T(0));
    g = grads->data();
  }
  const NllSum s =
      Accumulate(tokens, mask, T(1) / static_cast<T>(count), g);
  return s.nll / static_cast<double>(s.count);
}

std::size_t ModelScorer::SeqHash::operator()(const TokenSeq& s) const noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (TokenId id : s) {
    h ^= static_cast<std::uint32_t>(id);
    h *= 1099511628211ull;
  }
  return static_cast<std::size_t>(h);
}

std::vector<double> ModelScorer::NextLogProbs(std::span<const TokenId> prefix) {
  TokenSeq key(prefix.begin(), prefix.end());
  if (const auto it = memo_.find(key); it != memo_.end()) {
    return it->second.log_probs;
  }
  Model<float>::KvPtr parent;
  std::span<const TokenId> fresh = prefix;
  if (prefix.size() > 1) {
    TokenSeq shorter(prefix.begin(), prefix.end() - 1);
    if (const auto it = memo_.find(shorter); it != memo_.end()) {
      parent = it->second.node;
      fresh = prefix.last(1);
    }
  }
  Model<float>::Mat logits;
  Entry e;
  e.node = model_.Extend(parent, fresh, &logits);
  e.log_probs = LogSoftmax(logits.row(0));
  auto [it, inserted] = memo_.emplace(std::move(key), std::move(e));
  return it->second.log_probs;
}

std::vector<double> ModelScorer::TargetLogProbs(std::span<const TokenId> seq) {
  std::vector<double> out;
  if (seq.size() < 2) return out;
  const Model<float>::Mat logits = model_.Forward(seq.first(seq.size() - 1));
  out.reserve(seq.size() - 1);
  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    const auto lp = LogSoftmax(logits.row(static_cast<Eigen::Index>(t)));
    out.push_back(lp[static_cast<std::size_t>(seq[t + 1])]);
  }
  return out;
}

template class Model<float>;
template class Model<double>;

}  // namespace headgen
