// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "headgen/common.hpp"
#include "headgen/scorer.hpp"

namespace headgen {

/// Parameter storage aligned for Eigen's vector kernels, so results do not
/// depend on where the buffer lands in memory.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct ModelConfig {
  static constexpr int kFullScaleDModel = 1280;
  static constexpr int kContext = 512;

  int n_layers = 4;
  int d_model = 128;
  int n_heads = 4;
  int context = kContext;
  int vocab_size = 0;
  std::uint64_t seed = 0;

  void Validate() const;
  /// Attention and MLP residual branches per block.
  int residual_layers() const { return 2 * n_layers; }
  double residual_init_std() const {
    return 0.02 / std::sqrt(static_cast<double>(residual_layers()));
  }
  bool operator==(const ModelConfig&) const = default;
};

struct TensorInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool decay = false;          // matrices only; gains and biases are exempt
  bool residual_proj = false;  // output projections feeding the residual
  std::size_t size() const { return rows * cols; }
};

/// Fixed order of all learnable tensors in the flat parameter buffer. The
/// same order is used for gradients, optimizer moments and checkpoints:
///
///   token_embedding [V x d], position_embedding [context x d],
///   per block: ln1.gain, ln1.bias, attn.qkv.weight [d x 3d],
///   attn.qkv.bias, attn.proj.weight [d x d], attn.proj.bias, ln2.gain,
///   ln2.bias, mlp.fc.weight [d x 4d], mlp.fc.bias, mlp.proj.weight
///   [4d x d], mlp.proj.bias; then final_ln.gain, final_ln.bias.
///
/// The output projection is tied to token_embedding.
class ParamLayout {
 public:
  struct Block {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b;
    std::size_t ln2_g, ln2_b, fc_w, fc_b, out_w, out_b;
  };

  explicit ParamLayout(const ModelConfig& config);

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(std::size_t i) const { return tensors_[i]; }
  const TensorInfo& Find(std::string_view name) const;
  std::size_t total() const { return total_; }
  std::size_t token_embedding() const { return 0; }
  std::size_t position_embedding() const { return 1; }
  const Block& block(int layer) const { return blocks_[layer]; }
  std::size_t final_gain() const { return final_g_; }
  std::size_t final_bias() const { return final_b_; }
  /// 1 for every entry subject to weight decay, else 0.
  std::vector<std::uint8_t> DecayMask() const;

 private:
  std::size_t Add(std::string name, std::size_t rows, std::size_t cols,
                  bool decay, bool residual = false);

  std::vector<TensorInfo> tensors_;
  std::vector<Block> blocks_;
  std::size_t final_g_ = 0;
  std::size_t final_b_ = 0;
  std::size_t total_ = 0;
};

/// Per-position loss selector; entry t marks the prediction of token t+1.
using LossMask = std::vector<std::uint8_t>;

template <typename T>
struct KvNode;

/// Decoder-only transformer: learned positions, pre-sublayer layer norm,
/// a final layer norm, exact-erf GELU and no dropout.
template <typename T>
class Model {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using KvPtr = std::shared_ptr<const KvNode<T>>;

  explicit Model(const ModelConfig& config);  // all-zero parameters

  /// Seeded N(0, 0.02) weights; residual projections use 0.02/sqrt(2L);
  /// layer-norm gains 1 and every bias 0.
  static Model Init(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  AlignedVector<T>& params() { return params_; }
  const AlignedVector<T>& params() const { return params_; }

  /// Logits for every position, length x V.
  Mat Forward(std::span<const TokenId> tokens) const;

  /// Mean next-token NLL over masked targets and its exact gradient
  /// (`grads` is resized and overwritten).
  double LossAndGrads(std::span<const TokenId> tokens,
                      std::span<const std::uint8_t> mask,
                      std::vector<T>* grads) const;

  struct NllSum {
    double nll = 0.0;
    std::size_t count = 0;
  };
  /// Sum of masked NLL; when `grads` is non-null adds `scale` times its
  /// gradient into it. This is the building block for batched training.
  NllSum Accumulate(std::span<const TokenId> tokens,
                    std::span<const std::uint8_t> mask, T scale,
                    T* grads_out) const;

  /// Runs `tokens` after the cached context `parent` (may be null) and
  /// returns the node holding their keys/values. Logits of the last new
  /// position are written to `last_logits` when non-null.
  KvPtr Extend(const KvPtr& parent, std::span<const TokenId> tokens,
               Mat* logits_out, bool all_rows = false) const;

  template <typename U>
  Model<U> Cast() const {
    Model<U> out(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.params()[i] = static_cast<U>(params_[i]);
    }
    return out;
  }

 private:
  void CheckTokens(std::span<const TokenId> tokens, std::size_t offset) const;

  ModelConfig config_;
  ParamLayout layout_;
  AlignedVector<T> params_;
};

template <typename T>
struct KvNode {
  std::shared_ptr<const KvNode> parent;
  int start = 0;   // absolute position of the first row
  int length = 0;  // rows held by this node
  std::vector<typename Model<T>::Mat> keys;    // per layer, length x d
  std::vector<typename Model<T>::Mat> values;  // per layer, length x d
  int end() const { return start + length; }
};

/// Log-softmax of one row, in double precision.
template <typename Row>
std::vector<double> LogSoftmax(const Row& logits) {
  const Eigen::Index n = logits.size();
  double mx = -INFINITY;
  for (Eigen::Index i = 0; i < n; ++i) {
    mx = std::max(mx, static_cast<double>(logits(i)));
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sum += std::exp(static_cast<double>(logits(i)) - mx);
  }
  const double lse = mx + std::log(sum);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = static_cast<double>(logits(i)) - lse;
  }
  return out;
}

/// Scorer backed by a model. Prefix states are memoized so that extending a
/// previously scored prefix by one token costs one incremental step.
class ModelScorer : public Scorer {
 public:
  explicit ModelScorer(const Model<float>& model) : model_(model) {}

  std::size_t vocab_size() const override {
    return static_cast<std::size_t>(model_.config().vocab_size);
  }
  std::vector<double> NextLogProbs(std::span<const TokenId> prefix) override;
  std::vector<double> TargetLogProbs(std::span<const TokenId> seq) override;

  int context() const { return model_.config().context; }
  void Clear() { memo_.clear(); }

 private:
  struct SeqHash {
    std::size_t operator()(const TokenSeq& s) const noexcept;
  };
  struct Entry {
    Model<float>::KvPtr node;
    std::vector<double> log_probs;
  };

  const Model<float>& model_;
  std::unordered_map<TokenSeq, Entry, SeqHash> memo_;
};

extern template class Model<float>;
extern template class Model<double>;

}  // namespace headgen
