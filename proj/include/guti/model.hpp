#pragma once

// Decoder-only transformer language model: pre-norm blocks, learned
// positional embeddings, GELU feed-forward, optional weight tying between the
// token embedding and the output projection.
//
// Everything is templated on the scalar type. Training and generation use
// float; gradient checking uses double.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "guti/rng.hpp"
#include "guti/tensor.hpp"
#include "guti/types.hpp"

namespace guti {

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 128;
  int d_ff = 512;
  int context_len = 256;
  int vocab_size = 0;
  double dropout_rate = 0.0;
  bool tie_embeddings = true;

  int head_dim() const { return d_model / n_heads; }
  /// Throws UsageError when a count is < 1, d_model % n_heads != 0 or the
  /// dropout rate is outside [0, 1).
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct LayerParams {
  Tensor<T> ln1_gain, ln1_bias;
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;  // projections stored [in, out]
  Tensor<T> ln2_gain, ln2_bias;
  Tensor<T> w_ff1, b_ff1, w_ff2, b_ff2;
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  Tensor<T> token_embedding;     // [vocab, d_model]
  Tensor<T> position_embedding;  // [context, d_model]
  std::vector<LayerParams<T>> layers;
  Tensor<T> final_gain, final_bias;
  Tensor<T> output_projection;  // [d_model, vocab]; empty when tied

  /// Tensors in declaration order (the checkpoint order).
  std::vector<std::pair<std::string, Tensor<T>*>> named_tensors();
  std::vector<std::pair<std::string, const Tensor<T>*>> named_tensors() const;

  /// Same shapes, all zero.
  static ModelParams zeros(const ModelConfig& config);

  std::size_t parameter_count() const;
  bool all_finite() const;

  template <typename U>
  ModelParams<U> cast() const;

  bool operator==(const ModelParams& other) const;
};

/// Token ids padded to a rectangle, with per-position loss weights.
/// loss_mask[b][t] weights the prediction of tokens[b][t] from position t-1,
/// so column 0 is always zero.
struct SequenceBatch {
  std::size_t batch = 0;
  std::size_t seq = 0;
  std::vector<TokenId> tokens;
  std::vector<double> loss_mask;
  std::vector<std::size_t> lengths;

  /// Weight 1 on every position from the second token through the last.
  static SequenceBatch from_sequences(std::span<const std::vector<TokenId>> sequences, TokenId pad = 0);

  TokenId token(std::size_t b, std::size_t t) const { return tokens[b * seq + t]; }
  double& mask(std::size_t b, std::size_t t) { return loss_mask[b * seq + t]; }
  double mask(std::size_t b, std::size_t t) const { return loss_mask[b * seq + t]; }
};

template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

/// Logits [batch, seq, vocab]; rows past each sequence's length are zero.
/// Train mode applies dropout drawn from `rng` (required when the rate is > 0).
template <typename T>
Tensor<T> forward(const ModelParams<T>& params, const SequenceBatch& batch, bool train_mode = false,
                  Rng* rng = nullptr);

/// Weighted mean negative log-likelihood of the batch under `logits`.
/// Throws UsageError when the mask is empty or shapes disagree.
template <typename T>
double nll_loss(const Tensor<T>& logits, const SequenceBatch& batch);

template <typename T>
struct LossAndGradients {
  double loss = 0.0;
  ModelParams<T> gradients;
};

/// Loss and its exact gradient with respect to every parameter.
template <typename T>
LossAndGradients<T> backward(const ModelParams<T>& params, const SequenceBatch& batch, bool train_mode = false,
                             Rng* rng = nullptr);

/// Incremental eval-mode decoding with per-layer key/value caches. Produces
/// the same logits as `forward` on the growing prefix.
template <typename T>
class DecodeState {
 public:
  explicit DecodeState(const ModelParams<T>& params);

  /// Append one token; returns logits for the next position. Throws
  /// UsageError when the context is full or the id is out of range.
  std::span<const T> push(TokenId token);

  std::size_t length() const { return length_; }
  bool full() const { return length_ >= static_cast<std::size_t>(params_->config.context_len); }

 private:
  const ModelParams<T>* params_;
  std::size_t length_ = 0;
  std::vector<std::vector<T>> keys_, values_;  // per layer [context, d_model]
  std::vector<T> x_, a_, q_, k_, v_, ctx_, tmp_, hidden_, scores_, logits_;
};

}  // namespace guti
