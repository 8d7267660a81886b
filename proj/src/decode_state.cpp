#include <cmath>
#include <string>

#include "guti/error.hpp"
#include "guti/kernels.hpp"
#include "guti/model.hpp"
#include "model_ops.hpp"

namespace guti {

template <typename T>
DecodeState<T>::DecodeState(const ModelParams<T>& params) : params_(&params) {
  const ModelConfig& cfg = params.config;
  cfg.validate();
  const std::size_t D = cfg.d_model, C = cfg.context_len;
  keys_.assign(cfg.n_layers, std::vector<T>(C * D));
  values_.assign(cfg.n_layers, std::vector<T>(C * D));
  x_.resize(D);
  a_.resize(D);
  q_.resize(D);
  ctx_.resize(D);
  tmp_.resize(D);
  hidden_.resize(cfg.d_ff);
  scores_.resize(C);
  logits_.resize(cfg.vocab_size);
}

template <typename T>
std::span<const T> DecodeState<T>::push(TokenId token) {
  const ModelParams<T>& P = *params_;
  const ModelConfig& cfg = P.config;
  if (full()) throw UsageError("context of " + std::to_string(cfg.context_len) + " tokens is full");
  if (token < 0 || token >= cfg.vocab_size) throw UsageError("token id " + std::to_string(token) + " outside vocabulary");

  const auto& K = kernels::active<T>();
  const std::size_t D = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim(), F = cfg.d_ff, V = cfg.vocab_size;
  const std::size_t t = length_;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  const T* e = P.token_embedding.ptr() + static_cast<std::size_t>(token) * D;
  const T* pe = P.position_embedding.ptr() + t * D;
  for (std::size_t j = 0; j < D; ++j) x_[j] = e[j] + pe[j];

  for (std::size_t l = 0; l < P.layers.size(); ++l) {
    const auto& W = P.layers[l];
    T* keys = keys_[l].data();
    T* values = values_[l].data();
    ops::layernorm(x_.data(), 1, D, W.ln1_gain.ptr(), W.ln1_bias.ptr(), a_.data(), static_cast<T*>(nullptr),
                   static_cast<T*>(nullptr));
    ops::linear(K, a_.data(), 1, W.wq, &W.bq, q_.data());
    ops::linear(K, a_.data(), 1, W.wk, &W.bk, keys + t * D);
    ops::linear(K, a_.data(), 1, W.wv, &W.bv, values + t * D);
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t off = h * hd;
      for (std::size_t j = 0; j <= t; ++j) scores_[j] = K.dot(q_.data() + off, keys + j * D + off, hd) * scale;
      ops::softmax_prefix(scores_.data(), t + 1, t + 1);
      T* c = ctx_.data() + off;
      std::fill(c, c + hd, T(0));
      for (std::size_t j = 0; j <= t; ++j) K.axpy(scores_[j], values + j * D + off, c, hd);
    }
    ops::linear(K, ctx_.data(), 1, W.wo, &W.bo, tmp_.data());
    for (std::size_t j = 0; j < D; ++j) x_[j] += tmp_[j];

    ops::layernorm(x_.data(), 1, D, W.ln2_gain.ptr(), W.ln2_bias.ptr(), a_.data(), static_cast<T*>(nullptr),
                   static_cast<T*>(nullptr));
    ops::linear(K, a_.data(), 1, W.w_ff1, &W.b_ff1, hidden_.data());
    K.gelu(hidden_.data(), hidden_.data(), F);
    ops::linear(K, hidden_.data(), 1, W.w_ff2, &W.b_ff2, tmp_.data());
    for (std::size_t j = 0; j < D; ++j) x_[j] += tmp_[j];
  }

  ops::layernorm(x_.data(), 1, D, P.final_gain.ptr(), P.final_bias.ptr(), a_.data(), static_cast<T*>(nullptr),
                 static_cast<T*>(nullptr));
  if (cfg.tie_embeddings) {
    for (std::size_t v = 0; v < V; ++v) logits_[v] = K.dot(a_.data(), P.token_embedding.ptr() + v * D, D);
  } else {
    ops::linear(K, a_.data(), 1, P.output_projection, static_cast<const Tensor<T>*>(nullptr), logits_.data());
  }
  ++length_;
  return logits_;
}

template class DecodeState<float>;
template class DecodeState<double>;

}  // namespace guti
