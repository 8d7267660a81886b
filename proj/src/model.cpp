#include "guti/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "guti/error.hpp"
#include "guti/kernels.hpp"
#include "model_ops.hpp"

namespace guti {

void ModelConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid model config: " + what);
  };
  need(n_layers >= 1, "n_layers must be >= 1");
  need(n_heads >= 1, "n_heads must be >= 1");
  need(d_model >= 1, "d_model must be >= 1");
  need(d_ff >= 1, "d_ff must be >= 1");
  need(context_len >= 1, "context_len must be >= 1");
  need(vocab_size >= 1, "vocab_size must be >= 1");
  need(d_model % n_heads == 0, "d_model must be divisible by n_heads");
  need(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0, 1)");
}

// ---- parameter containers ----------------------------------------------------

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ModelParams<T>::named_tensors() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  out.emplace_back("token_embedding", &token_embedding);
  out.emplace_back("position_embedding", &position_embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& L = layers[l];
    const std::string p = "layer" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1_gain", &L.ln1_gain);
    out.emplace_back(p + "ln1_bias", &L.ln1_bias);
    out.emplace_back(p + "wq", &L.wq);
    out.emplace_back(p + "bq", &L.bq);
    out.emplace_back(p + "wk", &L.wk);
    out.emplace_back(p + "bk", &L.bk);
    out.emplace_back(p + "wv", &L.wv);
    out.emplace_back(p + "bv", &L.bv);
    out.emplace_back(p + "wo", &L.wo);
    out.emplace_back(p + "bo", &L.bo);
    out.emplace_back(p + "ln2_gain", &L.ln2_gain);
    out.emplace_back(p + "ln2_bias", &L.ln2_bias);
    out.emplace_back(p + "w_ff1", &L.w_ff1);
    out.emplace_back(p + "b_ff1", &L.b_ff1);
    out.emplace_back(p + "w_ff2", &L.w_ff2);
    out.emplace_back(p + "b_ff2", &L.b_ff2);
  }
  out.emplace_back("final_gain", &final_gain);
  out.emplace_back("final_bias", &final_bias);
  if (!config.tie_embeddings) out.emplace_back("output_projection", &output_projection);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> ModelParams<T>::named_tensors() const {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (auto& [name, t] : const_cast<ModelParams*>(this)->named_tensors()) out.emplace_back(name, t);
  return out;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& config) {
  config.validate();
  const auto V = static_cast<std::size_t>(config.vocab_size), D = static_cast<std::size_t>(config.d_model),
             F = static_cast<std::size_t>(config.d_ff), C = static_cast<std::size_t>(config.context_len);
  ModelParams p;
  p.config = config;
  p.token_embedding = Tensor<T>({V, D});
  p.position_embedding = Tensor<T>({C, D});
  p.layers.resize(static_cast<std::size_t>(config.n_layers));
  for (auto& L : p.layers) {
    L.ln1_gain = Tensor<T>({D});
    L.ln1_bias = Tensor<T>({D});
    for (auto* w : {&L.wq, &L.wk, &L.wv, &L.wo}) *w = Tensor<T>({D, D});
    for (auto* b : {&L.bq, &L.bk, &L.bv, &L.bo}) *b = Tensor<T>({D});
    L.ln2_gain = Tensor<T>({D});
    L.ln2_bias = Tensor<T>({D});
    L.w_ff1 = Tensor<T>({D, F});
    L.b_ff1 = Tensor<T>({F});
    L.w_ff2 = Tensor<T>({F, D});
    L.b_ff2 = Tensor<T>({D});
  }
  p.final_gain = Tensor<T>({D});
  p.final_bias = Tensor<T>({D});
  if (!config.tie_embeddings) p.output_projection = Tensor<T>({D, V});
  return p;
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_tensors()) n += t->size();
  return n;
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  for (const auto& [name, t] : named_tensors())
    for (T x : t->data)
      if (!std::isfinite(x)) return false;
  return true;
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out = ModelParams<U>::zeros(config);
  auto src = named_tensors();
  auto dst = out.named_tensors();
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::size_t j = 0; j < src[i].second->size(); ++j)
      dst[i].second->data[j] = static_cast<U>(src[i].second->data[j]);
  return out;
}

template <typename T>
bool ModelParams<T>::operator==(const ModelParams& other) const {
  if (!(config == other.config)) return false;
  auto a = named_tensors();
  auto b = other.named_tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(*a[i].second == *b[i].second)) return false;
  return true;
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams<T> p = ModelParams<T>::zeros(config);
  Rng rng(seed);
  for (auto& [name, t] : p.named_tensors()) {
    if (t->shape.size() == 2) {
      for (auto& x : t->data) x = static_cast<T>(0.02 * rng.normal());
    } else if (name.find("gain") != std::string::npos) {
      std::fill(t->data.begin(), t->data.end(), T(1));
    }
  }
  return p;
}

SequenceBatch SequenceBatch::from_sequences(std::span<const std::vector<TokenId>> sequences, TokenId pad) {
  SequenceBatch b;
  b.batch = sequences.size();
  for (const auto& s : sequences) b.seq = std::max(b.seq, s.size());
  b.tokens.assign(b.batch * b.seq, pad);
  b.loss_mask.assign(b.batch * b.seq, 0.0);
  for (std::size_t i = 0; i < b.batch; ++i) {
    b.lengths.push_back(sequences[i].size());
    for (std::size_t t = 0; t < sequences[i].size(); ++t) {
      b.tokens[i * b.seq + t] = sequences[i][t];
      if (t > 0) b.loss_mask[i * b.seq + t] = 1.0;
    }
  }
  return b;
}

// ---- batched forward / backward -------------------------------------------------

namespace {

template <typename T>
struct LayerCache {
  std::vector<T> x_in, a, mean1, rstd1, q, k, v, probs, ctx, attn_out, drop_attn;
  std::vector<T> x_mid, m, mean2, rstd2, h_pre, h_act, ff_out, drop_ff;
};

template <typename T>
struct Cache {
  std::size_t rows = 0;
  std::vector<std::size_t> offsets, lengths, prob_offsets;  // per sequence
  std::vector<TokenId> ids;                                  // per packed row
  std::vector<std::size_t> positions;
  std::vector<T> drop_emb;
  std::vector<LayerCache<T>> layers;
  std::vector<T> x_final, hf, meanf, rstdf, logits;
};

void check_batch(const ModelConfig& cfg, const SequenceBatch& batch) {
  if (batch.tokens.size() != batch.batch * batch.seq || batch.loss_mask.size() != batch.batch * batch.seq ||
      batch.lengths.size() != batch.batch)
    throw UsageError("sequence batch arrays disagree with its shape");
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::size_t len = batch.lengths[b];
    if (len > batch.seq) throw UsageError("sequence length exceeds batch width");
    if (len > static_cast<std::size_t>(cfg.context_len))
      throw UsageError("sequence of " + std::to_string(len) + " tokens exceeds context length " +
                       std::to_string(cfg.context_len));
    for (std::size_t t = 0; t < len; ++t) {
      const TokenId id = batch.token(b, t);
      if (id < 0 || id >= cfg.vocab_size)
        throw UsageError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(cfg.vocab_size));
    }
    if (batch.seq > 0 && batch.mask(b, 0) != 0.0) throw UsageError("loss mask set on the first position");
    for (std::size_t t = 0; t < batch.seq; ++t) {
      const double w = batch.mask(b, t);
      if (w < 0.0 || !std::isfinite(w)) throw UsageError("loss mask weights must be finite and non-negative");
      if (t >= len && w != 0.0) throw UsageError("loss mask set on a padding position");
    }
  }
}

template <typename T>
void make_dropout(std::vector<T>& mask, std::size_t n, double rate, bool train, Rng* rng) {
  mask.clear();
  if (!train || rate == 0.0) return;
  if (!rng) throw UsageError("train-mode dropout needs a random generator");
  mask.resize(n);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (auto& x : mask) x = rng->uniform() >= rate ? keep : T(0);
}

template <typename T>
void run_forward(const ModelParams<T>& P, const SequenceBatch& batch, bool train, Rng* rng, Cache<T>& c) {
  const ModelConfig& cfg = P.config;
  check_batch(cfg, batch);
  const auto& K = kernels::active<T>();
  const std::size_t D = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim(), V = cfg.vocab_size;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  c.rows = 0;
  std::size_t prob_total = 0;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    const std::size_t L = batch.lengths[b];
    c.offsets.push_back(c.rows);
    c.lengths.push_back(L);
    c.prob_offsets.push_back(prob_total);
    for (std::size_t t = 0; t < L; ++t) {
      c.ids.push_back(batch.token(b, t));
      c.positions.push_back(t);
    }
    c.rows += L;
    prob_total += H * L * L;
  }
  const std::size_t R = c.rows;

  std::vector<T> x(R * D);
  for (std::size_t r = 0; r < R; ++r) {
    const T* e = P.token_embedding.ptr() + static_cast<std::size_t>(c.ids[r]) * D;
    const T* p = P.position_embedding.ptr() + c.positions[r] * D;
    for (std::size_t j = 0; j < D; ++j) x[r * D + j] = e[j] + p[j];
  }
  make_dropout(c.drop_emb, R * D, cfg.dropout_rate, train, rng);
  for (std::size_t i = 0; i < c.drop_emb.size(); ++i) x[i] *= c.drop_emb[i];

  std::vector<T> kt;
  c.layers.resize(P.layers.size());
  for (std::size_t l = 0; l < P.layers.size(); ++l) {
    const auto& W = P.layers[l];
    auto& lc = c.layers[l];
    lc.x_in = x;
    lc.a.resize(R * D);
    lc.mean1.resize(R);
    lc.rstd1.resize(R);
    ops::layernorm(x.data(), R, D, W.ln1_gain.ptr(), W.ln1_bias.ptr(), lc.a.data(), lc.mean1.data(), lc.rstd1.data());
    lc.q.resize(R * D);
    lc.k.resize(R * D);
    lc.v.resize(R * D);
    ops::linear(K, lc.a.data(), R, W.wq, &W.bq, lc.q.data());
    ops::linear(K, lc.a.data(), R, W.wk, &W.bk, lc.k.data());
    ops::linear(K, lc.a.data(), R, W.wv, &W.bv, lc.v.data());

    lc.probs.assign(prob_total, T(0));
    lc.ctx.assign(R * D, T(0));
    for (std::size_t b = 0; b < batch.batch; ++b) {
      const std::size_t L = c.lengths[b], off = c.offsets[b];
      if (L == 0) continue;
      kt.resize(hd * L);
      for (std::size_t h = 0; h < H; ++h) {
        const T* qp = lc.q.data() + off * D + h * hd;
        const T* kp = lc.k.data() + off * D + h * hd;
        const T* vp = lc.v.data() + off * D + h * hd;
        T* S = lc.probs.data() + c.prob_offsets[b] + h * L * L;
        ops::transpose(kp, L, hd, D, kt.data());
        K.gemm(L, L, hd, qp, D, kt.data(), L, S, L, false);
        for (std::size_t i = 0; i < L; ++i) {
          T* row = S + i * L;
          for (std::size_t j = 0; j <= i; ++j) row[j] *= scale;
          ops::softmax_prefix(row, i + 1, L);
        }
        K.gemm(L, hd, L, S, L, vp, D, lc.ctx.data() + off * D + h * hd, D, false);
      }
    }
    lc.attn_out.resize(R * D);
    ops::linear(K, lc.ctx.data(), R, W.wo, &W.bo, lc.attn_out.data());
    make_dropout(lc.drop_attn, R * D, cfg.dropout_rate, train, rng);
    for (std::size_t i = 0; i < R * D; ++i)
      x[i] += lc.drop_attn.empty() ? lc.attn_out[i] : lc.attn_out[i] * lc.drop_attn[i];

    lc.x_mid = x;
    lc.m.resize(R * D);
    lc.mean2.resize(R);
    lc.rstd2.resize(R);
    ops::layernorm(x.data(), R, D, W.ln2_gain.ptr(), W.ln2_bias.ptr(), lc.m.data(), lc.mean2.data(), lc.rstd2.data());
    const std::size_t F = cfg.d_ff;
    lc.h_pre.resize(R * F);
    ops::linear(K, lc.m.data(), R, W.w_ff1, &W.b_ff1, lc.h_pre.data());
    lc.h_act.resize(R * F);
    K.gelu(lc.h_pre.data(), lc.h_act.data(), R * F);
    lc.ff_out.resize(R * D);
    ops::linear(K, lc.h_act.data(), R, W.w_ff2, &W.b_ff2, lc.ff_out.data());
    make_dropout(lc.drop_ff, R * D, cfg.dropout_rate, train, rng);
    for (std::size_t i = 0; i < R * D; ++i)
      x[i] += lc.drop_ff.empty() ? lc.ff_out[i] : lc.ff_out[i] * lc.drop_ff[i];
  }

  c.x_final = std::move(x);
  c.hf.resize(R * D);
  c.meanf.resize(R);
  c.rstdf.resize(R);
  ops::layernorm(c.x_final.data(), R, D, P.final_gain.ptr(), P.final_bias.ptr(), c.hf.data(), c.meanf.data(),
                 c.rstdf.data());
  c.logits.resize(R * V);
  if (cfg.tie_embeddings) {
    std::vector<T> et(D * V);
    ops::transpose(P.token_embedding.ptr(), V, D, D, et.data());
    K.gemm(R, V, D, c.hf.data(), D, et.data(), V, c.logits.data(), V, false);
  } else {
    ops::linear(K, c.hf.data(), R, P.output_projection, static_cast<const Tensor<T>*>(nullptr), c.logits.data());
  }
}

}  // namespace

template <typename T>
Tensor<T> forward(const ModelParams<T>& params, const SequenceBatch& batch, bool train_mode, Rng* rng) {
  Cache<T> c;
  run_forward(params, batch, train_mode, rng, c);
  const std::size_t V = params.config.vocab_size;
  Tensor<T> logits({batch.batch, batch.seq, V});
  for (std::size_t b = 0; b < batch.batch; ++b)
    std::copy_n(c.logits.data() + c.offsets[b] * V, c.lengths[b] * V, logits.ptr() + b * batch.seq * V);
  return logits;
}

template <typename T>
double nll_loss(const Tensor<T>& logits, const SequenceBatch& batch) {
  if (logits.shape.size() != 3 || logits.shape[0] != batch.batch || logits.shape[1] != batch.seq)
    throw UsageError("logits shape does not match the batch");
  const std::size_t V = logits.shape[2];
  double total = 0.0, weight = 0.0;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 1; t < batch.lengths[b]; ++t) {
      const double w = batch.mask(b, t);
      if (w == 0.0) continue;
      const T* row = logits.ptr() + (b * batch.seq + t - 1) * V;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < V; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double sum = 0.0;
      for (std::size_t j = 0; j < V; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
      const double logp = static_cast<double>(row[static_cast<std::size_t>(batch.token(b, t))]) - mx - std::log(sum);
      total -= w * logp;
      weight += w;
    }
  }
  if (weight == 0.0) throw UsageError("loss mask selects no positions");
  return total / weight;
}

template <typename T>
LossAndGradients<T> backward(const ModelParams<T>& P, const SequenceBatch& batch, bool train_mode, Rng* rng) {
  Cache<T> c;
  run_forward(P, batch, train_mode, rng, c);
  const ModelConfig& cfg = P.config;
  const auto& K = kernels::active<T>();
  const std::size_t D = cfg.d_model, H = cfg.n_heads, hd = cfg.head_dim(), V = cfg.vocab_size, F = cfg.d_ff;
  const std::size_t R = c.rows;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));

  LossAndGradients<T> out;
  out.gradients = ModelParams<T>::zeros(cfg);
  auto& G = out.gradients;

  // loss and d logits
  double weight = 0.0;
  for (std::size_t b = 0; b < batch.batch; ++b)
    for (std::size_t t = 1; t < batch.lengths[b]; ++t) weight += batch.mask(b, t);
  if (weight == 0.0) throw UsageError("loss mask selects no positions");
  std::vector<T> dlogits(R * V, T(0));
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.batch; ++b) {
    for (std::size_t t = 0; t + 1 < batch.lengths[b]; ++t) {
      const double w = batch.mask(b, t + 1);
      if (w == 0.0) continue;
      const std::size_t r = c.offsets[b] + t;
      const T* row = c.logits.data() + r * V;
      T* drow = dlogits.data() + r * V;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < V; ++j) mx = std::max(mx, static_cast<double>(row[j]));
      double sum = 0.0;
      for (std::size_t j = 0; j < V; ++j) sum += std::exp(static_cast<double>(row[j]) - mx);
      const auto target = static_cast<std::size_t>(batch.token(b, t + 1));
      loss -= w * (static_cast<double>(row[target]) - mx - std::log(sum));
      const double coef = w / weight;
      for (std::size_t j = 0; j < V; ++j)
        drow[j] = static_cast<T>(coef * std::exp(static_cast<double>(row[j]) - mx) / sum);
      drow[target] -= static_cast<T>(coef);
    }
  }
  out.loss = loss / weight;

  std::vector<T> scratch;
  std::vector<T> dhf(R * D);
  if (cfg.tie_embeddings) {
    K.gemm(R, D, V, dlogits.data(), V, P.token_embedding.ptr(), D, dhf.data(), D, false);
    scratch.resize(V * R);
    ops::transpose(dlogits.data(), R, V, V, scratch.data());
    K.gemm(V, D, R, scratch.data(), R, c.hf.data(), D, G.token_embedding.ptr(), D, true);
  } else {
    ops::linear_backward(K, c.hf.data(), R, P.output_projection, dlogits.data(), dhf.data(), false,
                         G.output_projection, static_cast<Tensor<T>*>(nullptr), scratch);
  }
  std::vector<T> dx(R * D, T(0));
  ops::layernorm_backward(c.x_final.data(), R, D, P.final_gain.ptr(), c.meanf.data(), c.rstdf.data(), dhf.data(),
                          dx.data(), G.final_gain.ptr(), G.final_bias.ptr());

  std::vector<T> dff(R * D), dh(R * F), dm(R * D), dattn(R * D), dctx(R * D), dq, dk, dv, da(R * D);
  std::vector<T> tmp_a, tmp_b, dS;
  for (std::size_t li = P.layers.size(); li-- > 0;) {
    const auto& W = P.layers[li];
    auto& GW = G.layers[li];
    const auto& lc = c.layers[li];

    // x_out = x_mid + drop(ff_out)
    for (std::size_t i = 0; i < R * D; ++i) dff[i] = lc.drop_ff.empty() ? dx[i] : dx[i] * lc.drop_ff[i];
    ops::linear_backward(K, lc.h_act.data(), R, W.w_ff2, dff.data(), dh.data(), false, GW.w_ff2, &GW.b_ff2, scratch);
    K.gelu_backward(lc.h_pre.data(), dh.data(), dh.data(), R * F);
    ops::linear_backward(K, lc.m.data(), R, W.w_ff1, dh.data(), dm.data(), false, GW.w_ff1, &GW.b_ff1, scratch);
    ops::layernorm_backward(lc.x_mid.data(), R, D, W.ln2_gain.ptr(), lc.mean2.data(), lc.rstd2.data(), dm.data(),
                            dx.data(), GW.ln2_gain.ptr(), GW.ln2_bias.ptr());

    // x_mid = x_in + drop(attn_out)
    for (std::size_t i = 0; i < R * D; ++i) dattn[i] = lc.drop_attn.empty() ? dx[i] : dx[i] * lc.drop_attn[i];
    ops::linear_backward(K, lc.ctx.data(), R, W.wo, dattn.data(), dctx.data(), false, GW.wo, &GW.bo, scratch);

    dq.assign(R * D, T(0));
    dk.assign(R * D, T(0));
    dv.assign(R * D, T(0));
    for (std::size_t b = 0; b < batch.batch; ++b) {
      const std::size_t L = c.lengths[b], off = c.offsets[b];
      if (L == 0) continue;
      tmp_a.resize(L * L);
      tmp_b.resize(std::max(L * L, hd * L));
      dS.resize(L * L);
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t col = off * D + h * hd;
        const T* Pm = lc.probs.data() + c.prob_offsets[b] + h * L * L;
        // dP = dctx V^T
        ops::transpose(lc.v.data() + col, L, hd, D, tmp_b.data());
        K.gemm(L, L, hd, dctx.data() + col, D, tmp_b.data(), L, dS.data(), L, false);
        // dV += P^T dctx
        ops::transpose(Pm, L, L, L, tmp_a.data());
        K.gemm(L, hd, L, tmp_a.data(), L, dctx.data() + col, D, dv.data() + col, D, true);
        // softmax backward, then fold in the score scale
        for (std::size_t i = 0; i < L; ++i) {
          const T* p = Pm + i * L;
          T* g = dS.data() + i * L;
          T s = 0;
          for (std::size_t j = 0; j <= i; ++j) s += g[j] * p[j];
          for (std::size_t j = 0; j <= i; ++j) g[j] = p[j] * (g[j] - s) * scale;
          for (std::size_t j = i + 1; j < L; ++j) g[j] = 0;
        }
        // dQ += dS K ; dK += dS^T Q
        K.gemm(L, hd, L, dS.data(), L, lc.k.data() + col, D, dq.data() + col, D, true);
        ops::transpose(dS.data(), L, L, L, tmp_a.data());
        K.gemm(L, hd, L, tmp_a.data(), L, lc.q.data() + col, D, dk.data() + col, D, true);
      }
    }
    ops::linear_backward(K, lc.a.data(), R, W.wq, dq.data(), da.data(), false, GW.wq, &GW.bq, scratch);
    ops::linear_backward(K, lc.a.data(), R, W.wk, dk.data(), da.data(), true, GW.wk, &GW.bk, scratch);
    ops::linear_backward(K, lc.a.data(), R, W.wv, dv.data(), da.data(), true, GW.wv, &GW.bv, scratch);
    ops::layernorm_backward(lc.x_in.data(), R, D, W.ln1_gain.ptr(), lc.mean1.data(), lc.rstd1.data(), da.data(),
                            dx.data(), GW.ln1_gain.ptr(), GW.ln1_bias.ptr());
  }

  for (std::size_t i = 0; i < c.drop_emb.size(); ++i) dx[i] *= c.drop_emb[i];
  for (std::size_t r = 0; r < R; ++r) {
    K.axpy(T(1), dx.data() + r * D, G.token_embedding.ptr() + static_cast<std::size_t>(c.ids[r]) * D, D);
    K.axpy(T(1), dx.data() + r * D, G.position_embedding.ptr() + c.positions[r] * D, D);
  }
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;
template ModelParams<float> init_params<float>(const ModelConfig&, std::uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, std::uint64_t);
template Tensor<float> forward<float>(const ModelParams<float>&, const SequenceBatch&, bool, Rng*);
template Tensor<double> forward<double>(const ModelParams<double>&, const SequenceBatch&, bool, Rng*);
template double nll_loss<float>(const Tensor<float>&, const SequenceBatch&);
template double nll_loss<double>(const Tensor<double>&, const SequenceBatch&);
template LossAndGradients<float> backward<float>(const ModelParams<float>&, const SequenceBatch&, bool, Rng*);
template LossAndGradients<double> backward<double>(const ModelParams<double>&, const SequenceBatch&, bool, Rng*);

}  // namespace guti
