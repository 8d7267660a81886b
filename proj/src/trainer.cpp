#include "guti/trainer.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "guti/checkpoint.hpp"
#include "guti/error.hpp"
#include "guti/kernels.hpp"
#include "guti/novelty.hpp"
#include "guti/rng.hpp"
#include "guti/sampler.hpp"

namespace guti {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
  if (batch_size < 1) throw UsageError("batch size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("Adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw UsageError("Adam epsilon must be positive");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) throw UsageError("holdout fraction must be in [0, 1)");
  if (log_interval < 1) throw UsageError("log interval must be at least 1");
}

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::size_t step,
                 const AdamHyper& h) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw UsageError("Adam buffers differ in size");
  if (step < 1) throw UsageError("Adam step is 1-based");
  const double t = static_cast<double>(step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);
  kernels::active<T>().adam(param.data(), grad.data(), m.data(), v.data(), param.size(), static_cast<T>(h.lr / bc1),
                            static_cast<T>(h.beta1), static_cast<T>(h.beta2), static_cast<T>(h.eps),
                            static_cast<T>(bc2));
}

template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                 std::size_t, const AdamHyper&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                  std::size_t, const AdamHyper&);

AdamState AdamState::zeros(const ModelConfig& config) {
  AdamState s;
  s.m = ModelParams<float>::zeros(config);
  s.v = ModelParams<float>::zeros(config);
  return s;
}

bool adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state, const AdamHyper& hyper) {
  auto p = params.named_tensors();
  auto g = grads.named_tensors();
  auto m = state.m.named_tensors();
  auto v = state.v.named_tensors();
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size())
    throw UsageError("gradient and parameter tensor lists differ");
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i].second->shape != p[i].second->shape || m[i].second->shape != p[i].second->shape ||
        v[i].second->shape != p[i].second->shape)
      throw UsageError("gradient shape mismatch for " + p[i].first);
  }
  if (!grads.all_finite()) return false;
  ++state.step;
  for (std::size_t i = 0; i < p.size(); ++i)
    adam_update<float>(p[i].second->span(), g[i].second->span(), m[i].second->span(), v[i].second->span(), state.step,
                       hyper);
  return true;
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps == 0 || step >= cfg.warmup_steps) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
}

bool is_heldout(std::string_view source_id, double fraction) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : source_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<double>(h % 10000) < fraction * 10000.0;
}

double corpus_nll(const ModelParams<float>& params, std::span<const std::vector<TokenId>> sequences,
                  std::size_t batch_size) {
  if (sequences.empty()) throw UsageError("no sequences to evaluate");
  double total = 0.0, weight = 0.0;
  for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
    const auto chunk = sequences.subspan(start, std::min(batch_size, sequences.size() - start));
    const SequenceBatch batch = SequenceBatch::from_sequences(chunk);
    double w = 0.0;
    for (double x : batch.loss_mask) w += x;
    if (w == 0.0) continue;
    total += nll_loss(forward(params, batch), batch) * w;
    weight += w;
  }
  if (weight == 0.0) throw UsageError("no predicted positions to evaluate");
  return total / weight;
}

namespace {

struct Probe {
  std::vector<std::vector<TokenId>> prompts;
  NoveltyIndex index;
};

/// Greedy generations from the first training prompts, scored against the
/// training bodies. A body that does not parse counts as novel.
double probe_novelty(const ModelParams<float>& model, const Vocab& vocab, const Probe& probe) {
  SampleConfig sc;
  sc.k = 1;
  sc.forbid = default_forbidden(vocab);
  sc.max_new_tokens = static_cast<std::size_t>(model.config.context_len);
  double sum = 0.0;
  for (const auto& prompt : probe.prompts) {
    const Generation g = generate(model, prompt, sc);
    double score = 1.0;
    try {
      Poem p;
      p.body = parse_body(decode(g.body, vocab));
      score = probe.index.score(p).score;
    } catch (const UsageError&) {
    }
    sum += score;
  }
  return probe.prompts.empty() ? 1.0 : sum / static_cast<double>(probe.prompts.size());
}

std::string checkpoint_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step-%06zu.ckpt", step);
  return buf;
}

}  // namespace

TrainReport fine_tune(std::span<const SerializedSample> corpus, const Vocab& vocab, ModelParams<float>& model,
                      const TrainConfig& cfg, std::ostream* metrics) {
  cfg.validate();
  if (corpus.empty()) throw UsageError("empty training corpus");
  if (static_cast<std::size_t>(model.config.vocab_size) != vocab.size())
    throw UsageError("model vocabulary size " + std::to_string(model.config.vocab_size) + " differs from vocab file (" +
                     std::to_string(vocab.size()) + ")");
  const auto started = std::chrono::steady_clock::now();

  std::vector<std::vector<TokenId>> train, heldout;
  Probe probe;
  for (const auto& s : corpus) {
    std::vector<TokenId> ids = encode_sample(s, vocab);
    if (ids.size() > static_cast<std::size_t>(model.config.context_len))
      throw UsageError("sample " + s.source_id + " has " + std::to_string(ids.size()) +
                       " tokens, more than the context length " + std::to_string(model.config.context_len));
    if (is_heldout(s.source_id, cfg.holdout_fraction)) {
      heldout.push_back(std::move(ids));
      continue;
    }
    train.push_back(std::move(ids));
    try {
      Poem p;
      p.body = parse_body(s.field(Field::body));
      probe.index.add(p);
    } catch (const UsageError&) {
    }
    if (probe.prompts.size() < cfg.novelty_probe_size) {
      std::vector<TokenId> prompt{Vocab::bos};
      const auto rest = encode(s.prompt(), vocab);
      prompt.insert(prompt.end(), rest.begin(), rest.end());
      probe.prompts.push_back(std::move(prompt));
    }
  }
  if (train.empty()) throw UsageError("every sample fell into the held-out shard");

  TrainReport report;
  report.train_sequences = train.size();
  report.heldout_sequences = heldout.size();
  if (cfg.max_steps == 0) return report;
  if (!cfg.checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + cfg.checkpoint_dir.string() + ": " + ec.message());
  }

  Rng shuffle_rng(mix_seed(cfg.seed));
  Rng dropout_rng(mix_seed(cfg.seed ^ 0x5eed5eed5eedULL));
  std::vector<std::size_t> order(train.size());
  std::size_t cursor = order.size();
  AdamState adam = AdamState::zeros(model.config);
  std::vector<std::vector<TokenId>> batch_seqs;
  double interval_sum = 0.0;
  std::size_t interval_count = 0;

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    batch_seqs.clear();
    while (batch_seqs.size() < std::min(cfg.batch_size, train.size())) {
      if (cursor == order.size()) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        cursor = 0;
      }
      batch_seqs.push_back(train[order[cursor++]]);
    }
    const SequenceBatch batch = SequenceBatch::from_sequences(batch_seqs);
    const bool train_mode = model.config.dropout_rate > 0.0;
    LossAndGradients<float> lg = backward(model, batch, train_mode, &dropout_rng);
    AdamHyper hyper{scheduled_lr(cfg, step), cfg.beta1, cfg.beta2, cfg.eps};
    if (!adam_step(model, lg.gradients, adam, hyper)) ++report.skipped_steps;
    report.step_losses.push_back(lg.loss);
    report.steps_run = step;
    interval_sum += lg.loss;
    ++interval_count;

    const bool last = step == cfg.max_steps;
    const bool log_now = step % cfg.log_interval == 0 || last;
    const bool novelty_now =
        cfg.novelty_eval_interval > 0 && (step % cfg.novelty_eval_interval == 0 || (last && cfg.early_stop_novelty));
    const bool ckpt_now = !cfg.checkpoint_dir.empty() &&
                          ((cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0) || last);
    std::optional<double> novelty;
    if (novelty_now) {
      novelty = probe_novelty(model, vocab, probe);
      report.novelty_series.push_back(*novelty);
    }
    const bool stop = novelty && cfg.early_stop_novelty && *novelty < *cfg.early_stop_novelty;
    std::string ckpt;
    if (ckpt_now || (stop && !cfg.checkpoint_dir.empty())) {
      const auto path = cfg.checkpoint_dir / checkpoint_name(step);
      save_checkpoint(model, path);
      report.checkpoints.push_back(path);
      ckpt = path.string();
    }
    if (log_now || novelty || stop || !ckpt.empty()) {
      IntervalMetrics m;
      m.step = step;
      m.train_loss = interval_count ? interval_sum / static_cast<double>(interval_count) : lg.loss;
      if (!heldout.empty()) m.heldout_loss = corpus_nll(model, heldout, cfg.batch_size);
      m.novelty = novelty;
      m.learning_rate = hyper.lr;
      m.checkpoint = ckpt;
      interval_sum = 0.0;
      interval_count = 0;
      if (metrics) {
        nlohmann::json j{{"step", m.step}, {"train_loss", m.train_loss}, {"learning_rate", m.learning_rate}};
        j["heldout_loss"] = m.heldout_loss ? nlohmann::json(*m.heldout_loss) : nlohmann::json(nullptr);
        if (m.novelty) j["novelty"] = *m.novelty;
        if (!m.checkpoint.empty()) j["checkpoint"] = m.checkpoint;
        *metrics << j.dump() << '\n';
        metrics->flush();
      }
      report.intervals.push_back(std::move(m));
    }
    if (stop) {
      report.stopped_early = true;
      break;
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace guti
