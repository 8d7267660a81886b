#pragma once

// Adam training loop over serialized samples, with a held-out shard, periodic
// checkpoints and a retrieval (novelty) probe.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guti/corpus.hpp"
#include "guti/model.hpp"
#include "guti/tokenizer.hpp"

namespace guti {

struct TrainConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t max_steps = 2000;
  std::size_t warmup_steps = 100;  // linear ramp, then constant
  std::size_t log_interval = 50;
  std::size_t checkpoint_interval = 0;  // 0: only the final checkpoint
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  std::uint64_t seed = 0;
  std::size_t novelty_eval_interval = 0;  // 0: never
  std::size_t novelty_probe_size = 4;
  std::optional<double> early_stop_novelty;  // stop once probe novelty drops below this
  double holdout_fraction = 0.05;

  /// Throws UsageError on a non-positive learning rate, zero batch size or
  /// out-of-range betas, epsilon or holdout fraction.
  void validate() const;
};

/// Adam hyperparameters for one update. lr is the scheduled rate for this step.
struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam on a flat block; `step` is 1-based.
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v, std::size_t step,
                 const AdamHyper& hyper);

struct AdamState {
  std::size_t step = 0;
  ModelParams<float> m, v;

  static AdamState zeros(const ModelConfig& config);
};

/// One update of every tensor. Returns false, leaving params and state
/// untouched, when a gradient is not finite. Throws UsageError on a shape mismatch.
bool adam_step(ModelParams<float>& params, const ModelParams<float>& grads, AdamState& state, const AdamHyper& hyper);

/// Learning rate for 1-based `step` under linear warmup.
double scheduled_lr(const TrainConfig& cfg, std::size_t step);

/// Deterministic split by FNV-1a hash of the source id.
bool is_heldout(std::string_view source_id, double fraction);

/// Token-weighted mean NLL over whole sequences, evaluated in batches.
double corpus_nll(const ModelParams<float>& params, std::span<const std::vector<TokenId>> sequences,
                  std::size_t batch_size = 16);

struct IntervalMetrics {
  std::size_t step = 0;
  double train_loss = 0.0;  // mean batch loss over the interval
  std::optional<double> heldout_loss;
  std::optional<double> novelty;
  double learning_rate = 0.0;
  std::string checkpoint;
};

struct TrainReport {
  std::size_t steps_run = 0;
  std::vector<double> step_losses;
  std::vector<IntervalMetrics> intervals;
  std::vector<double> novelty_series;
  std::vector<std::filesystem::path> checkpoints;
  std::size_t skipped_steps = 0;  // non-finite gradients
  std::size_t train_sequences = 0;
  std::size_t heldout_sequences = 0;
  bool stopped_early = false;
  double wall_seconds = 0.0;
};

/// Trains `model` in place. Throws UsageError on an empty corpus or a sequence
/// longer than the context, IoError when a checkpoint cannot be written.
/// When `metrics` is set, each interval is written to it as one JSON line.
TrainReport fine_tune(std::span<const SerializedSample> corpus, const Vocab& vocab, ModelParams<float>& model,
                      const TrainConfig& cfg, std::ostream* metrics = nullptr);

}  // namespace guti
