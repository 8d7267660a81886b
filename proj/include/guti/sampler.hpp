#pragma once

// Prompt construction and truncated top-k decoding.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guti/catalog.hpp"
#include "guti/model.hpp"
#include "guti/phonology.hpp"
#include "guti/rng.hpp"
#include "guti/tokenizer.hpp"
#include "guti/validator.hpp"

namespace guti {

struct SampleConfig {
  int k = 20;
  double temperature = 1.0;
  std::size_t max_new_tokens = 256;
  std::uint64_t seed = 0;
  std::vector<TokenId> forbid;  // masked to probability zero

  /// Throws UsageError unless 1 <= k <= vocab_size and temperature > 0.
  void validate(std::size_t vocab_size) const;
};

/// PAD, BOS, UNK and every identifier marker.
std::vector<TokenId> default_forbidden(const Vocab& vocab);

/// BOS + form + id1 + theme + id2. With `acrostic` the theme is the target
/// phrase and the acrostic markers are used. Throws UsageError for an unknown
/// form or a theme containing a marker.
std::vector<TokenId> build_prompt(std::string_view form_id, std::string_view theme, const FormCatalog& catalog,
                                  const Vocab& vocab, bool acrostic = false);

struct CandidateSet {
  std::vector<TokenId> ids;   // by descending logit, ties by lower id
  std::vector<double> probs;  // renormalized softmax(logit / temperature)
};

/// Throws UsageError when every token is masked or a candidate logit is not finite.
template <typename T>
CandidateSet top_k_candidates(std::span<const T> logits, const SampleConfig& cfg);

template <typename T>
TokenId top_k_sample(std::span<const T> logits, const SampleConfig& cfg, Rng& rng);

struct Generation {
  std::vector<TokenId> body;  // tokens after id2, EOS excluded
  bool truncated = false;     // stopped without EOS
};

/// Samples until EOS, max_new_tokens or a full context. Randomness comes only
/// from cfg.seed.
Generation generate(const ModelParams<float>& params, std::span<const TokenId> prompt, const SampleConfig& cfg);

struct Candidate {
  std::uint64_t seed = 0;
  Generation generation;
  std::string text;           // decoded sequence without BOS/EOS
  std::optional<Poem> poem;   // empty when the text does not deserialize
  std::optional<ValidationReport> report;
  std::string error;
  bool well_formed = false;
};

struct BatchResult {
  std::vector<Candidate> candidates;
  std::size_t well_formed = 0;

  /// well_formed / n; empty for n = 0.
  std::optional<double> fraction() const;
};

struct BatchRequest {
  std::string form_id;
  std::string theme;
  bool acrostic = false;
  std::size_t n = 1;
  ValidateOptions validate;
};

/// Candidate i uses seed mix_seed(cfg.seed + i). Per-candidate failures are
/// recorded, never thrown.
BatchResult generate_batch(const ModelParams<float>& params, const Vocab& vocab, const FormCatalog& catalog,
                           const PhonologyTable& table, const BatchRequest& request, const SampleConfig& cfg);

}  // namespace guti
