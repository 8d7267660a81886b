#include "guti/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "guti/corpus.hpp"
#include "guti/error.hpp"

namespace guti {

void SampleConfig::validate(std::size_t vocab_size) const {
  if (k < 1) throw UsageError("top-k must be at least 1");
  if (static_cast<std::size_t>(k) > vocab_size)
    throw UsageError("top-k " + std::to_string(k) + " exceeds vocabulary size " + std::to_string(vocab_size));
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw UsageError("temperature must be positive");
}

std::vector<TokenId> default_forbidden(const Vocab& vocab) {
  std::vector<TokenId> out{Vocab::pad, Vocab::bos, Vocab::unk};
  for (std::size_t i = 0; i < vocab.marker_count(); ++i)
    out.push_back(static_cast<TokenId>(Vocab::num_reserved + i));
  return out;
}

std::vector<TokenId> build_prompt(std::string_view form_id, std::string_view theme, const FormCatalog& catalog,
                                  const Vocab& vocab, bool acrostic) {
  const FormSpec& spec = catalog.at(form_id);
  for (const auto& m : catalog.marker_tokens())
    if (theme.find(m) != std::string_view::npos) throw UsageError("theme contains identifier marker " + m);
  const MarkerPair& markers = catalog.markers(spec.form_class, acrostic);
  std::string text(form_id);
  text += markers.id1;
  text += theme;
  text += markers.id2;
  std::vector<TokenId> ids{Vocab::bos};
  const auto body = encode(text, vocab);
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

template <typename T>
CandidateSet top_k_candidates(std::span<const T> logits, const SampleConfig& cfg) {
  cfg.validate(logits.size());
  std::vector<char> masked(logits.size(), 0);
  for (TokenId id : cfg.forbid)
    if (id >= 0 && static_cast<std::size_t>(id) < logits.size()) masked[static_cast<std::size_t>(id)] = 1;
  std::vector<TokenId> order;
  order.reserve(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (!masked[i]) order.push_back(static_cast<TokenId>(i));
  if (order.empty()) throw UsageError("every token is masked");

  const std::size_t k = std::min(order.size(), static_cast<std::size_t>(cfg.k));
  auto before = [&](TokenId a, TokenId b) {
    const T la = logits[static_cast<std::size_t>(a)], lb = logits[static_cast<std::size_t>(b)];
    return la > lb || (la == lb && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);
  order.resize(k);

  CandidateSet set;
  set.ids = order;
  const double top = static_cast<double>(logits[static_cast<std::size_t>(order[0])]);
  double sum = 0.0;
  for (TokenId id : order) {
    const double z = static_cast<double>(logits[static_cast<std::size_t>(id)]);
    if (!std::isfinite(z)) throw UsageError("non-finite logit for candidate token " + std::to_string(id));
    const double p = std::exp((z - top) / cfg.temperature);
    set.probs.push_back(p);
    sum += p;
  }
  for (auto& p : set.probs) p /= sum;
  return set;
}

template <typename T>
TokenId top_k_sample(std::span<const T> logits, const SampleConfig& cfg, Rng& rng) {
  const CandidateSet set = top_k_candidates(logits, cfg);
  if (set.ids.size() == 1) return set.ids[0];
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    acc += set.probs[i];
    if (u < acc) return set.ids[i];
  }
  return set.ids.back();  // rounding left u just above the cumulative sum
}

Generation generate(const ModelParams<float>& params, std::span<const TokenId> prompt, const SampleConfig& cfg) {
  const auto context = static_cast<std::size_t>(params.config.context_len);
  if (prompt.empty()) throw UsageError("empty prompt");
  if (prompt.size() > context)
    throw UsageError("prompt of " + std::to_string(prompt.size()) + " tokens exceeds context length " +
                     std::to_string(context));
  cfg.validate(static_cast<std::size_t>(params.config.vocab_size));

  Rng rng(cfg.seed);
  DecodeState<float> state(params);
  std::span<const float> logits;
  for (TokenId id : prompt) logits = state.push(id);

  Generation g;
  while (true) {
    // A full context leaves no room for the token we would sample next.
    if (g.body.size() >= cfg.max_new_tokens || state.full()) {
      g.truncated = true;
      break;
    }
    const TokenId next = top_k_sample(logits, cfg, rng);
    if (next == Vocab::eos) break;
    g.body.push_back(next);
    logits = state.push(next);
  }
  return g;
}

std::optional<double> BatchResult::fraction() const {
  if (candidates.empty()) return std::nullopt;
  return static_cast<double>(well_formed) / static_cast<double>(candidates.size());
}

BatchResult generate_batch(const ModelParams<float>& params, const Vocab& vocab, const FormCatalog& catalog,
                           const PhonologyTable& table, const BatchRequest& request, const SampleConfig& cfg) {
  BatchResult result;
  if (request.n == 0) return result;
  const std::vector<TokenId> prompt = build_prompt(request.form_id, request.theme, catalog, vocab, request.acrostic);
  for (std::size_t i = 0; i < request.n; ++i) {
    Candidate c;
    c.seed = mix_seed(cfg.seed + i);
    try {
      SampleConfig local = cfg;
      local.seed = c.seed;
      c.generation = generate(params, prompt, local);
      std::vector<TokenId> all = prompt;
      all.insert(all.end(), c.generation.body.begin(), c.generation.body.end());
      c.text = decode(all, vocab);
      if (c.generation.truncated) c.error = "stopped without EOS";
      c.poem = deserialize(c.text, catalog);
      c.report = validate(*c.poem, catalog, table, request.validate);
      c.well_formed = c.report->well_formed && !c.generation.truncated;
    } catch (const std::exception& e) {
      c.error = c.error.empty() ? e.what() : c.error + "; " + e.what();
      c.well_formed = false;
    }
    if (c.well_formed) ++result.well_formed;
    result.candidates.push_back(std::move(c));
  }
  return result;
}

template CandidateSet top_k_candidates<float>(std::span<const float>, const SampleConfig&);
template CandidateSet top_k_candidates<double>(std::span<const double>, const SampleConfig&);
template TokenId top_k_sample<float>(std::span<const float>, const SampleConfig&, Rng&);
template TokenId top_k_sample<double>(std::span<const double>, const SampleConfig&, Rng&);

}  // namespace guti
