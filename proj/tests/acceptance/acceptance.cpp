// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Criteria 4, 8 and 10 train two full-size models on the toy corpus and take
// several minutes on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "guti/checkpoint.hpp"
#include "guti/kernels.hpp"
#include "guti/novelty.hpp"
#include "guti/sampler.hpp"
#include "guti/trainer.hpp"
#include "guti/utf8.hpp"
#include "guti/validator.hpp"
#include "helpers.hpp"

using namespace guti;
using guti::test::catalog;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-3;
constexpr double kFdStep = 1e-4;
// Norm floor for tensors whose exact gradient is zero (the key bias).
constexpr double kGradFloor = 1e-7;
constexpr double kGradTimeLimit = 60.0;  // seconds
constexpr double kLossOracleTol = 1e-10;
constexpr double kUniformTol = 1e-9;
constexpr int kCausalityTrials = 100;
constexpr double kOverfitNll = 0.1;
constexpr std::size_t kOverfitSteps = 2000;
constexpr int kSamplerDraws = 100000;
constexpr double kChi2Df1Alpha01 = 6.6349;
constexpr int kArgmaxTrials = 10000;
constexpr int kPerturbationsPerFixture = 20;
constexpr std::size_t kDiversitySeeds = 10;
constexpr std::size_t kMinDistinct = 2;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 -------------------------------------------------------------------------

Verdict gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t tensors = 0;
  for (std::uint64_t seed : {11u, 22u, 33u}) {
    ModelConfig c;
    c.n_layers = seed == 22 ? 1 : 2;
    c.n_heads = 2;
    c.d_model = 16;
    c.d_ff = 32;
    c.context_len = 8;
    c.vocab_size = 12;
    c.tie_embeddings = seed != 33;
    auto P = init_params<double>(c, seed);
    Rng rng(seed);
    for (auto& [name, t] : P.named_tensors())
      for (auto& x : t->data) x += 0.3 * rng.normal();
    std::vector<std::vector<TokenId>> seqs;
    for (int b = 0; b < 3; ++b) {
      std::vector<TokenId> s(2 + rng.below(7));
      for (auto& tok : s) tok = static_cast<TokenId>(rng.below(12));
      seqs.push_back(s);
    }
    const auto batch = SequenceBatch::from_sequences(seqs);
    auto grads = backward(P, batch).gradients;
    auto pt = P.named_tensors();
    auto gt = grads.named_tensors();
    for (std::size_t i = 0; i < pt.size(); ++i) {
      double diff2 = 0, na = 0, nf = 0;
      for (auto& x : pt[i].second->data) {
        const std::size_t e = static_cast<std::size_t>(&x - pt[i].second->data.data());
        const double saved = x;
        x = saved + kFdStep;
        const double up = nll_loss(forward(P, batch), batch);
        x = saved - kFdStep;
        const double down = nll_loss(forward(P, batch), batch);
        x = saved;
        const double fd = (up - down) / (2 * kFdStep), an = gt[i].second->data[e];
        diff2 += (fd - an) * (fd - an);
        na += an * an;
        nf += fd * fd;
      }
      const double rel = std::sqrt(diff2) / std::max({std::sqrt(na), std::sqrt(nf), kGradFloor});
      ++tensors;
      if (rel > worst) {
        worst = rel;
        worst_name = pt[i].first;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kGradRelTol && secs < kGradTimeLimit,
          std::to_string(tensors) + " tensors over 3 seeds, worst relative error " + fmt(worst) + " (" + worst_name +
              "), " + fmt(secs) + " s"};
}

// ---- 2 -------------------------------------------------------------------------

Verdict loss_oracle() {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<TokenId>> seqs;
    for (int b = 0; b < 3; ++b) {
      std::vector<TokenId> s(2 + rng.below(8));
      for (auto& t : s) t = static_cast<TokenId>(rng.below(5));
      seqs.push_back(s);
    }
    const auto batch = SequenceBatch::from_sequences(seqs);
    Tensor<double> logits({batch.batch, batch.seq, 5});
    for (auto& x : logits.data) x = 5.0 * rng.normal();
    double num = 0, den = 0;
    for (std::size_t b = 0; b < batch.batch; ++b)
      for (std::size_t t = 1; t < batch.seq; ++t) {
        const double w = batch.mask(b, t);
        if (w == 0) continue;
        const double* row = &logits[(b * batch.seq + t - 1) * 5];
        double z = 0;
        for (int v = 0; v < 5; ++v) z += std::exp(row[v]);
        num += w * -std::log(std::exp(row[batch.token(b, t)]) / z);
        den += w;
      }
    worst = std::max(worst, std::abs(nll_loss(logits, batch) - num / den));
  }
  double worst_uniform = 0.0;
  for (std::size_t V : {2u, 4u, 7u, 100u}) {
    const std::vector<std::vector<TokenId>> seqs{{0, 1, 1}, {1, 0}};
    const auto batch = SequenceBatch::from_sequences(seqs);
    Tensor<double> logits({batch.batch, batch.seq, V}, -3.25);
    worst_uniform = std::max(worst_uniform, std::abs(nll_loss(logits, batch) - std::log(double(V))));
  }
  return {worst < kLossOracleTol && worst_uniform < kUniformTol,
          "max |loss - brute force| " + fmt(worst) + ", max |uniform - ln V| " + fmt(worst_uniform)};
}

// ---- 3 -------------------------------------------------------------------------

Verdict causality() {
  ModelConfig c;
  c.n_layers = 2;
  c.n_heads = 4;
  c.d_model = 32;
  c.d_ff = 64;
  c.context_len = 24;
  c.vocab_size = 40;
  auto P = init_params<float>(c, 3);
  Rng rng(3);
  for (auto& [name, t] : P.named_tensors())
    for (auto& x : t->data) x += static_cast<float>(0.1 * rng.normal());
  int violations = 0;
  for (int trial = 0; trial < kCausalityTrials; ++trial) {
    std::vector<TokenId> a(24);
    for (auto& t : a) t = static_cast<TokenId>(rng.below(40));
    const std::size_t i = rng.below(23);
    auto b = a;
    for (std::size_t t = i + 1; t < 24; ++t) b[t] = static_cast<TokenId>(rng.below(40));
    const std::vector<std::vector<TokenId>> sa{a}, sb{b};
    const auto la = forward(P, SequenceBatch::from_sequences(sa));
    const auto lb = forward(P, SequenceBatch::from_sequences(sb));
    if (std::memcmp(la.ptr(), lb.ptr(), (i + 1) * 40 * sizeof(float)) != 0) ++violations;
  }
  return {violations == 0, std::to_string(kCausalityTrials) + " trials, " + std::to_string(violations) +
                               " with a changed prefix logit (bitwise comparison)"};
}

// ---- shared training -------------------------------------------------------------

struct Trained {
  std::vector<SerializedSample> samples;
  Vocab vocab;
  ModelParams<float> model;
  TrainReport report;
  double nll = 0.0;
};

Trained train_toy(std::vector<Poem> poems, std::uint64_t seed) {
  Trained t;
  for (const auto& p : poems) t.samples.push_back(serialize(p, catalog()));
  t.vocab = build_vocab(t.samples, 1, catalog().marker_tokens());
  ModelConfig mc;  // library defaults
  mc.vocab_size = static_cast<int>(t.vocab.size());
  t.model = init_params<float>(mc, seed);
  TrainConfig tc;
  tc.max_steps = kOverfitSteps;
  tc.holdout_fraction = 0.0;
  tc.seed = seed;
  tc.log_interval = 500;
  std::ostringstream metrics;
  t.report = fine_tune(t.samples, t.vocab, t.model, tc, &metrics);
  std::cout << metrics.str();
  std::vector<std::vector<TokenId>> seqs;
  for (const auto& s : t.samples) seqs.push_back(encode_sample(s, t.vocab));
  t.nll = corpus_nll(t.model, seqs);
  return t;
}

std::string greedy_body(const Trained& t, std::vector<TokenId> prompt) {
  SampleConfig sc;
  sc.k = 1;
  sc.forbid = default_forbidden(t.vocab);
  sc.max_new_tokens = static_cast<std::size_t>(t.model.config.context_len);
  const Generation g = generate(t.model, prompt, sc);
  return g.truncated ? std::string("<truncated>") : decode(g.body, t.vocab);
}

std::vector<TokenId> prompt_of(const SerializedSample& s, const Vocab& v) {
  std::vector<TokenId> p{Vocab::bos};
  const auto rest = encode(s.prompt(), v);
  p.insert(p.end(), rest.begin(), rest.end());
  return p;
}

// ---- 4 -------------------------------------------------------------------------

Verdict overfit(const Trained& t) {
  const NoveltyIndex index(test::toy_corpus());
  std::size_t exact = 0;
  double max_novelty = 0.0;
  for (const auto& s : t.samples) {
    const std::string body = greedy_body(t, prompt_of(s, t.vocab));
    if (body == s.field(Field::body)) ++exact;
    Poem p;
    try {
      p.body = parse_body(body);
      max_novelty = std::max(max_novelty, index.score(p).score);
    } catch (const std::exception&) {
      max_novelty = 1.0;
    }
  }
  const bool pass = t.nll < kOverfitNll && exact == t.samples.size() && max_novelty == 0.0;
  return {pass, std::to_string(t.samples.size()) + " poems, " + std::to_string(t.report.steps_run) +
                    " steps in " + fmt(t.report.wall_seconds) + " s, per-token NLL " + fmt(t.nll) +
                    ", verbatim greedy bodies " + std::to_string(exact) + "/" + std::to_string(t.samples.size()) +
                    ", max novelty " + fmt(max_novelty)};
}

// ---- 5 -------------------------------------------------------------------------

Verdict sampler_statistics() {
  const std::vector<float> logits{3.f, 2.f, 1.f, 0.f};
  SampleConfig cfg;
  cfg.k = 2;
  const double p0 = std::exp(1.0) / (1.0 + std::exp(1.0));
  Rng rng(20240);
  std::vector<long> counts(4, 0);
  for (int i = 0; i < kSamplerDraws; ++i) ++counts[top_k_sample<float>(logits, cfg, rng)];
  const double e0 = kSamplerDraws * p0, e1 = kSamplerDraws * (1 - p0);
  const double chi2 = std::pow(counts[0] - e0, 2) / e0 + std::pow(counts[1] - e1, 2) / e1;
  const bool outside = counts[2] + counts[3] > 0;

  SampleConfig greedy;
  greedy.k = 1;
  int mismatches = 0;
  Rng gen(1);
  for (int trial = 0; trial < kArgmaxTrials; ++trial) {
    std::vector<float> l(4);
    for (auto& x : l) x = static_cast<float>(gen.normal());
    if (top_k_sample<float>(l, greedy, gen) != std::max_element(l.begin(), l.end()) - l.begin()) ++mismatches;
  }
  return {chi2 < kChi2Df1Alpha01 && !outside && mismatches == 0,
          "k=2 counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + ", chi2 " + fmt(chi2) +
              " < " + fmt(kChi2Df1Alpha01) + ", draws outside top-k " + std::to_string(counts[2] + counts[3]) +
              ", k=1 argmax mismatches " + std::to_string(mismatches) + "/" + std::to_string(kArgmaxTrials)};
}

// ---- 6 -------------------------------------------------------------------------

Verdict fixtures() {
  const auto& poems = test::showcase();
  const auto& table = test::phonology();
  std::size_t well = 0, caught = 0, trials = 0;
  Rng rng(6);
  const std::u32string pool = U"山水风月花鸟云天人心";
  for (const auto& p : poems) {
    if (validate(p, catalog(), table).well_formed) ++well;
    for (int k = 0; k < kPerturbationsPerFixture; ++k) {
      Poem q = p;
      auto& line = q.body[rng.below(q.body.size())].characters;
      if (k % 2 == 0 && line.size() > 1)
        line.erase(rng.below(line.size()), 1);
      else
        line.insert(line.begin() + static_cast<std::ptrdiff_t>(rng.below(line.size() + 1)), pool[rng.below(pool.size())]);
      ++trials;
      if (!validate(q, catalog(), table).well_formed) ++caught;
    }
  }
  return {well == poems.size() && caught == trials,
          std::to_string(well) + "/" + std::to_string(poems.size()) + " fixtures well formed, " +
              std::to_string(caught) + "/" + std::to_string(trials) + " single-character edits rejected"};
}

// ---- 7 -------------------------------------------------------------------------

Verdict pairing() {
  const auto& fc = catalog().function_characters();
  const auto& spec = catalog().at("对联");
  std::size_t couplets = 0, paired = 0;
  for (const auto& p : test::showcase()) {
    if (p.source_id.rfind("couplet-", 0) != 0 || p.source_id.rfind("couplet-extra", 0) == 0) continue;
    ++couplets;
    const auto rs = check_pairing(p, spec, fc);
    if (std::all_of(rs.begin(), rs.end(), [](const RuleResult& r) { return r.outcome == guti::Outcome::pass; }))
      ++paired;
  }
  const Poem& qilv = test::showcase_poem("qiusi-qilv");
  const auto rs = check_pairing(qilv, catalog().at(qilv.form_id), fc);
  const bool slots = catalog().at("七律").pairing_slots == std::vector<std::pair<int, int>>{{2, 3}, {4, 5}};
  const bool qilv_ok = slots && rs.size() == 2 && rs[0].outcome == guti::Outcome::pass &&
                       rs[1].outcome == guti::Outcome::pass;
  return {couplets == 12 && paired == couplets && qilv_ok,
          std::to_string(paired) + "/" + std::to_string(couplets) + " table couplets pair; 七律 秋思 lines 3/4 " +
              std::string(rs.size() > 0 ? outcome_name(rs[0].outcome) : "missing") + ", 5/6 " +
              std::string(rs.size() > 1 ? outcome_name(rs[1].outcome) : "missing")};
}

// ---- 8 -------------------------------------------------------------------------

const Poem& jingyesi() {
  for (const auto& p : test::toy_corpus())
    if (p.source_id == "jingyesi") return p;
  throw std::runtime_error("toy corpus lacks jingyesi");
}

Verdict acrostic(const Trained& t) {
  const std::string theme = acrostic_transform(jingyesi(), catalog()).theme;
  const auto prompt = build_prompt(jingyesi().form_id, "床疑举低", catalog(), t.vocab, true);
  const std::string body = greedy_body(t, prompt);
  std::string initials;
  Verdict o{false, ""};
  try {
    Poem p;
    p.body = parse_body(body);
    for (const auto& l : p.body) initials += utf8::encode(l.characters.substr(0, 1));
    o.pass = theme == "床疑举低" && check_acrostic(p, "床疑举低").outcome == guti::Outcome::pass;
  } catch (const std::exception& e) {
    initials = std::string("unparseable: ") + e.what();
  }
  o.detail = "transform theme " + theme + "; " + std::to_string(t.samples.size()) + " acrostic samples, NLL " +
             fmt(t.nll) + "; prompt " + decode(prompt, t.vocab) + " -> " + body + " (initials " + initials + ")";
  return o;
}

// ---- 9 -------------------------------------------------------------------------

Verdict round_trips(const Trained& t) {
  std::size_t n = 0, ser_ok = 0, tok_ok = 0;
  std::vector<SerializedSample> all;
  for (const auto* set : {&test::showcase(), &test::toy_corpus()})
    for (const auto& p : *set) {
      for (const Poem& v : {p, acrostic_transform(p, catalog())}) {
        const auto s = serialize(v, catalog());
        Poem back = deserialize(s.text, catalog());
        back.source_id = v.source_id;
        ++n;
        if (back == v) ++ser_ok;
        all.push_back(s);
      }
    }
  const Vocab v = build_vocab(all, 1, catalog().marker_tokens());
  for (const auto& s : all)
    if (decode(encode(s.text, v), v) == s.text) ++tok_ok;

  const auto path = std::filesystem::temp_directory_path() / "guti_acceptance.ckpt";
  save_checkpoint(t.model, path);
  const auto loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  std::vector<std::vector<TokenId>> seqs;
  for (std::size_t i = 0; i < t.samples.size(); i += 7) seqs.push_back(encode_sample(t.samples[i], t.vocab));
  const auto batch = SequenceBatch::from_sequences(seqs);
  const auto a = forward(t.model, batch), b = forward(loaded, batch);
  const bool bitwise = loaded == t.model && a.size() == b.size() &&
                       std::memcmp(a.ptr(), b.ptr(), a.size() * sizeof(float)) == 0;
  return {ser_ok == n && tok_ok == n && bitwise,
          "serialize " + std::to_string(ser_ok) + "/" + std::to_string(n) + ", encode/decode " +
              std::to_string(tok_ok) + "/" + std::to_string(n) + ", checkpoint forward " +
              (bitwise ? "bitwise equal" : "DIFFERS")};
}

// ---- 10 ------------------------------------------------------------------------

std::size_t distinct_bodies(const Trained& t, const std::vector<TokenId>& prompt) {
  std::set<std::vector<TokenId>> bodies;
  for (std::size_t i = 0; i < kDiversitySeeds; ++i) {
    SampleConfig sc;
    sc.k = 20;
    sc.seed = mix_seed(1000 + i);
    sc.forbid = default_forbidden(t.vocab);
    sc.max_new_tokens = 128;
    bodies.insert(generate(t.model, prompt, sc).body);
  }
  return bodies.size();
}

Verdict diversity(const Trained& t) {
  // A theme absent from the corpus; a memorized prompt is reported alongside.
  const auto fresh = build_prompt("五绝", "江雪", catalog(), t.vocab);
  const auto known = prompt_of(t.samples.front(), t.vocab);
  const std::size_t n_fresh = distinct_bodies(t, fresh), n_known = distinct_bodies(t, known);
  return {n_fresh >= kMinDistinct,
          "k=20, " + std::to_string(kDiversitySeeds) + " seeds: " + std::to_string(n_fresh) +
              " distinct bodies for 五绝(格式)江雪(标题); " + std::to_string(n_known) +
              " for the memorized training prompt " + std::string(t.samples.front().prompt())};
}

}  // namespace

int main() {
  std::cout << "kernels: " << kernels::isa_name(kernels::active_isa()) << "\n";
  std::vector<std::pair<std::string, Verdict>> results;
  auto run = [&](const std::string& name, const std::function<Verdict()>& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o{false, ""};
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "  [" << name << "] " << fmt(seconds_since(t0)) << " s\n" << std::flush;
    results.emplace_back(name, o);
  };

  run("1 gradient check", gradient_check);
  run("2 loss oracle", loss_oracle);
  run("3 causality", causality);
  run("5 top-k sampler", sampler_statistics);
  run("6 fixture validation", fixtures);
  run("7 pairing", pairing);

  std::cout << "training the overfit model (" << kOverfitSteps << " steps)\n" << std::flush;
  Trained toy;
  run("4 overfit", [&] {
    toy = train_toy(test::toy_corpus(), 1);
    return overfit(toy);
  });

  std::cout << "training the acrostic model (" << kOverfitSteps << " steps)\n" << std::flush;
  Trained acro;
  run("8 acrostic", [&] {
    std::vector<Poem> poems;
    for (const auto& p : test::toy_corpus())
      if (catalog().at(p.form_id).form_class != FormClass::couplet) poems.push_back(acrostic_transform(p, catalog()));
    acro = train_toy(poems, 2);
    return acrostic(acro);
  });
  run("9 round trips", [&] { return round_trips(toy); });
  run("10 diversity", [&] { return diversity(toy); });

  std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return std::stoi(a.first) < std::stoi(b.first);
  });
  int failed = 0;
  std::cout << "\n";
  for (const auto& [name, o] : results) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << "\n";
    failed += !o.pass;
  }
  std::cout << (failed ? std::to_string(failed) + " criterion(s) failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
