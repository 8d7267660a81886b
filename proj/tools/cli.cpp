#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <streambuf>

#include "guti/catalog.hpp"
#include "guti/checkpoint.hpp"
#include "guti/corpus.hpp"
#include "guti/dataset.hpp"
#include "guti/error.hpp"
#include "guti/kernels.hpp"
#include "guti/novelty.hpp"
#include "guti/phonology.hpp"
#include "guti/sampler.hpp"
#include "guti/tokenizer.hpp"
#include "guti/trainer.hpp"
#include "guti/validator.hpp"

namespace guti::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kDatasetFile = "dataset.jsonl";
constexpr const char* kVocabFile = "vocab.txt";

// Failure to read something the user pointed us at is a user error (exit 1);
// failing to write our own outputs is not.
template <typename F>
auto load_input(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const IoError& e) {
    throw UsageError(e.what());
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed, const char* name, std::ostream& err) {
  if (seed) return *seed;
  const std::uint64_t s = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  err << name << " not given; using " << s << "\n";
  return s;
}

class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int c) override {
    if (c == EOF) return !EOF;
    const int r1 = a_->sputc(static_cast<char>(c)), r2 = b_->sputc(static_cast<char>(c));
    return r1 == EOF || r2 == EOF ? EOF : c;
  }
  std::streamsize xsputn(const char* s, std::streamsize n) override {
    a_->sputn(s, n);
    b_->sputn(s, n);
    return n;
  }
  int sync() override { return a_->pubsync() | b_->pubsync(); }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

json positions_json(const std::vector<Position>& ps) {
  json arr = json::array();
  for (const auto& p : ps) arr.push_back({{"line", p.line + 1}, {"column", p.column < 0 ? json(nullptr) : json(p.column + 1)}});
  return arr;
}

json report_json(const ValidationReport& r) {
  json rules = json::array();
  for (const auto& rr : r.results)
    rules.push_back({{"rule", rr.rule},
                     {"outcome", std::string(outcome_name(rr.outcome))},
                     {"hard", rr.hard},
                     {"positions", positions_json(rr.positions)},
                     {"message", rr.message}});
  return {{"form", r.form_id}, {"well_formed", r.well_formed}, {"rules", rules}};
}

std::string failure_summary(const ValidationReport& r) {
  std::string s;
  for (const auto* f : r.failures(false)) {
    if (!s.empty()) s += " | ";
    s += f->rule + (f->hard ? "" : "(advisory)") + ": " + f->message;
  }
  return s;
}

// ---- ingest -------------------------------------------------------------------

struct IngestArgs {
  std::string corpus;
  std::string out;
  std::string catalog;
  int min_count = 1;
  bool acrostic = false;
  std::size_t context = 256;
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  const FormCatalog catalog = load_input([&] { return FormCatalog::load(a.catalog); });
  IngestOptions opts;
  opts.max_sequence_tokens = a.context;
  const IngestResult res = load_input([&] { return ingest_corpus(a.corpus, catalog, opts); });
  for (const auto& d : res.diagnostics) err << a.corpus << ":" << d.line_number << ": skipped: " << d.message << "\n";
  if (res.poems.empty()) throw UsageError("no usable records in " + a.corpus);

  std::vector<SerializedSample> samples;
  std::size_t acrostic_skipped = 0;
  for (const auto& p : res.poems) samples.push_back(serialize(p, catalog));
  if (a.acrostic) {
    for (const auto& p : res.poems) {
      if (p.acrostic) continue;
      Poem t = acrostic_transform(p, catalog);
      t.source_id += "#acrostic";
      SerializedSample s = serialize(t, catalog);
      if (sequence_token_count(s) > a.context) {
        ++acrostic_skipped;
        continue;
      }
      samples.push_back(std::move(s));
    }
  }
  const Vocab vocab = build_vocab(samples, a.min_count, catalog.marker_tokens());

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  write_dataset(fs::path(a.out) / kDatasetFile, samples);
  vocab.save(fs::path(a.out) / kVocabFile);

  out << json{{"records", res.records},
              {"poems", res.poems.size()},
              {"skipped", res.diagnostics.size()},
              {"samples", samples.size()},
              {"acrostic_skipped", acrostic_skipped},
              {"vocab_size", vocab.size()},
              {"dataset", (fs::path(a.out) / kDatasetFile).string()},
              {"vocab", (fs::path(a.out) / kVocabFile).string()}}
             .dump()
      << "\n";
  return kOk;
}

// ---- train ----------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::optional<std::string> init_from;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> model_seed;
  std::optional<double> early_stop;
  TrainConfig train;
  ModelConfig model;
  bool untied = false;
};

int cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  a.train.seed = resolve_seed(a.seed, "--seed", err);
  a.train.early_stop_novelty = a.early_stop;
  a.train.validate();
  const auto samples = load_input([&] { return read_dataset(fs::path(a.data) / kDatasetFile); });
  const Vocab vocab = load_input([&] { return Vocab::load(fs::path(a.data) / kVocabFile); });
  if (samples.empty()) throw UsageError("dataset " + a.data + " is empty");
  if (a.train.max_steps == 0) {
    err << "max-steps is 0; nothing to do\n";
    return kOk;
  }

  ModelParams<float> model;
  if (a.init_from) {
    model = load_input([&] { return load_checkpoint(*a.init_from); });
    if (static_cast<std::size_t>(model.config.vocab_size) != vocab.size())
      throw UsageError("checkpoint vocabulary size differs from " + a.data + "/" + kVocabFile);
    err << "initialized from " << *a.init_from << "; model shape flags ignored\n";
  } else {
    a.model.vocab_size = static_cast<int>(vocab.size());
    a.model.tie_embeddings = !a.untied;
    a.model.validate();
    model = init_params<float>(a.model, resolve_seed(a.model_seed, "--model-seed", err));
  }

  a.train.checkpoint_dir = a.out;
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  vocab.save(fs::path(a.out) / kVocabFile);
  std::ofstream metrics_file(fs::path(a.out) / "metrics.jsonl", std::ios::binary | std::ios::trunc);
  if (!metrics_file) throw IoError("cannot write " + (fs::path(a.out) / "metrics.jsonl").string());
  TeeBuf tee(out.rdbuf(), metrics_file.rdbuf());
  std::ostream metrics(&tee);

  err << "kernels: " << kernels::isa_name(kernels::active_isa()) << ", parameters: " << model.parameter_count()
      << "\n";
  const TrainReport report = fine_tune(samples, vocab, model, a.train, &metrics);
  metrics.flush();
  err << "steps " << report.steps_run << ", train sequences " << report.train_sequences << ", held-out "
      << report.heldout_sequences << ", skipped steps " << report.skipped_steps << ", wall " << report.wall_seconds
      << " s" << (report.stopped_early ? ", stopped early on novelty" : "") << "\n";
  for (const auto& c : report.checkpoints) err << "checkpoint " << c.string() << "\n";
  return kOk;
}

// ---- generate -------------------------------------------------------------------

struct GenerateArgs {
  std::string checkpoint;
  std::string vocab;
  std::string catalog;
  std::string phonology;
  std::string form;
  std::optional<std::string> theme;
  std::optional<std::string> acrostic;
  std::size_t n = 1;
  int k = 20;
  double temperature = 1.0;
  std::size_t max_tokens = 256;
  std::optional<std::uint64_t> seed;
  bool json_out = false;
  bool strict_phonology = false;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.theme && a.acrostic) throw UsageError("--theme and --acrostic are mutually exclusive");
  const FormCatalog catalog = load_input([&] { return FormCatalog::load(a.catalog); });
  catalog.at(a.form);
  if (a.acrostic) {
    const FormSpec& spec = catalog.at(a.form);
    if (spec.form_class == FormClass::couplet) throw UsageError("acrostic generation needs a poem form, not a couplet");
  }
  if (a.n == 0) return kOk;
  const ModelParams<float> model = load_input([&] { return load_checkpoint(a.checkpoint); });
  const std::string vocab_path = a.vocab.empty() ? (fs::path(a.checkpoint).parent_path() / kVocabFile).string() : a.vocab;
  const Vocab vocab = load_input([&] { return Vocab::load(vocab_path); });
  if (static_cast<std::size_t>(model.config.vocab_size) != vocab.size())
    throw UsageError("checkpoint vocabulary size differs from " + vocab_path);
  const PhonologyTable table = load_input([&] { return PhonologyTable::load(a.phonology); });

  SampleConfig sc;
  sc.k = a.k;
  sc.temperature = a.temperature;
  sc.max_new_tokens = a.max_tokens;
  sc.seed = resolve_seed(a.seed, "--seed", err);
  sc.forbid = default_forbidden(vocab);
  sc.validate(vocab.size());

  BatchRequest req;
  req.form_id = a.form;
  req.acrostic = a.acrostic.has_value();
  req.theme = a.acrostic ? *a.acrostic : a.theme.value_or("");
  req.n = a.n;
  req.validate.strict_phonology = a.strict_phonology;
  const BatchResult res = generate_batch(model, vocab, catalog, table, req, sc);

  for (std::size_t i = 0; i < res.candidates.size(); ++i) {
    const Candidate& c = res.candidates[i];
    std::string body;
    if (c.poem) body = c.poem->body_text();
    else body = decode(c.generation.body, vocab);
    if (a.json_out) {
      json j{{"index", i},
             {"seed", c.seed},
             {"form", req.form_id},
             {"theme", req.theme},
             {"acrostic", req.acrostic},
             {"body", body},
             {"text", c.text},
             {"truncated", c.generation.truncated},
             {"well_formed", c.well_formed}};
      if (!c.error.empty()) j["error"] = c.error;
      if (c.report) j["report"] = report_json(*c.report);
      out << j.dump() << "\n";
    } else {
      out << "# " << (i + 1) << " seed=" << c.seed << " well_formed=" << (c.well_formed ? "true" : "false") << "\n";
      if (c.poem)
        for (const auto& line : c.poem->body) out << line.text() << "\n";
      else
        out << body << "\n";
      if (!c.error.empty()) err << "candidate " << (i + 1) << ": " << c.error << "\n";
      if (c.report) {
        const std::string f = failure_summary(*c.report);
        if (!f.empty()) err << "candidate " << (i + 1) << ": " << f << "\n";
      }
    }
  }
  err << "well-formed " << res.well_formed << "/" << res.candidates.size() << "\n";
  return kOk;
}

// ---- validate -------------------------------------------------------------------

struct ValidateArgs {
  std::string poems;
  std::string catalog;
  std::string phonology;
  bool json_out = false;
  bool skip_unknown = false;
  bool strict_phonology = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const FormCatalog catalog = load_input([&] { return FormCatalog::load(a.catalog); });
  const PhonologyTable table = load_input([&] { return PhonologyTable::load(a.phonology); });
  std::ifstream in(a.poems, std::ios::binary);
  if (!in) throw UsageError("cannot read " + a.poems);

  ValidateOptions opts;
  opts.strict_phonology = a.strict_phonology;
  std::size_t total = 0, good = 0, skipped = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Poem poem;
    try {
      poem = parse_record(line, catalog);
    } catch (const UsageError& e) {
      const std::string where = a.poems + ":" + std::to_string(line_no);
      if (a.skip_unknown && std::string(e.what()).rfind("unknown form", 0) == 0) {
        err << where << ": skipped: " << e.what() << "\n";
        ++skipped;
        continue;
      }
      throw UsageError(where + ": " + e.what());
    }
    if (poem.source_id.empty()) poem.source_id = "record-" + std::to_string(line_no);
    const ValidationReport r = validate(poem, catalog, table, opts);
    ++total;
    if (r.well_formed) ++good;
    if (a.json_out) {
      json j = report_json(r);
      j["source_id"] = poem.source_id;
      j["line"] = line_no;
      out << j.dump() << "\n";
    } else {
      out << poem.source_id << "\t" << (r.well_formed ? "well-formed" : "ill-formed");
      const std::string f = failure_summary(r);
      if (!f.empty()) out << "\t" << f;
      out << "\n";
    }
  }
  std::ostream& summary = a.json_out ? err : out;
  if (total == 0) summary << "rate n/a (0 poems)\n";
  else summary << "rate " << static_cast<double>(good) / static_cast<double>(total) << " (" << good << "/" << total << ")\n";
  if (skipped) err << "skipped " << skipped << " record(s) with unknown forms\n";
  return kOk;
}

// ---- evaluate -------------------------------------------------------------------

struct EvaluateArgs {
  std::string checkpoint;
  std::string data;
  std::string catalog;
  std::string phonology;
  std::size_t probes = 16;
  double holdout = 0.05;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream&) {
  const FormCatalog catalog = load_input([&] { return FormCatalog::load(a.catalog); });
  const PhonologyTable table = load_input([&] { return PhonologyTable::load(a.phonology); });
  const ModelParams<float> model = load_input([&] { return load_checkpoint(a.checkpoint); });
  const auto samples = load_input([&] { return read_dataset(fs::path(a.data) / kDatasetFile); });
  const Vocab vocab = load_input([&] { return Vocab::load(fs::path(a.data) / kVocabFile); });
  if (static_cast<std::size_t>(model.config.vocab_size) != vocab.size())
    throw UsageError("checkpoint vocabulary size differs from " + a.data + "/" + kVocabFile);
  if (samples.empty()) throw UsageError("dataset " + a.data + " is empty");

  std::vector<std::vector<TokenId>> train, heldout;
  std::vector<const SerializedSample*> train_samples;
  NoveltyIndex index;
  for (const auto& s : samples) {
    auto ids = encode_sample(s, vocab);
    if (ids.size() > static_cast<std::size_t>(model.config.context_len))
      throw UsageError("sample " + s.source_id + " exceeds the model context");
    if (is_heldout(s.source_id, a.holdout)) {
      heldout.push_back(std::move(ids));
    } else {
      train.push_back(std::move(ids));
      train_samples.push_back(&s);
      index.add(deserialize(s.text, catalog));
    }
  }

  json j;
  j["train_nll"] = train.empty() ? json(nullptr) : json(corpus_nll(model, train));
  j["heldout_nll"] = heldout.empty() ? json(nullptr) : json(corpus_nll(model, heldout));

  SampleConfig sc;
  sc.k = 1;
  sc.forbid = default_forbidden(vocab);
  sc.max_new_tokens = static_cast<std::size_t>(model.config.context_len);
  std::size_t probes = 0, exact = 0, well_formed = 0, max_overlap = 0;
  double novelty = 0.0;
  for (std::size_t i = 0; i < train_samples.size() && probes < a.probes; ++i, ++probes) {
    const SerializedSample& s = *train_samples[i];
    std::vector<TokenId> prompt{Vocab::bos};
    const auto rest = encode(s.prompt(), vocab);
    prompt.insert(prompt.end(), rest.begin(), rest.end());
    const Generation g = generate(model, prompt, sc);
    const std::string body = decode(g.body, vocab);
    if (!g.truncated && body == s.field(Field::body)) ++exact;
    try {
      Poem p = deserialize(std::string(s.prompt()) + body, catalog);
      const NoveltyResult nr = index.score(p);
      novelty += nr.score;
      max_overlap = std::max(max_overlap, nr.max_overlap);
      if (!g.truncated && validate(p, catalog, table).well_formed) ++well_formed;
    } catch (const std::exception&) {
      novelty += 1.0;
    }
  }
  j["probes"] = probes;
  j["greedy_exact"] = probes ? json(static_cast<double>(exact) / static_cast<double>(probes)) : json(nullptr);
  j["greedy_novelty"] = probes ? json(novelty / static_cast<double>(probes)) : json(nullptr);
  j["greedy_max_overlap"] = max_overlap;
  j["greedy_well_formed"] = probes ? json(static_cast<double>(well_formed) / static_cast<double>(probes)) : json(nullptr);
  out << j.dump() << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"guti: classical Chinese poetry language model toolkit"};
  app.require_subcommand(1);
  const std::string default_catalog = FormCatalog::default_path().string();
  const std::string default_phonology = PhonologyTable::default_path().string();

  IngestArgs ingest;
  auto* ci = app.add_subcommand("ingest", "Serialize a JSONL poem corpus and build the vocabulary");
  ci->add_option("corpus", ingest.corpus, "Corpus file, one JSON record per line")->required();
  ci->add_option("-o,--out", ingest.out, "Output directory for dataset.jsonl and vocab.txt")->required();
  ci->add_option("--catalog", ingest.catalog, "Form catalog (default: $GUTI_CATALOG or the shipped one)")
      ->default_val(default_catalog);
  ci->add_option("--min-count", ingest.min_count, "Minimum character count for the vocabulary")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  ci->add_flag("--acrostic", ingest.acrostic, "Also add an acrostic-transformed copy of every poem");
  ci->add_option("--context", ingest.context, "Skip records longer than this many tokens")->default_val(256);

  TrainArgs train;
  auto* ct = app.add_subcommand("train", "Train a model on an ingested dataset");
  ct->add_option("data", train.data, "Directory written by `guti ingest`")->required();
  ct->add_option("-o,--out", train.out, "Output directory for checkpoints and metrics.jsonl")->required();
  ct->add_option("--init-from", train.init_from, "Start from this checkpoint instead of random weights");
  ct->add_option("--seed", train.seed, "Seed for shuffling and dropout (default: random, printed)");
  ct->add_option("--model-seed", train.model_seed, "Seed for weight initialization (default: random, printed)");
  ct->add_option("--max-steps", train.train.max_steps, "Optimizer steps")->default_val(2000);
  ct->add_option("--batch-size", train.train.batch_size, "Sequences per step")->default_val(16);
  ct->add_option("--lr", train.train.learning_rate, "Peak learning rate")->default_val(3e-4);
  ct->add_option("--beta1", train.train.beta1, "Adam beta1")->default_val(0.9);
  ct->add_option("--beta2", train.train.beta2, "Adam beta2")->default_val(0.999);
  ct->add_option("--eps", train.train.eps, "Adam epsilon")->default_val(1e-8);
  ct->add_option("--warmup", train.train.warmup_steps, "Linear warmup steps")->default_val(100);
  ct->add_option("--log-interval", train.train.log_interval, "Steps per metrics line")->default_val(50);
  ct->add_option("--checkpoint-interval", train.train.checkpoint_interval,
                 "Steps between checkpoints (0: final only)")
      ->default_val(0);
  ct->add_option("--novelty-interval", train.train.novelty_eval_interval, "Steps between novelty probes (0: off)")
      ->default_val(0);
  ct->add_option("--early-stop-novelty", train.early_stop, "Stop when probe novelty falls below this value");
  ct->add_option("--holdout", train.train.holdout_fraction, "Fraction of source ids held out")->default_val(0.05);
  ct->add_option("--layers", train.model.n_layers, "Transformer blocks")->default_val(4);
  ct->add_option("--heads", train.model.n_heads, "Attention heads")->default_val(4);
  ct->add_option("--d-model", train.model.d_model, "Model width")->default_val(128);
  ct->add_option("--d-ff", train.model.d_ff, "Feed-forward width")->default_val(512);
  ct->add_option("--context", train.model.context_len, "Maximum sequence length")->default_val(256);
  ct->add_option("--dropout", train.model.dropout_rate, "Dropout rate")->default_val(0.0);
  ct->add_flag("--untied", train.untied, "Separate output projection instead of the tied embedding");

  GenerateArgs gen;
  auto* cg = app.add_subcommand("generate", "Sample poems from a checkpoint");
  cg->add_option("checkpoint", gen.checkpoint, "Checkpoint file")->required();
  cg->add_option("--vocab", gen.vocab, "Vocabulary (default: vocab.txt next to the checkpoint)");
  cg->add_option("--form", gen.form, "Form identifier, e.g. 五绝")->required();
  cg->add_option("--theme", gen.theme, "Theme (title), or the first line for 对联");
  cg->add_option("--acrostic", gen.acrostic, "Acrostic target characters instead of a theme");
  cg->add_option("-n", gen.n, "Number of candidates")->default_val(1);
  cg->add_option("-k", gen.k, "Top-k truncation")->default_val(20)->check(CLI::PositiveNumber);
  cg->add_option("--temperature", gen.temperature, "Softmax temperature")->default_val(1.0);
  cg->add_option("--max-tokens", gen.max_tokens, "Maximum body tokens per candidate")->default_val(256);
  cg->add_option("--seed", gen.seed, "Sampling seed (default: random, printed)");
  cg->add_flag("--json", gen.json_out, "One JSON record per candidate");
  cg->add_option("--catalog", gen.catalog, "Form catalog")->default_val(default_catalog);
  cg->add_option("--phonology", gen.phonology, "Phonology table")->default_val(default_phonology);
  cg->add_flag("--strict-phonology", gen.strict_phonology, "Count rhyme and tone failures as ill-formed");

  ValidateArgs val;
  auto* cv = app.add_subcommand("validate", "Check poems against their forms");
  cv->add_option("poems", val.poems, "JSONL file of poems (corpus record format)")->required();
  cv->add_option("--catalog", val.catalog, "Form catalog")->default_val(default_catalog);
  cv->add_option("--phonology", val.phonology, "Phonology table")->default_val(default_phonology);
  cv->add_flag("--json", val.json_out, "One JSON report per poem");
  cv->add_flag("--skip-unknown", val.skip_unknown, "Skip poems whose form is not in the catalog");
  cv->add_flag("--strict-phonology", val.strict_phonology, "Count rhyme and tone failures as ill-formed");

  EvaluateArgs ev;
  auto* ce = app.add_subcommand("evaluate", "Loss, retrieval and well-formedness of a checkpoint on a dataset");
  ce->add_option("checkpoint", ev.checkpoint, "Checkpoint file")->required();
  ce->add_option("data", ev.data, "Directory written by `guti ingest`")->required();
  ce->add_option("--probes", ev.probes, "Training prompts decoded greedily")->default_val(16);
  ce->add_option("--holdout", ev.holdout, "Held-out fraction used in training")->default_val(0.05);
  ce->add_option("--catalog", ev.catalog, "Form catalog")->default_val(default_catalog);
  ce->add_option("--phonology", ev.phonology, "Phonology table")->default_val(default_phonology);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }

  try {
    if (*ci) return cmd_ingest(ingest, out, err);
    if (*ct) return cmd_train(train, out, err);
    if (*cg) return cmd_generate(gen, out, err);
    if (*cv) return cmd_validate(val, out, err);
    if (*ce) return cmd_evaluate(ev, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUserError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kInternalError;
}

}  // namespace guti::cli
