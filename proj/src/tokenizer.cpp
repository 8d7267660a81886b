#include "guti/tokenizer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "guti/error.hpp"
#include "guti/utf8.hpp"

namespace guti {
namespace {

constexpr std::string_view kHeader = "#guti-vocab v1";
const char* const kReserved[Vocab::num_reserved] = {"[PAD]", "[BOS]", "[EOS]", "[UNK]"};

// Longest marker starting at text[pos], if any.
const std::string* match_marker(std::string_view text, std::size_t pos, std::span<const std::string> markers) {
  const std::string* best = nullptr;
  for (const auto& m : markers)
    if (text.substr(pos, m.size()) == m && (!best || m.size() > best->size())) best = &m;
  return best;
}

}  // namespace

Vocab::Vocab(std::vector<std::string> markers, std::vector<std::string> characters, int min_count)
    : marker_count_(markers.size()), min_count_(min_count) {
  id_to_token_.assign(std::begin(kReserved), std::end(kReserved));
  id_to_token_.insert(id_to_token_.end(), markers.begin(), markers.end());
  id_to_token_.insert(id_to_token_.end(), characters.begin(), characters.end());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i)).second)
      throw FormatError("duplicate vocabulary token '" + id_to_token_[i] + "'");
  }
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
    throw UsageError("token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(size()));
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocab::find(std::string_view tok) const {
  auto it = token_to_id_.find(tok);
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id_or_unk(std::string_view tok) const { return find(tok).value_or(unk); }

std::string Vocab::to_text() const {
  std::string out(kHeader);
  out += " min_count=" + std::to_string(min_count_) + " markers=" + std::to_string(marker_count_) + "\n";
  for (const auto& t : id_to_token_) out += t + "\n";
  return out;
}

Vocab Vocab::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string header;
  if (!std::getline(in, header) || header.rfind(kHeader, 0) != 0) throw FormatError("vocab: missing header");
  int min_count = 0;
  std::size_t markers = 0;
  if (std::sscanf(header.c_str() + kHeader.size(), " min_count=%d markers=%zu", &min_count, &markers) != 2)
    throw FormatError("vocab: malformed header '" + header + "'");
  std::vector<std::string> tokens;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (tokens.size() < Vocab::num_reserved + markers) throw FormatError("vocab: truncated");
  for (std::size_t i = 0; i < Vocab::num_reserved; ++i)
    if (tokens[i] != kReserved[i]) throw FormatError("vocab: reserved token " + std::to_string(i) + " mismatch");
  std::vector<std::string> mk(tokens.begin() + Vocab::num_reserved, tokens.begin() + Vocab::num_reserved + markers);
  std::vector<std::string> chars(tokens.begin() + Vocab::num_reserved + markers, tokens.end());
  return Vocab(std::move(mk), std::move(chars), min_count);
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << to_text();
  if (!out) throw IoError("cannot write vocab " + path.string());
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read vocab " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

Vocab build_vocab(std::span<const SerializedSample> corpus, int min_count, std::span<const std::string> markers) {
  if (corpus.empty()) throw UsageError("cannot build a vocabulary from an empty corpus");
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  std::unordered_map<char32_t, std::size_t> counts;
  for (const auto& sample : corpus) {
    const std::string_view text = sample.text;
    for (std::size_t pos = 0; pos < text.size();) {
      if (const std::string* m = match_marker(text, pos, markers)) {
        pos += m->size();
        continue;
      }
      const std::size_t len = utf8::sequence_length(text, pos);
      ++counts[utf8::decode(text.substr(pos, len)).front()];
      pos += len;
    }
  }
  std::vector<std::pair<char32_t, std::size_t>> ranked;
  for (auto [cp, n] : counts)
    if (n >= static_cast<std::size_t>(min_count)) ranked.emplace_back(cp, n);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> chars;
  chars.reserve(ranked.size());
  for (auto [cp, n] : ranked) chars.push_back(utf8::encode(cp));
  return Vocab(std::vector<std::string>(markers.begin(), markers.end()), std::move(chars), min_count);
}

std::vector<TokenId> encode(std::string_view text, const Vocab& vocab) {
  const auto all = vocab.tokens();
  const auto markers = all.subspan(Vocab::num_reserved, vocab.marker_count());
  std::vector<TokenId> ids;
  for (std::size_t pos = 0; pos < text.size();) {
    if (const std::string* m = match_marker(text, pos, markers)) {
      ids.push_back(*vocab.find(*m));
      pos += m->size();
      continue;
    }
    const std::size_t len = utf8::sequence_length(text, pos);
    ids.push_back(vocab.id_or_unk(text.substr(pos, len)));
    pos += len;
  }
  return ids;
}

std::string decode(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    const std::string& tok = vocab.token(id);
    if (id < static_cast<TokenId>(Vocab::num_reserved)) continue;
    out += tok;
  }
  return out;
}

std::vector<TokenId> encode_sample(const SerializedSample& sample, const Vocab& vocab) {
  std::vector<TokenId> ids{Vocab::bos};
  const auto body = encode(sample.text, vocab);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(Vocab::eos);
  return ids;
}

}  // namespace guti
