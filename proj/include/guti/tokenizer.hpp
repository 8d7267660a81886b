#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "guti/corpus.hpp"
#include "guti/types.hpp"

namespace guti {

/// Character-level vocabulary. Ids: PAD, BOS, EOS, UNK, then the identifier
/// markers, then characters by descending frequency (ties by code point).
class Vocab {
 public:
  static constexpr TokenId pad = 0;
  static constexpr TokenId bos = 1;
  static constexpr TokenId eos = 2;
  static constexpr TokenId unk = 3;
  static constexpr std::size_t num_reserved = 4;

  Vocab() = default;
  Vocab(std::vector<std::string> markers, std::vector<std::string> characters, int min_count);

  std::size_t size() const { return id_to_token_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  TokenId id_or_unk(std::string_view token) const;

  std::size_t marker_count() const { return marker_count_; }
  bool is_marker(TokenId id) const {
    return id >= static_cast<TokenId>(num_reserved) && id < static_cast<TokenId>(num_reserved + marker_count_);
  }
  /// PAD, BOS, EOS, UNK and markers.
  bool is_special(TokenId id) const { return id < static_cast<TokenId>(num_reserved + marker_count_); }
  int min_count() const { return min_count_; }

  std::span<const std::string> tokens() const { return id_to_token_; }

  /// One token per line after a header; line index = id.
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);
  std::string to_text() const;
  static Vocab from_text(std::string_view text);

  bool operator==(const Vocab& other) const {
    return id_to_token_ == other.id_to_token_ && marker_count_ == other.marker_count_ && min_count_ == other.min_count_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::map<std::string, TokenId, std::less<>> token_to_id_;
  std::size_t marker_count_ = 0;
  int min_count_ = 1;
};

/// Throws UsageError on an empty corpus or min_count < 1.
Vocab build_vocab(std::span<const SerializedSample> corpus, int min_count, std::span<const std::string> markers);

/// Markers are matched greedily as atomic tokens; unknown characters map to UNK.
std::vector<TokenId> encode(std::string_view text, const Vocab& vocab);

/// Specials other than markers render as nothing. Throws UsageError for ids
/// outside the vocabulary.
std::string decode(std::span<const TokenId> ids, const Vocab& vocab);

/// BOS + encode(text) + EOS.
std::vector<TokenId> encode_sample(const SerializedSample& sample, const Vocab& vocab);

}  // namespace guti
