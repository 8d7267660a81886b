#pragma once

// Retrieval detector: how much of a generated poem is copied from the corpus.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "guti/poem.hpp"

namespace guti {

struct NoveltyResult {
  double score = 1.0;  // 1 - verbatim_lines / total_lines
  std::size_t verbatim_lines = 0;
  std::size_t total_lines = 0;
  std::size_t max_overlap = 0;  // longest run of characters shared with a corpus line
};

class NoveltyIndex {
 public:
  explicit NoveltyIndex(std::size_t n = 5) : n_(n < 1 ? 1 : n), short_grams_(n_) {}
  NoveltyIndex(std::span<const Poem> corpus, std::size_t n = 5);

  void add(const Poem& poem);
  void add_line(const std::u32string& line);

  bool contains_line(const std::u32string& line) const { return line_set_.count(line) > 0; }
  /// Length of the longest substring of `text` that occurs inside one corpus line.
  std::size_t max_overlap(const std::u32string& text) const;

  /// Throws UsageError for a poem without lines.
  NoveltyResult score(const Poem& generated) const;

  std::size_t line_count() const { return lines_.size(); }

 private:
  bool occurs(const std::u32string& s) const;

  std::size_t n_;
  std::vector<std::u32string> lines_;
  std::unordered_set<std::u32string> line_set_;
  std::vector<std::unordered_set<std::u32string>> short_grams_;  // index k: grams of length k (k < n)
  std::unordered_map<std::u32string, std::vector<std::uint32_t>> postings_;  // n-gram -> lines
};

}  // namespace guti
