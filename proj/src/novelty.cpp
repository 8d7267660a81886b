#include "guti/novelty.hpp"

#include "guti/error.hpp"

namespace guti {

NoveltyIndex::NoveltyIndex(std::span<const Poem> corpus, std::size_t n) : NoveltyIndex(n) {
  for (const auto& p : corpus) add(p);
}

void NoveltyIndex::add(const Poem& poem) {
  for (const auto& line : poem.body) add_line(line.characters);
}

void NoveltyIndex::add_line(const std::u32string& line) {
  if (line.empty() || !line_set_.insert(line).second) return;
  const auto id = static_cast<std::uint32_t>(lines_.size());
  lines_.push_back(line);
  for (std::size_t k = 1; k < n_; ++k)
    for (std::size_t i = 0; i + k <= line.size(); ++i) short_grams_[k].insert(line.substr(i, k));
  for (std::size_t i = 0; i + n_ <= line.size(); ++i) {
    auto& ids = postings_[line.substr(i, n_)];
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  }
}

bool NoveltyIndex::occurs(const std::u32string& s) const {
  if (s.size() < n_) return short_grams_[s.size()].count(s) > 0;
  auto it = postings_.find(s.substr(0, n_));
  if (it == postings_.end()) return false;
  if (s.size() == n_) return true;
  for (auto id : it->second)
    if (lines_[id].find(s) != std::u32string::npos) return true;
  return false;
}

std::size_t NoveltyIndex::max_overlap(const std::u32string& text) const {
  std::size_t best = 0;
  for (std::size_t i = 0; i + best < text.size(); ++i) {
    // occurrence is closed under prefixes, so extend until the first miss
    std::size_t len = best + 1;
    while (i + len <= text.size() && occurs(text.substr(i, len))) ++len;
    if (len - 1 > best) best = len - 1;
  }
  return best;
}

NoveltyResult NoveltyIndex::score(const Poem& generated) const {
  if (generated.body.empty()) throw UsageError("novelty of an empty poem");
  NoveltyResult r;
  r.total_lines = generated.body.size();
  for (const auto& line : generated.body) {
    if (contains_line(line.characters)) ++r.verbatim_lines;
    r.max_overlap = std::max(r.max_overlap, max_overlap(line.characters));
  }
  r.score = 1.0 - static_cast<double>(r.verbatim_lines) / static_cast<double>(r.total_lines);
  return r;
}

}  // namespace guti
