#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace guti {

enum class Punct { none, comma, period };

/// One sentence of a poem: its characters plus the terminal punctuation.
struct Line {
  std::u32string characters;
  Punct terminal = Punct::none;

  std::string text() const;  // characters followed by the punctuation mark
  bool operator==(const Line&) const = default;
};

struct Poem {
  std::string form_id;
  std::string theme;
  std::vector<Line> body;
  bool acrostic = false;  // theme holds the acrostic target and id2 is the acrostic marker
  std::string source_id;

  std::string body_text() const;
  bool operator==(const Poem&) const = default;
};

/// Map a punctuation code point onto the two body marks; returns none for
/// anything that is not sentence punctuation.
Punct classify_punct(char32_t cp);

std::string_view punct_text(Punct p);

/// Rewrite punctuation to the canonical ，/。 pair and drop whitespace.
std::string normalize_text(std::string_view text);

/// Split a body string into lines on ，/。 (after normalization). Only the final
/// line may lack punctuation. Throws UsageError on an empty line or body.
std::vector<Line> parse_body(std::string_view body);

}  // namespace guti
