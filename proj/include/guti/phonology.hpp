#pragma once

// Character -> (rhyme group, tone class) lookup used by the advisory rhyme and
// tone checks. File format: UTF-8, '#' comment lines, then one record per line
//   <character> TAB <rhyme group> TAB <ping|ze|unknown>
// with '-' for an unknown rhyme group.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace guti {

enum class Tone { ping, ze, unknown };

std::string_view tone_name(Tone t);

class PhonologyTable {
 public:
  static PhonologyTable load(const std::filesystem::path& path);
  /// Throws FormatError with the offending line number.
  static PhonologyTable parse(std::string_view text);
  /// $GUTI_PHONOLOGY when set, otherwise the table shipped in data/.
  static std::filesystem::path default_path();

  void add(char32_t ch, std::string rhyme_group, Tone tone);

  /// Empty when the character or its group is unknown.
  std::optional<std::string> rhyme_group(char32_t ch) const;
  Tone tone(char32_t ch) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::string group;  // empty = unknown
    Tone tone = Tone::unknown;
  };
  std::unordered_map<char32_t, Entry> entries_;
};

}  // namespace guti
