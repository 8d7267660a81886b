#include "guti/phonology.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "guti/error.hpp"
#include "guti/utf8.hpp"

namespace guti {

std::string_view tone_name(Tone t) {
  switch (t) {
    case Tone::ping: return "ping";
    case Tone::ze: return "ze";
    case Tone::unknown: return "unknown";
  }
  return "unknown";
}

PhonologyTable PhonologyTable::parse(std::string_view text) {
  PhonologyTable table;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fail = [&](const std::string& what) {
      throw FormatError("phonology table line " + std::to_string(line_no) + ": " + what);
    };
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) fail("expected three tab-separated columns");
    const std::u32string ch = utf8::decode(std::string_view(line).substr(0, t1));
    if (ch.size() != 1) fail("first column must be a single character");
    std::string group = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string tone = line.substr(t2 + 1);
    Tone t;
    if (tone == "ping") t = Tone::ping;
    else if (tone == "ze") t = Tone::ze;
    else if (tone == "unknown" || tone == "-") t = Tone::unknown;
    else fail("tone class must be ping, ze or unknown");
    if (group == "-") group.clear();
    table.add(ch[0], std::move(group), t);
  }
  return table;
}

PhonologyTable PhonologyTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read phonology table " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::filesystem::path PhonologyTable::default_path() {
  if (const char* env = std::getenv("GUTI_PHONOLOGY"); env && *env) return env;
  return std::filesystem::path(GUTI_DATA_DIR) / "phonology.tsv";
}

void PhonologyTable::add(char32_t ch, std::string rhyme_group, Tone tone) {
  entries_[ch] = Entry{std::move(rhyme_group), tone};
}

std::optional<std::string> PhonologyTable::rhyme_group(char32_t ch) const {
  auto it = entries_.find(ch);
  if (it == entries_.end() || it->second.group.empty()) return std::nullopt;
  return it->second.group;
}

Tone PhonologyTable::tone(char32_t ch) const {
  auto it = entries_.find(ch);
  return it == entries_.end() ? Tone::unknown : it->second.tone;
}

}  // namespace guti
