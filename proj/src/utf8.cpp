#include "guti/utf8.hpp"

#include "guti/error.hpp"

namespace guti::utf8 {

std::size_t sequence_length(std::string_view text, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t len = 0;
  if (lead < 0x80) len = 1;
  else if ((lead >> 5) == 0x6) len = 2;
  else if ((lead >> 4) == 0xE) len = 3;
  else if ((lead >> 3) == 0x1E) len = 4;
  else throw FormatError("invalid UTF-8 lead byte at offset " + std::to_string(pos));
  if (pos + len > text.size()) throw FormatError("truncated UTF-8 sequence at offset " + std::to_string(pos));
  for (std::size_t i = 1; i < len; ++i)
    if ((static_cast<unsigned char>(text[pos + i]) >> 6) != 0x2)
      throw FormatError("invalid UTF-8 continuation byte at offset " + std::to_string(pos + i));
  return len;
}

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size() / 3 + 1);
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = sequence_length(text, pos);
    const auto b0 = static_cast<unsigned char>(text[pos]);
    char32_t cp = len == 1 ? b0 : len == 2 ? (b0 & 0x1F) : len == 3 ? (b0 & 0x0F) : (b0 & 0x07);
    for (std::size_t i = 1; i < len; ++i) cp = (cp << 6) | (static_cast<unsigned char>(text[pos + i]) & 0x3F);
    out.push_back(cp);
    pos += len;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
  return out;
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size() * 3);
  for (char32_t cp : text) out += encode(cp);
  return out;
}

std::size_t count(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < text.size(); ++n) pos += sequence_length(text, pos);
  return n;
}

}  // namespace guti::utf8
