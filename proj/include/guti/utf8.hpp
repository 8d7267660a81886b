#pragma once

#include <string>
#include <string_view>

namespace guti::utf8 {

/// Decode UTF-8; throws FormatError on malformed input.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

/// Length in bytes of the sequence starting at text[pos]; throws on malformed input.
std::size_t sequence_length(std::string_view text, std::size_t pos);

std::size_t count(std::string_view text);

}  // namespace guti::utf8
