#pragma once

#include <string>
#include <string_view>

namespace agtb::utf8 {

/// Decodes UTF-8; invalid byte sequences become U+FFFD, one replacement per
/// rejected byte. Never throws.
std::u32string decode(std::string_view s);

std::string encode(std::u32string_view cps);
std::string encode_one(char32_t cp);

/// Number of codepoints in `s` counting invalid bytes as one each.
std::size_t length(std::string_view s);

}  // namespace agtb::utf8
