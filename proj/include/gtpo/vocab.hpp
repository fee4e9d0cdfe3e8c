#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gtpo {

using TokenId = std::uint32_t;

/// Fixed symbol set of the ToyCalc environment.
///
/// Ids 0-9 are the digits, 10-12 the arithmetic operators, 13-20 the
/// structural delimiters and tool-output markers. Ids 21-23 are reserved.
namespace vocab {

inline constexpr TokenId kPlus = 10;
inline constexpr TokenId kMinus = 11;
inline constexpr TokenId kTimes = 12;
inline constexpr TokenId kCodeOpen = 13;
inline constexpr TokenId kCodeClose = 14;
inline constexpr TokenId kAnswer = 15;
inline constexpr TokenId kEos = 16;
inline constexpr TokenId kBos = 17;
inline constexpr TokenId kSep = 18;
inline constexpr TokenId kEquals = 19;
inline constexpr TokenId kErr = 20;

inline constexpr std::size_t kSize = 24;

inline constexpr bool is_digit(TokenId t) { return t < 10; }
inline constexpr bool is_operator(TokenId t) {
  return t == kPlus || t == kMinus || t == kTimes;
}
inline constexpr bool is_delimiter(TokenId t) { return t >= kCodeOpen && t <= kErr; }
inline constexpr int digit_value(TokenId t) { return static_cast<int>(t); }
inline constexpr TokenId digit(int v) { return static_cast<TokenId>(v); }

/// One printable character per token, for debug dumps and embedding texts.
char glyph(TokenId t);

/// Render a token sequence as a string of glyphs.
std::string decode(std::span<const TokenId> tokens);

/// Inverse of decode for the glyphs above; unknown characters throw.
std::vector<TokenId> encode(const std::string& text);

}  // namespace vocab
}  // namespace gtpo
