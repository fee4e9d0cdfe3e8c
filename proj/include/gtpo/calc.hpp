#pragma once

#include <optional>
#include <span>

#include "gtpo/vocab.hpp"

namespace gtpo::calc {

/// Largest absolute value the tool will report; anything beyond is an
/// evaluation failure. Number literals are capped at four digits.
inline constexpr long long kValueLimit = 9999;
inline constexpr std::size_t kMaxLiteralDigits = 4;

/// Evaluate an infix integer expression over digit and operator tokens.
/// Multiplication binds tighter than +/-; same-precedence operators are
/// left-associative. Returns nullopt on any parse or range failure.
std::optional<long long> evaluate(std::span<const TokenId> code);

/// True iff the token sequence is a well-formed expression within range.
bool parses(std::span<const TokenId> code);

}  // namespace gtpo::calc
