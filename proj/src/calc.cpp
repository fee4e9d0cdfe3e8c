#include "gtpo/calc.hpp"

#include <stdexcept>

namespace gtpo::calc {
namespace {

struct Parser {
  std::span<const TokenId> toks;
  std::size_t pos = 0;
  bool failed = false;

  bool done() const { return pos >= toks.size(); }
  TokenId peek() const { return toks[pos]; }

  std::optional<long long> number() {
    if (done() || !vocab::is_digit(peek())) {
      failed = true;
      return std::nullopt;
    }
    long long value = 0;
    std::size_t digits = 0;
    while (!done() && vocab::is_digit(peek())) {
      if (++digits > kMaxLiteralDigits) {
        failed = true;
        return std::nullopt;
      }
      value = value * 10 + vocab::digit_value(toks[pos]);
      ++pos;
    }
    return value;
  }

  // Precedence climbing: level 0 handles +/-, level 1 handles *.
  std::optional<long long> expression(int min_prec) {
    auto lhs = number();
    if (!lhs) return std::nullopt;
    while (!done() && vocab::is_operator(peek())) {
      const TokenId op = peek();
      const int prec = (op == vocab::kTimes) ? 1 : 0;
      if (prec < min_prec) break;
      ++pos;
      auto rhs = expression(prec + 1);
      if (!rhs) return std::nullopt;
      long long v = 0;
      switch (op) {
        case vocab::kPlus: v = *lhs + *rhs; break;
        case vocab::kMinus: v = *lhs - *rhs; break;
        case vocab::kTimes: v = *lhs * *rhs; break;
        default: failed = true; return std::nullopt;
      }
      if (v > kValueLimit || v < -kValueLimit) {
        failed = true;
        return std::nullopt;
      }
      lhs = v;
    }
    return lhs;
  }
};

}  // namespace

std::optional<long long> evaluate(std::span<const TokenId> code) {
  Parser p{code};
  auto value = p.expression(0);
  if (!value || p.failed || !p.done()) return std::nullopt;
  return value;
}

bool parses(std::span<const TokenId> code) { return evaluate(code).has_value(); }

}  // namespace gtpo::calc

namespace gtpo::vocab {

char glyph(TokenId t) {
  if (is_digit(t)) return static_cast<char>('0' + t);
  switch (t) {
    case kPlus: return '+';
    case kMinus: return '-';
    case kTimes: return '*';
    case kCodeOpen: return '[';
    case kCodeClose: return ']';
    case kAnswer: return '@';
    case kEos: return '$';
    case kBos: return '^';
    case kSep: return '|';
    case kEquals: return '=';
    case kErr: return '!';
    default: return '?';
  }
}

std::string decode(std::span<const TokenId> tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (TokenId t : tokens) out.push_back(glyph(t));
  return out;
}

std::vector<TokenId> encode(const std::string& text) {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      out.push_back(static_cast<TokenId>(c - '0'));
      continue;
    }
    switch (c) {
      case '+': out.push_back(kPlus); break;
      case '-': out.push_back(kMinus); break;
      case '*': out.push_back(kTimes); break;
      case '[': out.push_back(kCodeOpen); break;
      case ']': out.push_back(kCodeClose); break;
      case '@': out.push_back(kAnswer); break;
      case '$': out.push_back(kEos); break;
      case '^': out.push_back(kBos); break;
      case '|': out.push_back(kSep); break;
      case '=': out.push_back(kEquals); break;
      case '!': out.push_back(kErr); break;
      default:
        throw std::invalid_argument("vocab::encode: unknown character '" +
                                    std::string(1, c) + "'");
    }
  }
  return out;
}

}  // namespace gtpo::vocab
