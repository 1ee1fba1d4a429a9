/*
 * Copyright 2026 The friendlypool Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "friendlypool/rational.h"

#include <charconv>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "friendlypool/error.h"

namespace friendlypool {
namespace {

std::int64_t parse_int(std::string_view digits, std::string_view whole) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    throw ParseError("not a number", std::string(whole));
  }
  return value;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) {
    throw std::invalid_argument("Rational with zero denominator");
  }
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Rational Rational::parse(std::string_view text) {
  if (text.empty()) {
    throw ParseError("empty rational", std::string(text));
  }
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const auto den = parse_int(text.substr(slash + 1), text);
    if (den == 0) {
      throw ParseError("zero denominator", std::string(text));
    }
    return Rational(parse_int(text.substr(0, slash), text), den);
  }
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    return Rational(parse_int(text, text));
  }
  std::string_view whole = text.substr(0, dot);
  std::string_view frac = text.substr(dot + 1);
  if (frac.empty() || frac.size() > 15 || frac.find_first_not_of("0123456789") != std::string_view::npos) {
    throw ParseError("bad decimal fraction", std::string(text));
  }
  bool negative = !whole.empty() && whole.front() == '-';
  if (negative || (!whole.empty() && whole.front() == '+')) {
    whole.remove_prefix(1);
  }
  const std::int64_t int_part = whole.empty() ? 0 : parse_int(whole, text);
  if (int_part < 0) {
    throw ParseError("bad decimal", std::string(text));
  }
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
  const std::int64_t frac_part = parse_int(frac, text);
  if (int_part > (INT64_MAX - frac_part) / scale) {
    throw ParseError("decimal out of range", std::string(text));
  }
  const std::int64_t num = int_part * scale + frac_part;
  return Rational(negative ? -num : num, scale);
}

std::int64_t Rational::floor() const noexcept {
  std::int64_t q = num_ / den_;
  if (num_ % den_ != 0 && num_ < 0) --q;
  return q;
}

std::int64_t Rational::ceil() const noexcept {
  std::int64_t q = num_ / den_;
  if (num_ % den_ != 0 && num_ > 0) ++q;
  return q;
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  // Terminating decimal iff den has only factors 2 and 5.
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  const int digits = std::max(twos, fives);
  if (d != 1 || digits > 15) {
    return std::to_string(num_) + "/" + std::to_string(den_);
  }
  std::int64_t scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  const __int128 scaled = static_cast<__int128>(num_) * (scale / den_);
  const bool negative = scaled < 0;
  const auto mag = static_cast<unsigned __int128>(negative ? -scaled : scaled);
  const auto int_part = static_cast<std::uint64_t>(mag / static_cast<unsigned __int128>(scale));
  auto frac_part = static_cast<std::uint64_t>(mag % static_cast<unsigned __int128>(scale));
  std::string frac = std::to_string(frac_part);
  frac.insert(0, static_cast<std::size_t>(digits) - frac.size(), '0');
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  return (negative ? "-" : "") + std::to_string(int_part) + "." + frac;
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) noexcept {
  const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
  const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
  return lhs <=> rhs;
}

Rational operator*(const Rational& a, const Rational& b) {
  // Cross-reduce first to keep intermediates inside int64.
  const std::int64_t g1 = std::gcd(a.num_, b.den_);
  const std::int64_t g2 = std::gcd(b.num_, a.den_);
  const std::int64_t n1 = g1 ? a.num_ / g1 : 0, d2 = g1 ? b.den_ / g1 : b.den_;
  const std::int64_t n2 = g2 ? b.num_ / g2 : 0, d1 = g2 ? a.den_ / g2 : a.den_;
  std::int64_t num = 0, den = 0;
  if (__builtin_mul_overflow(n1, n2, &num) || __builtin_mul_overflow(d1, d2, &den)) {
    throw std::overflow_error("Rational multiplication overflow");
  }
  return Rational(num, den);
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.to_string(); }

}  // namespace friendlypool
