// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Shared vocabulary: error type, calendar dates, half-open date ranges and
// seed derivation.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vrisk {

enum class ErrorKind {
  kInvalidArgument,  // bad configuration or call contract
  kParse,            // malformed input row / value
  kInvariant,        // well-formed input that breaks a data invariant
  kCoverage,         // requested window not covered by the data
  kNotFound,         // unknown id
  kMissingArtifact,  // pipeline stage input absent
  kIo,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

// Calendar date with day resolution, stored as days since 1970-01-01.
struct Date {
  std::int32_t days = 0;

  constexpr auto operator<=>(const Date&) const = default;

  static Date from_ymd(int y, unsigned m, unsigned d);
  int year() const;
  std::string to_string() const;  // YYYY-MM-DD
};

constexpr Date operator+(Date d, std::int32_t n) { return Date{d.days + n}; }
constexpr Date operator-(Date d, std::int32_t n) { return Date{d.days - n}; }
constexpr std::int32_t operator-(Date a, Date b) { return a.days - b.days; }

// Strict ISO-8601 calendar date. Throws kParse on anything else.
Date parse_date(std::string_view text);

// Half-open [start, end).
struct DateRange {
  Date start;
  Date end;

  constexpr std::int32_t days() const { return end.days > start.days ? end.days - start.days : 0; }
  constexpr bool empty() const { return end.days <= start.days; }
  constexpr bool contains(Date d) const { return start <= d && d < end; }
  constexpr bool covers(const DateRange& o) const { return start <= o.start && o.end <= end; }
  std::string to_string() const;
};

constexpr DateRange intersect(const DateRange& a, const DateRange& b) {
  DateRange r{a.start > b.start ? a.start : b.start, a.end < b.end ? a.end : b.end};
  if (r.end < r.start) r.end = r.start;
  return r;
}

// Days in calendar year `y` as a range [Jan 1, Jan 1 of y+1).
DateRange calendar_year(int y);

// Stream derivation for reproducible, schedule-independent randomness.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(master, a), b);
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n). Rejection-free modulo is fine for n << 2^64.
inline std::size_t uniform_index(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

}  // namespace vrisk
