// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/common.hpp"

#include <charconv>
#include <cstdio>

namespace vrisk {

namespace {

namespace chr = std::chrono;

bool parse_uint(std::string_view s, unsigned& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

Date Date::from_ymd(int y, unsigned m, unsigned d) {
  chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) {
    fail(ErrorKind::kParse, "invalid calendar date " + std::to_string(y) + "-" + std::to_string(m) + "-" +
                                std::to_string(d));
  }
  return Date{static_cast<std::int32_t>(chr::sys_days{ymd}.time_since_epoch().count())};
}

int Date::year() const {
  chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
  return static_cast<int>(ymd.year());
}

std::string Date::to_string() const {
  chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

Date parse_date(std::string_view text) {
  unsigned y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_uint(text.substr(0, 4), y) ||
      !parse_uint(text.substr(5, 2), m) || !parse_uint(text.substr(8, 2), d)) {
    fail(ErrorKind::kParse, "expected YYYY-MM-DD date, got '" + std::string(text) + "'");
  }
  return Date::from_ymd(static_cast<int>(y), m, d);
}

std::string DateRange::to_string() const { return "[" + start.to_string() + ", " + end.to_string() + ")"; }

DateRange calendar_year(int y) { return DateRange{Date::from_ymd(y, 1, 1), Date::from_ymd(y + 1, 1, 1)}; }

}  // namespace vrisk
