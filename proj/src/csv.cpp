// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

#include "vrisk/csv.hpp"

#include <charconv>
#include <cmath>

#include "vrisk/common.hpp"

namespace vrisk::csv {

Reader::Reader(const std::filesystem::path& path) : in_(path), file_(path.string()) {
  if (!in_) fail(ErrorKind::kIo, "cannot open " + file_);
  if (!read_record(header_)) fail(ErrorKind::kParse, file_ + ": missing header row");
  line_ = 1;
  if (!header_.empty() && header_[0].rfind("\xEF\xBB\xBF", 0) == 0) header_[0].erase(0, 3);
}

std::size_t Reader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  fail(ErrorKind::kParse, file_ + ": missing column '" + std::string(name) + "'");
}

void Reader::require_columns(const std::vector<std::string>& names) const {
  for (const auto& n : names) column(n);
}

bool Reader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  while (std::getline(in_, line)) {
    ++physical_line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
      if (i == line.size()) {
        if (!quoted) break;
        // Quoted field spanning lines.
        std::string more;
        if (!std::getline(in_, more)) fail(ErrorKind::kParse, file_ + ": unterminated quoted field");
        ++physical_line_;
        if (!more.empty() && more.back() == '\r') more.pop_back();
        line += '\n';
        line += more;
      }
      char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur += '"';
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    fields.push_back(std::move(cur));
    return true;
  }
  return false;
}

bool Reader::next(std::vector<std::string>& fields) {
  if (!read_record(fields)) return false;
  line_ = physical_line_;
  if (fields.size() != header_.size()) {
    fail(ErrorKind::kParse, file_ + ":" + std::to_string(line_) + ": expected " + std::to_string(header_.size()) +
                                " fields, found " + std::to_string(fields.size()));
  }
  return true;
}

void Reader::fail_at(std::size_t col, const std::string& msg) const {
  const std::string name = col < header_.size() ? header_[col] : std::to_string(col);
  fail(ErrorKind::kParse, file_ + ":" + std::to_string(line_) + ", column '" + name + "': " + msg);
}

double Reader::parse_double(const std::vector<std::string>& f, std::size_t col) const {
  const std::string& s = f[col];
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) fail_at(col, "not a number: '" + s + "'");
  return v;
}

long long Reader::parse_int(const std::vector<std::string>& f, std::size_t col) const {
  const std::string& s = f[col];
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) fail_at(col, "not an integer: '" + s + "'");
  return v;
}

Writer::Writer(const std::filesystem::path& path) : out_(path), file_(path.string()) {
  if (!out_) fail(ErrorKind::kIo, "cannot write " + file_);
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") == std::string::npos) {
      out_ << f;
    } else {
      out_ << '"';
      for (char c : f) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    }
  }
  out_ << '\n';
}

void Writer::close() {
  out_.close();
  if (!out_) fail(ErrorKind::kIo, "failed writing " + file_);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace vrisk::csv
