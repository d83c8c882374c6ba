// Copyright 2026 The vrisk Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal RFC-4180-ish CSV reading and writing. Quoted fields are supported
// on read; the writer quotes only when a field needs it.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vrisk::csv {

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }
  // Index of a header column; throws kParse naming the file when absent.
  std::size_t column(std::string_view name) const;
  void require_columns(const std::vector<std::string>& names) const;

  // Reads the next data row; false at EOF. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);
  // 1-based line number of the row last returned (header is line 1).
  std::size_t line() const { return line_; }
  const std::string& file() const { return file_; }

  // Throws kParse with "<file>:<line>, column '<name>': <msg>".
  [[noreturn]] void fail_at(std::size_t col, const std::string& msg) const;

  double parse_double(const std::vector<std::string>& f, std::size_t col) const;
  long long parse_int(const std::vector<std::string>& f, std::size_t col) const;

 private:
  bool read_record(std::vector<std::string>& fields);

  std::ifstream in_;
  std::string file_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  std::size_t physical_line_ = 0;
};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::string file_;
};

// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace vrisk::csv
