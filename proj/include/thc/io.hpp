#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "thc/error.hpp"
#include "thc/solver.hpp"

namespace thc {

/// Malformed or truncated input file.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Snapshot layout, all little-endian:
///   0  char[8]  "THCSNAP1"
///   8  uint32   ny
///   12 uint32   nz
///   16 float64  t
///   24 char[4]  field order: "QPTS" (q, psi, T, S) or "qpTS" (q~, psi~, T, S)
///   28 payload: 4 fields of ny*nz float64, index k*ny + j
inline constexpr std::size_t kSnapshotHeaderBytes = 28;

void write_snapshot(const State& s, std::ostream& out);
/// `grid` supplies l and d; its ny, nz must match the header.
State read_snapshot(std::istream& in, const Grid& grid);
void write_snapshot_file(const State& s, const std::filesystem::path& path);
State read_snapshot_file(const std::filesystem::path& path, const Grid& grid);

/// CSV with a versioned comment line, a column line, and %.17g values.
///   # thc-csv v1 <kind>
///   col_a,col_b,...
class CsvWriter {
 public:
  static constexpr int kVersion = 1;
  CsvWriter(const std::filesystem::path& path, const std::string& kind, std::vector<std::string> columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void row(const std::vector<double>& values);
  void close();

 private:
  std::FILE* f_ = nullptr;
  std::size_t ncol_;
  std::filesystem::path path_;
};

std::string format_double(double v);  // %.17g

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace thc
