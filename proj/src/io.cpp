#include "thc/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace thc {

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'H', 'C', 'S', 'N', 'A', 'P', '1'};
constexpr char kPhysicalTag[4] = {'Q', 'P', 'T', 'S'};
constexpr char kTransformedTag[4] = {'q', 'p', 'T', 'S'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

// Reads exactly n bytes or throws with the offsets involved.
void take(std::istream& in, char* dst, std::size_t n, std::size_t offset, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != n)
    throw FormatError("snapshot truncated in " + std::string(what) + ": expected bytes " + std::to_string(offset) +
                      ".." + std::to_string(offset + n) + ", file ends at byte " + std::to_string(offset + got));
}

}  // namespace

void write_snapshot(const State& s, std::ostream& out) {
  const Grid& g = s.grid();
  out.write(kMagic, 8);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.ny));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.nz));
  put<double>(out, s.t);
  out.write(s.vars == Variables::Physical ? kPhysicalTag : kTransformedTag, 4);
  for (const ScalarField* f : {&s.q, &s.psi, &s.T, &s.S})
    out.write(reinterpret_cast<const char*>(f->values().data()),
              static_cast<std::streamsize>(f->size() * sizeof(double)));
  if (!out) throw Error("snapshot write failed");
}

State read_snapshot(std::istream& in, const Grid& grid) {
  char head[kSnapshotHeaderBytes];
  take(in, head, 8, 0, "header");
  if (std::memcmp(head, kMagic, 8) != 0) throw FormatError("not a snapshot: magic bytes do not read THCSNAP1");
  take(in, head + 8, kSnapshotHeaderBytes - 8, 8, "header");
  std::uint32_t ny = 0, nz = 0;
  double t = 0.0;
  std::memcpy(&ny, head + 8, 4);
  std::memcpy(&nz, head + 12, 4);
  std::memcpy(&t, head + 16, 8);
  Variables vars;
  if (std::memcmp(head + 24, kPhysicalTag, 4) == 0) {
    vars = Variables::Physical;
  } else if (std::memcmp(head + 24, kTransformedTag, 4) == 0) {
    vars = Variables::Transformed;
  } else {
    throw FormatError("unknown snapshot field order tag");
  }
  if (ny != static_cast<std::uint32_t>(grid.ny) || nz != static_cast<std::uint32_t>(grid.nz))
    throw FormatError("snapshot is " + std::to_string(ny) + "x" + std::to_string(nz) + ", expected " +
                      std::to_string(grid.ny) + "x" + std::to_string(grid.nz));
  State s = State::zero(grid);
  s.t = t;
  s.vars = vars;
  std::size_t offset = kSnapshotHeaderBytes;
  const std::size_t bytes = grid.size() * sizeof(double);
  const char* names[] = {"q", "psi", "T", "S"};
  int i = 0;
  for (ScalarField* f : {&s.q, &s.psi, &s.T, &s.S}) {
    take(in, reinterpret_cast<char*>(f->values().data()), bytes, offset, names[i++]);
    offset += bytes;
  }
  return s;
}

void write_snapshot_file(const State& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_snapshot(s, out);
}

State read_snapshot_file(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_snapshot(in, grid);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& kind, std::vector<std::string> columns)
    : ncol_(columns.size()), path_(path) {
  f_ = std::fopen(path.string().c_str(), "wb");
  if (!f_) throw Error("cannot open " + path.string() + " for writing");
  std::fprintf(f_, "# thc-csv v%d %s\n", kVersion, kind.c_str());
  for (std::size_t i = 0; i < columns.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", columns[i].c_str());
  std::fputc('\n', f_);
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != ncol_)
    throw Error("CSV row for " + path_.string() + " has " + std::to_string(values.size()) + " values, expected " +
                std::to_string(ncol_));
  for (std::size_t i = 0; i < values.size(); ++i) std::fprintf(f_, "%s%.17g", i ? "," : "", values[i]);
  std::fputc('\n', f_);
}

void CsvWriter::close() {
  if (f_ && std::fclose(f_) != 0) {
    f_ = nullptr;
    throw Error("failed to write " + path_.string());
  }
  f_ = nullptr;
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace thc
