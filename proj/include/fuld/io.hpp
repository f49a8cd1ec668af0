#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fuld::io {

// Shortest round-trip-safe decimal rendering ("%.17g"); CSV artifacts use
// this exclusively so that reruns are byte-identical.
std::string format_double(double x);

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> values);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> values);

// Eight-byte magic followed by a little-endian u32 format version.
void write_header(std::ostream& out, std::string_view magic, std::uint32_t version);
std::uint32_t read_header(std::istream& in, std::string_view magic);

// Minimal CSV reader: header row plus numeric-or-text cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fuld::io
