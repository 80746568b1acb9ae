#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace pcqkit {

/// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double;
/// infinities as "inf"/"-inf".
std::string format_double(double v);
double parse_double(std::string_view text);  // throws std::invalid_argument

/// Minimal RFC 4180 CSV: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string join_csv_line(const std::vector<std::string>& fields);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// std::mt19937_64 (whose output sequence is fixed by the standard) with
/// hand-rolled distributions, so seeded streams match across standard
/// libraries.
class Rng {
 public:
  explicit Rng(unsigned long long seed) : engine_(seed) {}
  unsigned long long next() { return engine_(); }
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n);  // [0, n)
  double normal();                   // standard normal
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pcqkit
