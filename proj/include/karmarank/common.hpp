#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace karmarank {

enum class ErrorKind { Config, Data, Numeric };

// Exit codes used by the CLI: 2 config, 3 data, 4 numeric.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail_config(const std::string& what);
[[noreturn]] void fail_data(const std::string& what);
[[noreturn]] void fail_numeric(const std::string& what);

// 64-bit FNV-1a, stable across platforms. Used for corpus / schema / file hashes.
class Fnv1a {
 public:
  void update(std::string_view bytes) noexcept;
  void update_u64(std::uint64_t v) noexcept;
  std::uint64_t value() const noexcept { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t v);
std::string hash_file(const std::string& path);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed of a named substream ("split", "sampling", "optimizer", "baseline", ...).
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) noexcept;

// mt19937_64 with distribution helpers that do not depend on the standard
// library's implementation-defined distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  // Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Shortest representation that round-trips; identical output on every run.
std::string format_double(double v);
std::string format_fixed(double v, int decimals);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

}  // namespace karmarank
