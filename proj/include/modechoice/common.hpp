#pragma once

// Shared plumbing: error codes, seeded RNG stream derivation, deterministic
// reductions, a small dense matrix, number formatting and atomic file writes.

#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace modechoice {

// ---------------------------------------------------------------------------
// Errors

enum class Errc {
  MissingColumn,
  BadLabel,
  NonNumericField,
  NegativeTime,
  EmptyDataset,
  KTooLarge,
  SchemaMismatch,
  DimensionMismatch,
  NonFiniteLikelihood,
  AllUnavailable,
  ZeroCostCoefficient,
  EmptySegment,
  UnknownSelector,
  EmptyNode,
  SingleClassData,
  NonLinearKernel,
  LengthMismatch,
  EmptyMatrix,
  RowNotNormalized,
  IncompatibleMethod,
  MissingEvalData,
  ConstantFeature,
  GridMismatch,
  IoFailure,
  SchemaVersionMismatch,
  CorruptArtifact,
  ConfigError,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadLabel: return "BadLabel";
    case Errc::NonNumericField: return "NonNumericField";
    case Errc::NegativeTime: return "NegativeTime";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case Errc::AllUnavailable: return "AllUnavailable";
    case Errc::ZeroCostCoefficient: return "ZeroCostCoefficient";
    case Errc::EmptySegment: return "EmptySegment";
    case Errc::UnknownSelector: return "UnknownSelector";
    case Errc::EmptyNode: return "EmptyNode";
    case Errc::SingleClassData: return "SingleClassData";
    case Errc::NonLinearKernel: return "NonLinearKernel";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::RowNotNormalized: return "RowNotNormalized";
    case Errc::IncompatibleMethod: return "IncompatibleMethod";
    case Errc::MissingEvalData: return "MissingEvalData";
    case Errc::ConstantFeature: return "ConstantFeature";
    case Errc::GridMismatch: return "GridMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::CorruptArtifact: return "CorruptArtifact";
    case Errc::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

  // Input/schema/config problems, as opposed to failures during computation.
  bool is_validation() const {
    switch (code_) {
      case Errc::MissingColumn:
      case Errc::BadLabel:
      case Errc::NonNumericField:
      case Errc::NegativeTime:
      case Errc::SchemaMismatch:
      case Errc::DimensionMismatch:
      case Errc::KTooLarge:
      case Errc::UnknownSelector:
      case Errc::SchemaVersionMismatch:
      case Errc::ConfigError:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

// ---------------------------------------------------------------------------
// Seeded RNG streams
//
// All randomness in the toolkit flows from one master seed. Independent
// streams are derived from (master, purpose-tag, index) so that adding or
// parallelizing work never perturbs unrelated draws.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the tag bytes
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h = detail::splitmix64(h ^ detail::splitmix64(master));
  return detail::splitmix64(h ^ detail::splitmix64(index));
}

inline std::mt19937_64 make_rng(std::uint64_t master, std::string_view tag,
                                std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, tag, index));
}

// ---------------------------------------------------------------------------
// Deterministic reductions and parallel helpers

// Fixed-shape pairwise sum over f(0..n-1). The reduction tree depends only on
// n, so the result is identical whether the leaves are evaluated serially or
// concurrently.
template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, const F& f) {
  const std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

template <class F>
double pairwise_sum(std::size_t n, const F& f) {
  return pairwise_sum(std::size_t{0}, n, f);
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("MODECHOICE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
    // 0 (or garbage) falls through to auto
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Tasks must write results into per-index slots;
// completion order is unobservable, so output is schedule-independent.
template <class F>
void parallel_for(std::size_t n, const F& fn) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(worker_count(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Dense row-major matrix (features, probabilities, kernels)

struct NumMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  NumMatrix() = default;
  NumMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), v(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return v[r * cols + c];
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(v).subspan(r * cols, cols);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(v).subspan(r * cols, cols);
  }
};

// ---------------------------------------------------------------------------
// Number formatting: shortest decimal form that round-trips exactly.

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  (void)ec;
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last)
    fail(Errc::NonNumericField, "cannot parse number '" + std::string(s) + "'");
  return out;
}

// ---------------------------------------------------------------------------
// File helpers

// Writes via a temp file in the same directory then renames, so readers never
// observe a partially written file.
inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  namespace fs = std::filesystem;
  fs::path dir = path.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::IoFailure, "cannot open " + tmp.string());
    out << content;
    if (!out) fail(Errc::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(Errc::IoFailure, "rename failed for " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoFailure, "cannot open " + path.string());
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

// Splits one CSV line; the toolkit's formats never quote or embed commas.
inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// FNV-1a content digest, used to bind artifacts to their config.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace modechoice
