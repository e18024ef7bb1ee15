#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace carleman {

enum class ErrorCode {
  parse,        // malformed expression or config text
  dimension,    // mismatched sizes / variable counts
  domain,       // evaluation outside the admissible domain (div by zero, box exit, ...)
  numeric,      // non-finite intermediate where finiteness is required
  invariant,    // internal consistency check failed
  schedule,     // parameter schedule exhausted without success
  convergence,  // iterative solver failed to converge
  io,           // file read/write failure
  config,       // semantically invalid configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(ErrorCode::parse, msg + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// ---------------------------------------------------------------------------
// Deterministic random numbers.
//
// std::mt19937_64 produces a standard-mandated bit stream, but the standard
// *distributions* are implementation-defined, so doubles are derived from the
// raw bits directly.  Results are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1).
  double uniform() {
    return double(eng_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (always consumes two draws).
  double normal();

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  Eigen::VectorXd normal_vector(int n);
  // Uniform on the unit sphere in R^n.
  Eigen::VectorXd unit_vector(int n);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Deterministic fork-join parallelism.
//
// The loop [0, n) is split into a fixed number of chunks (independent of the
// worker count) and per-chunk results are combined in chunk order, so the
// outcome is bit-identical for any thread count.
void set_max_threads(int n);
int max_threads();

// body(begin, end) is invoked once per chunk, possibly concurrently.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

// ---------------------------------------------------------------------------
// Small numeric helpers.

// Inverse of the standard normal CDF (Acklam's rational approximation,
// |relative error| < 1.2e-9; plenty for quasi-random direction generation).
double inverse_normal_cdf(double p);

// Low-discrepancy points on the unit sphere in R^m (Kronecker sequence in the
// cube, mapped through the normal quantile and normalized).  Deterministic.
// If `half`, the last coordinate is folded to be >= 0.
std::vector<Eigen::VectorXd> sphere_lattice(int m, int count, bool half);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
// Least-squares line through (x[i], y[i]).
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Shortest decimal string that parses back to exactly the same double.
std::string format_exact(double v);

}  // namespace carleman
