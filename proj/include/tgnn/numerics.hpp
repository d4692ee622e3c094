#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tgnn/error.hpp"

namespace tgnn {

/// Dense row-major matrix of 64-bit floats. Entry (r, c) lives at
/// data[r * cols + c]. All public operations keep every entry finite.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
      fail(ErrorKind::ShapeMismatch, "Matrix: data length does not match rows*cols");
    }
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix& other) const = default;
};

Matrix matmul(const Matrix& a, const Matrix& b);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

enum class Activation { Sigmoid, Tanh, Relu };

inline double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return relu(x);
  }
  return x;
}

/// Deterministic pseudo-random generator: xoshiro256** seeded via SplitMix64.
///
/// The exact recurrences, so any language can reproduce the stream bit for bit:
///
///   SplitMix64 (seeding): starting from state = seed, each call does
///     state += 0x9E3779B97F4A7C15
///     z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///     return z ^ (z >> 31)
///   The four state words s[0..3] of xoshiro256** are the first four outputs.
///
///   xoshiro256** (stream): with rotl(x, k) = (x << k) | (x >> (64 - k)),
///     result = rotl(s[1] * 5, 7) * 9
///     t = s[1] << 17
///     s[2] ^= s[0]; s[3] ^= s[1]; s[1] ^= s[2]; s[0] ^= s[3]
///     s[2] ^= t;    s[3] = rotl(s[3], 45)
///
///   Derived draws (all consume whole 64-bit outputs, in order):
///     next_double()        = (next_u64() >> 11) * 2^-53          in [0, 1)
///     next_open_signed()   = 2 * ((next_u64() >> 11) + 0.5) * 2^-53 - 1
///                                                                in (-1, 1)
///     next_normal()        = Box-Muller from exactly two outputs:
///                            u1 = ((a >> 11) + 0.5) * 2^-53 in (0, 1),
///                            u2 = (b >> 11) * 2^-53 in [0, 1),
///                            sqrt(-2 ln u1) * cos(2 pi u2)
///     next_below(n)        = next_u64() % n
///     shuffle(v)           = Fisher-Yates: for i = n-1 .. 1,
///                            swap(v[i], v[next_below(i + 1)])
///
/// A SeededRng instance is single-owner; do not share one across threads.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in the open interval (-1, 1); never hits either endpoint.
  double next_open_signed() {
    return 2.0 * ((static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53) - 1.0;
  }

  /// Standard normal draw; consumes exactly two 64-bit outputs.
  double next_normal() {
    const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

  /// Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  static std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
};

/// Matrix with entries i.i.d. uniform in (-k, k), k = 1/sqrt(fan_in).
Matrix uniform_init(SeededRng& rng, std::size_t rows, std::size_t cols,
                    std::size_t fan_in);

void ensure_finite(std::span<const double> values, const char* what);

// Small dense kernels used by the model's inner loops.

/// out = M * x for a row-major matrix.
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
  const double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

/// out += M * x.
inline void matvec_accum(const Matrix& m, std::span<const double> x, std::span<double> out) {
  const double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

/// out += M^T * v (accumulates the transpose product without forming it).
inline void matvec_transposed_accum(const Matrix& m, std::span<const double> v,
                                    std::span<double> out) {
  const double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    const double vr = v[r];
    for (std::size_t c = 0; c < m.cols; ++c) out[c] += row[c] * vr;
  }
}

/// M += a (outer product) b, i.e. M[r][c] += a[r] * b[c].
inline void outer_accum(Matrix& m, std::span<const double> a, std::span<const double> b) {
  double* row = m.data.data();
  for (std::size_t r = 0; r < m.rows; ++r, row += m.cols) {
    const double ar = a[r];
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

inline void vec_accum(std::span<double> out, std::span<const double> v) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace tgnn
