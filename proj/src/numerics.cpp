#include "tgnn/numerics.hpp"

#include <cmath>
#include <string>

namespace tgnn {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    fail(ErrorKind::DimensionMismatch,
         "matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
             " times " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = a(r, k);
      if (av == 0.0) continue;
      for (std::size_t c = 0; c < b.cols; ++c) {
        out(r, c) += av * b(k, c);
      }
    }
  }
  ensure_finite(out.data, "matmul result");
  return out;
}

Matrix uniform_init(SeededRng& rng, std::size_t rows, std::size_t cols,
                    std::size_t fan_in) {
  if (fan_in == 0) {
    fail(ErrorKind::ZeroFanIn, "uniform_init: fan_in must be >= 1");
  }
  const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix out(rows, cols);
  for (double& v : out.data) {
    v = k * rng.next_open_signed();
  }
  return out;
}

void ensure_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      fail(ErrorKind::NonFinite,
           std::string(what) + ": non-finite value encountered");
    }
  }
}

}  // namespace tgnn
