#include "tgnn/anomaly.hpp"

#include <algorithm>
#include <cmath>

#include "tgnn/error.hpp"

namespace tgnn {

std::vector<double> residuals(std::span<const double> actual,
                              std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    fail(ErrorKind::LengthMismatch,
         "residuals: lengths " + std::to_string(actual.size()) + " vs " +
             std::to_string(predicted.size()));
  }
  std::vector<double> e(actual.size());
  for (std::size_t i = 0; i < e.size(); ++i) {
    e[i] = std::abs(actual[i] - predicted[i]);
  }
  return e;
}

ZScoreResult zscores(std::span<const double> residual_errors) {
  const std::size_t n = residual_errors.size();
  if (n < 2) {
    fail(ErrorKind::TooFew, "zscores: need at least 2 residuals");
  }
  double sum = 0.0;
  for (double e : residual_errors) sum += e;
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double e : residual_errors) sq += (e - mean) * (e - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(n));
  if (stddev <= 1e-12) {
    fail(ErrorKind::DegenerateSpread,
         "zscores: residual spread is zero, nothing to rank");
  }
  ZScoreResult result;
  result.mean = mean;
  result.stddev = stddev;
  result.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.z[i] = (residual_errors[i] - mean) / stddev;
  }
  return result;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

IqrBounds iqr_bounds(std::span<const double> values) {
  if (values.size() < 4) {
    fail(ErrorKind::TooFew, "iqr_bounds: need at least 4 values, got " +
                                std::to_string(values.size()));
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  IqrBounds b;
  b.q1 = quantile_sorted(sorted, 0.25);
  b.q3 = quantile_sorted(sorted, 0.75);
  b.iqr = b.q3 - b.q1;
  b.lower = b.q1 - 1.5 * b.iqr;
  b.upper = b.q3 + 1.5 * b.iqr;
  return b;
}

std::vector<std::uint8_t> flag_anomalies(std::span<const double> z,
                                         const IqrBounds& bounds) {
  std::vector<std::uint8_t> flags(z.size(), 0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    flags[i] = z[i] > bounds.upper ? 1 : 0;
  }
  return flags;
}

AnomalyReport detect(std::span<const double> actual,
                     std::span<const double> predicted) {
  AnomalyReport report;
  report.residuals = residuals(actual, predicted);
  const std::size_t n = report.residuals.size();

  if (n >= 1) {
    std::vector<double> sorted_e = report.residuals;
    std::sort(sorted_e.begin(), sorted_e.end());
    report.box_stats.min = sorted_e.front();
    report.box_stats.q1 = quantile_sorted(sorted_e, 0.25);
    report.box_stats.median = quantile_sorted(sorted_e, 0.5);
    report.box_stats.q3 = quantile_sorted(sorted_e, 0.75);
    report.box_stats.max = sorted_e.back();
    const double e_iqr = report.box_stats.q3 - report.box_stats.q1;
    const double e_lo = report.box_stats.q1 - 1.5 * e_iqr;
    const double e_hi = report.box_stats.q3 + 1.5 * e_iqr;
    for (double e : report.residuals) {
      if (e < e_lo || e > e_hi) ++report.box_stats.outlier_count;
    }
  }

  try {
    ZScoreResult zr = zscores(report.residuals);
    report.mean_residual = zr.mean;
    report.std_residual = zr.stddev;
    report.zscores = std::move(zr.z);
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::DegenerateSpread) throw;
    report.degenerate = true;
    report.diagnostic =
        "residual spread is degenerate (constant residuals); no points flagged";
    report.flags.assign(n, 0);
    double sum = 0.0;
    for (double e : report.residuals) sum += e;
    report.mean_residual = n > 0 ? sum / static_cast<double>(n) : 0.0;
    report.std_residual = 0.0;
    return report;
  }

  const IqrBounds bounds = iqr_bounds(report.zscores);
  report.q1 = bounds.q1;
  report.q3 = bounds.q3;
  report.iqr = bounds.iqr;
  report.lower_bound = bounds.lower;
  report.upper_bound = bounds.upper;
  report.flags = flag_anomalies(report.zscores, bounds);
  for (std::size_t i = 0; i < n; ++i) {
    if (report.flags[i]) ++report.anomaly_count;
    if (report.zscores[i] < bounds.lower) ++report.lower_exceedance_count;
  }
  report.anomaly_fraction =
      static_cast<double>(report.anomaly_count) / static_cast<double>(n);
  return report;
}

}  // namespace tgnn
