#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tgnn {

struct BoxStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t outlier_count = 0;  // points strictly outside the Tukey fences
};

/// Residual pipeline output. Quartiles and fences are computed over the
/// Z-score distribution; box_stats summarize the raw residuals. When the
/// residual spread collapses (perfect predictions) the report is marked
/// degenerate: zscores stay empty, flags are all zero, and the diagnostic
/// explains why.
struct AnomalyReport {
  std::vector<double> residuals;
  double mean_residual = 0.0;
  double std_residual = 0.0;  // population standard deviation
  std::vector<double> zscores;
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  std::vector<std::uint8_t> flags;
  std::size_t anomaly_count = 0;
  double anomaly_fraction = 0.0;
  std::size_t lower_exceedance_count = 0;  // Z below the lower fence; reported, not flagged
  BoxStats box_stats;
  bool degenerate = false;
  std::string diagnostic;
};

/// e_k = |actual_k - predicted_k|, scaled power units.
std::vector<double> residuals(std::span<const double> actual,
                              std::span<const double> predicted);

struct ZScoreResult {
  std::vector<double> z;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Z_k = (e_k - mean) / stddev. Throws DegenerateSpread when the population
/// standard deviation is <= 1e-12 (constant residuals: nothing to rank).
ZScoreResult zscores(std::span<const double> residual_errors);

struct IqrBounds {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Tukey fences. Quantiles use linear interpolation at position q*(n-1) on
/// the sorted sample; this convention is pinned because ecosystems disagree.
IqrBounds iqr_bounds(std::span<const double> values);

/// Interpolated quantile of an ascending-sorted, non-empty range.
double quantile_sorted(std::span<const double> sorted, double q);

/// flag_k = (Z_k > upper), strictly. Residuals are non-negative, so only
/// unusually large errors are faults; low-side outliers are merely reported.
std::vector<std::uint8_t> flag_anomalies(std::span<const double> z,
                                         const IqrBounds& bounds);

/// Full pipeline: residuals -> zscores -> iqr_bounds(Z) -> flags + box stats.
AnomalyReport detect(std::span<const double> actual,
                     std::span<const double> predicted);

}  // namespace tgnn
