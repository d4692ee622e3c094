#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace tgnn {

/// Mean absolute error, scaled units.
double mae(std::span<const double> actual, std::span<const double> predicted);

/// Mean absolute percentage error (in percent) over samples whose actual
/// value exceeds eps; eps excludes near-zero nighttime power where the ratio
/// is meaningless. Throws NoQualifyingSamples when nothing qualifies.
double mpe(std::span<const double> actual, std::span<const double> predicted,
           double eps = 0.05);

struct DetectionScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // True when a ratio had an empty denominator (no predicted positives or no
  // true positives in the labels) and was pinned to 0.
  bool degenerate = false;
};

DetectionScores detection_scores(std::span<const std::uint8_t> flags,
                                 std::span<const std::uint8_t> truth_labels);

}  // namespace tgnn
