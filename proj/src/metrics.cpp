#include "tgnn/metrics.hpp"

#include <cmath>
#include <string>

#include "tgnn/error.hpp"

namespace tgnn {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    fail(ErrorKind::LengthMismatch, std::string(what) + ": lengths " +
                                        std::to_string(a) + " vs " +
                                        std::to_string(b));
  }
}

}  // namespace

double mae(std::span<const double> actual, std::span<const double> predicted) {
  check_lengths(actual.size(), predicted.size(), "mae");
  if (actual.empty()) {
    fail(ErrorKind::Empty, "mae: empty input");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    sum += std::abs(actual[i] - predicted[i]);
  }
  return sum / static_cast<double>(actual.size());
}

double mpe(std::span<const double> actual, std::span<const double> predicted,
           double eps) {
  check_lengths(actual.size(), predicted.size(), "mpe");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] > eps) {
      sum += std::abs(actual[i] - predicted[i]) / actual[i];
      ++count;
    }
  }
  if (count == 0) {
    fail(ErrorKind::NoQualifyingSamples,
         "mpe: no sample with actual value above " + std::to_string(eps));
  }
  return 100.0 * sum / static_cast<double>(count);
}

DetectionScores detection_scores(std::span<const std::uint8_t> flags,
                                 std::span<const std::uint8_t> truth_labels) {
  check_lengths(flags.size(), truth_labels.size(), "detection_scores");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const bool f = flags[i] != 0;
    const bool t = truth_labels[i] != 0;
    if (f && t) ++tp;
    else if (f && !t) ++fp;
    else if (!f && t) ++fn;
  }

  DetectionScores s;
  if (tp + fp == 0) {
    s.precision = 0.0;
    s.degenerate = true;
  } else {
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    s.recall = 0.0;
    s.degenerate = true;
  } else {
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

}  // namespace tgnn
