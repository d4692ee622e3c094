#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "tgnn/error.hpp"
#include "tgnn/metrics.hpp"

using namespace tgnn;

TEST_CASE("mae averages absolute errors") {
  const std::vector<double> actual{1.0, 3.0};
  const std::vector<double> predicted{2.0, 5.0};
  CHECK(mae(actual, predicted) == 1.5);
  CHECK(mae(actual, actual) == 0.0);
}

TEST_CASE("mae rejects empty and mismatched inputs") {
  const std::vector<double> empty;
  const std::vector<double> one{1.0};
  try {
    mae(empty, empty);
    FAIL("expected Empty");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Empty);
  }
  try {
    mae(one, empty);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
}

TEST_CASE("mpe averages percentage errors over above-threshold actuals") {
  // Only the first sample clears eps = 0.05, and it is off by 10%.
  const std::vector<double> actual{1.0, 0.01};
  const std::vector<double> predicted{0.9, 0.5};
  CHECK(mpe(actual, predicted) == doctest::Approx(10.0).epsilon(1e-12));

  // Custom threshold widens the qualifying set.
  const std::vector<double> a2{1.0, 0.5};
  const std::vector<double> p2{0.9, 0.25};
  // 10% and 50% -> mean 30%.
  CHECK(mpe(a2, p2, 0.1) == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("mpe throws when nothing qualifies") {
  const std::vector<double> actual{0.0, 0.01, 0.04};
  const std::vector<double> predicted{0.1, 0.2, 0.3};
  try {
    mpe(actual, predicted);
    FAIL("expected NoQualifyingSamples");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoQualifyingSamples);
  }
}

TEST_CASE("detection scores on a mixed confusion table") {
  const std::vector<std::uint8_t> flags{1, 1, 0, 0};
  const std::vector<std::uint8_t> truth{1, 0, 1, 0};
  const DetectionScores s = detection_scores(flags, truth);
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == 0.5);
  CHECK_FALSE(s.degenerate);
}

TEST_CASE("perfect detection scores one across the board") {
  const std::vector<std::uint8_t> flags{0, 1, 0, 1, 1};
  const DetectionScores s = detection_scores(flags, flags);
  CHECK(s.precision == 1.0);
  CHECK(s.recall == 1.0);
  CHECK(s.f1 == 1.0);
}

TEST_CASE("empty denominators pin ratios to zero and mark degeneracy") {
  // No predicted positives.
  const std::vector<std::uint8_t> none{0, 0, 0};
  const std::vector<std::uint8_t> truth{1, 0, 1};
  const DetectionScores a = detection_scores(none, truth);
  CHECK(a.precision == 0.0);
  CHECK(a.recall == 0.0);
  CHECK(a.f1 == 0.0);
  CHECK(a.degenerate);

  // No true positives in the labels.
  const std::vector<std::uint8_t> flags{1, 0, 0};
  const std::vector<std::uint8_t> clean{0, 0, 0};
  const DetectionScores b = detection_scores(flags, clean);
  CHECK(b.recall == 0.0);
  CHECK(b.degenerate);
}

TEST_CASE("detection_scores rejects mismatched lengths") {
  const std::vector<std::uint8_t> a{1, 0};
  const std::vector<std::uint8_t> b{1};
  CHECK_THROWS_AS(detection_scores(a, b), Error);
}
