// Benchmark: serial reference vs OpenMP drivers for the batch backward pass
// and batch prediction. Also asserts the two produce bitwise-identical
// results, which is the contract that lets the tests use either.
//
// Usage: tgnn_bench [n_windows] [reps]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tgnn/data.hpp"
#include "tgnn/gradients.hpp"
#include "tgnn/model.hpp"
#include "tgnn/training.hpp"

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

bool bundles_equal(const tgnn::TensorBundle& a, const tgnn::TensorBundle& b) {
  bool equal = true;
  tgnn::for_each_tensor(const_cast<tgnn::TensorBundle&>(a),
                        [&](const char* name, std::span<double> sa) {
    tgnn::for_each_tensor(const_cast<tgnn::TensorBundle&>(b),
                          [&](const char* name_b, std::span<double> sb) {
      if (std::string(name) != name_b) return;
      if (sa.size() != sb.size()) { equal = false; return; }
      for (std::size_t i = 0; i < sa.size(); ++i) {
        if (sa[i] != sb[i]) { equal = false; return; }
      }
    });
  });
  return equal;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_windows = 256;
  std::size_t reps = 5;
  if (argc > 1) n_windows = std::strtoull(argv[1], nullptr, 10);
  if (argc > 2) reps = std::strtoull(argv[2], nullptr, 10);
  if (n_windows == 0 || reps == 0) {
    std::cerr << "usage: tgnn_bench [n_windows>0] [reps>0]\n";
    return 2;
  }

#ifdef _OPENMP
  std::cout << "OpenMP enabled, max threads " << omp_get_max_threads() << "\n";
#else
  std::cout << "OpenMP disabled; both drivers run serially\n";
#endif

  tgnn::GeneratorConfig gen;
  gen.days = (n_windows * 60) / 86400 + 1;
  gen.seed = 42;
  const std::vector<tgnn::MonitoringRecord> records = tgnn::generate_synthetic(gen);
  const tgnn::ScalerParams scaler = tgnn::fit_scaler(records);
  std::vector<tgnn::FeatureWindow> windows =
      tgnn::make_windows(records, scaler, 12, 0);
  if (windows.size() > n_windows) windows.resize(n_windows);
  std::cout << "batch: " << windows.size() << " windows of length 12\n";

  const tgnn::TemporalGraphSpec spec = tgnn::default_parameter_graph();
  const tgnn::ModelDims dims{spec.node_count(), spec.feature_dim, 8, 16};
  const tgnn::ModelParams params = tgnn::init_params(7, dims);

  // Warm-up and correctness check.
  const tgnn::BackwardResult serial_back = tgnn::backward_serial(windows, spec, params);
  const tgnn::BackwardResult parallel_back = tgnn::backward(windows, spec, params);
  const std::vector<double> serial_preds =
      tgnn::predict_many_serial(windows, spec, params);
  const std::vector<double> parallel_preds =
      tgnn::predict_many(windows, spec, params);

  const bool back_ok = serial_back.loss == parallel_back.loss &&
                       bundles_equal(serial_back.grads, parallel_back.grads);
  const bool pred_ok = serial_preds == parallel_preds;
  std::cout << "backward bitwise identical: " << (back_ok ? "yes" : "NO") << "\n";
  std::cout << "predict  bitwise identical: " << (pred_ok ? "yes" : "NO") << "\n";
  if (!back_ok || !pred_ok) return 1;

  auto time_reps = [&](auto&& fn) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < reps; ++r) fn();
    return ms_since(start) / static_cast<double>(reps);
  };

  const double t_back_serial =
      time_reps([&]() { tgnn::backward_serial(windows, spec, params); });
  const double t_back_parallel =
      time_reps([&]() { tgnn::backward(windows, spec, params); });
  const double t_pred_serial =
      time_reps([&]() { tgnn::predict_many_serial(windows, spec, params); });
  const double t_pred_parallel =
      time_reps([&]() { tgnn::predict_many(windows, spec, params); });

  std::cout.setf(std::ios::fixed);
  std::cout.precision(3);
  std::cout << "backward: serial " << t_back_serial << " ms, parallel "
            << t_back_parallel << " ms, speedup "
            << t_back_serial / t_back_parallel << "x\n";
  std::cout << "predict:  serial " << t_pred_serial << " ms, parallel "
            << t_pred_parallel << " ms, speedup "
            << t_pred_serial / t_pred_parallel << "x\n";
  return 0;
}
