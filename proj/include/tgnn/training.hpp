#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/gradients.hpp"
#include "tgnn/model.hpp"
#include "tgnn/record.hpp"

namespace tgnn {

/// Per-column MinMax bounds, physical units. Fitted on training rows only.
struct ScalerParams {
  std::array<double, kColumnCount> min{};
  std::array<double, kColumnCount> max{};
  bool operator==(const ScalerParams&) const = default;
};

ScalerParams fit_scaler(std::span<const MonitoringRecord> train_rows);
ScalerParams fit_scaler(std::span<const MonitoringRecord> records,
                        std::span<const std::size_t> row_indices);

/// (x - min) / (max - min). Values outside the fitted range pass through and
/// may leave [0, 1]; callers that scale test data count and report those.
double scale(double x, Column col, const ScalerParams& s);
double unscale(double y, Column col, const ScalerParams& s);

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::size_t window = 12;    // L
  std::size_t horizon = 0;    // 0 = nowcast
  double split_ratio = 0.8;
  std::uint64_t seed = 1;
  std::size_t gcn_hidden = 8;
  std::size_t hidden = 16;
  bool chrono_split = false;  // default: random window-level split
};

/// Flat key=value file ('#' starts a comment). Unknown keys are rejected so
/// typos surface early; graph keys (nodes, edges) are returned raw for the
/// caller to assemble.
struct ConfigFile {
  TrainConfig train;
  std::vector<std::string> set_keys;
  std::string nodes;  // e.g. "G_sw,G_lw,T_air,T_pv"
  std::string edges;  // e.g. "G_sw->T_pv,G_lw->T_pv,T_air->T_pv"
};
ConfigFile load_config_file(const std::string& path);

void validate_config(const TrainConfig& config);

/// Seeded shuffle then split: round(ratio*n) train windows, remainder test.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double ratio, std::uint64_t seed);

/// Chronological alternative: first round(ratio*n) windows train, rest test.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices_chrono(std::size_t n, double ratio);

std::pair<std::vector<FeatureWindow>, std::vector<FeatureWindow>> split_windows(
    std::span<const FeatureWindow> windows, double ratio, std::uint64_t seed);

/// First/second moment accumulators mirroring ModelParams, plus the step
/// counter.
struct AdamState {
  TensorBundle m;
  TensorBundle v;
  long step_count = 0;
};

AdamState init_adam(const ModelDims& dims);

/// Standard bias-corrected Adam update applied tensor-by-tensor in the
/// canonical order. Defaults beta1=0.9, beta2=0.999, eps=1e-8.
void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

double mse_loss(std::span<const double> preds, std::span<const double> targets);

struct EpochStats {
  double train_mse = 0.0;  // over the train windows, end-of-epoch params
  double test_mae = 0.0;   // over the test windows, scaled units
};

struct TrainResult {
  ModelParams params;
  ScalerParams scaler;
  std::vector<EpochStats> history;      // exactly config.epochs entries
  std::vector<std::size_t> train_window_indices;
  std::vector<std::size_t> test_window_indices;
  std::vector<FeatureWindow> train_windows;
  std::vector<FeatureWindow> test_windows;
  std::size_t out_of_range_scaled = 0;  // test-side values outside the fitted range
  double final_test_mae = 0.0;
};

/// End-to-end loop: window the records, split, fit the scaler on the rows
/// covered by training windows only, scale, then run seeded mini-batch Adam
/// for config.epochs epochs. Deterministic given (records, spec, config).
TrainResult train(std::span<const MonitoringRecord> records,
                  const TemporalGraphSpec& spec, const TrainConfig& config);

}  // namespace tgnn
