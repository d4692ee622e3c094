#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/graph.hpp"
#include "tgnn/model.hpp"
#include "tgnn/record.hpp"
#include "tgnn/training.hpp"

namespace tgnn {

inline constexpr std::string_view kCsvHeader =
    "timestamp,gsw_wm2,glw_wm2,tair_c,tpv_c,pout_w";
inline constexpr std::string_view kLabelsHeader = "timestamp,is_anomaly";

/// Strict reader for the telemetry schema: exact header, six fields per row,
/// finite values, non-negative irradiance/power, strictly increasing
/// timestamps.
std::vector<MonitoringRecord> parse_csv(const std::string& path);
std::vector<MonitoringRecord> parse_csv_text(const std::string& text,
                                             const std::string& origin = "<text>");

/// Shortest round-trip decimal formatting; parse_csv(write_csv(r)) == r.
void write_csv(std::span<const MonitoringRecord> records, const std::string& path);
std::string records_to_csv(std::span<const MonitoringRecord> records);

/// Maps graph node names onto record columns (P_out is not a node).
std::vector<Column> node_columns_for(const TemporalGraphSpec& spec);

/// Sliding windows with stride 1: window w covers records [w, w+L) and
/// targets scaled p_out at w+L-1+horizon. Count = n - L - horizon + 1.
/// out_of_range, when given, is incremented once per scaled value that fell
/// outside the fitted min/max range.
std::vector<FeatureWindow> make_windows(std::span<const MonitoringRecord> records,
                                        const ScalerParams& scaler,
                                        std::size_t window_len,
                                        std::size_t horizon,
                                        std::span<const Column> node_columns,
                                        std::size_t* out_of_range = nullptr);
std::vector<FeatureWindow> make_windows(std::span<const MonitoringRecord> records,
                                        const ScalerParams& scaler,
                                        std::size_t window_len,
                                        std::size_t horizon);

/// Record indices touched by the given windows (features plus target row),
/// sorted and unique. This is what the scaler may legally see.
std::vector<std::size_t> window_coverage(std::span<const std::size_t> window_starts,
                                         std::size_t window_len,
                                         std::size_t horizon);

/// Clear-sky telemetry generator standing in for a private rooftop dataset.
/// Exact formulas (documented in the README and fixed for reproducibility),
/// with frac = fraction of the day elapsed and f = (frac-0.25)*2 the daylight
/// phase in (0,1):
///   base  = g_max * sin(pi*f)^1.2          for f in (0,1), else 0
///   G_sw  = max(0, base + noise_gsw)       when base > 0, else exactly 0
///   G_lw  = max(0, 300 + 0.1*G_sw + noise_glw)
///   T_air = 15 + 10*sin(2*pi*(frac-0.375)) + noise_tair
///   T_pv  = T_air + 0.03*G_sw + noise_tpv
///   P     = max(0, p_stc*(G_sw/1000)*(1 - gamma*(T_pv-25)) + noise_pout)
///                                          when G_sw > 0, else exactly 0
/// Noise is Gaussian; five draws per record in field order, always consumed,
/// so the stream stays aligned independent of clipping.
struct GeneratorConfig {
  std::size_t days = 1;
  std::size_t period_s = 60;  // finer sampling (down to 1 s) remains selectable
  std::uint64_t seed = 1;
  std::int64_t start_timestamp = 1677628800;  // 2023-03-01T00:00:00Z
  double g_max = 1000.0;      // W/m^2
  double p_stc = 350.0;       // W
  double temp_coeff = 0.004;  // per degC
  double noise_gsw = 5.0;
  double noise_glw = 2.0;
  double noise_tair = 0.3;
  double noise_tpv = 0.3;
  double noise_pout = 1.0;
  double anomaly_fraction = 0.0;
  double drop_low = 0.3;   // multiplicative power retention bounds
  double drop_high = 0.7;
};

std::vector<MonitoringRecord> generate_synthetic(const GeneratorConfig& config);

struct InjectionResult {
  std::vector<MonitoringRecord> records;
  std::vector<std::uint8_t> labels;  // 1 exactly at modified indices
};

/// generate_synthetic plus the truth labels of any injected drops. The clean
/// series is identical to an anomaly_fraction = 0 run with the same seed;
/// injection only rewrites the selected p_out values.
InjectionResult generate_with_labels(const GeneratorConfig& config);

/// Multiplies p_out by u ~ Uniform[drop_low, drop_high) at
/// floor(fraction * n_daytime) daytime points (G_sw > 50 W/m^2) chosen
/// uniformly at random. Inputs are untouched.
InjectionResult inject_anomalies(std::span<const MonitoringRecord> records,
                                 double fraction, double drop_low,
                                 double drop_high, std::uint64_t seed);

void write_labels_csv(std::span<const MonitoringRecord> records,
                      std::span<const std::uint8_t> labels,
                      const std::string& path);
std::vector<std::pair<std::int64_t, std::uint8_t>> parse_labels_csv(
    const std::string& path);

inline constexpr int kCheckpointFormatVersion = 1;

/// Everything needed to reload and run a trained model.
struct Checkpoint {
  ModelParams params;
  ScalerParams scaler;
  TemporalGraphSpec graph;
  std::size_t window_len = 12;
  std::size_t horizon = 0;
};

/// Versioned JSON document; numbers use shortest round-trip decimals so a
/// save/load cycle reproduces every weight bit for bit.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tgnn
