#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace tgnn {

/// One timestamped telemetry sample: four inputs plus the power target,
/// physical units as ingested.
struct MonitoringRecord {
  std::int64_t timestamp = 0;  // UTC seconds
  double g_sw = 0.0;           // shortwave irradiance, W/m^2, >= 0
  double g_lw = 0.0;           // longwave irradiance, W/m^2, >= 0
  double t_air = 0.0;          // ambient temperature, degC
  double t_pv = 0.0;           // module temperature, degC
  double p_out = 0.0;          // power output, W, >= 0

  bool operator==(const MonitoringRecord&) const = default;
};

/// Column order used by the scaler and the CSV schema.
enum class Column : std::size_t { Gsw = 0, Glw = 1, Tair = 2, Tpv = 3, Pout = 4 };
inline constexpr std::size_t kColumnCount = 5;

inline double column_value(const MonitoringRecord& r, Column col) {
  switch (col) {
    case Column::Gsw: return r.g_sw;
    case Column::Glw: return r.g_lw;
    case Column::Tair: return r.t_air;
    case Column::Tpv: return r.t_pv;
    case Column::Pout: return r.p_out;
  }
  return 0.0;
}

inline constexpr std::array<std::string_view, kColumnCount> kColumnNodeNames = {
    "G_sw", "G_lw", "T_air", "T_pv", "P_out"};

}  // namespace tgnn
