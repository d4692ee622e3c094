#include "tgnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tgnn {

namespace {

constexpr double kPi = 3.141592653589793;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_field_double(const std::string& field, std::size_t line_no,
                          const char* name) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    fail(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": field " +
                                name + " is not a number: '" + field + "'");
  }
  if (!std::isfinite(v)) {
    fail(ErrorKind::BadRow,
         "line " + std::to_string(line_no) + ": field " + name + " is not finite");
  }
  return v;
}

std::int64_t parse_field_i64(const std::string& field, std::size_t line_no,
                             const char* name) {
  std::int64_t v = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || field.empty()) {
    fail(ErrorKind::BadRow, "line " + std::to_string(line_no) + ": field " +
                                name + " is not an integer: '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::IoError, "cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::IoError, "cannot open " + path + " for writing");
  }
  out << text;
  if (!out) {
    fail(ErrorKind::IoError, "short write to " + path);
  }
}

}  // namespace

std::vector<MonitoringRecord> parse_csv_text(const std::string& text,
                                             const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kCsvHeader) {
    fail(ErrorKind::BadHeader, origin + ": expected header '" +
                                   std::string(kCsvHeader) + "'");
  }
  std::vector<MonitoringRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 6) {
      fail(ErrorKind::BadRow, origin + " line " + std::to_string(line_no) +
                                  ": expected 6 fields, got " +
                                  std::to_string(fields.size()));
    }
    MonitoringRecord r;
    r.timestamp = parse_field_i64(fields[0], line_no, "timestamp");
    r.g_sw = parse_field_double(fields[1], line_no, "gsw_wm2");
    r.g_lw = parse_field_double(fields[2], line_no, "glw_wm2");
    r.t_air = parse_field_double(fields[3], line_no, "tair_c");
    r.t_pv = parse_field_double(fields[4], line_no, "tpv_c");
    r.p_out = parse_field_double(fields[5], line_no, "pout_w");
    if (r.g_sw < 0.0 || r.g_lw < 0.0 || r.p_out < 0.0) {
      fail(ErrorKind::BadRow, origin + " line " + std::to_string(line_no) +
                                  ": irradiance and power must be >= 0");
    }
    if (!records.empty() && r.timestamp <= records.back().timestamp) {
      fail(ErrorKind::NonMonotonicTimestamps,
           origin + " line " + std::to_string(line_no) +
               ": timestamp " + std::to_string(r.timestamp) +
               " does not increase past " +
               std::to_string(records.back().timestamp));
    }
    records.push_back(r);
  }
  return records;
}

std::vector<MonitoringRecord> parse_csv(const std::string& path) {
  return parse_csv_text(read_file(path), path);
}

std::string records_to_csv(std::span<const MonitoringRecord> records) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const MonitoringRecord& r : records) {
    out += std::to_string(r.timestamp);
    out.push_back(',');
    out += format_double(r.g_sw);
    out.push_back(',');
    out += format_double(r.g_lw);
    out.push_back(',');
    out += format_double(r.t_air);
    out.push_back(',');
    out += format_double(r.t_pv);
    out.push_back(',');
    out += format_double(r.p_out);
    out.push_back('\n');
  }
  return out;
}

void write_csv(std::span<const MonitoringRecord> records, const std::string& path) {
  write_file(path, records_to_csv(records));
}

std::vector<Column> node_columns_for(const TemporalGraphSpec& spec) {
  std::vector<Column> cols;
  cols.reserve(spec.node_count());
  for (const std::string& name : spec.node_names) {
    bool found = false;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      if (name == kColumnNodeNames[c]) {
        if (static_cast<Column>(c) == Column::Pout) {
          fail(ErrorKind::BadConfig,
               "node_columns_for: P_out is the prediction target, not an input node");
        }
        cols.push_back(static_cast<Column>(c));
        found = true;
        break;
      }
    }
    if (!found) {
      fail(ErrorKind::BadConfig,
           "node_columns_for: node '" + name + "' has no telemetry column");
    }
  }
  return cols;
}

std::vector<FeatureWindow> make_windows(std::span<const MonitoringRecord> records,
                                        const ScalerParams& scaler,
                                        std::size_t window_len,
                                        std::size_t horizon,
                                        std::span<const Column> node_columns,
                                        std::size_t* out_of_range) {
  if (window_len < 1) {
    fail(ErrorKind::BadConfig, "make_windows: window length must be >= 1");
  }
  if (node_columns.empty()) {
    fail(ErrorKind::BadConfig, "make_windows: no node columns");
  }
  if (records.size() < window_len + horizon) {
    fail(ErrorKind::TooShort, "make_windows: " + std::to_string(records.size()) +
                                  " records < window " +
                                  std::to_string(window_len) + " + horizon " +
                                  std::to_string(horizon));
  }
  const std::size_t step_dim = node_columns.size();
  const std::size_t count = records.size() - window_len - horizon + 1;
  std::size_t oor = 0;
  auto scaled = [&](double x, Column col) {
    const double v = scale(x, col, scaler);
    if (v < 0.0 || v > 1.0) ++oor;
    return v;
  };

  std::vector<FeatureWindow> windows(count);
  for (std::size_t w = 0; w < count; ++w) {
    FeatureWindow& win = windows[w];
    win.steps = window_len;
    win.step_dim = step_dim;
    win.features.resize(window_len * step_dim);
    for (std::size_t t = 0; t < window_len; ++t) {
      const MonitoringRecord& r = records[w + t];
      for (std::size_t k = 0; k < step_dim; ++k) {
        win.features[t * step_dim + k] =
            scaled(column_value(r, node_columns[k]), node_columns[k]);
      }
    }
    const MonitoringRecord& target_row = records[w + window_len - 1 + horizon];
    win.target_timestamp = target_row.timestamp;
    win.target = scaled(target_row.p_out, Column::Pout);
  }
  if (out_of_range != nullptr) *out_of_range = oor;
  return windows;
}

std::vector<FeatureWindow> make_windows(std::span<const MonitoringRecord> records,
                                        const ScalerParams& scaler,
                                        std::size_t window_len,
                                        std::size_t horizon) {
  static const std::vector<Column> kDefaultColumns = {Column::Gsw, Column::Glw,
                                                      Column::Tair, Column::Tpv};
  return make_windows(records, scaler, window_len, horizon, kDefaultColumns,
                      nullptr);
}

std::vector<std::size_t> window_coverage(std::span<const std::size_t> window_starts,
                                         std::size_t window_len,
                                         std::size_t horizon) {
  std::vector<std::size_t> rows;
  rows.reserve(window_starts.size() * (window_len + 1));
  for (std::size_t w : window_starts) {
    for (std::size_t t = 0; t < window_len; ++t) rows.push_back(w + t);
    rows.push_back(w + window_len - 1 + horizon);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

namespace {

void validate_generator_config(const GeneratorConfig& config) {
  if (config.days < 1) fail(ErrorKind::BadConfig, "generator: days must be >= 1");
  if (config.period_s < 1 || config.period_s > 86400) {
    fail(ErrorKind::BadConfig, "generator: period_s must be in [1, 86400]");
  }
  if (config.g_max <= 0.0 || config.p_stc <= 0.0) {
    fail(ErrorKind::BadConfig, "generator: g_max and p_stc must be > 0");
  }
  if (config.noise_gsw < 0.0 || config.noise_glw < 0.0 ||
      config.noise_tair < 0.0 || config.noise_tpv < 0.0 ||
      config.noise_pout < 0.0) {
    fail(ErrorKind::BadConfig, "generator: noise levels must be >= 0");
  }
  if (!(config.anomaly_fraction >= 0.0 && config.anomaly_fraction < 1.0)) {
    fail(ErrorKind::BadConfig, "generator: anomaly_fraction must be in [0, 1)");
  }
  if (!(config.drop_low >= 0.0 && config.drop_low < config.drop_high &&
        config.drop_high <= 1.0)) {
    fail(ErrorKind::BadConfig,
         "generator: need 0 <= drop_low < drop_high <= 1");
  }
}

}  // namespace

InjectionResult generate_with_labels(const GeneratorConfig& config) {
  validate_generator_config(config);
  const std::size_t count = config.days * 86400 / config.period_s;
  if (count == 0) {
    fail(ErrorKind::BadConfig, "generator: config yields zero records");
  }

  // Two sub-streams drawn in fixed order so the base series is identical
  // whether or not anomalies are layered on top.
  SeededRng master(config.seed);
  const std::uint64_t noise_seed = master.next_u64();
  const std::uint64_t inject_seed = master.next_u64();
  SeededRng rng(noise_seed);

  std::vector<MonitoringRecord> records(count);
  for (std::size_t i = 0; i < count; ++i) {
    MonitoringRecord& r = records[i];
    r.timestamp = config.start_timestamp +
                  static_cast<std::int64_t>(i * config.period_s);
    const std::int64_t sec_of_day = ((r.timestamp % 86400) + 86400) % 86400;
    const double frac = static_cast<double>(sec_of_day) / 86400.0;
    const double f = (frac - 0.25) * 2.0;  // daylight phase, (0,1) = sun up

    // Five Gaussian draws per record, always consumed, so the stream stays
    // aligned with the record index regardless of clipping.
    const double n_gsw = rng.next_normal();
    const double n_glw = rng.next_normal();
    const double n_tair = rng.next_normal();
    const double n_tpv = rng.next_normal();
    const double n_pout = rng.next_normal();

    const double base = (f > 0.0 && f < 1.0)
                            ? config.g_max * std::pow(std::sin(kPi * f), 1.2)
                            : 0.0;
    r.g_sw = base > 0.0 ? std::max(0.0, base + config.noise_gsw * n_gsw) : 0.0;
    r.g_lw = std::max(0.0, 300.0 + 0.1 * r.g_sw + config.noise_glw * n_glw);
    r.t_air = 15.0 + 10.0 * std::sin(2.0 * kPi * (frac - 0.375)) +
              config.noise_tair * n_tair;
    r.t_pv = r.t_air + 0.03 * r.g_sw + config.noise_tpv * n_tpv;
    if (r.g_sw > 0.0) {
      const double p = config.p_stc * (r.g_sw / 1000.0) *
                       (1.0 - config.temp_coeff * (r.t_pv - 25.0));
      r.p_out = std::max(0.0, p + config.noise_pout * n_pout);
    } else {
      r.p_out = 0.0;
    }
  }

  if (config.anomaly_fraction > 0.0) {
    return inject_anomalies(records, config.anomaly_fraction, config.drop_low,
                            config.drop_high, inject_seed);
  }
  InjectionResult result;
  result.labels.assign(records.size(), 0);
  result.records = std::move(records);
  return result;
}

std::vector<MonitoringRecord> generate_synthetic(const GeneratorConfig& config) {
  return generate_with_labels(config).records;
}

InjectionResult inject_anomalies(std::span<const MonitoringRecord> records,
                                 double fraction, double drop_low,
                                 double drop_high, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    fail(ErrorKind::BadFraction, "inject_anomalies: fraction must be in [0, 1)");
  }
  if (!(drop_low >= 0.0 && drop_low < drop_high && drop_high <= 1.0)) {
    fail(ErrorKind::BadConfig,
         "inject_anomalies: need 0 <= drop_low < drop_high <= 1");
  }
  InjectionResult result;
  result.records.assign(records.begin(), records.end());
  result.labels.assign(records.size(), 0);

  std::vector<std::size_t> daytime;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].g_sw > 50.0) daytime.push_back(i);
  }
  const std::size_t k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(daytime.size())));
  if (k == 0) return result;

  SeededRng rng(seed);
  rng.shuffle(daytime);
  std::vector<std::size_t> chosen(daytime.begin(), daytime.begin() + k);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t idx : chosen) {
    const double u = drop_low + (drop_high - drop_low) * rng.next_double();
    result.records[idx].p_out *= u;
    result.labels[idx] = 1;
  }
  return result;
}

void write_labels_csv(std::span<const MonitoringRecord> records,
                      std::span<const std::uint8_t> labels,
                      const std::string& path) {
  if (records.size() != labels.size()) {
    fail(ErrorKind::LengthMismatch,
         "write_labels_csv: " + std::to_string(records.size()) + " records vs " +
             std::to_string(labels.size()) + " labels");
  }
  std::string out(kLabelsHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(records[i].timestamp);
    out.push_back(',');
    out.push_back(labels[i] ? '1' : '0');
    out.push_back('\n');
  }
  write_file(path, out);
}

std::vector<std::pair<std::int64_t, std::uint8_t>> parse_labels_csv(
    const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kLabelsHeader) {
    fail(ErrorKind::BadHeader, path + ": expected header '" +
                                   std::string(kLabelsHeader) + "'");
  }
  std::vector<std::pair<std::int64_t, std::uint8_t>> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != 2) {
      fail(ErrorKind::BadRow, path + " line " + std::to_string(line_no) +
                                  ": expected 2 fields");
    }
    const std::int64_t ts = parse_field_i64(fields[0], line_no, "timestamp");
    if (fields[1] != "0" && fields[1] != "1") {
      fail(ErrorKind::BadRow, path + " line " + std::to_string(line_no) +
                                  ": is_anomaly must be 0 or 1");
    }
    labels.emplace_back(ts, fields[1] == "1" ? 1 : 0);
  }
  return labels;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j, const char* name) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data")) {
    fail(ErrorKind::CorruptCheckpoint,
         std::string("checkpoint: malformed tensor ") + name);
  }
  const std::size_t rows = j.at("rows").get<std::size_t>();
  const std::size_t cols = j.at("cols").get<std::size_t>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) {
    fail(ErrorKind::ShapeMismatch,
         std::string("checkpoint: tensor ") + name + " holds " +
             std::to_string(data.size()) + " values for " +
             std::to_string(rows) + "x" + std::to_string(cols));
  }
  return Matrix(rows, cols, std::move(data));
}

std::vector<double> vector_from_json(const json& j, const char* name,
                                     std::size_t expect) {
  if (!j.is_array()) {
    fail(ErrorKind::CorruptCheckpoint,
         std::string("checkpoint: malformed tensor ") + name);
  }
  std::vector<double> v = j.get<std::vector<double>>();
  if (v.size() != expect) {
    fail(ErrorKind::ShapeMismatch, std::string("checkpoint: tensor ") + name +
                                       " holds " + std::to_string(v.size()) +
                                       " values, expected " +
                                       std::to_string(expect));
  }
  return v;
}

void require_matrix_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const char* name) {
  if (m.rows != rows || m.cols != cols) {
    fail(ErrorKind::ShapeMismatch,
         std::string("checkpoint: tensor ") + name + " is " +
             std::to_string(m.rows) + "x" + std::to_string(m.cols) +
             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ModelDims& dims = ckpt.params.dims;
  json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["dims"] = {{"nodes", dims.nodes},
               {"feature_dim", dims.feature_dim},
               {"gcn_hidden", dims.gcn_hidden},
               {"hidden", dims.hidden}};
  j["init_seed"] = ckpt.params.init_seed;
  j["window"] = {{"length", ckpt.window_len}, {"horizon", ckpt.horizon}};

  json graph;
  graph["node_names"] = ckpt.graph.node_names;
  graph["feature_dim"] = ckpt.graph.feature_dim;
  json edges = json::array();
  for (const Edge& e : ckpt.graph.spatial_edges) {
    edges.push_back(json::array({e.src, e.dst}));
  }
  graph["edges"] = edges;
  j["graph"] = graph;

  j["scaler"] = {{"min", ckpt.scaler.min}, {"max", ckpt.scaler.max}};

  json tensors;
  tensors["gcn_w"] = matrix_to_json(ckpt.params.gcn_w);
  tensors["gcn_u"] = matrix_to_json(ckpt.params.gcn_u);
  tensors["gru_wr"] = matrix_to_json(ckpt.params.gru_wr);
  tensors["gru_wz"] = matrix_to_json(ckpt.params.gru_wz);
  tensors["gru_wn"] = matrix_to_json(ckpt.params.gru_wn);
  tensors["gru_ur"] = matrix_to_json(ckpt.params.gru_ur);
  tensors["gru_uz"] = matrix_to_json(ckpt.params.gru_uz);
  tensors["gru_un"] = matrix_to_json(ckpt.params.gru_un);
  tensors["gru_br"] = ckpt.params.gru_br;
  tensors["gru_bz"] = ckpt.params.gru_bz;
  tensors["gru_bn"] = ckpt.params.gru_bn;
  tensors["fc_w"] = ckpt.params.fc_w;
  tensors["fc_b"] = ckpt.params.fc_b;
  j["tensors"] = tensors;

  write_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::CorruptCheckpoint,
         "checkpoint " + path + ": invalid JSON: " + e.what());
  }

  try {
    if (!j.contains("format_version")) {
      fail(ErrorKind::CorruptCheckpoint,
           "checkpoint " + path + ": missing format_version");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      fail(ErrorKind::VersionMismatch,
           "checkpoint " + path + ": format_version " + std::to_string(version) +
               ", expected " + std::to_string(kCheckpointFormatVersion));
    }

    Checkpoint ckpt;
    const json& dims_j = j.at("dims");
    ModelDims dims;
    dims.nodes = dims_j.at("nodes").get<std::size_t>();
    dims.feature_dim = dims_j.at("feature_dim").get<std::size_t>();
    dims.gcn_hidden = dims_j.at("gcn_hidden").get<std::size_t>();
    dims.hidden = dims_j.at("hidden").get<std::size_t>();

    const json& graph_j = j.at("graph");
    std::vector<std::string> node_names =
        graph_j.at("node_names").get<std::vector<std::string>>();
    std::vector<Edge> edge_list;
    for (const json& e : graph_j.at("edges")) {
      if (!e.is_array() || e.size() != 2) {
        fail(ErrorKind::CorruptCheckpoint,
             "checkpoint " + path + ": malformed edge entry");
      }
      edge_list.push_back(Edge{e.at(0).get<int>(), e.at(1).get<int>()});
    }
    ckpt.graph = build_parameter_graph(std::move(node_names), std::move(edge_list),
                                       graph_j.at("feature_dim").get<std::size_t>());
    if (ckpt.graph.node_count() != dims.nodes ||
        ckpt.graph.feature_dim != dims.feature_dim) {
      fail(ErrorKind::ShapeMismatch,
           "checkpoint " + path + ": graph does not match declared dims");
    }

    const json& scaler_j = j.at("scaler");
    const auto mins = scaler_j.at("min").get<std::vector<double>>();
    const auto maxs = scaler_j.at("max").get<std::vector<double>>();
    if (mins.size() != kColumnCount || maxs.size() != kColumnCount) {
      fail(ErrorKind::ShapeMismatch,
           "checkpoint " + path + ": scaler must carry " +
               std::to_string(kColumnCount) + " columns");
    }
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      ckpt.scaler.min[c] = mins[c];
      ckpt.scaler.max[c] = maxs[c];
      if (!(ckpt.scaler.max[c] - ckpt.scaler.min[c] > 1e-12)) {
        fail(ErrorKind::ShapeMismatch,
             "checkpoint " + path + ": degenerate scaler column " +
                 std::to_string(c));
      }
    }

    const json& window_j = j.at("window");
    ckpt.window_len = window_j.at("length").get<std::size_t>();
    ckpt.horizon = window_j.at("horizon").get<std::size_t>();
    if (ckpt.window_len < 1) {
      fail(ErrorKind::CorruptCheckpoint,
           "checkpoint " + path + ": window length must be >= 1");
    }

    const json& tensors = j.at("tensors");
    ckpt.params.dims = dims;
    ckpt.params.init_seed = j.at("init_seed").get<std::uint64_t>();
    ckpt.params.gcn_w = matrix_from_json(tensors.at("gcn_w"), "gcn_w");
    ckpt.params.gcn_u = matrix_from_json(tensors.at("gcn_u"), "gcn_u");
    ckpt.params.gru_wr = matrix_from_json(tensors.at("gru_wr"), "gru_wr");
    ckpt.params.gru_wz = matrix_from_json(tensors.at("gru_wz"), "gru_wz");
    ckpt.params.gru_wn = matrix_from_json(tensors.at("gru_wn"), "gru_wn");
    ckpt.params.gru_ur = matrix_from_json(tensors.at("gru_ur"), "gru_ur");
    ckpt.params.gru_uz = matrix_from_json(tensors.at("gru_uz"), "gru_uz");
    ckpt.params.gru_un = matrix_from_json(tensors.at("gru_un"), "gru_un");
    ckpt.params.gru_br = vector_from_json(tensors.at("gru_br"), "gru_br", dims.hidden);
    ckpt.params.gru_bz = vector_from_json(tensors.at("gru_bz"), "gru_bz", dims.hidden);
    ckpt.params.gru_bn = vector_from_json(tensors.at("gru_bn"), "gru_bn", dims.hidden);
    ckpt.params.fc_w = vector_from_json(tensors.at("fc_w"), "fc_w", dims.hidden);
    ckpt.params.fc_b = tensors.at("fc_b").get<double>();

    require_matrix_shape(ckpt.params.gcn_w, dims.gcn_hidden, dims.feature_dim, "gcn_w");
    require_matrix_shape(ckpt.params.gcn_u, dims.gcn_hidden, dims.feature_dim, "gcn_u");
    require_matrix_shape(ckpt.params.gru_wr, dims.hidden, dims.gru_input(), "gru_wr");
    require_matrix_shape(ckpt.params.gru_wz, dims.hidden, dims.gru_input(), "gru_wz");
    require_matrix_shape(ckpt.params.gru_wn, dims.hidden, dims.gru_input(), "gru_wn");
    require_matrix_shape(ckpt.params.gru_ur, dims.hidden, dims.hidden, "gru_ur");
    require_matrix_shape(ckpt.params.gru_uz, dims.hidden, dims.hidden, "gru_uz");
    require_matrix_shape(ckpt.params.gru_un, dims.hidden, dims.hidden, "gru_un");

    for_each_tensor(static_cast<TensorBundle&>(ckpt.params),
                    [](const char* name, std::span<double> values) {
                      ensure_finite(values, name);
                    });
    return ckpt;
  } catch (const json::exception& e) {
    fail(ErrorKind::CorruptCheckpoint,
         "checkpoint " + path + ": " + e.what());
  }
}

}  // namespace tgnn
