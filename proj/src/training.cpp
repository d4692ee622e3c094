#include "tgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

#include "tgnn/data.hpp"
#include "tgnn/metrics.hpp"

namespace tgnn {

ScalerParams fit_scaler(std::span<const MonitoringRecord> train_rows) {
  if (train_rows.size() < 2) {
    fail(ErrorKind::TooFew, "fit_scaler: need at least 2 rows, got " +
                                std::to_string(train_rows.size()));
  }
  ScalerParams s;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const Column col = static_cast<Column>(c);
    double lo = column_value(train_rows[0], col);
    double hi = lo;
    for (const MonitoringRecord& r : train_rows) {
      const double v = column_value(r, col);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-12) {
      fail(ErrorKind::DegenerateColumn,
           std::string("fit_scaler: column ") +
               std::string(kColumnNodeNames[c]) + " is constant");
    }
    s.min[c] = lo;
    s.max[c] = hi;
  }
  return s;
}

ScalerParams fit_scaler(std::span<const MonitoringRecord> records,
                        std::span<const std::size_t> row_indices) {
  std::vector<MonitoringRecord> rows;
  rows.reserve(row_indices.size());
  for (std::size_t i : row_indices) rows.push_back(records[i]);
  return fit_scaler(rows);
}

double scale(double x, Column col, const ScalerParams& s) {
  const std::size_t c = static_cast<std::size_t>(col);
  return (x - s.min[c]) / (s.max[c] - s.min[c]);
}

double unscale(double y, Column col, const ScalerParams& s) {
  const std::size_t c = static_cast<std::size_t>(col);
  return y * (s.max[c] - s.min[c]) + s.min[c];
}

void validate_config(const TrainConfig& config) {
  if (config.lr <= 0.0) fail(ErrorKind::BadConfig, "lr must be > 0");
  if (config.epochs < 1) fail(ErrorKind::BadConfig, "epochs must be >= 1");
  if (!(config.split_ratio > 0.0 && config.split_ratio < 1.0)) {
    fail(ErrorKind::BadConfig, "split_ratio must be in (0, 1)");
  }
  if (config.batch_size < 1) fail(ErrorKind::BadConfig, "batch_size must be >= 1");
  if (config.window < 1) fail(ErrorKind::BadConfig, "window must be >= 1");
  if (config.gcn_hidden < 1 || config.hidden < 1) {
    fail(ErrorKind::BadConfig, "hidden sizes must be >= 1");
  }
}

namespace {

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    const long long v = std::stoll(value);
    if (v < 0) throw std::out_of_range("negative");
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::BadConfig, "config key " + key + ": bad integer '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::BadConfig, "config key " + key + ": bad number '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail(ErrorKind::IoError, "cannot open config file " + path);
  }
  ConfigFile cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::BadConfig, path + ":" + std::to_string(line_no) +
                                     ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.set_keys.push_back(key);

    if (key == "lr") cfg.train.lr = parse_double(key, value);
    else if (key == "epochs") cfg.train.epochs = parse_size(key, value);
    else if (key == "batch_size") cfg.train.batch_size = parse_size(key, value);
    else if (key == "window") cfg.train.window = parse_size(key, value);
    else if (key == "horizon") cfg.train.horizon = parse_size(key, value);
    else if (key == "split_ratio") cfg.train.split_ratio = parse_double(key, value);
    else if (key == "seed") cfg.train.seed = static_cast<std::uint64_t>(parse_size(key, value));
    else if (key == "gcn_hidden") cfg.train.gcn_hidden = parse_size(key, value);
    else if (key == "hidden") cfg.train.hidden = parse_size(key, value);
    else if (key == "split") {
      if (value == "chrono") cfg.train.chrono_split = true;
      else if (value == "random") cfg.train.chrono_split = false;
      else fail(ErrorKind::BadConfig, "config key split: expected random|chrono");
    } else if (key == "nodes") cfg.nodes = value;
    else if (key == "edges") cfg.edges = value;
    else {
      fail(ErrorKind::BadConfig, path + ":" + std::to_string(line_no) +
                                     ": unknown key '" + key + "'");
    }
  }
  validate_config(cfg.train);
  return cfg;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double ratio, std::uint64_t seed) {
  if (n < 2) {
    fail(ErrorKind::TooFewWindows, "split: need at least 2 windows, got " +
                                       std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng(seed);
  rng.shuffle(order);
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> train(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test(order.begin() + n_train, order.end());
  return {std::move(train), std::move(test)};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices_chrono(std::size_t n, double ratio) {
  if (n < 2) {
    fail(ErrorKind::TooFewWindows, "split: need at least 2 windows, got " +
                                       std::to_string(n));
  }
  const std::size_t n_train = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : test).push_back(i);
  }
  return {std::move(train), std::move(test)};
}

std::pair<std::vector<FeatureWindow>, std::vector<FeatureWindow>> split_windows(
    std::span<const FeatureWindow> windows, double ratio, std::uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(windows.size(), ratio, seed);
  std::vector<FeatureWindow> train, test;
  train.reserve(train_idx.size());
  test.reserve(test_idx.size());
  for (std::size_t i : train_idx) train.push_back(windows[i]);
  for (std::size_t i : test_idx) test.push_back(windows[i]);
  return {std::move(train), std::move(test)};
}

AdamState init_adam(const ModelDims& dims) {
  AdamState state;
  state.m = zero_bundle(dims);
  state.v = zero_bundle(dims);
  state.step_count = 0;
  return state;
}

void adam_step(ModelParams& params, const GradientSet& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (!(params.dims == grads.dims)) {
    fail(ErrorKind::ShapeMismatch, "adam_step: gradient dims do not match params");
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double m_corr = 1.0 - std::pow(beta1, t);
  const double v_corr = 1.0 - std::pow(beta2, t);

  std::vector<std::span<double>> p_t, m_t, v_t;
  std::vector<std::span<const double>> g_t;
  for_each_tensor(params, [&](const char*, std::span<double> s) { p_t.push_back(s); });
  for_each_tensor(state.m, [&](const char*, std::span<double> s) { m_t.push_back(s); });
  for_each_tensor(state.v, [&](const char*, std::span<double> s) { v_t.push_back(s); });
  for_each_tensor(const_cast<GradientSet&>(grads),
                  [&](const char*, std::span<double> s) { g_t.push_back(s); });

  for (std::size_t t_idx = 0; t_idx < p_t.size(); ++t_idx) {
    if (p_t[t_idx].size() != g_t[t_idx].size()) {
      fail(ErrorKind::ShapeMismatch, "adam_step: tensor size mismatch");
    }
    for (std::size_t k = 0; k < p_t[t_idx].size(); ++k) {
      const double g = g_t[t_idx][k];
      double& m = m_t[t_idx][k];
      double& v = v_t[t_idx][k];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g * g;
      const double m_hat = m / m_corr;
      const double v_hat = v / v_corr;
      p_t[t_idx][k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  for_each_tensor(params, [](const char* name, std::span<double> values) {
    ensure_finite(values, name);
  });
}

double mse_loss(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) {
    fail(ErrorKind::LengthMismatch, "mse_loss: lengths " +
                                        std::to_string(preds.size()) + " vs " +
                                        std::to_string(targets.size()));
  }
  if (preds.empty()) {
    fail(ErrorKind::Empty, "mse_loss: empty input");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

TrainResult train(std::span<const MonitoringRecord> records,
                  const TemporalGraphSpec& spec, const TrainConfig& config) {
  validate_config(config);
  const std::size_t min_len = config.window + config.horizon;
  if (records.size() < min_len + 1) {
    fail(ErrorKind::TooShort, "train: " + std::to_string(records.size()) +
                                  " records cannot fill a window of " +
                                  std::to_string(min_len) + "+1 steps");
  }
  const std::size_t n_windows = records.size() - min_len + 1;

  // Sub-seeds drawn in a fixed, documented order from the master seed.
  SeededRng master(config.seed);
  const std::uint64_t split_seed = master.next_u64();
  const std::uint64_t init_seed = master.next_u64();
  const std::uint64_t shuffle_seed = master.next_u64();

  auto [train_idx, test_idx] =
      config.chrono_split ? split_indices_chrono(n_windows, config.split_ratio)
                          : split_indices(n_windows, config.split_ratio, split_seed);
  if (train_idx.empty() || test_idx.empty()) {
    fail(ErrorKind::TooFewWindows,
         "train: split produced an empty partition (n=" +
             std::to_string(n_windows) + ")");
  }

  TrainResult result;
  const std::vector<std::size_t> coverage =
      window_coverage(train_idx, config.window, config.horizon);
  result.scaler = fit_scaler(records, coverage);

  const std::vector<Column> node_cols = node_columns_for(spec);
  std::size_t out_of_range = 0;
  const std::vector<FeatureWindow> windows =
      make_windows(records, result.scaler, config.window, config.horizon,
                   node_cols, &out_of_range);
  result.out_of_range_scaled = out_of_range;
  if (out_of_range > 0) {
    std::cerr << "warning: " << out_of_range
              << " scaled values fell outside the training range\n";
  }

  result.train_window_indices = train_idx;
  result.test_window_indices = test_idx;
  result.train_windows.reserve(train_idx.size());
  result.test_windows.reserve(test_idx.size());
  for (std::size_t i : train_idx) result.train_windows.push_back(windows[i]);
  for (std::size_t i : test_idx) result.test_windows.push_back(windows[i]);

  std::vector<double> train_targets, test_targets;
  for (const FeatureWindow& w : result.train_windows) train_targets.push_back(w.target);
  for (const FeatureWindow& w : result.test_windows) test_targets.push_back(w.target);

  ModelDims dims{spec.node_count(), spec.feature_dim, config.gcn_hidden,
                 config.hidden};
  result.params = init_params(init_seed, dims);
  AdamState adam = init_adam(dims);

  SeededRng shuffle_rng(shuffle_seed);
  std::vector<std::size_t> order(result.train_windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<FeatureWindow> batch;
  result.history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(start + config.batch_size, order.size());
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(result.train_windows[order[k]]);
      }
      const BackwardResult back = backward(batch, spec, result.params);
      adam_step(result.params, back.grads, adam, config.lr);
    }

    EpochStats stats;
    const std::vector<double> train_preds =
        predict_many(result.train_windows, spec, result.params);
    const std::vector<double> test_preds =
        predict_many(result.test_windows, spec, result.params);
    stats.train_mse = mse_loss(train_preds, train_targets);
    stats.test_mae = mae(test_targets, test_preds);
    result.history.push_back(stats);
  }

  result.final_test_mae = result.history.back().test_mae;
  return result;
}

}  // namespace tgnn
