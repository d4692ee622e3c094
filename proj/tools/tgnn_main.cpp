// tgnn: generate / train / predict / detect / eval / gradcheck for the
// PV telemetry prediction and anomaly detection pipeline.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tgnn/anomaly.hpp"
#include "tgnn/data.hpp"
#include "tgnn/gradients.hpp"
#include "tgnn/metrics.hpp"
#include "tgnn/model.hpp"
#include "tgnn/training.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// TGNN_SEED is the fallback when neither the flag nor a config file set one.
std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* env = std::getenv("TGNN_SEED");
  if (env == nullptr || *env == '\0') return fallback;
  std::uint64_t v = 0;
  const char* last = env + std::string(env).size();
  const auto res = std::from_chars(env, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    tgnn::fail(tgnn::ErrorKind::BadConfig,
               std::string("TGNN_SEED is not an unsigned integer: '") + env + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(text.substr(start));
      break;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

/// Builds the parameter graph from config-file strings like
/// nodes=G_sw,G_lw,T_air,T_pv and edges=G_sw->T_pv,G_lw->T_pv,T_air->T_pv.
tgnn::TemporalGraphSpec graph_from_config(const tgnn::ConfigFile& cfg) {
  if (cfg.nodes.empty() && cfg.edges.empty()) {
    return tgnn::default_parameter_graph();
  }
  if (cfg.nodes.empty() || cfg.edges.empty()) {
    tgnn::fail(tgnn::ErrorKind::BadConfig,
               "config: nodes and edges must be given together");
  }
  const std::vector<std::string> names = split_list(cfg.nodes, ',');
  auto index_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    tgnn::fail(tgnn::ErrorKind::BadConfig,
               "config: edge endpoint '" + name + "' is not a node");
  };
  std::vector<tgnn::Edge> edges;
  for (const std::string& item : split_list(cfg.edges, ',')) {
    const std::size_t arrow = item.find("->");
    if (arrow == std::string::npos) {
      tgnn::fail(tgnn::ErrorKind::BadConfig,
                 "config: edge '" + item + "' must use src->dst");
    }
    edges.push_back(tgnn::Edge{index_of(item.substr(0, arrow)),
                               index_of(item.substr(arrow + 2))});
  }
  return tgnn::build_parameter_graph(names, std::move(edges));
}

bool config_sets(const tgnn::ConfigFile& cfg, const std::string& key) {
  for (const std::string& k : cfg.set_keys) {
    if (k == key) return true;
  }
  return false;
}

/// Shared by predict/detect/eval: checkpoint + data -> aligned predictions.
struct PredictionRun {
  tgnn::Checkpoint ckpt;
  std::vector<tgnn::FeatureWindow> windows;
  std::vector<double> targets;  // scaled
  std::vector<double> preds;    // scaled
};

PredictionRun run_prediction(const std::string& model_path,
                             const std::string& data_path) {
  PredictionRun run;
  run.ckpt = tgnn::load_checkpoint(model_path);
  const std::vector<tgnn::MonitoringRecord> records = tgnn::parse_csv(data_path);
  const std::vector<tgnn::Column> cols = tgnn::node_columns_for(run.ckpt.graph);
  std::size_t out_of_range = 0;
  run.windows = tgnn::make_windows(records, run.ckpt.scaler, run.ckpt.window_len,
                                   run.ckpt.horizon, cols, &out_of_range);
  if (out_of_range > 0) {
    std::cerr << "warning: " << out_of_range
              << " scaled values fell outside the training range\n";
  }
  run.targets.reserve(run.windows.size());
  for (const tgnn::FeatureWindow& w : run.windows) run.targets.push_back(w.target);
  run.preds = tgnn::predict_many(run.windows, run.ckpt.graph, run.ckpt.params);
  return run;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) tgnn::fail(tgnn::ErrorKind::IoError, "cannot open " + path + " for writing");
  out << text;
  if (!out) tgnn::fail(tgnn::ErrorKind::IoError, "short write to " + path);
}

json report_to_json(const tgnn::AnomalyReport& rep) {
  json j;
  j["count"] = rep.residuals.size();
  j["mean_residual"] = rep.mean_residual;
  j["std_residual"] = rep.std_residual;
  j["q1"] = rep.q1;
  j["q3"] = rep.q3;
  j["iqr"] = rep.iqr;
  j["lower_bound"] = rep.lower_bound;
  j["upper_bound"] = rep.upper_bound;
  j["anomaly_count"] = rep.anomaly_count;
  j["anomaly_fraction"] = rep.anomaly_fraction;
  j["lower_exceedance_count"] = rep.lower_exceedance_count;
  j["box_stats"] = {{"min", rep.box_stats.min},       {"q1", rep.box_stats.q1},
                    {"median", rep.box_stats.median}, {"q3", rep.box_stats.q3},
                    {"max", rep.box_stats.max},
                    {"outlier_count", rep.box_stats.outlier_count}};
  j["degenerate"] = rep.degenerate;
  j["diagnostic"] = rep.diagnostic;
  j["residuals"] = rep.residuals;
  j["zscores"] = rep.zscores;
  j["flags"] = rep.flags;
  return j;
}

// ---- subcommand bodies ----

struct GenerateArgs {
  tgnn::GeneratorConfig gen;
  std::string out_path;
  std::string labels_path;
};

int cmd_generate(const GenerateArgs& args) {
  const tgnn::InjectionResult result = tgnn::generate_with_labels(args.gen);
  tgnn::write_csv(result.records, args.out_path);
  if (!args.labels_path.empty()) {
    tgnn::write_labels_csv(result.records, result.labels, args.labels_path);
  }
  std::cout << "wrote " << result.records.size() << " records to "
            << args.out_path << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_path;
  std::string out_path;
  std::string metrics_path;
  std::string config_path;
  std::string split_mode;  // "", "random", "chrono"
  tgnn::TrainConfig cfg;
  // Which flags were given on the command line (override config file).
  bool has_epochs = false, has_lr = false, has_window = false, has_batch = false,
       has_seed = false, has_split_ratio = false, has_horizon = false;
};

int cmd_train(TrainArgs& args) {
  tgnn::ConfigFile file_cfg;
  tgnn::TemporalGraphSpec spec = tgnn::default_parameter_graph();
  if (!args.config_path.empty()) {
    file_cfg = tgnn::load_config_file(args.config_path);
    spec = graph_from_config(file_cfg);
  }

  tgnn::TrainConfig cfg = file_cfg.train;  // defaults when no config file
  if (args.has_epochs) cfg.epochs = args.cfg.epochs;
  if (args.has_lr) cfg.lr = args.cfg.lr;
  if (args.has_window) cfg.window = args.cfg.window;
  if (args.has_batch) cfg.batch_size = args.cfg.batch_size;
  if (args.has_split_ratio) cfg.split_ratio = args.cfg.split_ratio;
  if (args.has_horizon) cfg.horizon = args.cfg.horizon;
  if (args.has_seed) {
    cfg.seed = args.cfg.seed;
  } else if (!config_sets(file_cfg, "seed")) {
    cfg.seed = env_seed_or(cfg.seed);
  }
  if (args.split_mode == "chrono") cfg.chrono_split = true;
  else if (args.split_mode == "random") cfg.chrono_split = false;
  tgnn::validate_config(cfg);

  const std::vector<tgnn::MonitoringRecord> records =
      tgnn::parse_csv(args.data_path);
  const tgnn::TrainResult result = tgnn::train(records, spec, cfg);

  tgnn::Checkpoint ckpt;
  ckpt.params = result.params;
  ckpt.scaler = result.scaler;
  ckpt.graph = spec;
  ckpt.window_len = cfg.window;
  ckpt.horizon = cfg.horizon;
  tgnn::save_checkpoint(ckpt, args.out_path);

  if (!args.metrics_path.empty()) {
    json m;
    m["config"] = {{"lr", cfg.lr},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"window", cfg.window},
                   {"horizon", cfg.horizon},
                   {"split_ratio", cfg.split_ratio},
                   {"split", cfg.chrono_split ? "chrono" : "random"},
                   {"seed", cfg.seed},
                   {"gcn_hidden", cfg.gcn_hidden},
                   {"hidden", cfg.hidden}};
    m["train_windows"] = result.train_window_indices.size();
    m["test_windows"] = result.test_window_indices.size();
    m["out_of_range_scaled"] = result.out_of_range_scaled;
    json hist = json::array();
    for (std::size_t e = 0; e < result.history.size(); ++e) {
      hist.push_back(json{{"epoch", e + 1},
                          {"train_mse", result.history[e].train_mse},
                          {"test_mae", result.history[e].test_mae}});
    }
    m["history"] = hist;
    m["final_test_mae"] = result.final_test_mae;
    write_text(args.metrics_path, m.dump(2) + "\n");
  }

  std::cout << "final test MAE (scaled): " << fmt(result.final_test_mae) << "\n";
  return 0;
}

struct IoArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  std::string report_path;
  std::string labels_path;
};

int cmd_predict(const IoArgs& args) {
  const PredictionRun run = run_prediction(args.model_path, args.data_path);
  std::string out = "timestamp,actual_w,predicted_w,actual_scaled,predicted_scaled\n";
  for (std::size_t i = 0; i < run.windows.size(); ++i) {
    const double actual_w =
        tgnn::unscale(run.targets[i], tgnn::Column::Pout, run.ckpt.scaler);
    const double pred_w =
        tgnn::unscale(run.preds[i], tgnn::Column::Pout, run.ckpt.scaler);
    out += std::to_string(run.windows[i].target_timestamp);
    out += ',';
    out += fmt(actual_w);
    out += ',';
    out += fmt(pred_w);
    out += ',';
    out += fmt(run.targets[i]);
    out += ',';
    out += fmt(run.preds[i]);
    out += '\n';
  }
  write_text(args.out_path, out);
  std::cout << "wrote " << run.windows.size() << " predictions to "
            << args.out_path << "\n";
  return 0;
}

int cmd_detect(const IoArgs& args) {
  const PredictionRun run = run_prediction(args.model_path, args.data_path);
  const tgnn::AnomalyReport rep = tgnn::detect(run.targets, run.preds);

  std::string out = "timestamp,actual_scaled,predicted_scaled,e,z,flag\n";
  for (std::size_t i = 0; i < run.windows.size(); ++i) {
    const double z = rep.degenerate ? 0.0 : rep.zscores[i];
    const int flag = rep.degenerate ? 0 : static_cast<int>(rep.flags[i]);
    out += std::to_string(run.windows[i].target_timestamp);
    out += ',';
    out += fmt(run.targets[i]);
    out += ',';
    out += fmt(run.preds[i]);
    out += ',';
    out += fmt(rep.residuals[i]);
    out += ',';
    out += fmt(z);
    out += ',';
    out += std::to_string(flag);
    out += '\n';
  }
  write_text(args.out_path, out);

  if (!args.report_path.empty()) {
    write_text(args.report_path, report_to_json(rep).dump(2) + "\n");
  }
  std::cout << "flagged " << rep.anomaly_count << " of "
            << run.windows.size() << " points (fraction "
            << fmt(rep.anomaly_fraction) << ")\n";
  return 0;
}

int cmd_eval(const IoArgs& args) {
  const PredictionRun run = run_prediction(args.model_path, args.data_path);
  const tgnn::AnomalyReport rep = tgnn::detect(run.targets, run.preds);

  json m;
  m["count"] = run.windows.size();
  m["mae"] = tgnn::mae(run.targets, run.preds);
  try {
    m["mpe"] = tgnn::mpe(run.targets, run.preds);
  } catch (const tgnn::Error& e) {
    if (e.kind() != tgnn::ErrorKind::NoQualifyingSamples) throw;
    m["mpe"] = nullptr;
  }
  m["anomaly_fraction"] = rep.anomaly_fraction;
  m["anomaly_count"] = rep.anomaly_count;
  m["degenerate"] = rep.degenerate;

  if (!args.labels_path.empty()) {
    const auto labels = tgnn::parse_labels_csv(args.labels_path);
    std::unordered_map<std::int64_t, std::uint8_t> by_ts;
    by_ts.reserve(labels.size());
    for (const auto& [ts, flag] : labels) by_ts[ts] = flag;
    std::vector<std::uint8_t> truth;
    truth.reserve(run.windows.size());
    for (const tgnn::FeatureWindow& w : run.windows) {
      const auto it = by_ts.find(w.target_timestamp);
      if (it == by_ts.end()) {
        tgnn::fail(tgnn::ErrorKind::BadConfig,
                   "labels file has no entry for timestamp " +
                       std::to_string(w.target_timestamp));
      }
      truth.push_back(it->second);
    }
    std::vector<std::uint8_t> flags = rep.flags;
    if (rep.degenerate) flags.assign(run.windows.size(), 0);
    const tgnn::DetectionScores scores = tgnn::detection_scores(flags, truth);
    m["precision"] = scores.precision;
    m["recall"] = scores.recall;
    m["f1"] = scores.f1;
    m["detection_degenerate"] = scores.degenerate;
  }

  write_text(args.out_path, m.dump(2) + "\n");
  std::cout << "mae (scaled): " << fmt(m["mae"].get<double>()) << "\n";
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  bool has_seed = false;
  double tol = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const std::uint64_t seed = args.has_seed ? args.seed : env_seed_or(args.seed);
  const tgnn::ModelDims dims{4, 1, 8, 16};
  const tgnn::GradCheckReport rep = tgnn::gradient_check(seed, dims, args.tol);
  std::cout << "seed " << seed << ": max_rel_err " << fmt(rep.max_rel_err)
            << " (worst tensor " << rep.worst_tensor << ", "
            << rep.attempts << " resamples, min |preact| "
            << fmt(rep.min_abs_preact) << ") -> "
            << (rep.pass ? "pass" : "FAIL") << "\n";
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal graph network for PV power prediction and anomaly detection"};
  app.require_subcommand(1);

  GenerateArgs gen;
  bool gen_has_seed = false;
  CLI::App* generate = app.add_subcommand("generate", "Write synthetic telemetry CSV");
  generate->add_option("--days", gen.gen.days, "Days of telemetry (default 1)");
  generate->add_option("--period", gen.gen.period_s, "Sample period in seconds (default 60)");
  generate->add_option("--anomaly-frac", gen.gen.anomaly_fraction,
                       "Fraction of daytime points to corrupt (default 0)");
  generate->add_option("--drop-low", gen.gen.drop_low, "Lower power retention bound (default 0.3)");
  generate->add_option("--drop-high", gen.gen.drop_high, "Upper power retention bound (default 0.7)");
  generate->add_option("--start", gen.gen.start_timestamp, "First timestamp, UTC seconds");
  auto* gen_seed = generate->add_option("--seed", gen.gen.seed, "Generator seed (default 1)");
  generate->add_option("-o,--out", gen.out_path, "Output CSV path")->required();
  generate->add_option("--labels", gen.labels_path, "Also write truth labels CSV");
  generate->callback([&]() { gen_has_seed = gen_seed->count() > 0; });

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train on telemetry CSV");
  train->add_option("--data", train_args.data_path, "Input CSV")->required();
  auto* t_epochs = train->add_option("--epochs", train_args.cfg.epochs, "Epochs (default 100)");
  auto* t_lr = train->add_option("--lr", train_args.cfg.lr, "Learning rate (default 0.01)");
  auto* t_window = train->add_option("--window", train_args.cfg.window, "Window length L (default 12)");
  auto* t_batch = train->add_option("--batch", train_args.cfg.batch_size, "Mini-batch size (default 32)");
  auto* t_horizon = train->add_option("--horizon", train_args.cfg.horizon, "Steps ahead (default 0 = nowcast)");
  auto* t_ratio = train->add_option("--split-ratio", train_args.cfg.split_ratio, "Train fraction (default 0.8)");
  auto* t_seed = train->add_option("--seed", train_args.cfg.seed, "Master seed (default 1)");
  train->add_option("--split", train_args.split_mode, "Window split: random|chrono")
      ->check(CLI::IsMember({"random", "chrono"}));
  train->add_option("--config", train_args.config_path, "key=value config file");
  train->add_option("-o,--out", train_args.out_path, "Checkpoint path")->required();
  train->add_option("--metrics", train_args.metrics_path, "Per-epoch metrics JSON");
  train->callback([&]() {
    train_args.has_epochs = t_epochs->count() > 0;
    train_args.has_lr = t_lr->count() > 0;
    train_args.has_window = t_window->count() > 0;
    train_args.has_batch = t_batch->count() > 0;
    train_args.has_horizon = t_horizon->count() > 0;
    train_args.has_split_ratio = t_ratio->count() > 0;
    train_args.has_seed = t_seed->count() > 0;
  });

  IoArgs predict_args, detect_args, eval_args;
  CLI::App* predict = app.add_subcommand("predict", "Emit predictions CSV");
  predict->add_option("--model", predict_args.model_path, "Checkpoint path")->required();
  predict->add_option("--data", predict_args.data_path, "Input CSV")->required();
  predict->add_option("-o,--out", predict_args.out_path, "Output CSV")->required();

  CLI::App* detect = app.add_subcommand("detect", "Flag anomalous residuals");
  detect->add_option("--model", detect_args.model_path, "Checkpoint path")->required();
  detect->add_option("--data", detect_args.data_path, "Input CSV")->required();
  detect->add_option("-o,--out", detect_args.out_path, "Per-point flags CSV")->required();
  detect->add_option("--report", detect_args.report_path, "Anomaly report JSON");

  CLI::App* eval = app.add_subcommand("eval", "Emit metrics JSON");
  eval->add_option("--model", eval_args.model_path, "Checkpoint path")->required();
  eval->add_option("--data", eval_args.data_path, "Input CSV")->required();
  eval->add_option("-o,--out", eval_args.out_path, "Metrics JSON")->required();
  eval->add_option("--labels", eval_args.labels_path, "Truth labels CSV");

  GradcheckArgs grad_args;
  CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                           "Compare analytic gradients to finite differences");
  auto* g_seed = gradcheck->add_option("--seed", grad_args.seed, "Check seed (default 1)");
  gradcheck->add_option("--tol", grad_args.tol, "Max relative error to pass (default 1e-4)");
  gradcheck->callback([&]() { grad_args.has_seed = g_seed->count() > 0; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (generate->parsed()) {
      if (!gen_has_seed) gen.gen.seed = env_seed_or(gen.gen.seed);
      return cmd_generate(gen);
    }
    if (train->parsed()) return cmd_train(train_args);
    if (predict->parsed()) return cmd_predict(predict_args);
    if (detect->parsed()) return cmd_detect(detect_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_args);
  } catch (const tgnn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
