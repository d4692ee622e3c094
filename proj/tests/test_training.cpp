#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tgnn/data.hpp"
#include "tgnn/training.hpp"

using namespace tgnn;

namespace {

MonitoringRecord make_record(std::int64_t ts, double gsw, double glw,
                             double tair, double tpv, double pout) {
  return MonitoringRecord{ts, gsw, glw, tair, tpv, pout};
}

std::vector<MonitoringRecord> ramp_records(std::size_t n) {
  std::vector<MonitoringRecord> rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i);
    rows.push_back(make_record(1000 + 60 * static_cast<std::int64_t>(i),
                               10.0 * x, 300.0 + x, 15.0 + 0.1 * x,
                               16.0 + 0.2 * x, 5.0 * x));
  }
  return rows;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name, const std::string& contents)
      : path("/tmp/tgnn_test_" + name) {
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("fit_scaler finds per-column extremes") {
  std::vector<MonitoringRecord> rows{
      make_record(0, 1.0, 300.0, 10.0, 12.0, 0.0),
      make_record(60, 5.0, 310.0, 20.0, 30.0, 100.0),
      make_record(120, 3.0, 305.0, 15.0, 20.0, 50.0)};
  const ScalerParams s = fit_scaler(rows);
  CHECK(s.min[0] == 1.0);
  CHECK(s.max[0] == 5.0);
  CHECK(s.min[1] == 300.0);
  CHECK(s.max[1] == 310.0);
  CHECK(s.min[4] == 0.0);
  CHECK(s.max[4] == 100.0);
}

TEST_CASE("fit_scaler needs two rows and spread in every column") {
  std::vector<MonitoringRecord> one{make_record(0, 1, 2, 3, 4, 5)};
  try {
    fit_scaler(one);
    FAIL("expected TooFew");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFew);
  }

  std::vector<MonitoringRecord> flat{make_record(0, 1, 300, 10, 12, 0),
                                     make_record(60, 1, 310, 20, 30, 100)};
  try {
    fit_scaler(flat);  // G_sw constant
    FAIL("expected DegenerateColumn");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateColumn);
    CHECK(std::string(e.what()).find("G_sw") != std::string::npos);
  }
}

TEST_CASE("fit_scaler over indices sees only those rows") {
  std::vector<MonitoringRecord> rows = ramp_records(10);
  rows[9].p_out = 99999.0;  // excluded below
  const std::vector<std::size_t> subset{0, 1, 2, 3, 4};
  const ScalerParams s = fit_scaler(rows, subset);
  CHECK(s.max[4] == 20.0);  // 5 * 4, not 99999
  CHECK(s.min[0] == 0.0);
  CHECK(s.max[0] == 40.0);
}

TEST_CASE("scale endpoints and round trip") {
  ScalerParams s;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    s.min[c] = -3.0;
    s.max[c] = 7.0;
  }
  CHECK(scale(-3.0, Column::Gsw, s) == 0.0);
  CHECK(scale(7.0, Column::Gsw, s) == 1.0);
  CHECK(scale(2.0, Column::Gsw, s) == 0.5);

  SeededRng rng(41);
  for (int i = 0; i < 200; ++i) {
    const double x = 20.0 * rng.next_open_signed();
    const double back = unscale(scale(x, Column::Pout, s), Column::Pout, s);
    CHECK(back == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("split_indices partitions 0..n-1 with round(ratio*n) train entries") {
  const auto [train, test] = split_indices(10, 0.8, 5);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  std::vector<std::size_t> all;
  all.insert(all.end(), train.begin(), train.end());
  all.insert(all.end(), test.begin(), test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(10);
  for (std::size_t i = 0; i < 10; ++i) expect[i] = i;
  CHECK(all == expect);

  // Deterministic per seed; a different seed reorders.
  const auto [train2, test2] = split_indices(10, 0.8, 5);
  CHECK(train == train2);
  CHECK(test == test2);
  const auto [train3, test3] = split_indices(10, 0.8, 6);
  CHECK(train != train3);
}

TEST_CASE("split_indices rejects degenerate sizes") {
  try {
    split_indices(1, 0.8, 1);
    FAIL("expected TooFewWindows");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewWindows);
  }
}

TEST_CASE("chronological split keeps order") {
  const auto [train, test] = split_indices_chrono(10, 0.7);
  CHECK(train == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
  CHECK(test == std::vector<std::size_t>{7, 8, 9});
}

TEST_CASE("adam_step matches the hand-computed first two updates") {
  // Scalar-ish setup: check fc_b, driven by a synthetic gradient of 0.5.
  const ModelDims dims{2, 1, 1, 1};
  ModelParams p = init_params(1, dims);
  p.fc_b = 1.0;
  AdamState state = init_adam(dims);
  GradientSet g = zero_gradients(dims);
  g.fc_b = 0.5;

  adam_step(p, g, state, 0.01);
  CHECK(p.fc_b == doctest::Approx(0.9900000002).epsilon(1e-12));
  adam_step(p, g, state, 0.01);
  CHECK(p.fc_b == doctest::Approx(0.9800000004).epsilon(1e-12));
  CHECK(state.step_count == 2);
}

TEST_CASE("adam_step matches an independent elementwise implementation") {
  const ModelDims dims{2, 1, 2, 3};
  ModelParams p = init_params(3, dims);
  ModelParams p_ref = p;
  AdamState state = init_adam(dims);

  // Reference accumulators, flat per tensor in canonical order.
  std::vector<std::vector<double>> ref_m, ref_v;
  for_each_tensor(static_cast<TensorBundle&>(p_ref),
                  [&](const char*, std::span<double> s) {
    ref_m.emplace_back(s.size(), 0.0);
    ref_v.emplace_back(s.size(), 0.0);
  });

  SeededRng rng(50);
  for (int step = 1; step <= 5; ++step) {
    GradientSet g = zero_gradients(dims);
    for_each_tensor(static_cast<TensorBundle&>(g),
                    [&](const char*, std::span<double> s) {
      for (double& v : s) v = rng.next_open_signed();
    });

    adam_step(p, g, state, 0.01);

    std::size_t t_idx = 0;
    for_each_tensor(static_cast<TensorBundle&>(p_ref),
                    [&](const char* name, std::span<double> s) {
      for_each_tensor(static_cast<TensorBundle&>(g),
                      [&](const char* name_g, std::span<double> gs) {
        if (std::string(name) != name_g) return;
        for (std::size_t i = 0; i < s.size(); ++i) {
          double& m = ref_m[t_idx][i];
          double& v = ref_v[t_idx][i];
          m = 0.9 * m + 0.1 * gs[i];
          v = 0.999 * v + 0.001 * gs[i] * gs[i];
          const double mh = m / (1.0 - std::pow(0.9, step));
          const double vh = v / (1.0 - std::pow(0.999, step));
          s[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
      });
      ++t_idx;
    });
  }

  std::size_t t_idx = 0;
  double worst = 0.0;
  for_each_tensor(static_cast<TensorBundle&>(p),
                  [&](const char* name, std::span<double> s) {
    for_each_tensor(static_cast<TensorBundle&>(p_ref),
                    [&](const char* name_r, std::span<double> rs) {
      if (std::string(name) != name_r) return;
      for (std::size_t i = 0; i < s.size(); ++i) {
        worst = std::max(worst, std::abs(s[i] - rs[i]));
      }
    });
    ++t_idx;
  });
  CHECK(worst < 1e-12);
}

TEST_CASE("adam_step rejects mismatched dims") {
  ModelParams p = init_params(1, ModelDims{2, 1, 2, 3});
  AdamState state = init_adam(p.dims);
  GradientSet g = zero_gradients(ModelDims{2, 1, 2, 4});
  CHECK_THROWS_AS(adam_step(p, g, state, 0.01), Error);
}

TEST_CASE("mse_loss basics") {
  CHECK(mse_loss(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}) == 0.5);
  CHECK_THROWS_AS(mse_loss(std::vector<double>{1.0}, std::vector<double>{}), Error);
  CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("config defaults match the published hyperparameters") {
  const TrainConfig cfg;
  CHECK(cfg.lr == 0.01);
  CHECK(cfg.epochs == 100);
  CHECK(cfg.window == 12);
  CHECK(cfg.horizon == 0);
  CHECK(cfg.split_ratio == 0.8);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validate_config rejects out-of-range values") {
  auto expect_bad = [](auto&& mutate) {
    TrainConfig cfg;
    mutate(cfg);
    try {
      validate_config(cfg);
      FAIL("expected BadConfig");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadConfig);
    }
  };
  expect_bad([](TrainConfig& c) { c.lr = 0.0; });
  expect_bad([](TrainConfig& c) { c.lr = -1.0; });
  expect_bad([](TrainConfig& c) { c.epochs = 0; });
  expect_bad([](TrainConfig& c) { c.split_ratio = 0.0; });
  expect_bad([](TrainConfig& c) { c.split_ratio = 1.0; });
  expect_bad([](TrainConfig& c) { c.batch_size = 0; });
  expect_bad([](TrainConfig& c) { c.window = 0; });
  expect_bad([](TrainConfig& c) { c.hidden = 0; });
}

TEST_CASE("config files parse key=value with comments") {
  const TempFile file("cfg_ok.conf",
                      "# hyperparameters\n"
                      "lr = 0.005\n"
                      "epochs=20\n"
                      "split = chrono\n"
                      "\n"
                      "window = 6   # trailing comment\n");
  const ConfigFile cfg = load_config_file(file.path);
  CHECK(cfg.train.lr == 0.005);
  CHECK(cfg.train.epochs == 20);
  CHECK(cfg.train.window == 6);
  CHECK(cfg.train.chrono_split);
  CHECK(cfg.train.batch_size == 32);  // untouched default
  CHECK(cfg.set_keys.size() == 4);
}

TEST_CASE("config files reject unknown keys and bad numbers") {
  const TempFile unknown("cfg_unknown.conf", "lrate = 0.01\n");
  try {
    load_config_file(unknown.path);
    FAIL("expected BadConfig");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BadConfig);
    CHECK(std::string(e.what()).find("lrate") != std::string::npos);
  }

  const TempFile bad_num("cfg_badnum.conf", "lr = fast\n");
  CHECK_THROWS_AS(load_config_file(bad_num.path), Error);

  const TempFile no_eq("cfg_noeq.conf", "lr 0.01\n");
  CHECK_THROWS_AS(load_config_file(no_eq.path), Error);

  CHECK_THROWS_AS(load_config_file("/nonexistent/tgnn.conf"), Error);
}

TEST_CASE("config graph keys pass through raw") {
  const TempFile file("cfg_graph.conf",
                      "nodes = G_sw,T_air\nedges = G_sw->T_air\n");
  const ConfigFile cfg = load_config_file(file.path);
  CHECK(cfg.nodes == "G_sw,T_air");
  CHECK(cfg.edges == "G_sw->T_air");
}

TEST_CASE("train produces one history entry per epoch, deterministically") {
  GeneratorConfig gen;
  gen.days = 1;
  gen.seed = 77;
  const std::vector<MonitoringRecord> records = generate_synthetic(gen);
  const TemporalGraphSpec spec = default_parameter_graph();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.window = 8;
  cfg.seed = 9;
  cfg.gcn_hidden = 4;
  cfg.hidden = 8;

  const TrainResult a = train(records, spec, cfg);
  REQUIRE(a.history.size() == 3);
  CHECK(a.final_test_mae == a.history.back().test_mae);
  CHECK(a.train_windows.size() + a.test_windows.size() ==
        records.size() - cfg.window + 1);

  const TrainResult b = train(records, spec, cfg);
  CHECK(a.params.fc_w == b.params.fc_w);
  CHECK(a.params.gru_wn == b.params.gru_wn);
  CHECK(a.history.back().train_mse == b.history.back().train_mse);
  CHECK(a.train_window_indices == b.train_window_indices);
}

TEST_CASE("training loss falls from the first to the last epoch") {
  GeneratorConfig gen;
  gen.days = 1;
  gen.seed = 31;
  const std::vector<MonitoringRecord> records = generate_synthetic(gen);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.window = 8;
  cfg.seed = 2;
  cfg.gcn_hidden = 4;
  cfg.hidden = 8;
  const TrainResult result = train(records, default_parameter_graph(), cfg);
  CHECK(result.history.back().train_mse < result.history.front().train_mse);
}

TEST_CASE("the scaler never sees rows covered only by test windows") {
  // Chronological split pins which windows are test-side: the trailing rows
  // belong only to test windows, so a spike there must not stretch the
  // scaler's range.
  std::vector<MonitoringRecord> records = ramp_records(30);
  records[29].p_out = 1e6;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.window = 5;
  cfg.split_ratio = 0.8;
  cfg.chrono_split = true;
  cfg.gcn_hidden = 2;
  cfg.hidden = 3;
  const TrainResult result = train(records, default_parameter_graph(), cfg);
  // 26 windows, 21 train (starts 0..20), coverage rows 0..24: max p_out 5*24.
  CHECK(result.scaler.max[4] == 120.0);
  CHECK(result.out_of_range_scaled > 0);  // the spike falls outside [0,1]
}

TEST_CASE("train rejects inputs that cannot fill two windows") {
  const std::vector<MonitoringRecord> records = ramp_records(5);
  TrainConfig cfg;
  cfg.window = 5;
  try {
    train(records, default_parameter_graph(), cfg);
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooShort);
  }
}

TEST_CASE("sixteen windows can be memorized") {
  // Capacity check: a small clean batch driven to near-zero training error.
  GeneratorConfig gen;
  gen.days = 1;
  gen.seed = 3;
  gen.start_timestamp = 1677628800 + 9 * 3600;  // start mid-morning
  std::vector<MonitoringRecord> records = generate_synthetic(gen);
  records.resize(16 + 12 - 1);  // exactly 16 windows of length 12

  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.lr = 0.01;
  cfg.window = 12;
  cfg.batch_size = 4;  // several Adam steps per epoch, enough to interpolate
  cfg.seed = 4;
  const TrainResult result = train(records, default_parameter_graph(), cfg);
  CHECK(result.history.back().train_mse < 1e-4);
}
