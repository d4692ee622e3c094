#!/usr/bin/env python3
"""End-to-end CLI checks: exit codes, file layouts, determinism, JSON schemas.

Environment:
  TGNN_BIN      path to the tgnn executable (required)
  TGNN_SCHEMAS  directory holding the *.schema.json files (required)
"""
import json
import os
import pathlib
import subprocess
import tempfile
import unittest

import jsonschema

BIN = os.environ["TGNN_BIN"]
SCHEMAS = pathlib.Path(os.environ["TGNN_SCHEMAS"])

CSV_HEADER = "timestamp,gsw_wm2,glw_wm2,tair_c,tpv_c,pout_w"


def run(*args, env_extra=None):
    """Run the CLI with a scrubbed environment (no stray TGNN_SEED)."""
    env = os.environ.copy()
    env.pop("TGNN_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [BIN, *map(str, args)], capture_output=True, text=True, env=env
    )


def validate(path, schema_name):
    doc = json.loads(pathlib.Path(path).read_text())
    schema = json.loads((SCHEMAS / schema_name).read_text())
    jsonschema.validate(doc, schema)
    return doc


class PipelineTest(unittest.TestCase):
    """One shared generate+train fixture, then per-output assertions."""

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory(prefix="tgnn_cli_")
        d = pathlib.Path(cls.tmp.name)
        cls.data = d / "data.csv"
        cls.labels = d / "labels.csv"
        cls.ckpt = d / "model.ckpt"
        cls.metrics = d / "metrics.json"

        r = run(
            "generate", "--days", 1, "--seed", 7, "--anomaly-frac", 0.05,
            "-o", cls.data, "--labels", cls.labels,
        )
        assert r.returncode == 0, r.stderr
        r = run(
            "train", "--data", cls.data, "--epochs", 5, "--seed", 9,
            "-o", cls.ckpt, "--metrics", cls.metrics,
        )
        assert r.returncode == 0, r.stderr
        cls.train_stdout = r.stdout

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def path(self, name):
        return pathlib.Path(self.tmp.name) / name

    def test_generate_row_counts_and_header(self):
        lines = self.data.read_text().splitlines()
        self.assertEqual(len(lines), 1441)  # header + 1440 minute samples
        self.assertEqual(lines[0], CSV_HEADER)
        labels = self.labels.read_text().splitlines()
        self.assertEqual(len(labels), 1441)
        self.assertEqual(labels[0], "timestamp,is_anomaly")
        # Injection only touches p_out, so the written irradiance column still
        # identifies the daytime (g_sw > 50) population the 5% was drawn from.
        daytime = sum(1 for l in lines[1:] if float(l.split(",")[1]) > 50.0)
        injected = sum(int(l.split(",")[1]) for l in labels[1:])
        self.assertEqual(injected, int(0.05 * daytime))

    def test_train_metrics_schema_and_config(self):
        doc = validate(self.metrics, "train_metrics.schema.json")
        self.assertEqual(doc["config"]["seed"], 9)
        self.assertEqual(doc["config"]["epochs"], 5)
        self.assertEqual(len(doc["history"]), 5)
        self.assertEqual(doc["train_windows"] + doc["test_windows"], 1429)
        self.assertIn("final test MAE (scaled):", self.train_stdout)

    def test_checkpoint_schema(self):
        validate(self.ckpt, "checkpoint.schema.json")

    def test_predict_output(self):
        out = self.path("preds.csv")
        r = run("predict", "--model", self.ckpt, "--data", self.data, "-o", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        lines = out.read_text().splitlines()
        self.assertEqual(
            lines[0], "timestamp,actual_w,predicted_w,actual_scaled,predicted_scaled"
        )
        self.assertEqual(len(lines), 1 + 1429)  # windows = 1440 - 12 + 1

    def test_detect_output_and_report_schema(self):
        out = self.path("flags.csv")
        report = self.path("report.json")
        r = run(
            "detect", "--model", self.ckpt, "--data", self.data,
            "-o", out, "--report", report,
        )
        self.assertEqual(r.returncode, 0, r.stderr)
        lines = out.read_text().splitlines()
        self.assertEqual(lines[0], "timestamp,actual_scaled,predicted_scaled,e,z,flag")
        self.assertEqual(len(lines), 1 + 1429)
        doc = validate(report, "anomaly_report.schema.json")
        self.assertEqual(doc["count"], 1429)
        self.assertEqual(len(doc["flags"]), 1429)
        self.assertIn("flagged", r.stdout)

    def test_eval_with_and_without_labels(self):
        out = self.path("eval.json")
        r = run("eval", "--model", self.ckpt, "--data", self.data, "-o", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        doc = validate(out, "eval_metrics.schema.json")
        self.assertNotIn("precision", doc)

        r = run(
            "eval", "--model", self.ckpt, "--data", self.data,
            "--labels", self.labels, "-o", out,
        )
        self.assertEqual(r.returncode, 0, r.stderr)
        doc = validate(out, "eval_metrics.schema.json")
        self.assertIn("precision", doc)
        self.assertIn("recall", doc)


class DeterminismTest(unittest.TestCase):
    def test_identical_runs_are_byte_identical(self):
        with tempfile.TemporaryDirectory(prefix="tgnn_cli_det_") as tmp:
            d = pathlib.Path(tmp)
            outputs = []
            for name in ("a", "b"):
                data = d / f"{name}.csv"
                ckpt = d / f"{name}.ckpt"
                metrics = d / f"{name}.json"
                r = run("generate", "--days", 1, "--period", 300, "--seed", 3,
                        "-o", data)
                self.assertEqual(r.returncode, 0, r.stderr)
                r = run("train", "--data", data, "--epochs", 3, "--seed", 5,
                        "-o", ckpt, "--metrics", metrics)
                self.assertEqual(r.returncode, 0, r.stderr)
                outputs.append(
                    (data.read_bytes(), ckpt.read_bytes(), metrics.read_bytes())
                )
            self.assertEqual(outputs[0], outputs[1])


class SeedPrecedenceTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory(prefix="tgnn_cli_seed_")
        self.d = pathlib.Path(self.tmp.name)
        self.data = self.d / "data.csv"
        r = run("generate", "--days", 1, "--period", 300, "--seed", 3,
                "-o", self.data)
        assert r.returncode == 0, r.stderr

    def tearDown(self):
        self.tmp.cleanup()

    def train_seed(self, *extra, env_extra=None):
        metrics = self.d / "m.json"
        r = run("train", "--data", self.data, "--epochs", 1,
                "-o", self.d / "m.ckpt", "--metrics", metrics, *extra,
                env_extra=env_extra)
        self.assertEqual(r.returncode, 0, r.stderr)
        return json.loads(metrics.read_text())["config"]["seed"]

    def test_env_seed_used_when_no_flag(self):
        self.assertEqual(self.train_seed(env_extra={"TGNN_SEED": "42"}), 42)

    def test_flag_beats_env_seed(self):
        self.assertEqual(
            self.train_seed("--seed", "7", env_extra={"TGNN_SEED": "42"}), 7
        )

    def test_default_seed_without_env(self):
        self.assertEqual(self.train_seed(), 1)

    def test_config_file_beats_env_seed(self):
        cfg = self.d / "train.cfg"
        cfg.write_text("seed = 11\n")
        self.assertEqual(
            self.train_seed("--config", cfg, env_extra={"TGNN_SEED": "42"}), 11
        )

    def test_malformed_env_seed_fails(self):
        r = run("generate", "--days", 1, "-o", self.d / "x.csv",
                env_extra={"TGNN_SEED": "abc"})
        self.assertEqual(r.returncode, 1)
        self.assertIn("TGNN_SEED", r.stderr)


class ExitCodeTest(unittest.TestCase):
    def test_usage_errors_exit_2(self):
        self.assertEqual(run().returncode, 2)  # missing subcommand
        self.assertEqual(run("train").returncode, 2)  # missing required opts
        self.assertEqual(run("generate", "--bogus").returncode, 2)
        self.assertEqual(run("nonsense").returncode, 2)

    def test_help_exits_0(self):
        self.assertEqual(run("--help").returncode, 0)
        self.assertEqual(run("train", "--help").returncode, 0)

    def test_runtime_errors_exit_1(self):
        with tempfile.TemporaryDirectory(prefix="tgnn_cli_err_") as tmp:
            d = pathlib.Path(tmp)
            r = run("generate", "--days", 0, "-o", d / "x.csv")
            self.assertEqual(r.returncode, 1)
            self.assertIn("error:", r.stderr)

            r = run("train", "--data", d / "missing.csv", "-o", d / "m.ckpt")
            self.assertEqual(r.returncode, 1)

            # Too few rows for one window of length 12.
            short = d / "short.csv"
            rows = [CSV_HEADER] + [
                f"{100 + i},1,300,10,12,{i}" for i in range(5)
            ]
            short.write_text("\n".join(rows) + "\n")
            data = d / "data.csv"
            run("generate", "--days", 1, "--period", 300, "-o", data)
            ckpt = d / "m.ckpt"
            r = run("train", "--data", data, "--epochs", 1, "-o", ckpt)
            self.assertEqual(r.returncode, 0, r.stderr)
            r = run("predict", "--model", ckpt, "--data", short, "-o", d / "p.csv")
            self.assertEqual(r.returncode, 1)

    def test_gradcheck_passes_by_default(self):
        r = run("gradcheck")
        self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
        self.assertIn("pass", r.stdout)


class FinePeriodTest(unittest.TestCase):
    def test_two_second_sampling(self):
        with tempfile.TemporaryDirectory(prefix="tgnn_cli_pp_") as tmp:
            out = pathlib.Path(tmp) / "fast.csv"
            r = run("generate", "--days", 1, "--period", 2, "-o", out)
            self.assertEqual(r.returncode, 0, r.stderr)
            lines = out.read_text().splitlines()
            self.assertEqual(len(lines), 1 + 86400 // 2)


if __name__ == "__main__":
    unittest.main(verbosity=2)
