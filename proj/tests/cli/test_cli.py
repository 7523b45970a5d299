# Copyright 2026 The mallsim Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""End-to-end checks of the mallsim command line."""

import hashlib
import json
import os
import shutil
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

BIN = Path(os.environ.get("MALLSIM_BIN", "build/mallsim")).resolve()
ROOT = Path(os.environ.get("MALLSIM_SOURCE_DIR", Path(__file__).resolve().parents[2]))
DESK = ROOT / "scenarios" / "desk"
SCHEMA = json.loads((ROOT / "schemas" / "summary.schema.json").read_text())

EXIT_OK, EXIT_INPUT, EXIT_SAMPLING, EXIT_LIVELOCK = 0, 2, 3, 4


def run(*args, env=None):
    full_env = {k: v for k, v in os.environ.items() if not k.startswith("MALLSIM_")}
    full_env.update(env or {})
    return subprocess.run([str(BIN), *map(str, args)], capture_output=True, text=True, env=full_env, timeout=120)


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp(prefix="mallsim_cli_"))

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def simulate(self, config, out, *extra, env=None):
        return run("simulate", "--config", config, "--out", out, *extra, env=env)

    def write_config(self, name, doc):
        path = self.tmp / name
        path.write_text(json.dumps(doc))
        return path


class SimulateTest(CliTest):
    def test_outputs_and_schema(self):
        out = self.tmp / "pe"
        r = self.simulate(DESK / "par_efficiency.json", out)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        for name in ["trace.ndjson", "ledger.csv", "summary.json", "timeline.csv", "jobs.csv", "reconfig.csv",
                     "resolved_config.json", "config.sha256", "run.json", "sampling.json"]:
            self.assertTrue((out / name).exists(), name)
        summary = json.loads((out / "summary.json").read_text())
        jsonschema.validate(summary, SCHEMA)
        self.assertGreater(summary["reconfig"]["total"], 0)
        self.assertEqual(summary["jobs"]["rejected"], 0)

    def test_resolved_config_hash(self):
        out = self.tmp / "ag"
        self.assertEqual(self.simulate(DESK / "always_grow.json", out).returncode, EXIT_OK)
        resolved = json.loads((out / "resolved_config.json").read_text())
        compact = json.dumps(resolved, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
        digest = (out / "config.sha256").read_text().strip()
        self.assertEqual(digest, hashlib.sha256(compact.encode()).hexdigest())
        self.assertNotIn("include", resolved)
        self.assertEqual(resolved["seed"], 7)

    def test_runs_are_byte_identical(self):
        a, b = self.tmp / "a", self.tmp / "b"
        self.assertEqual(self.simulate(DESK / "par_efficiency.json", a).returncode, EXIT_OK)
        self.assertEqual(self.simulate(DESK / "par_efficiency.json", b).returncode, EXIT_OK)
        for name in ["trace.ndjson", "summary.json", "ledger.csv", "config.sha256"]:
            self.assertEqual((a / name).read_bytes(), (b / name).read_bytes(), name)

    def test_seed_flag_and_environment_agree(self):
        flag, env = self.tmp / "flag", self.tmp / "env"
        self.assertEqual(self.simulate(DESK / "baseline.json", flag, "--seed", 11).returncode, EXIT_OK)
        self.assertEqual(self.simulate(DESK / "baseline.json", env, env={"MALLSIM_SEED": "11"}).returncode, EXIT_OK)
        self.assertEqual((flag / "trace.ndjson").read_bytes(), (env / "trace.ndjson").read_bytes())
        self.assertEqual((flag / "config.sha256").read_bytes(), (env / "config.sha256").read_bytes())
        default = self.tmp / "default"
        self.assertEqual(self.simulate(DESK / "baseline.json", default).returncode, EXIT_OK)
        self.assertNotEqual((flag / "config.sha256").read_bytes(), (default / "config.sha256").read_bytes())

    def test_log_override(self):
        copy = self.tmp / "copy.swf"
        shutil.copy(ROOT / "tests" / "data" / "desk.swf", copy)
        a, b = self.tmp / "a", self.tmp / "b"
        self.assertEqual(self.simulate(DESK / "baseline.json", a).returncode, EXIT_OK)
        self.assertEqual(self.simulate(DESK / "baseline.json", b, "--log", copy).returncode, EXIT_OK)
        self.assertEqual((a / "trace.ndjson").read_bytes(), (b / "trace.ndjson").read_bytes())

    def test_matches_golden_trace(self):
        out = self.tmp / "sl"
        self.assertEqual(self.simulate(DESK / "static_large.json", out).returncode, EXIT_OK)
        golden = ROOT / "tests" / "golden" / "desk_static_large.ndjson"
        self.assertEqual((out / "trace.ndjson").read_bytes(), golden.read_bytes())


class ExitCodeTest(CliTest):
    def base(self):
        return {"include": [str(DESK / "base.json")], "name": "exit-codes"}

    def test_missing_config(self):
        r = self.simulate(self.tmp / "absent.json", self.tmp / "o")
        self.assertEqual(r.returncode, EXIT_INPUT)
        self.assertIn("absent.json", r.stderr)

    def test_malformed_config(self):
        path = self.tmp / "bad.json"
        path.write_text('{"seed": 1, "cluster": ')
        self.assertEqual(self.simulate(path, self.tmp / "o").returncode, EXIT_INPUT)

    def test_missing_log(self):
        doc = self.base()
        doc["workload"] = {"log": str(self.tmp / "nowhere.swf")}
        r = self.simulate(self.write_config("c.json", doc), self.tmp / "o")
        self.assertEqual(r.returncode, EXIT_INPUT)

    def test_malformed_log(self):
        log = self.tmp / "broken.swf"
        log.write_text("; MaxNodes: 4\n1 0 -1 10 4\n")
        doc = self.base()
        doc["workload"] = {"log": str(log)}
        r = self.simulate(self.write_config("c.json", doc), self.tmp / "o")
        self.assertEqual(r.returncode, EXIT_INPUT)
        self.assertIn("line 2", r.stderr)

    def test_unreachable_sampling_target(self):
        doc = self.base()
        doc["workload"] = {"sampling": {"target_fraction": 50.0}}
        r = self.simulate(self.write_config("c.json", doc), self.tmp / "o")
        self.assertEqual(r.returncode, EXIT_SAMPLING, r.stderr)

    def test_livelock_guard(self):
        doc = self.base()
        doc["cluster"] = {"max_events_per_instant": 1}
        r = self.simulate(self.write_config("c.json", doc), self.tmp / "o")
        self.assertEqual(r.returncode, EXIT_LIVELOCK, r.stderr)

    def test_usage_error(self):
        self.assertNotEqual(run("simulate").returncode, EXIT_OK)
        self.assertNotEqual(run("no-such-command").returncode, EXIT_OK)


class ReportTest(CliTest):
    def test_report_reproduces_simulate_summary(self):
        sim = self.tmp / "sim"
        self.assertEqual(self.simulate(DESK / "par_efficiency.json", sim).returncode, EXIT_OK)
        rep = self.tmp / "rep"
        r = run("report", sim / "trace.ndjson", "--warmup-end", 3960, "--day-seconds", 8640, "--out", rep)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        self.assertEqual(json.loads((rep / "summary.json").read_text()), json.loads((sim / "summary.json").read_text()))

    def test_wait_diff(self):
        base, pe = self.tmp / "base", self.tmp / "pe"
        self.assertEqual(self.simulate(DESK / "baseline.json", base).returncode, EXIT_OK)
        self.assertEqual(self.simulate(DESK / "par_efficiency.json", pe).returncode, EXIT_OK)
        rep = self.tmp / "rep"
        r = run("report", pe / "trace.ndjson", "--diff", base / "trace.ndjson", "--out", rep)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        rows = (rep / "wait_diff.csv").read_text().splitlines()
        self.assertEqual(rows[0], "job_id,wait,reference_wait,diff")
        summary = json.loads((base / "summary.json").read_text())
        self.assertEqual(len(rows) - 1, summary["jobs"]["completed"])
        for row in rows[1:]:
            _, wait, ref, diff = map(int, row.split(","))
            self.assertEqual(diff, wait - ref)

        same = self.tmp / "same"
        self.assertEqual(run("report", base / "trace.ndjson", "--diff", base / "trace.ndjson", "--out", same).returncode,
                         EXIT_OK)
        for row in (same / "wait_diff.csv").read_text().splitlines()[1:]:
            self.assertTrue(row.endswith(",0"), row)

    def test_missing_and_broken_traces(self):
        self.assertEqual(run("report", self.tmp / "none.ndjson", "--out", self.tmp / "o").returncode, EXIT_INPUT)
        bad = self.tmp / "bad.ndjson"
        bad.write_text('{"format":"mallsim-trace","version":1,"total_nodes":4}\n{oops\n')
        self.assertEqual(run("report", bad, "--out", self.tmp / "o").returncode, EXIT_INPUT)


class PipelineTest(CliTest):
    def test_ingest_then_sample_matches_simulate(self):
        ing = self.tmp / "ingest"
        r = run("ingest", "--config", DESK / "baseline.json", "--scale", "1", "--out", ing)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        self.assertTrue((ing / "distribution.json").exists())
        smp = self.tmp / "sample"
        r = run("sample", ing / "workload.swf", "--target-fraction", 0.84, "--nodes", 16, "--seed", 7, "--out", smp)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        self.assertTrue((smp / "baseline.swf").exists())
        sim = self.tmp / "sim"
        self.assertEqual(self.simulate(DESK / "baseline.json", sim).returncode, EXIT_OK)
        standalone = json.loads((smp / "sampling.json").read_text())
        in_run = json.loads((sim / "sampling.json").read_text())
        self.assertEqual(standalone["users"], in_run["users"])
        self.assertEqual(standalone["status"], "ok")

    def test_scaled_ingest_divides_times(self):
        one, ten = self.tmp / "one", self.tmp / "ten"
        log = ROOT / "tests" / "data" / "desk.swf"
        self.assertEqual(run("ingest", log, "--queues", 1, "--out", one).returncode, EXIT_OK)
        self.assertEqual(run("ingest", log, "--queues", 1, "--scale", "10", "--out", ten).returncode, EXIT_OK)

        def jobs(path):
            return [line.split() for line in (path / "workload.swf").read_text().splitlines() if not line.startswith(";")]

        def tenth(x):
            # Nearest integer, halves away from zero; all values here are >= 0.
            return (2 * x + 10) // 20

        a, b = jobs(one), jobs(ten)
        self.assertEqual(len(a), len(b))
        for x, y in zip(a, b):
            self.assertEqual(int(y[1]), tenth(int(x[1])))
            run_time = int(x[3])
            self.assertEqual(int(y[3]), max(1, tenth(run_time)) if run_time >= 1 else tenth(run_time))

    def test_sample_failure_exit_code(self):
        ing = self.tmp / "ingest"
        self.assertEqual(run("ingest", ROOT / "tests" / "data" / "desk.swf", "--out", ing).returncode, EXIT_OK)
        r = run("sample", ing / "workload.swf", "--target", 1e9, "--nodes", 16, "--out", self.tmp / "s")
        self.assertEqual(r.returncode, EXIT_SAMPLING)
        self.assertEqual(json.loads((self.tmp / "s" / "sampling.json").read_text())["status"], "failed")

    def test_sweep(self):
        out = self.tmp / "sweep"
        r = run("sweep", DESK / "static_large.json", DESK / "static_half.json", "-j", 2, "--out", out)
        self.assertEqual(r.returncode, EXIT_OK, r.stderr)
        for name in ["static_large", "static_half"]:
            self.assertTrue((out / name / "summary.json").exists())
        golden = ROOT / "tests" / "golden" / "desk_static_half.ndjson"
        self.assertEqual((out / "static_half" / "trace.ndjson").read_bytes(), golden.read_bytes())


if __name__ == "__main__":
    unittest.main(verbosity=2, argv=[sys.argv[0]] + sys.argv[1:])
