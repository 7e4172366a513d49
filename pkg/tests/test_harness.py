from pathlib import Path
import json
import os
import tempfile
import unittest
from unittest import mock

from openpyxl import load_workbook

from defog.config import SolverConfig
from defog.corpus import clean_scenes, write_corpus
from defog.errors import ParameterError, PlanError
from defog.haze_model import FogSpec, synthesize_fog
from defog.harness import (
    CSV_COLUMNS,
    ExperimentPlan,
    RunRecord,
    emit_report,
    run_noreference_experiment,
    run_reference_experiment,
    summarize_records,
    worker_count,
)
from defog.metrics import MetricReport, evaluate, ssim
from defog.restorer import Restorer


def corpus(tmp_dir: str) -> dict:
    return write_corpus(Path(tmp_dir) / "corpus")


def build_record(method: str, mse: float, image_id: str = "scene") -> RunRecord:
    report = MetricReport(fade=10.0, cri=1.2, entropy=6.5, ag=0.05, mse=mse, ssim=0.9)
    return RunRecord(image_id, method, 0.2, report, iterations=12, converged=True)


class ReferenceExperimentTests(unittest.TestCase):
    def test_writes_report_for_every_level_and_method(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            output_dir = Path(tmp_dir) / "out"
            plan = ExperimentPlan(
                inputs=[images["clean/sky_blocks"]],
                output_dir=output_dir,
                fog_levels=[0.1, 0.2, 0.3],
                record_timing=False,
            )

            records = run_reference_experiment(plan)
            outputs = emit_report(records, output_dir)

            self.assertEqual(len(records), 6)
            self.assertEqual([record.method for record in records[:2]], ["dcp", "proposed"])
            lines = outputs["csv"].read_text(encoding="utf-8").splitlines()
            self.assertEqual(len(lines), 7)
            self.assertEqual(lines[0], ",".join(CSV_COLUMNS))
            self.assertTrue(lines[1].startswith("sky_blocks,dcp,0.1,"))
            self.assertTrue(lines[1].endswith(",0,True,0.0"))

            self.assertEqual(len(list((output_dir / "restored").glob("*.png"))), 6)
            self.assertTrue((output_dir / "foggy" / "sky_blocks_fog20.png").exists())
            self.assertTrue((output_dir / "restored" / "sky_blocks_fog30_proposed.png").exists())

            payload = json.loads(outputs["json"].read_text(encoding="utf-8"))
            self.assertEqual(len(payload), 6)
            self.assertIsNotNone(payload[0]["report"]["psnr"])
            self.assertIn("mse[proposed]", outputs["summary"].read_text(encoding="utf-8"))

            for record in records:
                self.assertIsNone(record.error)
                self.assertGreater(record.report.mse, 0.0)
                if record.method == "proposed":
                    self.assertTrue(record.converged)
                    self.assertGreaterEqual(record.iterations, 1)

    def test_report_is_byte_identical_across_runs_and_threads(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            reports = []
            for threads in ("1", "4"):
                output_dir = Path(tmp_dir) / f"out{threads}"
                plan = ExperimentPlan(
                    inputs=[images["clean/sky_blocks"], images["clean/stripes"]],
                    output_dir=output_dir,
                    fog_levels=[0.2],
                    fog_noise=0.02,
                    record_timing=False,
                )
                with mock.patch.dict(os.environ, {"DEFOG_THREADS": threads}):
                    records = run_reference_experiment(plan)
                reports.append(emit_report(records, output_dir)["csv"].read_bytes())

            self.assertEqual(reports[0], reports[1])
            self.assertIn(b"\nstripes,proposed,", reports[0])

    def test_missing_input_is_reported_and_run_continues(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            plan = ExperimentPlan(
                inputs=[Path(tmp_dir) / "missing.png", images["clean/stripes"]],
                output_dir=Path(tmp_dir) / "out",
                fog_levels=[0.2],
                methods=["dcp"],
            )

            with self.assertLogs("defog.harness", level="ERROR"):
                records = run_reference_experiment(plan)

            self.assertEqual([record.image_id for record in records], ["missing", "stripes"])
            self.assertIsNotNone(records[0].error)
            self.assertFalse(records[0].converged)
            self.assertIsNone(records[1].error)

    def test_close_fog_levels_keep_separate_files(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            output_dir = Path(tmp_dir) / "out"
            plan = ExperimentPlan(
                inputs=[images["clean/stripes"]],
                output_dir=output_dir,
                fog_levels=[0.1, 0.104],
                methods=["dcp"],
            )

            records = run_reference_experiment(plan)

            self.assertEqual(len(records), 2)
            self.assertTrue((output_dir / "foggy" / "stripes_fog10.png").exists())
            self.assertTrue((output_dir / "foggy" / "stripes_fog10p4.png").exists())
            restored = sorted(path.name for path in (output_dir / "restored").glob("*.png"))
            self.assertEqual(restored, ["stripes_fog10_dcp.png", "stripes_fog10p4_dcp.png"])

    def test_traces_are_written_on_request(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            output_dir = Path(tmp_dir) / "out"
            plan = ExperimentPlan(
                inputs=[images["clean/stripes"]],
                output_dir=output_dir,
                fog_levels=[0.2],
                methods=["proposed"],
                config=SolverConfig(max_iters=15),
                emit_traces=True,
            )

            records = run_reference_experiment(plan)

            trace = output_dir / "traces" / "stripes_fog20_proposed.csv"
            lines = trace.read_text(encoding="utf-8").splitlines()
            self.assertEqual(lines[0], "iter,rel_err,g_max,clamped_fraction")
            self.assertEqual(len(lines), records[0].iterations + 1)


class NoReferenceExperimentTests(unittest.TestCase):
    def test_restoration_reduces_fog_and_stretches_contrast(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            images = corpus(tmp_dir)
            output_dir = Path(tmp_dir) / "out"
            plan = ExperimentPlan(
                inputs=[images["foggy/hazy_blocks"], images["foggy/hazy_stripes"]],
                output_dir=output_dir,
                record_timing=False,
            )

            records = run_noreference_experiment(plan)
            outputs = emit_report(records, output_dir)

            self.assertEqual([record.method for record in records[:3]], ["foggy", "dcp", "proposed"])
            by_key = {(record.image_id, record.method): record.report for record in records}
            for image_id in ("hazy_blocks", "hazy_stripes"):
                foggy = by_key[(image_id, "foggy")]
                proposed = by_key[(image_id, "proposed")]
                self.assertEqual(foggy.cri, 1.0)
                self.assertIsNone(foggy.mse)
                self.assertLess(proposed.fade, foggy.fade, msg=image_id)
                self.assertLess(by_key[(image_id, "dcp")].fade, foggy.fade, msg=image_id)
                self.assertGreaterEqual(proposed.cri, 1.0, msg=image_id)

            lines = outputs["csv"].read_text(encoding="utf-8").splitlines()
            self.assertEqual(len(lines), 7)
            self.assertTrue(lines[1].startswith("hazy_blocks,foggy,,,,"))
            self.assertFalse((output_dir / "restored" / "hazy_blocks_nr_foggy.png").exists())
            self.assertTrue((output_dir / "restored" / "hazy_blocks_nr_dcp.png").exists())


class MethodOrderingTests(unittest.TestCase):
    def test_proposed_beats_guidance_and_fog_on_noisy_captures(self):
        restorer = Restorer()
        config = SolverConfig()
        for name, clean in clean_scenes().items():
            for seed, level in enumerate((0.1, 0.2, 0.3)):
                foggy = synthesize_fog(clean, FogSpec(level, 0.9, noise=0.02, seed=seed))
                dcp, proposed = restorer.restore(foggy, config, methods=["dcp", "proposed"])

                dcp_report = evaluate(dcp.image, foggy, reference=clean)
                proposed_report = evaluate(proposed.image, foggy, reference=clean)

                label = f"{name} at {level}"
                self.assertLess(proposed_report.mse, dcp_report.mse, msg=label)
                self.assertGreater(proposed_report.ssim, ssim(clean, foggy), msg=label)

    def test_proposed_beats_guidance_and_fog_without_noise(self):
        restorer = Restorer()
        config = SolverConfig()
        for name, clean in clean_scenes().items():
            for level in (0.1, 0.2, 0.3):
                foggy = synthesize_fog(clean, FogSpec(level, 0.9))
                dcp, proposed = restorer.restore(foggy, config, methods=["dcp", "proposed"])

                dcp_report = evaluate(dcp.image, foggy, reference=clean)
                proposed_report = evaluate(proposed.image, foggy, reference=clean)

                label = f"{name} at {level}"
                self.assertLess(proposed_report.mse, dcp_report.mse, msg=label)
                self.assertGreater(proposed_report.ssim, ssim(clean, foggy), msg=label)


class PlanTests(unittest.TestCase):
    def test_reads_plan_and_solver_sections(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            path = Path(tmp_dir) / "plan.ini"
            path.write_text(
                "[plan]\n"
                "inputs = corpus/a.png, corpus/b.png\n"
                "fog_levels = 0.1, 0.3\n"
                "methods = proposed\n"
                "fog_mode = depth\n"
                "fog_noise = 0.02\n"
                "fog_seed = 4\n"
                "record_timing = false\n"
                "\n[time]\nmax_iters = 30\n",
                encoding="utf-8",
            )

            plan = ExperimentPlan.from_ini(path)

            self.assertEqual(plan.inputs, [Path(tmp_dir) / "corpus/a.png", Path(tmp_dir) / "corpus/b.png"])
            self.assertEqual(plan.fog_levels, [0.1, 0.3])
            self.assertEqual(plan.methods, ["proposed"])
            self.assertEqual(plan.fog_mode, "depth")
            self.assertEqual((plan.fog_noise, plan.fog_seed), (0.02, 4))
            self.assertFalse(plan.record_timing)
            self.assertEqual(plan.config.max_iters, 30)
            self.assertEqual(plan.output_dir, Path(tmp_dir) / "results")

            override = ExperimentPlan.from_ini(path, output_dir=Path(tmp_dir) / "elders")
            self.assertEqual(override.output_dir, Path(tmp_dir) / "elders")

    def test_invalid_plans(self):
        cases = {
            "unknown_key": "[plan]\ninputs = a.png\ncolour = red\n",
            "unknown_method": "[plan]\ninputs = a.png\nmethods = cnn\n",
            "no_inputs": "[plan]\nmethods = dcp\n",
            "bad_level": "[plan]\ninputs = a.png\nfog_levels = 1.2\n",
            "bad_number": "[plan]\ninputs = a.png\nfog_levels = veel\n",
            "bad_solver": "[plan]\ninputs = a.png\n[time]\ntau = -1\n",
            "repeated_level": "[plan]\ninputs = a.png\nfog_levels = 0.2, 0.2\n",
        }
        with tempfile.TemporaryDirectory() as tmp_dir:
            for name, text in cases.items():
                path = Path(tmp_dir) / f"{name}.ini"
                path.write_text(text, encoding="utf-8")
                with self.assertRaises(PlanError, msg=name):
                    ExperimentPlan.from_ini(path)

    def test_worker_count_from_environment(self):
        with mock.patch.dict(os.environ, {"DEFOG_THREADS": "3"}):
            self.assertEqual(worker_count(), 3)
        with mock.patch.dict(os.environ, {"DEFOG_THREADS": "veel"}):
            with self.assertLogs("defog.harness", level="WARNING"):
                self.assertEqual(worker_count(), 1)


class ReportTests(unittest.TestCase):
    def test_empty_records_are_rejected(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            with self.assertRaises(ParameterError):
                emit_report([], tmp_dir)

    def test_excel_has_sheet_per_method(self):
        records = [build_record("dcp", 0.02), build_record("proposed", 0.01)]
        with tempfile.TemporaryDirectory() as tmp_dir:
            outputs = emit_report(records, tmp_dir, excel=True)

            workbook = load_workbook(outputs["excel"])
            self.assertEqual(workbook.sheetnames, ["dcp", "proposed"])
            sheet = workbook["proposed"]
            self.assertEqual(sheet.cell(row=1, column=1).value, "image")
            self.assertEqual(sheet.cell(row=2, column=4).value, 0.01)
            self.assertIs(sheet.cell(row=2, column=11).value, True)

    def test_summary_pivots_methods_into_columns(self):
        records = [build_record("dcp", 0.02), build_record("proposed", 0.01)]
        summary = summarize_records(records)

        self.assertEqual(list(summary["fog"]), ["fog20"])
        self.assertEqual(float(summary["mse[dcp]"].iloc[0]), 0.02)
        self.assertEqual(float(summary["mse[proposed]"].iloc[0]), 0.01)

    def test_failed_records_keep_their_row(self):
        records = [build_record("dcp", 0.02), RunRecord("scene", "proposed", 0.2, None, converged=False, error="boom")]
        with tempfile.TemporaryDirectory() as tmp_dir:
            outputs = emit_report(records, tmp_dir)
            lines = outputs["csv"].read_text(encoding="utf-8").splitlines()
            payload = json.loads(outputs["json"].read_text(encoding="utf-8"))

        self.assertEqual(lines[2], "scene,proposed,0.2,,,,,,,0,False,0.0")
        self.assertEqual(payload[1]["error"], "boom")


if __name__ == "__main__":
    unittest.main()
