import contextlib
import csv
import io
import logging
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from mcse import runner
from mcse.audio import read_wav, write_wav
from mcse.config import CONFIG_ENV
from mcse.errors import NumericalError
from mcse.prior import load_decoder
from mcse.spectral import Waveform

from support import ar_signal


def _read_report(path):
    with open(path, encoding="utf-8") as f:
        return dict(line.rstrip("\n").split("=", 1) for line in f)


def _without_timing(report):
    return {key: value for key, value in report.items() if not key.endswith(runner.TIMING_SUFFIXES)}


class HelpTest(unittest.TestCase):
    def _help(self, command):
        out = io.StringIO()
        with contextlib.redirect_stdout(out), self.assertRaises(SystemExit) as cm:
            runner.build_parser().parse_args([command, "--help"])
        self.assertEqual(cm.exception.code, 0)
        return " ".join(out.getvalue().split())

    def test_enhance_defaults(self):
        text = self._help("enhance")
        for snippet in (
            "--J J EM iterations (default: 100)",
            "Langevin step size (default: 0.005)",
            "(default: 0.02)",
            "(default: ld 1, mh 10, mala 10)",
            "(default: ld 0, mh 5, mala 5)",
            "--config PATH",
        ):
            self.assertIn(snippet, text)

    def test_benchmark_options(self):
        text = self._help("benchmark")
        self.assertIn("--kinds", text)
        self.assertNotIn("--sampler", text)


class ParseTest(unittest.TestCase):
    def test_negative_snr_values(self):
        parser = runner.build_parser()
        for argv, expected in (
            (["--snr", "-5,0,5"], (-5.0, 0.0, 5.0)),
            (["--snr=-5,0,5"], (-5.0, 0.0, 5.0)),
            (["--snr", "-2.5"], (-2.5,)),
            (["--snr", ".5,-5"], (0.5, -5.0)),
        ):
            with self.subTest(argv=argv):
                self.assertEqual(parser.parse_args(["benchmark", *argv]).snr, expected)

    def test_negative_value_of_other_flags_untouched(self):
        self.assertEqual(runner._attach_list_values(["--seed", "-1"]), ["--seed", "-1"])
        self.assertEqual(runner._attach_list_values(["--snr", "-5", "-v"]), ["--snr=-5", "-v"])
        self.assertEqual(runner._attach_list_values(["--snr", "--J"]), ["--snr", "--J"])


class CommandTest(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name):
        return os.path.join(self.directory.name, name)

    def run_main(self, *argv):
        with mock.patch.object(logging.getLogger("Mcse"), "handlers", [logging.NullHandler()]):
            return runner.main([str(arg) for arg in argv])

    def make_decoder(self, freq_dim=33, name="prior.bin"):
        code = self.run_main(
            "gen-decoder",
            "--output", self.path(name),
            "--arch", "affine_exp",
            "--latent-dim", 3,
            "--freq-dim", freq_dim,
            "--report", self.path("gen.txt"),
        )  # fmt: skip
        self.assertEqual(code, 0)
        return self.path(name)

    def make_wavs(self, length=2000):
        rng = np.random.default_rng(0)
        clean = ar_signal(length, seed=1)
        write_wav(self.path("clean.wav"), Waveform(clean, 8000), "FLOAT")
        write_wav(self.path("noisy.wav"), Waveform(clean + 0.05 * rng.standard_normal(length), 8000), "FLOAT")
        return self.path("noisy.wav")

    def enhance(self, *extra, report="report.txt", output="enhanced.wav"):
        return self.run_main(
            "enhance",
            "--input", self.make_wavs(),
            "--output", self.path(output),
            "--decoder", self.make_decoder(),
            "--fft-size", 64,
            "--hop-size", 16,
            "--J", 3,
            "--report", self.path(report),
            *extra,
        )  # fmt: skip

    def test_gen_decoder(self):
        path = self.make_decoder(17)
        decoder = load_decoder(path)
        self.assertEqual((decoder.arch, decoder.latent_dim, decoder.freq_dim), ("affine_exp", 3, 17))
        report = _read_report(self.path("gen.txt"))
        self.assertEqual(report["freq_dim"], "17")

    def test_enhance(self):
        self.assertEqual(self.enhance("--reference", self.path("clean.wav"), "--diag", self.path("diag.txt")), 0)
        enhanced = read_wav(self.path("enhanced.wav"))
        noisy = read_wav(self.path("noisy.wav"))
        self.assertEqual(len(enhanced), len(noisy))
        self.assertEqual(enhanced.sample_rate, 8000)

        report = _read_report(self.path("report.txt"))
        self.assertEqual(report["config.J"], "3")
        self.assertEqual(report["config.K"], "1")
        self.assertEqual(report["bins"], "33")
        self.assertEqual(report["frames"], str(2000 // 16 + 1))
        for key in ("loglik.1", "loglik.3", "final_loglik", "si_sdr_in", "si_sdr_out", "seconds", "rtf"):
            self.assertIn(key, report)
        with open(self.path("diag.txt"), encoding="utf-8") as f:
            self.assertEqual(len(f.readlines()), 3)

    def test_enhance_is_deterministic(self):
        self.assertEqual(self.enhance("--sampler", "mala", report="a.txt", output="a.wav"), 0)
        self.assertEqual(self.enhance("--sampler", "mala", report="b.txt", output="b.wav"), 0)
        a, b = _read_report(self.path("a.txt")), _read_report(self.path("b.txt"))
        self.assertEqual(_without_timing(a), _without_timing(b))
        self.assertIn("acceptance.3", a)
        self.assertEqual((a["config.K"], a["config.burn_in"]), ("10", "5"))
        np.testing.assert_array_equal(read_wav(self.path("a.wav")).samples, read_wav(self.path("b.wav")).samples)

    def test_config_file(self):
        config = self.path("mcse.cfg")
        with open(config, "w", encoding="utf-8") as f:
            f.write("sampler = mh\nJ = 2\n")
        with mock.patch.dict(os.environ, {CONFIG_ENV: config}):
            self.assertEqual(self.enhance(), 0)
        report = _read_report(self.path("report.txt"))
        self.assertEqual(report["config.sampler"], "mh")
        self.assertEqual(report["config.J"], "3")
        self.assertNotIn("loglik.4", report)

        self.assertEqual(self.enhance("--config", config, "--eta", "0.01"), 0)
        report = _read_report(self.path("report.txt"))
        self.assertEqual((report["config.sampler"], report["config.eta"]), ("mh", "0.01"))

    def test_exit_codes(self):
        self.assertEqual(self.run_main("enhance", "--input", self.make_wavs()), 1)
        decoder = self.make_decoder()
        missing = ("--input", self.path("missing.wav"), "--output", self.path("o.wav"), "--decoder", decoder)
        self.assertEqual(self.run_main("enhance", *missing), 2)

        with open(self.path("bad.bin"), "wb") as f:
            f.write(b"not a decoder")
        bad = ("--input", self.path("noisy.wav"), "--output", self.path("o.wav"), "--decoder", self.path("bad.bin"))
        self.assertEqual(self.run_main("enhance", *bad), 2)

        mismatched = ("--input", self.path("noisy.wav"), "--output", self.path("o.wav"), "--decoder", decoder)
        self.assertEqual(self.run_main("enhance", *mismatched, "--fft-size", 128, "--hop-size", 32), 2)

        def diverge(cfg):
            raise NumericalError("Non-finite score", frame=2, iteration=5)

        with mock.patch.dict(runner.COMMAND_HANDLERS, {"gen-decoder": diverge}):
            self.assertEqual(self.run_main("gen-decoder", "--output", self.path("x.bin")), 3)

    def test_usage_errors(self):
        for argv in ([], ["enhance", "--eta", "fast"], ["enhance", "--sampler", "hmc"], ["denoise"]):
            with self.subTest(argv=argv):
                with contextlib.redirect_stderr(io.StringIO()), self.assertRaises(SystemExit) as cm:
                    runner.main(argv)
                self.assertEqual(cm.exception.code, 1)

    def test_sampler_diag(self):
        args = ("sampler-diag", "--steps", 2000, "--chains", 4, "--eta", 0.2, "--sigma2", 0.5)
        code = self.run_main(*args, "--report", self.path("diag.txt"), "--csv", self.path("diag.csv"))
        self.assertEqual(code, 0)
        report = _read_report(self.path("diag.txt"))
        for kind in ("ld", "mh", "mala"):
            for key in ("acceptance", "mean_error", "cov_rel_error", "ess", "ks_statistic", "ks_pvalue", "ks_verdict"):
                self.assertIn(f"{kind}.{key}", report)
            self.assertIn(report[f"{kind}.ks_verdict"], ("pass", "fail"))
            self.assertLess(float(report[f"{kind}.mean_error"]), 0.5)
        self.assertEqual(report["ld.acceptance"], "1")
        with open(self.path("diag.csv"), newline="", encoding="utf-8") as f:
            self.assertEqual(len(list(csv.reader(f))), 1 + 3 * 2000)

    def test_benchmark(self):
        args = (
            "benchmark",
            "--utterances", 1,
            "--frames", 16,
            "--snr", "0,5",
            "--J", 2,
            "--arch", "affine_exp",
            "--latent-dim", 3,
            "--freq-dim", 17,
            "--nmf-rank", 2,
        )  # fmt: skip
        self.assertEqual(self.run_main(*args, "--report", self.path("bench.txt"), "--csv", self.path("bench.csv")), 0)
        report = _read_report(self.path("bench.txt"))
        for kind in ("ld", "mh", "mala"):
            for snr in ("0", "5"):
                self.assertIn(f"{kind}.snr{snr}.improvement", report)
            self.assertIn(f"{kind}.rtf", report)
        self.assertEqual(sorted(report["order_by_rtf"].split("<")), ["ld", "mala", "mh"])
        self.assertIn(report["order_as_expected"], ("yes", "no"))
        self.assertNotIn("config.K", report)
        with open(self.path("bench.csv"), newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0][:3], ["kind", "snr_db", "utterance"])
        self.assertEqual(len(rows), 1 + 3 * 2)

    def test_benchmark_negative_snr(self):
        args = (
            "benchmark",
            "--utterances", 1,
            "--frames", 16,
            "--snr", "-5,0,5",
            "--kinds", "ld",
            "--J", 1,
            "--arch", "affine_exp",
            "--latent-dim", 3,
            "--freq-dim", 17,
            "--nmf-rank", 2,
        )  # fmt: skip
        self.assertEqual(self.run_main(*args, "--report", self.path("bench.txt")), 0)
        report = _read_report(self.path("bench.txt"))
        for snr in ("-5", "0", "5"):
            self.assertIn(f"ld.snr{snr}.improvement", report)
        self.assertNotIn("mh.rtf", report)


if __name__ == "__main__":
    unittest.main()
