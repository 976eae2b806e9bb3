import os
import tempfile
import unittest
from unittest import mock

from mcse.config import (
    CONFIG_ENV,
    OPTIONS,
    OPTIONS_BY_NAME,
    RunConfig,
    config_path,
    options_for,
    read_config_file,
    resolve_options,
)
from mcse.errors import ConfigError


class ConfigFileTest(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def write(self, text):
        path = os.path.join(self.directory.name, "mcse.cfg")
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_parse(self):
        path = self.write("# MALA settings\nsampler = mala\n\nburn-in = 3  # fewer\n--J=40\nK = 8\n")
        self.assertEqual(read_config_file(path), {"sampler": "mala", "burn_in": "3", "J": "40", "K": "8"})

    def test_later_lines_win(self):
        self.assertEqual(read_config_file(self.write("eta = 0.1\neta = 0.2\n")), {"eta": "0.2"})

    def test_errors(self):
        for text in ("sampler mala\n", "= 3\n", "temperature = 2\n"):
            with self.subTest(text=text), self.assertRaises(ConfigError):
                read_config_file(self.write(text))
        with self.assertRaises(ConfigError):
            read_config_file(os.path.join(self.directory.name, "missing.cfg"))

    def test_config_path(self):
        with mock.patch.dict(os.environ, {CONFIG_ENV: "from-env.cfg"}):
            self.assertEqual(config_path(None), "from-env.cfg")
            self.assertEqual(config_path("explicit.cfg"), "explicit.cfg")
        with mock.patch.dict(os.environ, clear=True):
            self.assertIsNone(config_path(None))


class ResolveTest(unittest.TestCase):
    def test_precedence(self):
        values = resolve_options("enhance", {"eta": "0.1", "J": "50"}, {"eta": 0.2})
        self.assertEqual(values["eta"], 0.2)
        self.assertEqual(values["J"], 50)
        self.assertEqual(values["sigma2"], 0.02)

    def test_foreign_keys_ignored(self):
        values = resolve_options("gen-decoder", {"sampler": "mh"})
        self.assertNotIn("sampler", values)
        self.assertEqual(values["arch"], "gru")

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            resolve_options("enhance", {"sampler": "hmc"})
        with self.assertRaises(ConfigError):
            resolve_options("enhance", {"J": "many"})
        with self.assertRaises(ConfigError):
            resolve_options("benchmark", {"kinds": "ld,hmc"})
        with self.assertRaises(ConfigError) as cm:
            OPTIONS_BY_NAME["snr"].convert("-5,loud")
        self.assertIsInstance(cm.exception.__cause__, ValueError)

    def test_option_table(self):
        self.assertEqual(len(OPTIONS_BY_NAME), len(OPTIONS))
        self.assertEqual(OPTIONS_BY_NAME["burn_in"].flag, "--burn-in")
        self.assertIn("(default: 100)", OPTIONS_BY_NAME["J"].help_text)
        self.assertIn("ld 1, mh 10, mala 10", OPTIONS_BY_NAME["K"].help_text)
        self.assertNotIn("sampler", [option.name for option in options_for("benchmark")])
        self.assertEqual(OPTIONS_BY_NAME["snr"].convert("-5, 0,5"), (-5.0, 0.0, 5.0))
        self.assertIsNone(OPTIONS_BY_NAME["K"].convert("auto"))
        self.assertEqual([option.name for option in OPTIONS if option.list_valued], ["snr", "kinds"])


class RunConfigTest(unittest.TestCase):
    def _enhance(self, **flags):
        flags = {"input": "in.wav", "output": "out.wav", "decoder": "prior.bin", **flags}
        return RunConfig.from_options("enhance", resolve_options("enhance", flag_values=flags))

    def test_defaults(self):
        cfg = self._enhance()
        self.assertEqual(cfg.em.J, 100)
        self.assertEqual((cfg.em.sampler.kind, cfg.em.sampler.K, cfg.em.sampler.burn_in), ("ld", 1, 0))
        self.assertEqual((cfg.stft.fft_size, cfg.stft.hop_size), (1024, 256))
        self.assertEqual(cfg.em.noise_share, 0.1)

    def test_noise_share(self):
        self.assertEqual(self._enhance(noise_share=0.5).em.noise_share, 0.5)
        self.assertIn("noise_share=0.1", self._enhance().echo())
        for share in (0.0, 1.5):
            with self.subTest(share=share), self.assertRaises(ConfigError):
                self._enhance(noise_share=share)

    def test_sampler_defaults_per_kind(self):
        cfg = self._enhance(sampler="mala")
        self.assertEqual((cfg.em.sampler.K, cfg.em.sampler.burn_in), (10, 5))
        cfg = self._enhance(sampler="mh", K=20)
        self.assertEqual((cfg.em.sampler.K, cfg.em.sampler.burn_in), (20, 5))

    def test_echo(self):
        lines = self._enhance(sampler="mh").echo()
        self.assertEqual(lines, sorted(lines))
        for line in ("K=10", "burn_in=5", "eta=0.005", "sigma2=0.02", "J=100", "sampler=mh", "input=in.wav"):
            self.assertIn(line, lines)
        self.assertFalse(any(line.startswith("reference=") for line in lines))

    def test_required(self):
        with self.assertRaises(ConfigError):
            RunConfig.from_options("enhance", resolve_options("enhance", flag_values={"input": "in.wav"}))
        with self.assertRaises(ConfigError):
            RunConfig.from_options("gen-decoder", resolve_options("gen-decoder"))

    def test_ranges(self):
        with self.assertRaises(ConfigError):
            self._enhance(chains=0)
        with self.assertRaises(ConfigError):
            self._enhance(eta=-1.0)
        with self.assertRaises(ConfigError):
            self._enhance(hop_size=1000)
        with self.assertRaises(ConfigError):
            RunConfig.from_options("sampler-diag", resolve_options("sampler-diag", flag_values={"alpha": 1.5}))
        with self.assertRaises(ConfigError):
            RunConfig("denoise")


if __name__ == "__main__":
    unittest.main()
