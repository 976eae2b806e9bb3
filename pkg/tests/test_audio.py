import os
import tempfile
import unittest

import numpy as np
import soundfile as sf

from mcse.audio import read_wav, wav_subtype, write_wav
from mcse.errors import InvalidInputError
from mcse.spectral import Waveform


class WavTest(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)

    def path(self, name):
        return os.path.join(self.directory.name, name)

    def test_float_round_trip(self):
        samples = np.random.default_rng(0).uniform(-0.9, 0.9, 1000)
        write_wav(self.path("a.wav"), Waveform(samples, 16000), "FLOAT")
        self.assertEqual(wav_subtype(self.path("a.wav")), "FLOAT")
        w = read_wav(self.path("a.wav"))
        self.assertEqual(w.sample_rate, 16000)
        np.testing.assert_allclose(w.samples, samples.astype(np.float32), atol=1e-7)

    def test_pcm16(self):
        samples = np.linspace(-0.5, 0.5, 400)
        write_wav(self.path("b.wav"), Waveform(samples, 8000))
        self.assertEqual(wav_subtype(self.path("b.wav")), "PCM_16")
        w = read_wav(self.path("b.wav"))
        self.assertEqual(len(w), 400)
        np.testing.assert_allclose(w.samples, samples, atol=1.0 / 32768)

    def test_pcm16_clips(self):
        with self.assertLogs("Mcse", level="WARNING"):
            write_wav(self.path("c.wav"), Waveform(np.array([2.0, -2.0, 0.0]), 8000))
        w = read_wav(self.path("c.wav"))
        self.assertLessEqual(np.max(np.abs(w.samples)), 1.0)

    def test_downmix(self):
        stereo = np.stack([np.full(100, 0.5), np.full(100, -0.25)], axis=1)
        sf.write(self.path("d.wav"), stereo, 8000, subtype="FLOAT")
        w = read_wav(self.path("d.wav"))
        np.testing.assert_allclose(w.samples, np.full(100, 0.125))

    def test_unsupported_subtype(self):
        sf.write(self.path("e.wav"), np.zeros(100), 8000, subtype="PCM_24")
        with self.assertRaises(InvalidInputError):
            read_wav(self.path("e.wav"))

    def test_missing_file(self):
        with self.assertRaises(InvalidInputError):
            read_wav(self.path("missing.wav"))


if __name__ == "__main__":
    unittest.main()
