import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from serkit.audio import AudioClip, decode_wav, fix_length, resample, write_wav
from serkit.errors import MalformedWav, UnsupportedEncoding

from conftest import riff, tone
from oracles import naive_dft_matrix_magnitude


class TestDecode:
    def test_pcm16_scale(self, tmp_path):
        p = tmp_path / "a.wav"
        p.write_bytes(riff(1, 1, 8000, 16, struct.pack("<3h", 16384, -32768, 0)))
        clip = decode_wav(p)
        assert clip.sample_rate == 8000
        assert clip.samples.tolist() == [0.5, -1.0, 0.0]

    def test_stereo_mean(self, tmp_path):
        p = tmp_path / "s.wav"
        p.write_bytes(riff(3, 2, 16000, 32, struct.pack("<2f", 0.2, 0.6)))
        assert decode_wav(p).samples[0] == pytest.approx(0.4, abs=1e-7)

    def test_extensible_float(self, tmp_path):
        p = tmp_path / "e.wav"
        p.write_bytes(riff(3, 1, 16000, 32, struct.pack("<2f", 0.25, -0.5), extensible=True))
        assert decode_wav(p).samples.tolist() == [0.25, -0.5]

    def test_mulaw_rejected(self, tmp_path):
        p = tmp_path / "u.wav"
        p.write_bytes(riff(7, 1, 8000, 8, b"\x7f\x80"))
        with pytest.raises(UnsupportedEncoding):
            decode_wav(p)

    def test_not_riff(self, tmp_path):
        p = tmp_path / "x.wav"
        p.write_bytes(b"hello world, not audio")
        with pytest.raises(MalformedWav):
            decode_wav(p)

    def test_write_then_decode(self, tmp_path):
        clip = tone(300, 16000, 0.1)
        write_wav(clip, tmp_path / "t.wav")
        back = decode_wav(tmp_path / "t.wav")
        assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768


class TestResample:
    def test_identity(self):
        clip = tone(440, 16000, 0.2)
        assert resample(clip, 16000).samples is clip.samples

    def test_length_4_to_22(self):
        out = resample(AudioClip(np.array([0.0, 1.0, 0.0, -1.0]), 8000), 44100)
        assert len(out) == 22 and out.sample_rate == 44100

    def test_tone_frequency_preserved(self):
        out = resample(tone(440, 16000, 0.5), 44100)
        n = 8192
        seg = out.samples[:n] * np.hanning(n)
        mag = naive_dft_matrix_magnitude(seg, n)
        bin_width = 44100 / n
        assert abs(np.argmax(mag) * bin_width - 440) <= bin_width

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 500), st.sampled_from([8000, 16000, 22050, 48000]))
    def test_length_rule(self, n, rate):
        out = resample(AudioClip(np.ones(n) * 0.1, rate), 44100)
        assert len(out) == max(1, int(np.floor(n * 44100 / rate + 0.5)))


class TestFixLength:
    def test_pad(self):
        out = fix_length(AudioClip(np.full(88200, 0.1), 44100), 3.0)
        assert len(out) == 132300
        assert not np.any(out.samples[-44100:])

    def test_trim(self):
        x = np.random.default_rng(0).uniform(-1, 1, 176400)
        out = fix_length(AudioClip(x, 44100), 3.0)
        assert np.array_equal(out.samples, x[:132300])

    def test_exact_is_identical(self):
        x = np.random.default_rng(1).uniform(-1, 1, 132300)
        assert np.array_equal(fix_length(AudioClip(x, 44100), 3.0).samples, x)

    def test_pipeline_deterministic(self, tmp_path):
        write_wav(tone(200, 16000, 0.5), tmp_path / "a.wav")
        runs = [fix_length(resample(decode_wav(tmp_path / "a.wav"), 44100), 3.0).samples for _ in range(2)]
        assert np.array_equal(*runs)


class TestClip:
    def test_rejects_bad_input(self):
        for bad in ([], [[0.1, 0.2]], [np.nan]):
            with pytest.raises(ValueError):
                AudioClip(np.array(bad, dtype=float), 8000)
