"""Noise injection tests.

Verifies the SNR algebra against the published level table, the RMS-scaled
per-channel corruption (realized SNR, chi-square concentration, channel
independence) and the additive bookkeeping of the corrupt operation.
"""

from __future__ import annotations

import numpy as np
import pytest

from omabench.dsp import MultiChannelRecord, gaussian_white
from omabench.harness import DEFAULT_NOISE_LEVELS
from omabench.noise import NoiseSpec, corrupt, make_noise, noise_level_to_snr_db

# level -> nominal SNR in dB, rounded to two decimals
LEVEL_TABLE = {
    0.05: 26.02,
    0.10: 20.00,
    0.20: 13.98,
    0.50: 6.02,
    0.75: 2.50,
    1.00: 0.00,
    2.00: -6.02,
}


def white_record(n_channels: int = 3, n: int = 50000, seed: int = 100) -> MultiChannelRecord:
    data = np.vstack([gaussian_white(n, seed + j) for j in range(n_channels)])
    return MultiChannelRecord(10000.0, data)


class TestSnrAlgebra:
    def test_level_table(self):
        """-20 log10(NL) rounds to the published dB value at every level."""
        for level, db in LEVEL_TABLE.items():
            assert noise_level_to_snr_db(level) == pytest.approx(db, abs=0.005)

    def test_unity_level_is_zero_db(self):
        assert noise_level_to_snr_db(1.0) == 0.0

    def test_nominal_snr_is_inverse_square(self):
        for level in DEFAULT_NOISE_LEVELS:
            snr = 10.0 ** (noise_level_to_snr_db(level) / 10.0)
            assert snr == pytest.approx(1.0 / level ** 2, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            noise_level_to_snr_db(0.0)
        with pytest.raises(ValueError):
            noise_level_to_snr_db(-0.1)
        with pytest.raises(ValueError):
            NoiseSpec(-0.1, 1)


class TestMakeNoise:
    def test_zero_level_zero_noise(self):
        rec = white_record(2, 1000)
        noise = make_noise(rec, NoiseSpec(0.0, 7))
        np.testing.assert_array_equal(noise.data, 0.0)

    def test_noise_power_concentration(self):
        """Realized P_n / (P_s * NL^2) lies in 1 +- 0.02 at 50000 samples."""
        rec = white_record(3)
        noise = make_noise(rec, NoiseSpec(0.2, 7))
        p_s = np.mean(rec.data ** 2, axis=1)
        p_n = np.mean(noise.data ** 2, axis=1)
        np.testing.assert_allclose(p_n / (p_s * 0.2 ** 2), 1.0, atol=0.02)

    def test_channels_independent(self):
        """Generated noise channels decorrelate within +-0.02."""
        rec = white_record(4)
        noise = make_noise(rec, NoiseSpec(1.0, 7))
        z = noise.data / noise.data.std(axis=1, keepdims=True)
        c = z @ z.T / z.shape[1]
        off = c[~np.eye(4, dtype=bool)]
        assert np.max(np.abs(off)) <= 0.02

    def test_deterministic(self):
        rec = white_record(2, 1000)
        a = make_noise(rec, NoiseSpec(0.5, 9))
        b = make_noise(rec, NoiseSpec(0.5, 9))
        np.testing.assert_array_equal(a.data, b.data)

    def test_seed_changes_stream(self):
        rec = white_record(1, 1000)
        a = make_noise(rec, NoiseSpec(0.5, 9))
        b = make_noise(rec, NoiseSpec(0.5, 10))
        assert np.max(np.abs(a.data - b.data)) > 0.0


class TestCorrupt:
    def test_zero_level_identity(self):
        """NL = 0 returns the input samples bit-exactly."""
        rec = white_record(2, 1000)
        noisy, report = corrupt(rec, NoiseSpec(0.0, 7))
        np.testing.assert_array_equal(noisy.data, rec.data)
        assert report.nominal_snr_db is None
        assert all(v is None for v in report.snr_db)

    def test_subtracting_noise_recovers_input(self):
        rec = white_record(2, 1000)
        spec = NoiseSpec(0.75, 7)
        noisy, _ = corrupt(rec, spec)
        noise = make_noise(rec, spec)
        np.testing.assert_allclose(noisy.data - noise.data, rec.data, atol=1e-12)

    def test_realized_snr_near_nominal(self):
        """Realized per-channel SNR stays within 0.2 dB at 50000 samples."""
        rec = white_record(3)
        for level in (0.05, 1.0):
            _, report = corrupt(rec, NoiseSpec(level, 11))
            nominal = noise_level_to_snr_db(level)
            assert report.nominal_snr_db == pytest.approx(nominal, rel=1e-12)
            for db in report.snr_db:
                assert db == pytest.approx(nominal, abs=0.2)

    def test_realized_snr_converges(self):
        """At 1e6 samples the realized SNR is within 0.05 dB of nominal."""
        data = gaussian_white(1_000_000, 5)
        rec = MultiChannelRecord(10000.0, data)
        _, report = corrupt(rec, NoiseSpec(0.5, 13))
        assert report.snr_db[0] == pytest.approx(noise_level_to_snr_db(0.5), abs=0.05)

    def test_report_accounting(self):
        """SNR = P_s/P_n and SNR_dB = 10 log10(SNR) hold exactly."""
        rec = white_record(2, 2000)
        _, report = corrupt(rec, NoiseSpec(0.2, 3))
        for ps, pn, snr, db in zip(report.signal_power, report.noise_power,
                                   report.snr, report.snr_db):
            assert snr == pytest.approx(ps / pn, rel=1e-12)
            assert db == pytest.approx(10.0 * np.log10(snr), rel=1e-12)

    def test_deterministic(self):
        rec = white_record(2, 1000)
        a, _ = corrupt(rec, NoiseSpec(0.5, 21))
        b, _ = corrupt(rec, NoiseSpec(0.5, 21))
        np.testing.assert_array_equal(a.data, b.data)

    def test_preserves_metadata(self):
        rec = MultiChannelRecord(100.0, np.random.default_rng(0).standard_normal((2, 100)),
                                 ("5", "6"))
        noisy, _ = corrupt(rec, NoiseSpec(0.1, 2))
        assert noisy.labels == rec.labels
        assert noisy.sample_rate == rec.sample_rate
