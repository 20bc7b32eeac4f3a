import json
import math
import os

import numpy as np
import pytest

import entrocert as ec


def test_version():
    assert ec.__version__ == "0.3.0"


def test_discrete_entropies():
    assert ec.shannon_entropy(np.array([0.5, 0.5])) == pytest.approx(1.0)
    p = np.array([[0.4, 0.1], [0.1, 0.4]])
    h = -np.sum(p * np.log2(p))
    assert ec.joint_entropy(p) == pytest.approx(h)
    assert ec.conditional_entropy(p) == pytest.approx(h - 1.0)
    assert ec.mutual_information(p) == pytest.approx(2.0 - h)
    assert ec.majorizes(np.array([1.0, 0.0]), np.array([0.5, 0.5]))[0]
    with pytest.raises(ec.InvalidDistribution):
        ec.shannon_entropy(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        ec.conditional_entropy(p, given="c")


def test_filters():
    assert ec.min_width_for_spacing("lorentzian", 1.0) == pytest.approx(2 / math.pi)
    assert ec.min_width_for_spacing("gaussian", 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    f = ec.FilterProfile.lorentzian(0.7)
    assert ec.majorized_by_tophat(f, 1.0)[0]
    assert not ec.majorized_by_tophat(ec.FilterProfile.lorentzian(0.5), 1.0)[0]
    assert f(0.0) == pytest.approx(2 / (math.pi * 0.7))
    assert f.evaluate(np.array([0.0, 0.35])) == pytest.approx([2 / (math.pi * 0.7), 1 / (math.pi * 0.7)])
    bank = ec.FilterBank.regular(f, -2.0, 1.0, 5)
    assert len(bank) == 5
    assert ec.check_bank(bank)[0]
    assert ec.filter_weight(ec.FilterProfile.lorentzian(0.77), f) == pytest.approx(1 / 1.1)
    assert ec.lorentzian_shift_weight(0.0) == pytest.approx(1.0)


def test_spdc_bound_above_closed_form():
    p = ec.SpdcParams(0.5, 4.0)
    step, n = 0.02, 800
    start = -0.5 * n * step + 0.5 * step
    rho = ec.joint_spectral_density(p, start, step, n, start, step, n)
    cg = ec.tophat_bin(rho, 0.25, 0.25)
    b = ec.conditional_entropy_bound(cg)
    assert b.kind == "conditional"
    assert b.value_bits >= ec.spdc_conditional_entropy(p)


def test_budget_numbers():
    sigma = ec.sigma_from_fwhm(424e-12)
    h_t = ec.timing_entropy_bound(sigma, 1e-12).value_bits
    assert h_t == pytest.approx(-30.34, abs=0.05)
    b = ec.frequency_budget(-30.324, 1550e-9)
    assert b["max_h_freq_bits"] == pytest.approx(33.42, abs=0.02)
    assert ec.grating_resolution(600, 10, 193.4e12) == pytest.approx(32.2e9, abs=0.1e9)
    assert ec.ebits_lower_bound(0.063)["formula_e_based"] == pytest.approx(2.546, abs=0.002)
    assert ec.witness_threshold("conditional") == pytest.approx(math.log2(math.pi * math.e))


def test_run_cli_budget(tmp_path):
    cfg = tmp_path / "budget.json"
    cfg.write_text(json.dumps({"timing_fwhm_ps": 424, "timebin_ps": 1, "wavelength_nm": 1550}))
    code, out, err = ec.run_cli(["budget", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 0, err
    report = json.loads((tmp_path / "o" / "budget.json").read_text())
    assert report["max_h_freq_bits"] == pytest.approx(33.42, abs=0.02)
    code, _, _ = ec.run_cli(["budget", "--config", str(tmp_path / "missing.json")])
    assert code == 3
