import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockneg import analysis
from blockneg.analysis import (
    FitError,
    ScalingRecord,
    export,
    fit_ansatz,
    lambda_scan,
    load_fits,
    load_records,
    mu_sweep,
    realize_mu,
    universality_compare,
)
from blockneg.cli import main
from blockneg.dmrg import DmrgConfig
from blockneg.exact import oracle_negativity
from blockneg.model import ModelParams

SMALL = DmrgConfig(max_kept_states=32, n_sweeps=3)


def synthetic(h, alpha, amp, mus, n_sites=100, lam=1.0):
    recs = []
    for delta, x in mus:
        mu = x / delta
        neg = amp * mu ** (-h) * np.exp(-alpha * mu)
        recs.append(
            ScalingRecord(n_sites, 1.0, lam, 60, delta, x, mu, neg, float(np.log2(neg + 1)), 1e-14)
        )
    return recs


GRID = [(d, 100 - 2 * d) for d in range(25, 49)]


@given(
    h=st.floats(0.1, 1.0),
    alpha=st.floats(0.2, 2.5),
    amp=st.floats(0.01, 1.0),
)
def test_fit_recovers_synthetic_parameters(h, alpha, amp):
    fit = fit_ansatz(synthetic(h, alpha, amp, GRID))
    assert fit.h == pytest.approx(h, abs=1e-9)
    assert fit.alpha == pytest.approx(alpha, abs=1e-9)
    assert fit.amplitude == pytest.approx(amp, rel=1e-9)
    assert fit.residual_norm < 1e-9
    assert np.allclose(fit.predict([0.5, 1.0]), amp * np.array([0.5, 1.0]) ** -h * np.exp(-alpha * np.array([0.5, 1.0])))


def test_fit_window_excludes_points():
    recs = synthetic(0.4, 1.7, 0.1, GRID)
    fit = fit_ansatz(recs, window=(0.5, 2.0))
    assert fit.n_points == sum(0.5 <= r.mu <= 2.0 for r in recs)
    assert fit.fit_window == (0.5, 2.0)


def test_fit_log_negativity_uses_other_column():
    recs = synthetic(0.4, 1.7, 0.1, GRID)
    a = fit_ansatz(recs)
    b = fit_ansatz(recs, use_log_negativity=True)
    assert b.log_negativity and not a.log_negativity
    assert b.h != a.h


def test_refit_after_export_is_identical(tmp_path):
    recs = mu_sweep([ModelParams(24, 1.0, 1.0), ModelParams(28, 1.0, 1.0)], SMALL).records
    fit = fit_ansatz(recs)
    for fmt in ("csv", "json"):
        again = fit_ansatz(load_records(export(recs, tmp_path / f"d.{fmt}", fmt)))
        assert abs(again.h - fit.h) < 1e-12 and abs(again.alpha - fit.alpha) < 1e-12
        assert abs(again.amplitude - fit.amplitude) < 1e-12


def test_fit_errors():
    recs = synthetic(0.4, 1.7, 0.1, GRID)
    with pytest.raises(FitError):
        fit_ansatz(recs[:5])
    zero = [r.__class__(**{**r.__dict__, "negativity": 0.0}) for r in recs]
    with pytest.raises(FitError):
        fit_ansatz(zero)
    same = synthetic(0.4, 1.7, 0.1, [(30, 40)] * 8)
    with pytest.raises(FitError):
        fit_ansatz(same)


def test_realize_mu():
    assert realize_mu(128, Fraction(2, 3)) == (48, 32)
    assert realize_mu(256, Fraction(2, 3)) == (96, 64)
    assert realize_mu(132, Fraction(1)) == (44, 44)
    assert realize_mu(130, Fraction(2, 3)) is None
    assert realize_mu(8, Fraction(6)) == (1, 6)
    assert realize_mu(6, Fraction(1)) == (2, 2)
    assert realize_mu(9, Fraction(1)) is None  # 3, 3 has odd separation


def test_universality_compare():
    a = synthetic(0.4, 1.7, 0.1, GRID)
    assert universality_compare(a, a) == 0.0
    b = synthetic(0.4, 1.7, 0.11, GRID, n_sites=200)
    assert universality_compare(a, b) == pytest.approx(0.1, abs=1e-12)
    assert universality_compare(b, a) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        universality_compare(a, a, mu_cut=0.01)


def test_export_round_trip(tmp_path):
    recs = synthetic(0.4, 1.7, 0.1, GRID)
    for fmt in ("csv", "json"):
        path = export(recs, tmp_path / f"r.{fmt}", fmt, {"note": "x"})
        back = load_records(path)
        assert sorted(back, key=lambda r: r.mu) == sorted(recs, key=lambda r: r.mu)
    payload = json.loads((tmp_path / "r.json").read_text())
    assert payload["provenance"]["package"] == "blockneg"
    assert payload["provenance"]["config"] == {"note": "x"}
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header == ",".join(analysis.CSV_COLUMNS)


def test_fit_export_round_trip(tmp_path):
    fit = fit_ansatz(synthetic(0.4, 1.7, 0.1, GRID))
    export([fit], tmp_path / "f.json", "json")
    (back,) = load_fits(tmp_path / "f.json")
    assert back.h == fit.h and back.alpha == fit.alpha
    assert np.array_equal(back.covariance, fit.covariance)
    with pytest.raises(ValueError):
        export([fit], tmp_path / "f.csv", "csv")


def test_mu_sweep_matches_oracle():
    outcome = mu_sweep([ModelParams(10, 1.0, 1.0), ModelParams(12, 1.0, 1.0)], SMALL, window=None)
    assert not outcome.partial
    assert len(outcome.records) == 4 + 5
    for r in outcome.records:
        exact = oracle_negativity(ModelParams(r.n_sites, 1.0, 1.0), r.block_len, r.separation)
        assert r.negativity == pytest.approx(exact, abs=1e-9)
        assert r.log_negativity == np.log2(r.negativity + 1)


def test_mu_sweep_window_and_failures():
    outcome = mu_sweep([ModelParams(12, 1.0, 1.0)], SMALL, window=(0.5, 3.0))
    assert [r.mu_exact for r in outcome.records] == [1, 2]
    mixed = mu_sweep([ModelParams(2, 1.0, 1.0), ModelParams(8, 1.0, 1.0)], SMALL, window=None)
    assert mixed.partial and mixed.failures[0][0] == 2
    assert {r.n_sites for r in mixed.records} == {8}
    with pytest.raises(ValueError):
        mu_sweep([ModelParams(11, 1.0, 1.0)], SMALL)


def test_parallel_sweep_equals_serial():
    params = [ModelParams(8, 1.0, 1.0), ModelParams(10, 0.5, 1.0)]
    a = mu_sweep(params, SMALL, None, jobs=1).records
    b = mu_sweep(params, SMALL, None, jobs=2).records
    assert a == b


def test_lambda_scan():
    outcome = lambda_scan(1.0, Fraction(1), [12, 14], [0.9, 1.1], SMALL)
    assert [(r.n_sites, r.lam) for r in outcome.records] == [(12, 0.9), (12, 1.1)]
    for r in outcome.records:
        assert (r.block_len, r.separation) == (4, 4)
        assert r.negativity == pytest.approx(oracle_negativity(ModelParams(12, 1.0, r.lam), 4, 4), abs=1e-9)


def test_lambda_scan_is_deterministic():
    args = (1.0, Fraction(2, 3), [16], [0.9, 1.0], DmrgConfig(max_kept_states=16, n_sweeps=2))
    assert lambda_scan(*args).records == lambda_scan(*args).records


def test_cli_mu_sweep_fit_compare(tmp_path, capsys):
    out = tmp_path / "a.csv"
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ngamma = 1\nlambda = 1\nsizes = 24\nkept_states = 24\nsweeps = 3\n")
    assert main(["mu-sweep", "--config", str(cfg), "--out", str(out)]) == 0
    recs = load_records(out)
    assert [r.mu_exact for r in recs][-1] == Fraction(14, 5)
    assert main(["fit", str(out), "--out", str(tmp_path / "fit.json")]) == 0
    assert "h =" in capsys.readouterr().out
    assert load_fits(tmp_path / "fit.json")[0].n_points == 7
    assert main(["compare", str(out), str(out)]) == 0
    assert "0.000000" in capsys.readouterr().out


def test_cli_stdout_and_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ngamma = 0.5\nlambda = 1\nsizes = 64\n")
    assert main(["mu-sweep", "--config", str(cfg), "--sizes", "8", "--kept-states", "16", "--window", "0,10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(analysis.CSV_COLUMNS)
    assert len(lines) == 1 + 3
    assert lines[1].startswith("8,0.5,")


def test_cli_lambda_scan(tmp_path, capsys):
    args = ["lambda-scan", "--gamma", "1", "--mu", "1", "--sizes", "12", "--lambdas", "1", "--kept-states", "32"]
    assert main(args) == 0
    row = capsys.readouterr().out.strip().splitlines()[1].split(",")
    assert float(row[5]) == pytest.approx(oracle_negativity(ModelParams(12, 1.0, 1.0), 4, 4), abs=1e-9)


def test_cli_oracle_check(capsys):
    assert main(["oracle-check", "--gamma", "1", "--lambda", "1", "--sizes", "8,10", "--kept-states", "32"]) == 0
    assert "max deviation" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["mu-sweep", "--gamma", "1", "--lambda", "1"],
        ["mu-sweep", "--gamma", "2", "--lambda", "1", "--sizes", "8"],
        ["mu-sweep", "--gamma", "1", "--lambda", "1", "--sizes", "8", "--window", "3,1"],
        ["mu-sweep", "--gamma", "x", "--lambda", "1", "--sizes", "8"],
        ["mu-sweep", "--gamma", "1", "--lambda", "1", "--sizes", "8", "--kept-states", "1"],
    ],
)
def test_cli_config_errors(argv, capsys):
    assert main(argv) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_cli_unknown_config_key(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\ngama = 1\n")
    assert main(["mu-sweep", "--config", str(cfg)]) == 2
    assert main(["mu-sweep", "--config", str(tmp_path / "missing.ini")]) == 2


def test_cli_fit_failure_exit_code(tmp_path):
    path = export(synthetic(0.4, 1.7, 0.1, GRID[:4]), tmp_path / "few.csv")
    assert main(["fit", str(path)]) == 1
