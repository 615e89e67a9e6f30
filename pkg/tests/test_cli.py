import csv
import filecmp

import numpy as np
import pytest

from kylefee.cli import main


def read(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=object)


def test_solve_writes_files_and_is_idempotent(tmp_path):
    out = tmp_path / "a"
    assert main(["solve", "--kappa", "0,0.045", "--out", str(out)]) == 0
    header, rows = read(out / "beta_0.csv")
    assert header == ["t", "beta", "beta0"]
    assert all(r[1] == r[2] for r in rows)
    _, rows = read(out / "beta_0.045.csv")
    assert all(float(r[1]) < float(r[2]) for r in rows)
    dh, drows = read(out / "solver_diag.csv")
    assert dh == ["kappa", "iteration", "residual"] and float(drows[-1][2]) <= 1e-8
    assert read(out / "metrics_0.045.csv")[0] == ["t", "rv", "iota", "rho_vp", "rho_my", "var_p", "var_m"]
    assert read(out / "profits_0.045.csv")[0] == ["t", "p_I", "p_M", "p_N"]
    again = tmp_path / "b"
    main(["solve", "--kappa", "0,0.045", "--out", str(again)])
    for f in out.iterdir():
        assert filecmp.cmp(f, again / f.name, shallow=False)


def test_number_format(tmp_path):
    main(["solve", "--kappa", "0.045", "--grid", "200", "--out", str(tmp_path)])
    _, rows = read(tmp_path / "beta_0.045.csv")
    assert rows[1][0] == "%.12g" % (9.9 / 199)


def test_tables(tmp_path):
    assert main(["tables", "--iter-limit", "2", "--out", str(tmp_path)]) == 0
    header, rows = read(tmp_path / "table1.csv")
    assert header[1:] == [str(t) for t in range(1, 11)]
    assert [r[0] for r in rows] == ["rho_my", "rho_vp", "var_p", "var_m", "iota"]
    assert rows[4][-1] == "1"
    header, rows = read(tmp_path / "table2.csv")
    assert header == ["rv_star", "1.03", "1.05", "1.08", "1.15", "1.21"]
    assert [r[0] for r in rows] == ["kappa_star", "p_M_9", "p_I_9", "iota_9"]


def test_figures(tmp_path):
    assert main(["figures", "--grid", "400", "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("fig*.csv"))) == 11
    with open(tmp_path / "fig1_covariance.csv") as fh:
        rows = list(csv.reader(fh))
    t = np.array(rows[0][1:], dtype=float)
    C = np.array([r[1:] for r in rows[1:]], dtype=float)
    np.testing.assert_allclose(C, C.T, rtol=1e-11)
    np.testing.assert_allclose(np.array([r[0] for r in rows[1:]], dtype=float), t)
    _, v = read(tmp_path / "fig5_variance.csv")
    assert read(tmp_path / "fig7_profits.csv")[0] == ["t", "p_I", "p_M", "p_N"]


def test_fig1_diagonal_is_variance(tmp_path):
    main(["figures", "--grid", "400", "--out", str(tmp_path)])
    with open(tmp_path / "fig1_covariance.csv") as fh:
        rows = list(csv.reader(fh))
    C = np.array([r[1:] for r in rows[1:]], dtype=float)
    from kylefee import MarketParams, make_uniform_grid, order_flow_variance, solve_equilibrium
    p = MarketParams(kappa=0.045)
    g = make_uniform_grid(p, 400)
    V = order_flow_variance(solve_equilibrium(p, g), p, g)
    t = np.array(rows[0][1:], dtype=float)
    np.testing.assert_allclose(np.diag(C), np.interp(t, g.nodes, V), rtol=1e-10, atol=1e-15)


def test_simulate_small_run_and_determinism(tmp_path, capsys):
    args = ["simulate", "--paths", "400", "--steps", "400", "--seed", "9"]
    assert main(args + ["--out", str(tmp_path / "a"), "--dump-wealth"]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--dump-wealth"]) == 0
    for f in (tmp_path / "a").iterdir():
        assert filecmp.cmp(f, tmp_path / "b" / f.name, shallow=False)
    assert "oracle checks passed" in capsys.readouterr().out
    header, rows = read(tmp_path / "a" / "mc_checks_0.045.csv")
    assert header == ["check", "t", "estimate", "target", "tolerance", "passed"]


def test_oracle_failure_exit_code(tmp_path, monkeypatch):
    import kylefee.montecarlo as mc
    monkeypatch.setattr(mc, "N_SE", 0.0)  # no statistical slack at all
    assert main(["simulate", "--paths", "200", "--steps", "200", "--kappa", "0.045",
                 "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize("argv,code", [
    (["solve", "--bogus"], 1),
    (["solve", "--kappa", "abc"], 1),
    (["solve", "--kappa", "-0.1"], 1),
    (["solve", "--iter-limit", "zero"], 1),
    (["solve", "--kappa", "0.2"], 2),
    (["simulate", "--paths", "50"], 1),
    ([], 1),
])
def test_exit_codes(argv, code, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv else argv) == code


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 0.045\nn_grid = 300\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = read(tmp_path / "o" / "beta_0.045.csv")
    assert len(rows) == 300
    cfg.write_text("kappa = 0.045\nsurprise = 1\n")
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
