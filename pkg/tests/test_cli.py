import json
from pathlib import Path

from lzi.cli import main

DATA = Path(__file__).parent / "data"


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def _run(args):
    return main(args)


# ---------------------------------------------------------------------------
# spectral-flow


def test_spectral_flow_matches_golden_file(tmp_path):
    out = tmp_path / "flow.csv"
    code = _run(["spectral-flow", "--config", str(DATA / "spectral_flow_n1.json"), "--out", str(out)])
    assert code == 0
    assert out.read_bytes() == (DATA / "spectral_flow_n1_golden.csv").read_bytes()


def test_spectral_flow_deterministic(tmp_path):
    cfg = _write(
        tmp_path,
        "flow.json",
        {
            "schema_version": 1,
            "model": "do",
            "params": {"gamma": [0.9, 0.5, 0.7], "epsilon": [0.0, 1.0, 2.0]},
            "grid": {"start": -3.0, "stop": 3.5, "num": 21},
        },
    )
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert _run(["spectral-flow", "--config", cfg, "--out", str(out1)]) == 0
    assert _run(["spectral-flow", "--config", cfg, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_spectral_flow_header_names(tmp_path):
    out = tmp_path / "flow.csv"
    _run(["spectral-flow", "--config", str(DATA / "spectral_flow_n1.json"), "--out", str(out)])
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["t", "x_0", "x_1", "E_0", "E_1"]


def test_spectral_flow_degenerate_params_exit_two(tmp_path):
    cfg = _write(
        tmp_path,
        "bad.json",
        {
            "schema_version": 1,
            "model": "do",
            "params": {"gamma": [1.0, 1.0], "epsilon": [1.0, 1.0]},
            "grid": {"start": 0.0, "stop": 1.0, "num": 3},
        },
    )
    assert _run(["spectral-flow", "--config", cfg]) == 2


# ---------------------------------------------------------------------------
# verify-integrals / verify-ekz


def _verify_config(break_parallelism=0.0):
    return {
        "schema_version": 1,
        "gaudin": {"sites": 3, "draws": 2, "lambda_values": [0.0, 0.5]},
        "ado": {
            "n_values": [2, 3],
            "draws": 3,
            "break_parallelism": break_parallelism,
        },
    }


def test_verify_integrals_passes(tmp_path):
    cfg = _write(tmp_path, "vi.json", _verify_config())
    out = tmp_path / "report.json"
    assert _run(["verify-integrals", "--config", cfg, "--seed", "7", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert report["max_commutator_defect"] < 1e-12
    assert report["max_curvature_residual"] < 1e-12


def test_verify_integrals_negative_control(tmp_path):
    cfg = _write(tmp_path, "vi.json", _verify_config(break_parallelism=0.1))
    out = tmp_path / "report.json"
    assert _run(["verify-integrals", "--config", cfg, "--seed", "7", "--out", str(out)]) == 1
    report = json.loads(out.read_text())
    assert report["pass"] is False
    assert report["sections"]["ado"]["max_commutator_defect"] > 1e-4


def test_verify_integrals_deterministic_with_seed(tmp_path):
    cfg = _write(tmp_path, "vi.json", _verify_config())
    out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
    _run(["verify-integrals", "--config", cfg, "--seed", "3", "--out", str(out1)])
    _run(["verify-integrals", "--config", cfg, "--seed", "3", "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_ekz_passes(tmp_path):
    cfg = _write(
        tmp_path,
        "ekz.json",
        {
            "schema_version": 1,
            "params": {"gamma": [0.3, 0.4, 0.5, 0.2], "a": [1.0, 2.5]},
            "draws": 10,
        },
    )
    out = tmp_path / "report.json"
    assert _run(["verify-ekz", "--config", cfg, "--seed", "1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["pass"] is True
    assert report["max_ode_residual"] < 1e-6


# ---------------------------------------------------------------------------
# evolve


def test_evolve_decoupled_level_constant_populations(tmp_path):
    cfg = _write(
        tmp_path,
        "ev.json",
        {
            "schema_version": 1,
            "model": "do",
            "params": {"gamma": [1.0, 0.0], "epsilon": [0.0, 1.0]},
            "engine": "oracle",
            "initial_state": 1,
            "grid": {"start": -4.0, "stop": 4.0, "num": 9},
        },
    )
    out = tmp_path / "ev.csv"
    assert _run(["evolve", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["t", "total", "p_0", "p_1"]  # 2 + (n+1) columns
    for line in lines[1:]:
        _, total, p0, p1 = (float(x) for x in line.split(","))
        assert abs(p0) < 1e-10 and abs(p1 - 1.0) < 1e-10 and abs(total - 1.0) < 1e-10


def test_evolve_both_engines_columns_and_delta(tmp_path):
    cfg = _write(
        tmp_path,
        "both.json",
        {
            "schema_version": 1,
            "model": "ado",
            "params": {"gamma": [0.3, 0.4, 0.5], "a": [0.0]},
            "engine": "both",
            "grid": {"start": -20.0, "stop": 20.0, "num": 5},
            "propagation": {"theta": 0.25},
            "quadrature": {"tolerance": 0.001, "initial_window": 48.0},
        },
    )
    out = tmp_path / "both.csv"
    assert _run(["evolve", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    header = lines[0].split(",")
    assert header == ["t", "total", "p_0", "p_1", "p_2", "cf_sloped", "abs_delta"]
    first = [float(x) for x in lines[1].split(",")]
    last = [float(x) for x in lines[-1].split(",")]
    # both sloped-channel populations start at 1 and end near the closed form
    assert abs(first[5] - 1.0) < 1e-12 and first[6] < 1e-6
    assert last[6] < 0.06


def test_evolve_closed_form_engine(tmp_path):
    cfg = _write(
        tmp_path,
        "cf.json",
        {
            "schema_version": 1,
            "model": "ado",
            "params": {"gamma": [0.3, 0.4, 0.5], "a": [0.0]},
            "engine": "closed-form",
            "branch": -1,
            "grid": {"start": -5.0, "stop": 5.0, "num": 3},
            "quadrature": {"tolerance": 0.001},
        },
    )
    out = tmp_path / "cf.csv"
    assert _run(["evolve", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["t", "cf_p_0", "cf_p_1", "cf_total"]
    totals = [float(line.split(",")[3]) for line in lines[1:]]
    assert max(totals) / min(totals) - 1.0 < 1e-2  # trivial branch: constant modulus


# ---------------------------------------------------------------------------
# transition-matrix / lz-probability / closed-form


def test_transition_matrix_csv(tmp_path):
    cfg = _write(
        tmp_path,
        "tm.json",
        {
            "schema_version": 1,
            "model": "do",
            "params": {"gamma": [1.0, 0.4], "epsilon": [0.0, 1.0]},
            "T": 20.0,
            "propagation": {"theta": 0.25},
        },
    )
    out = tmp_path / "tm.csv"
    assert _run(["transition-matrix", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["T_used", "initial", "final", "p_at_T", "p_at_2T", "p_extrapolated"]
    assert len(lines) == 1 + 4  # 2x2 model, long form
    for line in lines[1:]:
        vals = line.split(",")
        assert float(vals[0]) == 20.0
        assert 0.0 <= float(vals[5]) <= 1.0


def test_evolve_bow_tie_model(tmp_path):
    cfg = _write(
        tmp_path,
        "bt.json",
        {
            "schema_version": 1,
            "model": "bow-tie",
            "params": {"gamma": [1.0, 0.5], "epsilon": [0.0, 1.0], "r": [-0.5]},
            "engine": "oracle",
            "initial_state": 0,
            "grid": {"start": -6.0, "stop": 6.0, "num": 7},
            "propagation": {"theta": 0.25},
        },
    )
    out = tmp_path / "bt.csv"
    assert _run(["evolve", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["t", "total", "p_0", "p_1"]
    for line in lines[1:]:
        total = float(line.split(",")[1])
        assert abs(total - 1.0) < 1e-8


def test_lz_probability_sweep(tmp_path):
    cfg = _write(
        tmp_path,
        "lzp.json",
        {
            "schema_version": 1,
            "sweep": {"points": [[0.3, 0.4, 0.5], [0.4, 0.9, 0.0]]},
            "T": 60.0,
            "propagation": {"theta": 0.25},
        },
    )
    out = tmp_path / "lzp.csv"
    assert _run(["lz-probability", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["gamma_0", "gamma_1", "gamma_2", "P_formula", "P_oracle", "abs_delta"]
    row1 = [float(x) for x in lines[1].split(",")]
    assert abs(row1[3] - 0.6752319066557773) < 1e-15
    assert row1[5] < 0.05  # T = 60 keeps the test quick; the tight check runs at T = 200
    row2 = [float(x) for x in lines[2].split(",")]
    assert row2[3] == 1.0 and row2[4] == 1.0 and row2[5] == 0.0


def test_lz_probability_thread_cap_is_deterministic(tmp_path, monkeypatch):
    cfg = _write(
        tmp_path,
        "lzp.json",
        {
            "schema_version": 1,
            "sweep": {"gamma0": [0.3], "gamma1": [0.4], "gamma2": [0.0, 0.2]},
            "T": 30.0,
            "propagation": {"theta": 0.3},
        },
    )
    out1, out2 = tmp_path / "s.csv", tmp_path / "p.csv"
    monkeypatch.delenv("LZI_THREADS", raising=False)
    assert _run(["lz-probability", "--config", cfg, "--out", str(out1)]) == 0
    monkeypatch.setenv("LZI_THREADS", "2")
    assert _run(["lz-probability", "--config", cfg, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_closed_form_frequency_table(tmp_path):
    cfg = _write(
        tmp_path,
        "cf.json",
        {
            "schema_version": 1,
            "params": {"gamma": [0.3, 0.4, 0.5], "a": [0.0]},
            "branch": 1,
            "omega_grid": {"start": 0.25, "stop": 4.0, "num": 10},
        },
    )
    out = tmp_path / "cf.csv"
    assert _run(["closed-form", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].split(",") == ["omega", "re_0", "im_0", "re_1", "im_1", "modulus"]
    assert len(lines) == 11


# ---------------------------------------------------------------------------
# exit codes


def test_missing_config_exits_three(tmp_path):
    assert _run(["spectral-flow", "--config", str(tmp_path / "nope.json")]) == 3


def test_malformed_json_exits_three(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert _run(["spectral-flow", "--config", str(path)]) == 3


def test_wrong_schema_version_exits_three(tmp_path):
    cfg = _write(tmp_path, "v2.json", {"schema_version": 2})
    assert _run(["spectral-flow", "--config", cfg]) == 3


def test_missing_block_exits_three(tmp_path):
    cfg = _write(tmp_path, "nb.json", {"schema_version": 1, "model": "do", "params": {}})
    assert _run(["spectral-flow", "--config", cfg]) == 3
