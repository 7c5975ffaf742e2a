import csv
import io
import json
import subprocess
import sys

import pytest

from rclab import runner
from rclab.cli import main
from rclab.coupling import InvariantViolation
from rclab.runner import (EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, PRESETS, SpecError, load_spec,
                          preset_theorem1_demo, run, spec_from_dict)
from rclab.model import ModelParams


def _rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def _quiet(msg):
    pass


SAMPLE = {
    "kind": "sample",
    "graph": {"kind": "generate", "n": 10, "delta": 3, "seed": 2},
    "params": {"q": 3, "betas": [0.5, 1.5]},
    "seeds": [0, 1],
    "caps": {"steps": 300},
    "options": {"stride": 30},
}


def test_spec_validation_names_the_field():
    with pytest.raises(SpecError, match="unknown top-level"):
        spec_from_dict({**SAMPLE, "colour": 1})
    with pytest.raises(SpecError, match="graph"):
        spec_from_dict({**SAMPLE, "graph": {"nodes": 3}})
    with pytest.raises(SpecError, match="kind"):
        spec_from_dict({**SAMPLE, "kind": "dance"})


def test_toml_parse_error_has_position(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "sample"\nseeds = [0,\nparams = 3\n')
    with pytest.raises(SpecError, match="line"):
        load_spec(bad)
    assert main([str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_json_and_toml_specs_agree(tmp_path):
    j = tmp_path / "s.json"
    j.write_text(json.dumps(SAMPLE))
    t = tmp_path / "s.toml"
    t.write_text('kind = "sample"\nseeds = [0, 1]\n[graph]\nkind = "generate"\nn = 10\ndelta = 3\n'
                 'seed = 2\n[params]\nq = 3\nbetas = [0.5, 1.5]\n[caps]\nsteps = 300\n'
                 '[options]\nstride = 30\n')
    assert load_spec(j).to_dict() == load_spec(t).to_dict()


def test_oracle_verify_preset(tmp_path):
    res = run(PRESETS["oracle-verify-triangle"](), tmp_path, log=_quiet)
    assert res.exit_code == EXIT_OK
    rows = _rows(tmp_path / "verify.csv")
    assert rows and all(float(r["residual"]) < 1e-9 for r in rows)
    assert {r["check"] for r in rows} >= {"potts_logZ", "stationarity", "detailed_balance"}


def test_phase_scan_preset(tmp_path):
    res = run(PRESETS["phase-scan"](), tmp_path, log=_quiet)
    rows = _rows(tmp_path / "phase.csv")
    assert res.exit_code == EXIT_OK and len(rows) == 11
    dis = [float(r["mass_disordered"]) for r in rows]
    ordm = [float(r["mass_ordered"]) for r in rows]
    assert dis[0] > 0.5 > dis[-1] and ordm[-1] > ordm[0]


def test_rows_are_stamped(tmp_path):
    run(spec_from_dict(SAMPLE), tmp_path, log=_quiet)
    for name in ("trajectories.csv", "summary.csv"):
        for r in _rows(tmp_path / name):
            assert r["build"] and r["graph"] and r["q"] and r["beta"] and r["seed"] != ""
    manifest = json.loads((tmp_path / "run-manifest.json").read_text())
    assert manifest["spec"]["kind"] == "sample" and "trajectories.csv" in manifest["files"]


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if "timestamps" not in p.name}


def test_reruns_are_byte_identical(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    spec = spec_from_dict(SAMPLE)
    run(spec, a, log=_quiet)
    run(spec, b, log=_quiet)
    run(spec, c, workers=2, log=_quiet)
    assert _snapshot(a) == _snapshot(b) == _snapshot(c)
    assert (a / "run-manifest.timestamps.json").exists()


def test_coupling_trace_writes_jsonl(tmp_path):
    spec = PRESETS["coupling-trace"]()
    spec.seeds = list(range(20))
    res = run(spec, tmp_path, log=_quiet)
    assert res.exit_code == EXIT_OK
    recs = [json.loads(x) for x in (tmp_path / "outcomes.jsonl").read_text().splitlines()]
    assert len(recs) == 20 and all("radii" in r and "occupancy_at_gate" in r for r in recs)
    total = sum(int(r["count"]) for r in _rows(tmp_path / "coupling_summary.csv"))
    assert total == 20


def test_wsm_and_census_kinds(tmp_path):
    res = run(PRESETS["wsm-curve"](), tmp_path / "w", log=_quiet)
    gaps = [float(r["gap"]) for r in _rows(tmp_path / "w" / "wsm.csv")]
    assert res.exit_code == EXIT_OK and gaps[-1] < gaps[0]
    census = spec_from_dict({"kind": "polymer-census", "graph": {"n": 12, "delta": 5, "seed": 1},
                             "params": {"q": 5, "betas": [3.0], "eta": 0.1},
                             "options": {"flavor": "ordered", "samples": 4}})
    res = run(census, tmp_path / "c", log=_quiet)
    assert res.exit_code == EXIT_OK
    for r in _rows(tmp_path / "c" / "census_summary.csv"):
        if r.get("factorization_residual"):
            assert float(r["factorization_residual"]) < 1e-9


def test_cap_breach_is_a_structured_warning(tmp_path):
    spec = spec_from_dict({"kind": "mix-scan", "graph": {"n": 10, "delta": 3, "seed": 0},
                           "params": {"q": 3, "betas": [1.0]}, "seeds": [0],
                           "caps": {"coalescence": 2}, "options": {"starts": ["worst"]}})
    res = run(spec, tmp_path, log=_quiet)
    assert res.exit_code == EXIT_OK
    warns = [json.loads(x) for x in (tmp_path / "warnings.jsonl").read_text().splitlines()]
    assert warns and warns[0]["kind"] == "cap_exceeded" and warns[0]["limit"] == 2


def test_invariant_violation_sets_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise InvariantViolation("Inv3(0) failed")
    monkeypatch.setattr(runner, "_task_coupling", boom)
    spec = PRESETS["coupling-trace"]()
    res = run(spec, tmp_path, log=_quiet)
    assert res.exit_code == EXIT_INVARIANT
    assert "Inv3" in (tmp_path / "warnings.jsonl").read_text()


def test_cli_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "rclab", "preset:oracle-verify-triangle",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip().endswith("run-manifest.json")
    out = subprocess.run([sys.executable, "-m", "rclab", "preset:nope"], capture_output=True, text=True)
    assert out.returncode == EXIT_CONFIG and "unknown preset" in out.stderr


def test_scaling_demo_small():
    rep = preset_theorem1_demo(ModelParams(q=1.0, beta=0.7), sizes=(8, 10, 12), copies=200)
    assert all(r.steps is not None for r in rep.rows)
    assert rep.exponent is not None and 0.3 < rep.exponent < 2.5
    rec = rep.as_record()
    assert rec["rows"][0]["reference"] == "none"
