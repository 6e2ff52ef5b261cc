import json

import pytest

from kerrcrit.config import THREADS_ENV, load_config, parse_config
from kerrcrit.errors import ConfigInvalid

BASE = {"model": {"delta": 2.0, "u_tilde": 1.0}}


def cfg(**kw):
    return parse_config(BASE | kw)


def test_minimal_defaults():
    c = cfg()
    assert c.tasks == [] and c.sweep is None
    assert c.cutoff.mode == "auto" and c.solver.dense_dim_threshold == 144
    assert c.model.gamma == 1.0 and c.output == "kerrcrit_out"


def test_full_sweep_block():
    c = cfg(sweep={"N": [3, 4], "F": {"start": 0.5, "stop": 1.0, "points": 6}}, tasks=["sweep", "fit"])
    assert c.sweep.F.values()[-1] == 1.0 and len(c.sweep.F.values()) == 6
    assert c.fit.N == [3.0, 4.0]


@pytest.mark.parametrize("raw,key", [
    ({"sweep": {}}, "model"),
    (BASE | {"bogus": 1}, "bogus"),
    (BASE | {"model": {"delta": 2.0}}, "model.u_tilde"),
    (BASE | {"model": {"delta": 2.0, "u_tilde": 1.0, "gamma": 2.0}}, "model.gamma"),
    (BASE | {"tasks": ["sweep"]}, "sweep"),
    (BASE | {"tasks": ["dance"]}, "tasks[0]"),
    (BASE | {"sweep": {"N": [], "F": {"start": 0, "stop": 1, "points": 2}}}, "sweep.N"),
    (BASE | {"sweep": {"N": [1], "F": {"start": 1, "stop": 0, "points": 2}}}, "sweep.F.stop"),
    (BASE | {"sweep": {"N": [-1], "F": {"start": 0, "stop": 1, "points": 2}}}, "sweep.N[0]"),
    (BASE | {"cutoff": {"mode": "fixed"}}, "cutoff.value"),
    (BASE | {"cutoff": {"mode": "magic"}}, "cutoff.mode"),
    (BASE | {"solver": {"krylov_k": 0}}, "solver.krylov_k"),
    (BASE | {"fit": {"bracket": [1.2, 0.7]}}, "fit.bracket"),
    (BASE | {"wigner": {"rel_threshold": 1.5}}, "wigner.rel_threshold"),
    (BASE | {"tasks": ["mapcheck"]}, "mapcheck"),
    (BASE | {"model": {"delta": "2", "u_tilde": 1.0}}, "model.delta"),
])
def test_errors_name_the_key(raw, key):
    with pytest.raises(ConfigInvalid) as exc:
        parse_config(raw)
    assert str(exc.value).startswith(key + ":")


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert cfg().threads == 3
    assert cfg(threads=2).threads == 2


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(BASE | {"tasks": ["semiclassical"]}))
    assert load_config(good).tasks == ["semiclassical"]
