"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin build -m crates/py/Cargo.toml -o dist && pip install dist/hinfsyn-*.whl
then run `python python/smoke_test.py` (or `pytest python/`).
"""

import json
import math
import os
import tempfile

import hinfsyn

TWO_STATE = {
    "n": 2, "m1": 1, "m2": 1, "p1": 2, "p2": 1,
    "A": [[0, 1], [2, -1]], "B1": [[0], [1]], "B2": [[0], [1]],
    "C1": [[1, 0], [0, 0]], "C2": [[1, 0]],
    "D11": [[0], [0]], "D12": [[0], [0.1]], "D21": [[0.1]], "D22": [[0]],
}


def test_plant_round_trip():
    plant = hinfsyn.Plant.from_json(json.dumps(TWO_STATE))
    assert plant.dims == (2, 1, 1, 2, 1)
    again = hinfsyn.Plant.from_json(plant.to_json())
    assert again.dims == plant.dims
    assert hinfsyn.abscissa(plant) > 0


def test_bad_block_raises():
    bad = dict(TWO_STATE, B1=[[0]])
    try:
        hinfsyn.Plant.from_json(json.dumps(bad))
    except ValueError as e:
        assert "B1" in str(e)
    else:
        raise AssertionError("expected ValueError")


def test_synthesize_and_recheck():
    plant = hinfsyn.Plant.from_json(json.dumps(TWO_STATE))
    r = hinfsyn.synthesize(plant, order=0, runs=3, seed=7, max_iters=100)
    assert r.success
    assert len(r.seeds) == 3
    assert r.best_abscissa < 0
    gamma, _ = hinfsyn.hinf_norm(plant, r.best, tol=1e-10)
    assert abs(gamma - r.best_norm) <= 1e-9 * r.best_norm
    stable, _, _, agrees = hinfsyn.recheck(plant, r.best, r.best_norm)
    assert stable and agrees

    again = hinfsyn.synthesize(plant, order=0, runs=3, seed=7, max_iters=100, parallel=False)
    assert again.best.params() == r.best.params()

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "k.json")
        r.best.save(path)
        k = hinfsyn.Controller.load(path)
        assert k.params() == r.best.params()


def test_controller_from_params():
    k = hinfsyn.Controller.from_params([-1.0, 2.0, 3.0, 0.5], order=1, inputs=1, outputs=1)
    assert k.dims == (1, 1, 1)
    assert k.params() == [-1.0, 2.0, 3.0, 0.5]
    plant = hinfsyn.Plant.from_json(json.dumps(TWO_STATE))
    try:
        hinfsyn.hinf_norm(plant)
    except ValueError as e:
        assert "not asymptotically stable" in str(e)
    else:
        raise AssertionError("open loop is unstable")
    static = hinfsyn.Controller.from_params([-4.0], order=0, inputs=1, outputs=1)
    gamma, omega = hinfsyn.hinf_norm(plant, static)
    assert math.isfinite(gamma) and omega >= 0


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"{name}: ok")
