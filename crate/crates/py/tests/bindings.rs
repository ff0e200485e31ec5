use hinfsyn::hinfsyn;
use pyo3::ffi::c_str;
use pyo3::prelude::*;

const SCRIPT: &std::ffi::CStr = c_str!(
    r#"
import json, math
import hinfsyn

plant = hinfsyn.Plant.from_json(json.dumps({
    "n": 1, "m1": 1, "m2": 1, "p1": 1, "p2": 1,
    "A": [[1]], "B1": [[1]], "B2": [[1]], "C1": [[1]], "C2": [[1]],
    "D12": [[0.5]], "D21": [[0.2]],
}))
assert plant.dims == (1, 1, 1, 1, 1)
assert hinfsyn.abscissa(plant) == 1.0

r = hinfsyn.synthesize(plant, 0, runs=2, seed=3, max_iters=100)
assert r.success and r.best_abscissa < 0
gamma, _ = hinfsyn.hinf_norm(plant, r.best, tol=1e-10)
assert abs(gamma - r.best_norm) <= 1e-9 * r.best_norm

k = hinfsyn.Controller.from_params([-3.0], 0, 1, 1)
assert hinfsyn.abscissa(plant, k) == -2.0
try:
    hinfsyn.Controller.from_params([1.0, 2.0], 0, 1, 1)
    raise AssertionError("length check")
except ValueError:
    pass
"#
);

#[test]
fn module_works_from_embedded_interpreter() {
    pyo3::append_to_inittab!(hinfsyn);
    Python::initialize();
    Python::attach(|py| {
        if let Err(e) = py.run(SCRIPT, None, None) {
            e.print(py);
            panic!("python script failed");
        }
    });
}
