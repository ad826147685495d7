//! Runs the module inside an embedded interpreter.

use std::ffi::CString;

use pyo3::prelude::*;

fn run(code: &str) -> PyResult<()> {
    pyo3::append_to_inittab!(tileforge_module);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        py.run(&code, None, None)
    })
}

use tileforge_py::tileforge_module;

#[test]
fn module_round_trip() {
    run(r#"
import tileforge
assert tileforge.fp(5, 50) == 2
b = tileforge.Board.gen_affine(3, 0, 30, 1, 1, 0)
assert b.verify()[0]
assert tileforge.Board.parse(b.to_text()).rows() == b.rows()
assert tileforge.classify(3, [1] * 9).kind == "constant"
try:
    tileforge.Group("Z/0")
    raise SystemExit("accepted Z/0")
except tileforge.TileforgeError:
    pass
"#)
    .unwrap();
}
