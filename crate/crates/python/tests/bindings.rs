use pyo3::prelude::*;
use pyo3::types::PyDict;

fn run(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(qspkit_py::qspkit_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("q", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("python snippet failed");
        }
    });
}

#[test]
fn find_and_round_trip() {
    run(r#"
r = q.find_angles("g.drf.c", 10.0, 34)
assert r.epsilon < 1e-11 and r.queries == 68, r
back = q.read_sequences(q.write_sequences(r.sequences))
assert [s.phi for s in back] == [s.phi for s in r.sequences]
assert abs(q.sup_error(back, 10.0) - r.epsilon) < 1e-15
"#);
}

#[test]
fn sequence_to_pair_and_back() {
    run(r#"
s = q.AngleSequence.gqsp([0.3, 1.1, -0.2], [0.5, 0.0, 2.0], 0.4, 1, 1)
p = q.pair_of_sequence(s)
t, res = p.decompose("carve")
assert res < 1e-10, res
for z in (1, 1j, complex(0.6, -0.8)):
    assert abs(t.implemented(z) - s.implemented(z)) < 1e-10
"#);
}

#[test]
fn errors_surface_as_exceptions() {
    run(r#"
for call in (lambda: q.query_count("gqsp-prony", 3),
             lambda: q.AngleSequence.ordinary("wy", [0.0]),
             lambda: q.AngleSequence.ordinary("wx", [0.0, 1.0]).eval(2.0)):
    try:
        call()
    except q.QspkitError:
        pass
    else:
        raise AssertionError("expected QspkitError")
assert q.query_count("ordinary-rf", 34) == 134
"#);
}
