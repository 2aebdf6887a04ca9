"""Smoke test for the qspkit_py extension.

Build first:

    cargo build --release -p qspkit-python --features extension-module

then run this script from the repository root. It copies the built library
next to itself as qspkit_py.so before importing it.
"""

import cmath
import math
import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def load():
    for name in ("libqspkit_py.so", "libqspkit_py.dylib"):
        built = ROOT / "target" / "release" / name
        if built.exists():
            shutil.copyfile(built, HERE / "qspkit_py.so")
            break
    else:
        sys.exit("build the extension first (see the module docstring)")
    sys.path.insert(0, str(HERE))
    import qspkit_py

    return qspkit_py


def main():
    q = load()

    res = q.find_angles("g.p.c", 10.0, 34)
    assert res.epsilon < 1e-11, res
    assert res.queries == q.query_count("gqsp-prony", 34)
    print(res)

    text = q.write_sequences(res.sequences)
    back = q.read_sequences(text)
    assert abs(q.sup_error(back, 10.0) - res.epsilon) < 1e-15

    # the recombined sequences reproduce e^{-i tau cos theta}
    theta = 0.7
    w = cmath.exp(1j * theta)
    total = sum(s.alpha * s.weight * s.implemented(w) for s in back)
    assert abs(total - cmath.exp(-10j * math.cos(theta))) < 1e-10

    seq = q.AngleSequence.ordinary("wx", [0.1, -0.4, 0.9, 0.2])
    u = seq.eval(0.3)
    assert abs(abs(u[0][0]) ** 2 + abs(u[0][1]) ** 2 - 1) < 1e-14
    pair = q.pair_of_sequence(seq)
    angles, residual = pair.decompose("carve")
    assert residual < 1e-10, residual
    assert max(abs(a - b) for a, b in zip(angles.phi, seq.phi)) < 1e-9

    coeffs = q.jacobi_anger(2.0, 6)
    pair = q.complete("gqsp", [0.5 * c for c in coeffs], 6, 6, lo=-6, method="drf")
    assert pair.certificate < 1e-10
    print(pair)

    assert q.bessel_tail_bound(10.0, 34) < 1e-12
    try:
        q.find_angles("g.p.h", 10.0, 34)
    except q.QspkitError as e:
        print("rejected:", e)
    else:
        raise AssertionError("gqsp halving should be rejected")
    print("ok")


if __name__ == "__main__":
    main()
