"""Smoke test for the `qso` extension module.

Build first with `cargo build -p qso-py` (or `--release`). The script copies the
shared library next to a temporary package path and imports it, so no wheel is needed.
Pass the library path as the first argument to override the search.
"""

import importlib.util
import os
import shutil
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def find_library():
    if len(sys.argv) > 1:
        return sys.argv[1]
    target = os.environ.get("CARGO_TARGET_DIR", os.path.join(ROOT, "target"))
    names = ["libqso.so", "libqso.dylib", "qso.dll"]
    found = [
        os.path.join(target, profile, name)
        for profile in ("release", "debug")
        for name in names
        if os.path.exists(os.path.join(target, profile, name))
    ]
    if not found:
        sys.exit("libqso not found; run `cargo build -p qso-py` first")
    return max(found, key=os.path.getmtime)


def load(path):
    tmp = tempfile.mkdtemp(prefix="qso-smoke-")
    dest = os.path.join(tmp, "qso.so")
    shutil.copy(path, dest)
    spec = importlib.util.spec_from_file_location("qso", dest)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


K3 = """domain 3
relation E 2
0 1
1 0
0 2
2 0
1 2
2 1
end
"""

TRIANGLES = "sum x. sum y. sum z. (E(x,y) & E(y,z) & E(z,x) & x < y & y < z)"
CLIQUES = "sum X:1. forall x. forall y. ((X(x) & X(y) & !(x=y)) -> E(x,y))"


def main():
    qso = load(find_library())
    k3 = qso.Structure.parse(K3)
    assert k3.domain_size == 3
    assert k3.encode() == "0001011101110"
    assert qso.eval(k3, TRIANGLES) == 1
    assert qso.eval(k3, CLIQUES) == 8
    assert qso.eval(k3, "sum y. E(x,y)", {"x": 0}) == 2
    assert qso.eval(k3, "sum x. X(x)", {"X": [(0,), (2,)]}) == 2
    assert qso.classify(TRIANGLES, {"E": 2}) == "QFO(Sigma0)"
    assert qso.classify(CLIQUES, {"E": 2}) == "SigmaQSO(Pi1)"

    empty3 = qso.Structure.parse("domain 3\n")
    reduced = qso.rewrite("minus-one", "sum x. true")
    assert qso.eval(empty3, reduced) == 2
    snf = qso.rewrite("snf", "2 * (sum x. E(x,x)) + 1", {"E": 2})
    assert qso.eval(k3, snf) == 1

    dh = qso.reduce_horn(empty3, "sum X:1. forall x. X(x)")
    assert qso.count_dishorn(dh) == 1
    assert qso.count_dishorn("vars 2\ndisjunct\n-1\nend\ndisjunct\n1\n2\nend\n") == 3
    assert qso.permanent([[1, 1], [1, 1]]) == 2
    assert qso.walks(3, [(0, 1), (1, 2), (0, 2)], 0, 2, 3) == 2

    try:
        qso.eval(k3, "sum X:3. true")
    except qso.BudgetError:
        pass
    else:
        raise AssertionError("expected BudgetError")
    try:
        qso.eval(k3, "sum x. F(x)")
    except qso.QsoError as e:
        assert "F" in str(e)
    else:
        raise AssertionError("expected QsoError")
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
