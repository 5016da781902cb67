"""Smoke test for the isospectra_py extension module.

Build first:
    cargo build --release -p isospectra-py --features extension-module
then run this script; it loads the compiled library from target/.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import isospectra_py

        return isospectra_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libisospectra_py.so", "libisospectra_py.dylib", "isospectra_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                loader = importlib.machinery.ExtensionFileLoader("isospectra_py", str(lib))
                spec = importlib.util.spec_from_loader("isospectra_py", loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("isospectra_py not built; see the module docstring")


def main():
    iso = load()

    path3 = [[0, 1, 0], [1, 0, 1], [0, 1, 0]]
    assert iso.symmetrized_violation(path3) == 2
    assert iso.certify_rigid(path3) == "not-rigid"
    w = iso.find_nonzero_witness(path3, seed=1)
    assert w is not None and w.residual <= 1e-10
    assert max(abs(x) for x in w.d) > 1e-6
    assert len(json.loads(w.to_json())["D"]) == 3

    k4 = [[0 if i == j else 1 for j in range(4)] for i in range(4)]
    assert iso.symmetrized_violation(k4) is None
    assert iso.certify_rigid(k4) == "rigid"
    assert iso.spectral_invariants([["1/2", 0], [0, "1/2"]])[0] == "v1 + v2"

    assert iso.lambda_value(3, 1, 1, 0) == "-1"
    assert iso.lambda_trace(3, 1, [2]) == iso.lambda_value(3, 1, 1, 0)
    assert iso.lambda_csv(2).splitlines()[0].startswith("n,m,k,j,value")

    verdict, v = iso.find_isospectral_potential([5], seed=2)
    assert verdict == "witness"
    ok, dev = iso.floquet_isospectral(v, iso.Potential.zero([5]))
    assert ok and dev <= 1e-8, dev
    lifted = v.lift([10])
    assert iso.floquet_isospectral(lifted, iso.Potential.zero([10]), mode="numeric")[0]
    assert iso.Potential.from_json(v.to_json()).values == v.values
    assert iso.find_isospectral_potential([3, 2])[0] == "rigid"
    assert iso.find_isospectral_potential([3, 3, 3])[0] == "inconclusive"
    assert iso.find_isospectral_potential([3, 3], time_limit=0.5)[0] == "inconclusive"

    bands = iso.Potential.zero([1]).bands(4)
    assert [round(ev[0].real, 12) for _, ev in bands] == [2.0, 0.0, -2.0, 0.0]

    try:
        iso.Potential([2], [0j])
    except ValueError:
        pass
    else:
        raise AssertionError("length mismatch accepted")

    passed, table = iso.selftest(seed=3)
    assert passed, table
    print("smoke test passed")


if __name__ == "__main__":
    main()
