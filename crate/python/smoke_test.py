"""Smoke test for the `qds` extension module.

Build and stage the module first:

    cargo build -p qds-python --release --features extension-module
    cp target/release/libqds.so python/qds.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.environ.get("QDS_MODULE_DIR", os.path.dirname(os.path.abspath(__file__))))

import qds  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def oscillator():
    m = qds.Model.damped_oscillator(1.0, 16)
    assert m.dim == 16 and m.mode == "absorbing"
    # pure loss: <n|Q_lambda^k(I)|n> = prod_{j<k} (n-j)/(lambda+n-j)
    trace = m.q_power_trace(2.0, u=3, k_max=20)
    for k, v in enumerate(trace["values"]):
        close(v, math.prod((3 - j) / (5 - j) for j in range(k)), 1e-12)
    close(m.deficiency(1.0, u=1), 0.0, 1e-10)
    fit = m.fit_constants()
    assert fit["feasible"], fit
    report = qds.verdict([qds.Model.damped_oscillator(1.0, n) for n in (16, 32, 64)], 1.0, u=1)
    assert report["verdict"] == "conservative-consistent", report["verdict"]


def pump():
    for n in (16, 24):
        m = qds.Model.quadratic_pump(n)
        chain = math.prod((k + 1) * (k + 2) / (1 + (k + 1) * (k + 2)) for k in range(0, n, 2))
        close(m.deficiency(1.0), chain, 1e-8)
    leak = qds.Model.quadratic_pump(16).leakage([0.5, 1.0, 2.0])
    assert all(b >= a for a, b in zip(leak, leak[1:])), leak
    try:
        qds.Model.quadratic_pump(8).check_cf(1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("pump has no certificate operator")


def heavy_ion():
    m = qds.Model.heavy_ion(math.sqrt(2), 1.0, 2.0, 24)
    assert m.check_phi_domination(1.0)["verdict"] == "pass"
    spec = json.loads(m.to_json())
    assert spec["type"] == "heavy_ion" and spec["N"] == 24
    again = qds.Model.from_json(m.to_json())
    assert again.fingerprint == m.fingerprint


def relative_bound():
    points, half = 256, 20.0
    h = 2 * half / points
    w = [1 / (1 + (-half + j * h) ** 2) for j in range(points)]
    cert = qds.relative_bound(w, points, half, [0.5 ** k for k in range(1, 9)])
    assert cert["verdict"] == "pass", cert["margins"]
    assert qds.relative_bound_exponent(1, 0.0) == 1 / 3
    try:
        qds.relative_bound_exponent(3, 0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("n/(1+alpha) >= 2 must be rejected")


if __name__ == "__main__":
    for check in (oscillator, pump, heavy_ion, relative_bound):
        check()
        print(f"ok  {check.__name__}")
    print(f"qds {qds.__version__}: smoke test passed")
