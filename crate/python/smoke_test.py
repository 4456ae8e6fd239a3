"""Smoke test for the Python bindings.

Builds the extension with cargo, imports it from a scratch directory and checks
a handful of closed-form values.  Run from anywhere: python3 python/smoke_test.py
"""

import cmath
import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_module() -> pathlib.Path:
    subprocess.run(["cargo", "build", "--release", "-p", "dclab-py"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libdclab.so"
    if not lib.exists():
        sys.exit(f"extension not found at {lib}")
    dest = pathlib.Path(tempfile.mkdtemp(prefix="dclab-py-"))
    shutil.copy(lib, dest / "dclab.so")
    return dest


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main() -> None:
    sys.path.insert(0, str(build_module()))
    import dclab

    close(dclab.eval_expression("x^2+y^2", x=1.0, y=2.0), 5.0, 0.0)

    # c = i c0 e^{ikt} with c0 = 0.5, k = 2, λ = 1 + i: closed-form σ_1.
    op = dclab.Operator(1.0, 1.0, 0.0, 1.0, c="i*0.5*exp(i*2*t)")
    lam, c0, k, j = op.lambda_, 0.5, 2, 1
    centre = 1j * lam.imag * j + lam.conjugate() * k / 2
    x = lam.real * j - lam.conjugate() * k / 2
    roots = [centre + s * cmath.sqrt(x * x + c0 * c0) for s in (1, -1)]
    values = op.spectrum(-3, 3)
    assert len(values) == 14, len(values)
    at_one = [v["sigma"] for v in values if v["j"] == 1]
    assert any(abs(s - r) < 1e-8 for s in at_one for r in roots), (at_one, roots)

    w = op.basic_solution(1, "+")
    sigma, index = w.character()
    adj_sigma, adj_index = w.adjoint_character()
    close(adj_sigma, -sigma, 1e-8)
    assert adj_index == -index
    assert w.residual() < 1e-8

    # c ≡ 0, ν = 0, λ = 1: Ω₁ = iζ/(ζ − z), Ω₂ = 0.
    ker = dclab.Kernels(dclab.Operator(1.0), 32)
    r, t, rho, theta = 0.3, 0.4, 0.8, 2.0
    o1, o2 = ker.omega(r, t, rho, theta)
    z, zeta = r * cmath.exp(1j * t), rho * cmath.exp(1j * theta)
    close(o1, 1j * zeta / (zeta - z), 1e-8)
    close(o2, 0.0, 1e-8)

    mu = dclab.normalize_operator("x^2+y^2")["mu"]
    close(mu, 1.0, 1e-8)
    family = dclab.normalize_operator("y^2+4*x^2", "3*x*y", "x^2+4*y^2")
    close(family["mu"], 2.0, 1e-8)

    remark = dclab.second_order(1.0, "-i")
    assert remark["verdict"] == "violated" and remark["witness"][0] == 1, remark
    assert dclab.second_order(1.0, "0.3*cos(t)")["verdict"] == "satisfied"

    try:
        dclab.Operator(-1.0)
    except dclab.InvalidInputError:
        pass
    else:
        raise AssertionError("negative a was accepted")
    assert issubclass(dclab.InvalidInputError, ValueError)

    print("python smoke test passed")


if __name__ == "__main__":
    main()
