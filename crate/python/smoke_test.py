"""Smoke test for the msindex_py extension.

Build and install it first:

    pip install --no-build-isolation -e crates/py
    python python/smoke_test.py
"""

import cmath
import json
import math

import msindex_py as ms


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL: {what}")
    print(f"ok: {what}")


def main():
    names = ms.scenario_names()
    check("great-circle" in names and "flat-torus(1)" in names, "catalog lists built-in scenarios")

    check(ms.spectral_index("great-circle", 1) == (2, 1, 1), "great-circle index at omega = 1")
    check(ms.spectral_index("flat-torus(1)", -1) == (0, 0, 0), "flat-torus(1) index at omega = -1")
    check(ms.morse_index("great-circle", -1) == 2, "great-circle FEM Morse index at omega = -1")

    p = ms.poincare_map("flat-torus(1)")
    check(all(abs(a - b) < 1e-8 for a, b in zip(sum(p, []), [1, 0, 1, 1])), "flat-torus(1) Poincare map is a shear")

    theta = math.pi / 3
    rot = [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    check(ms.splitting_numbers(rot, cmath.exp(1j * theta)) == (0, 1), "splitting numbers of R(pi/3)")

    report, violations = ms.analyze("great-circle", "indices,bott", omegas="1,-1", max_m=2)
    data = json.loads(report)
    check(not violations and data["checks"]["theoremA"], "analysis report has no violations")
    check([it["lhs"] for it in data["bott"]["iterates"]] == [1, 3], "iterate indices 1 and 3")
    again, _ = ms.analyze("great-circle", "indices,bott", omegas="1,-1", max_m=2)
    check(report == again, "reports are byte-identical")

    try:
        ms.analyze("great-circle", "")
    except ValueError:
        print("ok: empty analysis list raises ValueError")
    else:
        raise SystemExit("FAIL: empty analysis list accepted")


if __name__ == "__main__":
    main()
