"""Smoke test for the pyoscbc extension module."""

import math

import pyoscbc

PHI = (1 + math.sqrt(5)) / 2


def main():
    pts = [(2 * j + 1) / 20 for j in range(10)]
    assert abs(pyoscbc.discrepancy_star(pts) - 0.05) < 1e-12
    assert abs(pyoscbc.discrepancy_extreme(pts) - 0.1) < 1e-12

    d = pyoscbc.rotation_discrepancy(PHI, 1000)
    assert 0 < d < 10 * math.log(1000) / 1000

    assert pyoscbc.omega([1.0, PHI], 100.0) > 0
    assert pyoscbc.classify([1.0, 2.0])["kind"] == "rational"
    assert pyoscbc.classify([1.0, math.sqrt(2)])["kind"] == "irrational"

    # query point on the line through the origin orthogonal to (1, sqrt2)
    x = [-math.sqrt(2) * 7.0, 7.0]
    hit = pyoscbc.approach_point([1.0, math.sqrt(2)], [0.0, 0.0], x, 10.0)
    assert all(float(c).is_integer() for c in hit["y"])
    assert math.dist(hit["y"], x) <= hit["search_radius"]

    lap = pyoscbc.compute_beta0(1.0, 1.0, 1.0)
    assert abs(lap["beta0"] - 1.0) < 1e-6
    maximal = pyoscbc.compute_beta0(1.0, 2.0, 1.0)
    minimal = pyoscbc.compute_beta0(1.0, 2.0, 1.0, extremal="minimal")
    assert maximal["beta0"] < 1.0 < minimal["beta0"]

    assert pyoscbc.parse_expr(pyoscbc.parse_expr("cos(1, 0)")) == pyoscbc.parse_expr("cos(1, 0)")
    assert abs(pyoscbc.eval_expr("cos(1, 0)", [0.0, 0.0], [0.0, 0.0]) - 1.0) < 1e-15

    avg = pyoscbc.cell_average(
        "cos(1, 0)", [1.0, math.sqrt(2)], depth=2.0, h=1 / 16, translates=2, richardson=False
    )
    assert abs(avg["mu_bar"]) < 0.05

    table = pyoscbc.sweep("cos(1, 0)", uniform=4, depth=2.0, h=1 / 16, translates=2, richardson=False)
    assert len(table["entries"]) == 4

    report = pyoscbc.run_verify()
    assert all(c["passed"] for c in report["checks"])

    try:
        pyoscbc.compute_beta0(2.0, 1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid ellipticity accepted")

    print("pyoscbc smoke test passed")


if __name__ == "__main__":
    main()
