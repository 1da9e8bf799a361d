"""Smoke test for the `otoc` extension module.

Build and install first:  pip install ./crates/py --no-build-isolation
"""
import otoc


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * (1.0 + abs(b))


def main():
    assert close(otoc.critical_coupling(1.0, 64.0), 4.0)

    h = otoc.hamiltonian("rabi", 64.0, 6, 1.0)
    assert len(h) == 12 and all(len(r) == 12 for r in h)
    assert all(close(h[i][j], h[j][i].conjugate()) for i in range(12) for j in range(12))

    evals, evecs = otoc.eigh(h)
    assert evals == sorted(evals)
    # H v = e v for the lowest pair
    v = [row[0] for row in evecs]
    hv = [sum(h[i][k] * v[k] for k in range(12)) for i in range(12)]
    assert max(abs(hv[i] - evals[0] * v[i]) for i in range(12)) < 1e-9

    times, values = otoc.otoc_series("rabi", 64.0, 8, 0.8, t_end=5.0)
    assert len(times) == 51 and close(values[0].real, 1.0)
    assert max(abs(z.imag) for z in values) < 1e-8

    ratios = [0.5, 1.0, 1.5]
    scan = otoc.scan("dicke", 16.0, 8, ratios, atoms=2, t_end=20.0)
    assert len(scan) == 3 and all(0.0 < x <= 1.0 + 1e-12 for x in scan)
    order = otoc.order_parameter_scan("rabi", 64.0, 10, ratios)
    assert order[0] < order[2]

    pts = [(2.0**e, 1.0 + 2.0 ** (3.0 - 0.95 * e)) for e in range(11, 21)]
    fit = otoc.fit_scaling_eta(pts)
    assert close(fit["exponent"], 0.95, 1e-9), fit

    law = [(n, 0.3 * n**-1.2 + 0.05) for n in range(1, 7)]
    a, b, c, residual = otoc.fit_size_law(law)
    assert close(b, 1.2, 1e-6) and residual < 1e-10

    try:
        otoc.scan("rabi", 64.0, 8, [1.0, 0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("decreasing grid accepted")

    print("otoc smoke test: ok")


if __name__ == "__main__":
    main()
