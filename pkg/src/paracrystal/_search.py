import math

INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section(f, a, b, tol=1e-3):
    """Minimise a unimodal ``f`` on [a, b]; returns (x, f(x)) with bracket width <= tol."""
    a, b = min(a, b), max(a, b)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
