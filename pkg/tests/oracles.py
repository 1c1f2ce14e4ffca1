"""Independent reference implementations used as test oracles.

Nothing here imports from the package under test.
"""
from fractions import Fraction
from math import comb


def reference_loop(u, n1, n2, nc, a1, a2, g12, v_ref, v_dd, droop1=0.0, cubic1=0.0,
                   droop2=0.0, offset=0.0, i1=0.0, i2=0.0, v=1):
    """Straight-line second-order loop on Python floats.

    Returns ``(bits, i1_trace, i2_trace)`` and checks the rail invariant on
    every step.
    """
    bits, t1, t2 = [], [], []
    for k in range(len(u)):
        uk = float(u[k])
        x = uk / v_ref
        fb = v * v_ref
        i1 = i1 + a1 * (uk - fb) - (droop1 + cubic1 * (x * x * x)) + float(n1[k])
        i1 = min(v_dd, max(-v_dd, i1))
        i2 = i2 + a2 * (g12 * i1 - fb) - droop2 + float(n2[k])
        i2 = min(v_dd, max(-v_dd, i2))
        assert abs(i1) <= v_dd and abs(i2) <= v_dd
        v = -1 if i2 + offset + float(nc[k]) < 0.0 else 1
        bits.append(v)
        t1.append(i1)
        t2.append(i2)
    return bits, t1, t2


def cic_closed_form(r, order=3):
    """Impulse response of ``order`` cascaded length-``r`` box-cars.

    h[n] = sum_j (-1)^j C(order, j) C(n - j r + order - 1, order - 1), with
    terms for n - j r < 0 dropped; support is ``order * (r - 1) + 1``.
    """
    out = []
    for n in range(order * (r - 1) + 1):
        h = 0
        for j in range(order + 1):
            m = n - j * r
            if m >= 0:
                h += (-1) ** j * comb(order, j) * comb(m + order - 1, order - 1)
        out.append(h)
    return out


def cubic_ls_residual_peak(levels):
    """Exact peak |x^3 - s x| after a least-squares line fit on a symmetric grid.

    On a symmetric grid the fitted offset is zero and the slope is
    s = sum(x^4) / sum(x^2); the residual is odd with its extreme at the end
    points or at x = sqrt(s / 3).
    """
    xs = [Fraction(x).limit_denominator(10 ** 9) for x in levels]
    s = sum(x ** 4 for x in xs) / sum(x ** 2 for x in xs)
    return max(abs(x ** 3 - s * x) for x in xs), s
