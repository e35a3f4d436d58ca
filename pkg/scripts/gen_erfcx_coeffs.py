"""Regenerate the Chebyshev coefficients used by ``ocb.qfunc`` for erfcx.

erfcx(x) = exp(x**2) * erfc(x) on x >= 0 is written as t * y(t) with
t = K / (K + x); y is smooth on [0, 1] and is fitted here by a Chebyshev
series in s = 2t - 1 using mpmath at 40 digits.

Usage: python scripts/gen_erfcx_coeffs.py [degree]
"""
import sys

import mpmath as mp

mp.mp.dps = 40
K = mp.mpf(4)


def y_of_t(t):
    if t == 0:
        return 1 / (K * mp.sqrt(mp.pi))
    x = K * (1 - t) / t
    return mp.erfc(x) * mp.exp(x * x) / t


def cheb_coeffs(n):
    nodes = [mp.cos(mp.pi * (k + mp.mpf(1) / 2) / n) for k in range(n)]
    vals = [y_of_t((s + 1) / 2) for s in nodes]
    out = []
    for j in range(n):
        acc = mp.fsum(vals[k] * mp.cos(mp.pi * j * (k + mp.mpf(1) / 2) / n) for k in range(n))
        out.append(2 * acc / n)
    out[0] /= 2
    return out


if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 40
    for c in cheb_coeffs(n):
        print(f"    {mp.nstr(c, 20, min_fixed=-1, max_fixed=-1)},")
