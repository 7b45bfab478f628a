#!/usr/bin/env python3
"""Reference implementation of the disorder generator (see docs/disorder_generator.md).

Independent of the C++ code: used to produce the known-answer values frozen in
tests/test_env.cpp.  Usage: omega_reference.py SEED I X1 X2 [...]
"""
import math
import sys

M0, M1 = 0xD2511F53, 0xCD9E8D57
W0, W1 = 0x9E3779B9, 0xBB67AE85
MASK = 0xFFFFFFFF


def philox4x32_10(ctr, key):
    c = list(ctr)
    k0, k1 = key
    for _ in range(10):
        p0 = M0 * c[0]
        p1 = M1 * c[2]
        hi0, lo0 = p0 >> 32, p0 & MASK
        hi1, lo1 = p1 >> 32, p1 & MASK
        c = [hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0]
        k0 = (k0 + W0) & MASK
        k1 = (k1 + W1) & MASK
    return c


A = [3.387132872796366608, 133.14166789178437745, 1971.5909503065514427,
     13731.693765509461125, 45921.953931549871457, 67265.770927008700853,
     33430.575583588128105, 2509.0809287301226727]
B = [1.0, 42.313330701600911252, 687.1870074920579083, 5394.1960214247511077,
     21213.794301586595867, 39307.89580009271061, 28729.085735721942674,
     5226.495278852545925]
C = [1.42343711074968357734, 4.6303378461565452959, 5.7694972214606914055,
     3.64784832476320460504, 1.27045825245236838258, 0.24178072517745061177,
     0.0227238449892691845833, 7.7454501427834140764e-4]
D = [1.0, 2.05319162663775882187, 1.6763848301838038494, 0.68976733498510000455,
     0.14810397642748007459, 0.0151986665636164571966,
     5.475938084995344946e-4, 1.05075007164441684324e-9]
E = [6.6579046435011037772, 5.4637849111641143699, 1.7848265399172913358,
     0.29656057182850489123, 0.026532189526576123093, 0.0012426609473880784386,
     2.71155556874348757815e-5, 2.01033439929228813265e-7]
F = [1.0, 0.59983220655588793769, 0.13692988092273580531,
     0.0148753612908506148525, 7.868691311456132591e-4,
     1.8463183175100546818e-5, 1.4215117583164458887e-7,
     2.04426310338993978564e-15]


def horner(coef, r):
    acc = coef[7]
    for c in reversed(coef[:7]):
        acc = acc * r + c
    return acc


def inverse_normal_cdf(p):
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * horner(A, r) / horner(B, r)
    r = p if q < 0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        v = horner(C, r) / horner(D, r)
    else:
        r -= 5.0
        v = horner(E, r) / horner(F, r)
    return -v if q < 0 else v


def omega(seed, i, x1, x2):
    ctr = [x1 & MASK, x2 & MASK, i & MASK, (i >> 32) & MASK]
    key = [seed & MASK, (seed >> 32) & MASK]
    out = philox4x32_10(ctr, key)
    bits = (out[0] << 32) | out[1]
    u = ((bits >> 12) + 0.5) * 2.0 ** -52
    return inverse_normal_cdf(u)


if __name__ == "__main__":
    if len(sys.argv) == 1:
        for ctr, key in [([0, 0, 0, 0], [0, 0]), ([MASK] * 4, [MASK, MASK]),
                         ([0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344],
                          [0xa4093822, 0x299f31d0])]:
            print(" ".join("%08x" % v for v in philox4x32_10(ctr, key)))
        sys.exit(0)
    a = [int(v) for v in sys.argv[1:]]
    for j in range(0, len(a), 4):
        print(repr(omega(*a[j:j + 4])))
