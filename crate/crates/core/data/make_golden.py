"""Regenerates golden.csv with scipy/mpmath, independently of the Rust code.

d <= 2: QUADPACK in Cartesian coordinates over the support of p.
d >= 3 (Euclidean-radial pairs only): mpmath radial quadrature at 30 digits.
"""
import csv
import math

import mpmath as mp
import numpy as np
from scipy import integrate, special

mp.mp.dps = 30
SQRT2 = math.sqrt(2.0)


def parse(name):
    fam, args = name.split(":")
    vals = [float(a) for a in args.split(",")]
    return fam, vals


class Dens:
    def __init__(self, name, d):
        self.name, self.d = name, d
        self.fam, v = parse(name)
        self.R = v[0]
        self.c = v[1] if len(v) > 1 else 1.0
        if self.fam == "tgauss":
            self.norm = (2 * math.pi) ** (-d / 2) / special.gammainc(d / 2, self.R**2 / 2) / self.c**d
        elif self.fam == "texp":
            self.norm = 1 / special.gammainc(d, self.R)
        elif self.fam == "tlaplace":
            self.norm = 1 / (2**d * special.gammainc(d, self.R))
        elif self.fam == "tcauchy":
            num = integrate.quad(lambda t: math.sin(t) ** (d - 1), 0, math.atan(self.R), epsabs=1e-15)[0]
            den = integrate.quad(lambda t: math.sin(t) ** (d - 1), 0, math.pi / 2, epsabs=1e-15)[0]
            self.norm = special.gamma((d + 1) / 2) / math.pi ** ((d + 1) / 2) / (num / den)
        elif self.fam == "uniform":
            self.norm = self.R ** (-d)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.fam == "tgauss":
            r2 = float(x @ x) / self.c**2
            return self.norm * math.exp(-r2 / 2) if r2 <= self.R**2 else 0.0
        if self.fam == "tcauchy":
            r2 = float(x @ x)
            return self.norm * (1 + r2) ** (-(self.d + 1) / 2) if r2 <= self.R**2 else 0.0
        if self.fam == "texp":
            s = float(x.sum())
            return self.norm * math.exp(-s) if (x >= 0).all() and s <= self.R else 0.0
        if self.fam == "tlaplace":
            s = float(np.abs(x).sum())
            return self.norm * math.exp(-s) if s <= self.R else 0.0
        return self.norm if ((x >= 0) & (x <= self.R)).all() else 0.0

    def radial(self, r):
        if self.fam == "tgauss":
            return mp.mpf(self.norm) * mp.exp(-(r / self.c) ** 2 / 2) if r <= self.R * self.c else mp.mpf(0)
        return mp.mpf(self.norm) * (1 + r * r) ** (-(self.d + 1) / mp.mpf(2)) if r <= self.R else mp.mpf(0)

    def extent(self):
        return self.R * self.c

    def x1_range(self):
        if self.fam in ("tgauss", "tcauchy"):
            return -self.extent(), self.extent()
        if self.fam == "tlaplace":
            return -self.R, self.R
        return 0.0, self.R

    def x2_range(self, t):
        if self.fam in ("tgauss", "tcauchy"):
            h = math.sqrt(max(self.extent() ** 2 - t * t, 0.0))
            return -h, h
        if self.fam == "tlaplace":
            return -(self.R - abs(t)), self.R - abs(t)
        if self.fam == "texp":
            return 0.0, self.R - t
        return 0.0, self.R


def f(fn, p, q):
    name, _, arg = fn.partition(":")
    args = [float(a) for a in arg.split(",")] if arg else []
    if name == "entropy":
        return -math.log(p)
    if name == "renyi-entropy":
        return p ** (args[0] - 1)
    if name == "gen-entropy":
        return p ** (args[0] - 1) * math.exp(-args[1] * p)
    if name == "kl":
        return math.log(p / q)
    if name == "gen-beta":
        return p ** (args[0] - 1) * math.log(p / q)
    r = q / p
    xlogx = r * math.log(r) if r > 0 else 0.0
    if name == "reverse-kl":
        return xlogx
    if name == "jsd":
        return (r + 1) * math.log(2 / (r + 1)) + xlogx
    if name == "l2sq":
        return (p - q) ** 2 / p
    if name == "renyi-div":
        return r ** (1 - args[0])
    if name == "hellinger":
        return 2 * (1 - math.sqrt(r))
    if name == "chi2":
        return r * r - 1
    if name == "nn-class":
        return p / (p + q)
    raise ValueError(fn)


def mp_f(fn, p, q):
    name, _, arg = fn.partition(":")
    args = [mp.mpf(a) for a in arg.split(",")] if arg else []
    if name == "entropy":
        return -mp.log(p)
    if name == "kl":
        return mp.log(p / q)
    if name == "gen-beta":
        return p ** (args[0] - 1) * mp.log(p / q)
    raise ValueError(fn)


def cartesian(fn, P, Q):
    g = lambda *x: f(fn, P.pdf(x), Q.pdf(x) if Q else 0.0) * P.pdf(x) if P.pdf(x) > 0 else 0.0
    lo, hi = P.x1_range()
    pts = [0.0]
    if Q:
        pts += list(Q.x1_range())
    pts = sorted(t for t in set(pts) if lo < t < hi)
    kw = dict(epsabs=1e-12, epsrel=1e-12, limit=400)
    if P.d == 1:
        return integrate.quad(lambda x: g(x), lo, hi, points=pts or None, **kw)[0]

    def inner(x1):
        a, b = P.x2_range(x1)
        if b <= a:
            return 0.0
        ip = [0.0] + (list(Q.x2_range(x1)) if Q else [])
        ip = sorted(t for t in set(ip) if a < t < b)
        return integrate.quad(lambda x2: g(x1, x2), a, b, points=ip or None, **kw)[0]

    return integrate.quad(inner, lo, hi, points=pts or None, epsabs=1e-11, epsrel=1e-11, limit=400)[0]


def radial(fn, P, Q):
    d = P.d
    area = d * mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2 + 1)
    g = lambda r: mp_f(fn, P.radial(r), Q.radial(r) if Q else 0) * P.radial(r) * area * r ** (d - 1)
    return float(mp.quad(g, [0, P.extent()]))


ROWS = [
    ("entropy", "tgauss:3", "", 1),
    ("entropy", "tgauss:3", "", 2),
    ("entropy", "tgauss:3", "", 3),
    ("entropy", "tgauss:3", "", 4),
    ("entropy", "tcauchy:3", "", 2),
    ("entropy", "texp:4", "", 2),
    ("entropy", "tlaplace:3", "", 2),
    ("entropy", "uniform:1", "", 2),
    ("entropy", "uniform:2", "", 2),
    ("renyi-entropy:2", "tgauss:3", "", 2),
    ("gen-entropy:2,0.5", "tlaplace:3", "", 1),
    ("kl", "tgauss:3", "tgauss:3,1.4142135623730951", 2),
    ("kl", "tgauss:3", "tgauss:3,1.4142135623730951", 3),
    ("gen-beta:3", "tgauss:3", "tgauss:3,1.4142135623730951", 3),
    ("hellinger", "tgauss:3", "tcauchy:3", 2),
    ("chi2", "texp:4", "tlaplace:3", 2),
    ("jsd", "uniform:1", "tgauss:3", 2),
    ("reverse-kl", "tlaplace:3", "texp:6", 1),
    ("l2sq", "tgauss:3", "tlaplace:3", 1),
    ("renyi-div:0.5", "tcauchy:3", "tgauss:3", 2),
    ("nn-class", "texp:4", "uniform:2", 2),
    ("kl", "tlaplace:3", "tlaplace:3", 2),
]

with open("golden.csv", "w", newline="") as fh:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["functional", "density1", "density2", "d", "value", "tolerance", "oracle"])
    for fn, a, b, d in ROWS:
        P = Dens(a, d)
        Q = Dens(b, d) if b else None
        if d <= 2:
            v, oracle, tol = cartesian(fn, P, Q), "scipy-quad-cartesian", 1e-8
        else:
            v, oracle, tol = radial(fn, P, Q), "mpmath-radial", 1e-10
        w.writerow([fn, a, b, d, repr(v), tol, oracle])
        print(fn, a, b, d, v)
