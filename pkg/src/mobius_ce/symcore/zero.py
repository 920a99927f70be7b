"""Sampling domains and zero verdicts."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.stats import qmc

from .canonical import canonical
from .expr import Expr
from .numeric import evaluate

ZERO_TOL = 1e-9
DEFAULT_SAMPLES = 128
MIN_SAMPLES = 100
EXCLUDE_TOL = 1e-6


def sampling_seed() -> int:
    return int(os.environ.get("MOBIUS_SEED", "0"))


@dataclass(frozen=True)
class Domain:
    """Rectangle in two coordinates, minus the zero sets of ``exclude`` and
    restricted to where every ``require`` expression is positive."""

    coords: tuple[str, str] = ("x", "y")
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (-1.0, 1.0))
    exclude: tuple[Expr, ...] = ()
    require: tuple[Expr, ...] = ()
    constants: tuple[tuple[str, float], ...] = ()
    samples: int = DEFAULT_SAMPLES

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        if self.samples < MIN_SAMPLES:
            object.__setattr__(self, "samples", MIN_SAMPLES)

    @property
    def constant_map(self) -> dict[str, float]:
        return dict(self.constants)

    def env(self, xs, ys) -> dict[str, object]:
        env: dict[str, object] = dict(self.constants)
        env[self.coords[0]] = xs
        env[self.coords[1]] = ys
        return env

    def admissible(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        ok = np.ones(xs.shape, dtype=bool)
        (x0, x1), (y0, y1) = self.bounds
        ok &= (xs >= x0) & (xs <= x1) & (ys >= y0) & (ys <= y1)
        env = self.env(xs, ys)
        for e in self.exclude:
            v = np.broadcast_to(evaluate(e, env), xs.shape)
            ok &= np.isfinite(v) & (np.abs(v) > EXCLUDE_TOL)
        for e in self.require:
            v = np.broadcast_to(evaluate(e, env), xs.shape)
            ok &= np.isfinite(v) & (v > 0)
        return ok

    def contains(self, x: float, y: float) -> bool:
        return bool(self.admissible(np.array([x]), np.array([y]))[0])

    @cached_property
    def sample_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Scrambled Sobol points (seeded by ``MOBIUS_SEED``) inside the domain."""
        (x0, x1), (y0, y1) = self.bounds
        sob = qmc.Sobol(d=2, scramble=True, seed=sampling_seed())
        m = int(np.ceil(np.log2(self.samples)))
        for _ in range(8):
            u = sob.random_base2(m) if m else sob.random(1)
            xs = x0 + (x1 - x0) * u[:, 0]
            ys = y0 + (y1 - y0) * u[:, 1]
            ok = self.admissible(xs, ys)
            if ok.sum() >= self.samples:
                break
            sob.reset()
            m += 1
        xs, ys = xs[ok][: self.samples], ys[ok][: self.samples]
        if xs.size == 0:
            raise ValueError("domain has no admissible sample points")
        return xs, ys

    def grid(self, n: int = 21) -> tuple[np.ndarray, np.ndarray]:
        """Admissible points of the ``n x n`` tensor grid over the rectangle."""
        (x0, x1), (y0, y1) = self.bounds
        X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n), indexing="ij")
        X, Y = X.ravel(), Y.ravel()
        ok = self.admissible(X, Y)
        return X[ok], Y[ok]

    def quadrants(self) -> list["Domain"]:
        (x0, x1), (y0, y1) = self.bounds
        xm, ym = (x0 + x1) / 2, (y0 + y1) / 2
        out = []
        for bx in ((x0, xm), (xm, x1)):
            for by in ((y0, ym), (ym, y1)):
                d = replace(self, bounds=(bx, by))
                try:
                    d.sample_points
                except ValueError:
                    continue
                out.append(d)
        return out

    def with_constants(self, constants: Mapping[str, float]) -> "Domain":
        return replace(self, constants=tuple(sorted(dict(constants).items())))

    def to_dict(self) -> dict:
        return {
            "coords": list(self.coords),
            "bounds": [list(b) for b in self.bounds],
            "exclude": [str(e) for e in self.exclude],
            "require": [str(e) for e in self.require],
            "constants": dict(self.constants),
            "samples": self.samples,
        }


@dataclass(frozen=True)
class ZeroVerdict:
    kind: str  # ProvedZero | NonZero | NumericallyZero | Unknown
    witness: tuple[float, float] | None = None
    value: float | None = None
    max_abs: float | None = None
    samples_used: int = 0
    tol: float = ZERO_TOL
    note: str = ""

    PROVED = "ProvedZero"
    NONZERO = "NonZero"
    NUMERIC = "NumericallyZero"
    UNKNOWN = "Unknown"

    @property
    def is_zero(self) -> bool:
        return self.kind in (self.PROVED, self.NUMERIC)

    @property
    def is_nonzero(self) -> bool:
        return self.kind == self.NONZERO

    def to_dict(self) -> dict:
        d: dict = {"verdict": self.kind, "samples": self.samples_used, "tol": self.tol}
        if self.witness is not None:
            d["witness"] = list(self.witness)
            d["value"] = self.value
        if self.max_abs is not None:
            d["max_abs"] = self.max_abs
        if self.note:
            d["note"] = self.note
        return d


def sample_values(e: Expr, domain: Domain, points=None):
    """Values of ``e`` at the domain's sample points; non-finite ones dropped."""
    xs, ys = domain.sample_points if points is None else points
    v = np.broadcast_to(evaluate(e, domain.env(xs, ys)), xs.shape).astype(float)
    ok = np.isfinite(v)
    return xs[ok], ys[ok], v[ok]


def is_zero(e: Expr, domain: Domain, tol: float = ZERO_TOL) -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically on ``domain``.

    ``ProvedZero`` comes only from the exact normal form.  Otherwise the
    expression is sampled; points where it is singular are skipped.
    """
    if canonical(e).is_zero:
        return ZeroVerdict(ZeroVerdict.PROVED, tol=tol)
    xs, ys, v = sample_values(e, domain)
    if v.size == 0:
        return ZeroVerdict(ZeroVerdict.UNKNOWN, tol=tol, note="every sample point was singular")
    a = np.abs(v)
    i = int(np.argmax(a))
    if a[i] > tol:
        return ZeroVerdict(
            ZeroVerdict.NONZERO,
            witness=(float(xs[i]), float(ys[i])),
            value=float(v[i]),
            max_abs=float(a[i]),
            samples_used=int(v.size),
            tol=tol,
        )
    return ZeroVerdict(ZeroVerdict.NUMERIC, max_abs=float(a[i]), samples_used=int(v.size), tol=tol)
