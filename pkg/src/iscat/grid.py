"""Spectral calculus on a uniform periodic grid approximating the real line.

The grid lives on [-L/2, L/2) with N (a power of two) equispaced points and
carries the unitary Fourier convention

    u_hat(xi) = (2*pi)**(-1/2) * integral( u(x) * exp(-i*x*xi) dx ),

discretized with h*sum (trapezoid, spectrally accurate for periodic decaying
data).  All other modules build on the transforms, derivatives and norms
defined here.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "SpectralFunction",
    "make_grid_function",
    "to_spectral",
    "to_physical",
    "spectral_derivative",
    "integral",
    "sobolev_norm_sq",
    "besov_smallness",
    "save_gridfunction",
    "load_gridfunction",
    "DERIVATIVE_ORDER_CAP",
]

DERIVATIVE_ORDER_CAP = 8  # documented accuracy limit for spectral_derivative


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: domain [-L/2, L/2), N points, spacing h = L/N."""

    L: float
    N: int

    def __post_init__(self) -> None:
        if not (self.L > 0):
            raise ValueError(f"grid length must be positive, got L={self.L}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got N={self.N}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        """Sample points x_j = -L/2 + j*h."""
        return -self.L / 2 + self.h * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        """Frequencies 2*pi*k/L in FFT ordering (k = 0..N/2-1, -N/2..-1)."""
        return 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)

    @property
    def nyquist_index(self) -> int:
        return self.N // 2


def _as_complex_values(grid: Grid, values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.complex128)
    if v.shape != (grid.N,):
        raise ValueError(f"values must have shape ({grid.N},), got {v.shape}")
    if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
        raise ValueError("values must be finite")
    return v


@dataclass(frozen=True)
class GridFunction:
    """Complex samples u(x_j) on a Grid; the universal carrier of data."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_complex_values(self.grid, self.values))

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.values.imag)) <= tol)


@dataclass(frozen=True)
class SpectralFunction:
    """Fourier coefficients u_hat(xi_k) on a Grid, FFT ordering."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _as_complex_values(self.grid, self.coeffs))


def make_grid_function(grid: Grid, fn) -> GridFunction:
    """Sample a callable fn(x) on the grid."""
    return GridFunction(grid, np.asarray(fn(grid.x), dtype=np.complex128))


def to_spectral(f: GridFunction) -> SpectralFunction:
    """Forward transform; coeffs approximate the line integral at grid frequencies.

    With x_j = -L/2 + j*h the discrete sum picks up the boundary phase
    exp(+i*xi*L/2) relative to the plain FFT.
    """
    g = f.grid
    phase = np.exp(1j * g.xi * (g.L / 2))
    coeffs = (2 * np.pi) ** -0.5 * g.h * phase * np.fft.fft(f.values)
    return SpectralFunction(g, coeffs)


def to_physical(sf: SpectralFunction) -> GridFunction:
    """Inverse of to_spectral (exact round-trip to machine precision)."""
    g = sf.grid
    phase = np.exp(-1j * g.xi * (g.L / 2))
    values = np.fft.ifft(sf.coeffs * phase) * (2 * np.pi) ** 0.5 / g.h
    return GridFunction(g, values)


def spectral_derivative(f: GridFunction, order: int) -> GridFunction:
    """(d/dx)**order via multiplication by (i*xi)**order in frequency.

    The Nyquist mode is zeroed for order >= 1 to avoid asymmetric aliasing.
    """
    if order < 0 or order != int(order):
        raise ValueError(f"order must be a nonnegative integer, got {order!r}")
    if order > DERIVATIVE_ORDER_CAP:
        raise ValueError(
            f"derivative order {order} exceeds the accuracy cap {DERIVATIVE_ORDER_CAP}"
        )
    if order == 0:
        return GridFunction(f.grid, f.values.copy())
    sf = to_spectral(f)
    coeffs = (1j * f.grid.xi) ** order * sf.coeffs
    coeffs[f.grid.nyquist_index] = 0.0
    return to_physical(SpectralFunction(f.grid, coeffs))


def integral(f: GridFunction) -> complex:
    """Discrete integral h * sum(u)."""
    return complex(f.grid.h * np.sum(f.values))


def sobolev_norm_sq(f: GridFunction, s: float) -> float:
    """Discrete ||f||_{H^s}^2 = integral (1+xi^2)^s |u_hat|^2 dxi; needs s > -1."""
    if not (s > -1):
        raise ValueError(f"sobolev_norm_sq supports s > -1, got s={s}")
    g = f.grid
    coeffs = to_spectral(f).coeffs
    dxi = 2 * np.pi / g.L
    return float(dxi * np.sum((1 + g.xi**2) ** s * np.abs(coeffs) ** 2))


def _block_index(xi_abs: np.ndarray) -> np.ndarray:
    """Dyadic block index: 0 for |xi| < 1, j >= 1 for 2^(j-1) <= |xi| < 2^j."""
    idx = np.zeros(xi_abs.shape, dtype=np.int64)
    nz = xi_abs >= 1
    idx[nz] = np.floor(np.log2(xi_abs[nz])).astype(np.int64) + 1
    return idx


def besov_smallness(f: GridFunction) -> float:
    """Weighted sum of dyadic-block L2 masses, a smallness diagnostic.

    Block 0 collects |xi| < 1 with weight 1; block j >= 1 collects
    2^(j-1) <= |xi| < 2^j with weight 2^(-(j-1)/2).  A function supported in
    a single band 2^m <= |xi| < 2^(m+1) scores exactly 2^(-m/2) * ||f||_L2.
    """
    g = f.grid
    coeffs = to_spectral(f).coeffs
    dxi = 2 * np.pi / g.L
    power = dxi * np.abs(coeffs) ** 2
    idx = _block_index(np.abs(g.xi))
    total = 0.0
    for j in range(int(idx.max()) + 1):
        mass = float(np.sum(power[idx == j]))
        if mass == 0.0:
            continue
        weight = 1.0 if j == 0 else 2.0 ** (-(j - 1) / 2)
        total += weight * math.sqrt(mass)
    return total


# ---------------------------------------------------------------------------
# File formats: JSON {"L","N","re","im"} and CSV with columns x,re,im.
# ---------------------------------------------------------------------------

def _f17(x: float) -> str:
    """Deterministic float formatting (17 significant digits, round-trip safe)."""
    return format(float(x), ".17g")


def save_gridfunction(f: GridFunction, path: str) -> None:
    """Write to JSON (default) or CSV (by .csv extension) with fixed formatting."""
    if path.endswith(".csv"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re", "im"])
            for x, v in zip(f.grid.x, f.values):
                w.writerow([_f17(x), _f17(v.real), _f17(v.imag)])
        return
    re = ", ".join(_f17(v) for v in f.values.real)
    im = ", ".join(_f17(v) for v in f.values.imag)
    text = (
        "{\n"
        f'  "L": {_f17(f.grid.L)},\n'
        f'  "N": {f.grid.N},\n'
        f'  "re": [{re}],\n'
        f'  "im": [{im}]\n'
        "}\n"
    )
    with open(path, "w") as fh:
        fh.write(text)


def load_gridfunction(path: str) -> GridFunction:
    """Read the JSON or CSV format written by save_gridfunction."""
    if path.endswith(".csv"):
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        header = [c.strip() for c in rows[0]]
        if header != ["x", "re", "im"]:
            raise ValueError(f"expected CSV columns x,re,im in {path}, got {header}")
        x = np.array([float(r[0]) for r in rows[1:]])
        re = np.array([float(r[1]) for r in rows[1:]])
        im = np.array([float(r[2]) for r in rows[1:]])
        n = len(x)
        h = float(x[1] - x[0])
        grid = Grid(L=h * n, N=n)
        return GridFunction(grid, re + 1j * im)
    with open(path) as fh:
        obj = json.load(fh)
    grid = Grid(L=float(obj["L"]), N=int(obj["N"]))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj["im"], dtype=float)
    return GridFunction(grid, re + 1j * im)
