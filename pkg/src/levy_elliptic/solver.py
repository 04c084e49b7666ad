"""Mild-solution machinery for the spectral fractional Dirichlet problem.

The operator acts diagonally on the Dirichlet eigenbasis, multiplying the
k-th coefficient by lambda_k^gamma, so its Green kernel is the series
G(x, y) = sum_k e_k(x) e_k(y) / lambda_k^gamma and a mild solution driven
by a noise realization has coefficients

    a_k = <noise, e_k> / lambda_k^gamma.

Everything here is a truncated series; each evaluation can be accompanied
by a counting-law tail estimate so callers can size the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import EigenSystem, HyperBox, constant_fourier, eigen_matrix
from .functions import SpectralFunction, fourier_vector
from .integrability import existence_verdict
from .noise import NoiseRealization, pair_eigen


class RegimeRefusalError(RuntimeError):
    """Raised when solving is requested outside the existence regime."""


@dataclass
class SpectralField:
    """A function represented by coefficients against an eigen listing."""

    system: EigenSystem
    gamma: float
    coeffs: np.ndarray
    provenance: str = "manual"

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if len(self.coeffs) != len(self.system):
            raise ValueError("coefficient length must match the system")

    def as_function(self) -> SpectralFunction:
        return SpectralFunction(self.system, self.coeffs)


@dataclass(frozen=True)
class GreenValue:
    """Truncated Green-kernel value with a spectral-tail error estimate."""

    value: float
    tail_bound: float


@dataclass(frozen=True)
class SobolevNorm:
    """Squared Sobolev norm partial sum and its last dyadic-block increment."""

    value: float
    last_block_increment: float


def series_tail_bound(box: HyperBox, gamma: float, lambda_max: float) -> float:
    """Estimate of sum_{lambda_k > lambda_max} lambda_k^(-gamma).

    Uses the leading counting asymptotics N(t) ~ C_d |D| t^(d/2); infinite
    when gamma <= d/2, where the full series itself diverges.
    """
    d = box.dim
    if gamma <= d / 2.0:
        return math.inf
    c_d = (4.0 * math.pi) ** (-d / 2.0) / math.gamma(d / 2.0 + 1.0)
    return (
        c_d * box.volume * (d / 2.0) * lambda_max ** (d / 2.0 - gamma) / (gamma - d / 2.0)
    )


def green_gamma_eval(system: EigenSystem, gamma: float, x, y) -> GreenValue:
    """Truncated Green kernel at (x, y) with a sup-norm tail bound.

    Diagonal evaluation is permitted; when the untruncated kernel is
    singular there (gamma <= d/2) the value is truncation-dependent and the
    tail bound is infinite.
    """
    box = system.box
    ex = eigen_matrix(system, np.atleast_2d(np.asarray(x, dtype=float)))[:, 0]
    ey = eigen_matrix(system, np.atleast_2d(np.asarray(y, dtype=float)))[:, 0]
    value = float(np.sum(ex * ey * system.lams ** (-gamma)))
    sup_sq = 2.0**box.dim / box.volume  # |e_k(x) e_k(y)| <= prod 2/L_i
    tail = sup_sq * series_tail_bound(box, gamma, float(system.lams[-1]))
    return GreenValue(value, tail)


def green_gamma_grid(system: EigenSystem, gamma: float, xs, ys) -> np.ndarray:
    """Truncated Green kernel on a product grid of points; shape (len(xs), len(ys))."""
    ex = eigen_matrix(system, np.atleast_2d(np.asarray(xs, dtype=float)))
    ey = eigen_matrix(system, np.atleast_2d(np.asarray(ys, dtype=float)))
    return (ex * system.lams[:, None] ** (-gamma)).T @ ey


def solve_mild(
    realization: NoiseRealization,
    gamma: float,
    system: EigenSystem,
    override: bool = False,
) -> SpectralField:
    """Mild solution of the noise-driven problem as a spectral field.

    Refuses regimes where no mild solution exists unless ``override`` is
    set (divergence sweeps set it deliberately).
    """
    verdict = existence_verdict(system.box.dim, gamma, realization.triplet)
    if not verdict.exists and not override:
        raise RegimeRefusalError(
            f"no mild solution for d={system.box.dim}, gamma={gamma}; "
            "pass override=True for divergence experiments"
        )
    coeffs = pair_eigen(realization, system) / system.lams**gamma
    return SpectralField(
        system,
        gamma,
        coeffs,
        provenance=f"solved-from-noise(seed={realization.master_seed})",
    )


def eval_field(field: SpectralField, points) -> np.ndarray:
    """Evaluate the truncated expansion at arbitrary points.

    Exactly zero at boundary points (Dirichlet), enforced by masking.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(pts))
    chunk = max(1, int(2_000_000 / max(len(field.system), 1)))
    for start in range(0, len(pts), chunk):
        block = pts[start : start + chunk]
        out[start : start + len(block)] = field.coeffs @ eigen_matrix(field.system, block)
    return out


def eval_field_grid(field: SpectralField, axes: list[np.ndarray]) -> np.ndarray:
    """Evaluate on a tensor grid given per-axis coordinate arrays.

    Uses per-axis sine tables and tensor contractions, which keeps the cost
    at O(K * sum m_i) instead of O(K * prod m_i).
    """
    box = field.system.box
    if len(axes) != box.dim:
        raise ValueError("one coordinate array per axis required")
    idx = field.system.indices
    kmax = idx.max(axis=0)
    dense = np.zeros(tuple(int(k) for k in kmax))
    dense[tuple(idx[:, j] - 1 for j in range(box.dim))] = field.coeffs

    tensor = dense
    for j in range(box.dim):
        a, b = box.intervals[j]
        L = box.lengths[j]
        xs = np.asarray(axes[j], dtype=float)
        if np.any(xs < a) or np.any(xs > b):
            raise ValueError("grid coordinate outside the closed box")
        table = math.sqrt(2.0 / L) * np.sin(
            np.pi * np.outer(np.arange(1, kmax[j] + 1), (xs - a) / L)
        )
        table[:, (xs == a) | (xs == b)] = 0.0
        tensor = np.tensordot(tensor, table, axes=([0], [0]))
    return tensor


def sobolev_norm(field: SpectralField, r: float) -> SobolevNorm:
    """Partial sum of the squared order-r Sobolev norm over the cutoff.

    value = sum_k lambda_k^r a_k^2; the increment over the last doubling of
    the listing is reported alongside for divergence diagnostics.
    """
    terms = field.system.lams**r * field.coeffs**2
    total = float(np.sum(terms))
    half = len(terms) // 2
    return SobolevNorm(total, total - float(np.sum(terms[:half])))


def torsion_solution(system: EigenSystem) -> SpectralField:
    """Solution of the unit-source Dirichlet problem (-Laplace v = 1).

    Spectral coefficients <1, e_k> / lambda_k; on an interval (a, b) the
    exact solution is (x - a)(b - x)/2, which makes this a convenient
    closed-form oracle target.
    """
    coeffs = constant_fourier(system) / system.lams
    return SpectralField(system, 1.0, coeffs, provenance="torsion")


def green_convolve(system: EigenSystem, gamma: float, phi) -> SpectralFunction:
    """The kernel smoothing G * phi as an explicit eigen-expansion.

    Coefficients <phi, e_k> / lambda_k^gamma; evaluable like any spectral
    function and pairable with a noise realization.
    """
    coeffs = fourier_vector(system, phi) / system.lams**gamma
    return SpectralFunction(system, coeffs)


def dump_coeffs_csv(field: SpectralField, path) -> None:
    """Coefficient dump: (ordinal, k_1..k_d, lambda, a_k) rows."""
    d = field.system.box.dim
    header = "ordinal," + ",".join(f"k_{i+1}" for i in range(d)) + ",lambda,a_k"
    lines = [header]
    for i, (row, lam, a) in enumerate(
        zip(field.system.indices, field.system.lams, field.coeffs)
    ):
        ks = ",".join(str(int(c)) for c in row)
        lines.append(f"{i},{ks},{format(lam, '.17g')},{format(a, '.17g')}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def dump_field_grid_csv(field: SpectralField, axes: list[np.ndarray], path) -> None:
    """Field dump on a tensor grid: (x_1..x_d, value) rows."""
    values = eval_field_grid(field, axes)
    d = field.system.box.dim
    header = ",".join(f"x_{i+1}" for i in range(d)) + ",value"
    lines = [header]
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    flat = values.ravel()
    for pt, v in zip(coords, flat):
        cs = ",".join(format(c, ".17g") for c in pt)
        lines.append(f"{cs},{format(v, '.17g')}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
