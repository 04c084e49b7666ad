"""Dirichlet eigenbasis of the Laplacian on hyperrectangles.

On a box D = prod (a_i, b_i) with side lengths L_i the eigenpairs are
explicit: for a multi-index k with integer components >= 1,

    lambda_k = sum_i (pi k_i / L_i)^2,
    e_k(x)   = prod_i sqrt(2 / L_i) sin(pi k_i (x_i - a_i) / L_i),

and {e_k} is an orthonormal basis of L^2(D).  Enumeration is exact lattice
enumeration below a threshold, sorted by eigenvalue with lexicographic
tie-breaking on the index so orderings are reproducible across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when adaptive quadrature stalls above its tolerance."""


@dataclass(frozen=True)
class HyperBox:
    """Axis-aligned box given as a tuple of (lower, upper) interval pairs."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        if len(ivs) < 1:
            raise ValueError("box needs at least one interval")
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ValueError(f"degenerate interval ({a}, {b})")

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def lower(self) -> np.ndarray:
        return np.array([a for a, _ in self.intervals])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b for _, b in self.intervals])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.intervals])

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @classmethod
    def unit(cls, dim: int) -> "HyperBox":
        return cls(tuple((0.0, 1.0) for _ in range(dim)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of points lying in the closed box; shape (m, d) input."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lower) & (pts <= self.upper), axis=1)


@dataclass
class EigenSystem:
    """A sorted finite slice of the Dirichlet spectrum on a box.

    ``indices`` has shape (K, d), ``lams`` shape (K,), ascending, with ties
    broken lexicographically.  The listing is complete: every index with
    eigenvalue <= max(lams) that the cutoff admits is present.
    """

    box: HyperBox
    indices: np.ndarray
    lams: np.ndarray
    cutoff: tuple[str, float]
    _positions: dict | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.lams)

    def position(self, index) -> int | None:
        """Ordinal of a multi-index in the listing, or None if absent."""
        if self._positions is None:
            self._positions = {
                tuple(int(c) for c in row): i for i, row in enumerate(self.indices)
            }
        return self._positions.get(tuple(int(c) for c in np.atleast_1d(index)))

    def prefix(self, count: int) -> "EigenSystem":
        """First ``count`` entries as a new system (shares the arrays)."""
        if not 1 <= count <= len(self):
            raise ValueError(f"count must lie in [1, {len(self)}]")
        return EigenSystem(self.box, self.indices[:count], self.lams[:count], ("count", count))

    def to_csv(self, path) -> None:
        """Dump (ordinal, k_1..k_d, lambda) rows for debugging."""
        d = self.box.dim
        header = "ordinal," + ",".join(f"k_{i+1}" for i in range(d)) + ",lambda"
        lines = [header]
        for i, (row, lam) in enumerate(zip(self.indices, self.lams)):
            ks = ",".join(str(int(c)) for c in row)
            lines.append(f"{i},{ks},{format(lam, '.17g')}")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")


def _lattice_below(lengths: np.ndarray, lam_max: float) -> np.ndarray:
    """All multi-indices (>= 1 each axis) with eigenvalue <= lam_max.

    Enumerates with a small relative slack and filters on the canonical
    eigenvalue formula afterwards, so threshold comparisons are exact in
    the same floating-point sense callers use.
    """
    slack = lam_max * (1.0 + 1e-12)
    d = len(lengths)
    if lam_max <= 0.0:
        return np.empty((0, d), dtype=np.int64)
    if d == 1:
        bound = int(math.floor(lengths[0] * math.sqrt(slack) / math.pi)) + 1
        k = np.arange(1, bound + 1, dtype=np.int64)[:, None]
        ok = (math.pi * k[:, 0] / lengths[0]) ** 2 <= slack
        return k[ok]
    bound = int(math.floor(lengths[0] * math.sqrt(slack) / math.pi)) + 1
    blocks = []
    for k1 in range(1, bound + 1):
        head = (math.pi * k1 / lengths[0]) ** 2
        if head > slack:
            break
        rest = _lattice_below(lengths[1:], slack - head)
        if rest.size == 0:
            continue
        col = np.full((len(rest), 1), k1, dtype=np.int64)
        blocks.append(np.hstack([col, rest]))
    if not blocks:
        return np.empty((0, d), dtype=np.int64)
    return np.vstack(blocks)


def eigenvalues_of(box: HyperBox, indices: np.ndarray) -> np.ndarray:
    """Canonical eigenvalue formula, accumulated axis by axis."""
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    lengths = box.lengths
    lam = np.zeros(len(idx))
    for j in range(box.dim):
        lam += (math.pi * idx[:, j] / lengths[j]) ** 2
    return lam


def _sorted_entries(box: HyperBox, lam_max: float):
    idx = _lattice_below(box.lengths, lam_max)
    if idx.size == 0:
        return idx, np.empty(0)
    lam = eigenvalues_of(box, idx)
    keep = lam <= lam_max
    idx, lam = idx[keep], lam[keep]
    order = np.lexsort(tuple(idx[:, j] for j in reversed(range(box.dim))) + (lam,))
    return idx[order], lam[order]


def enumerate_eigen(
    box: HyperBox, count: int | None = None, lambda_max: float | None = None
) -> EigenSystem:
    """Complete sorted eigen listing below a count or eigenvalue threshold.

    Count mode returns exactly ``count`` entries; ties at the last admitted
    eigenvalue are resolved by the lexicographic order, not widened.
    """
    if (count is None) == (lambda_max is None):
        raise ValueError("specify exactly one of count, lambda_max")
    if count is not None:
        if count < 1:
            raise ValueError(f"count must be >= 1, got {count}")
        d, vol = box.dim, box.volume
        lam1 = float(eigenvalues_of(box, np.ones((1, d), dtype=np.int64))[0])
        # Weyl-law guess for the K-th eigenvalue, then grow until covered.
        guess = lam1 + 4.0 * math.pi * (
            (count + 1) * math.gamma(d / 2.0 + 1.0) / vol
        ) ** (2.0 / d)
        while True:
            idx, lam = _sorted_entries(box, guess)
            if len(lam) >= count:
                return EigenSystem(box, idx[:count].copy(), lam[:count].copy(), ("count", count))
            guess *= 1.7
    if lambda_max is None or lambda_max <= 0.0:
        raise ValueError("lambda_max must be positive")
    idx, lam = _sorted_entries(box, float(lambda_max))
    if len(lam) == 0:
        raise ValueError(
            f"threshold {lambda_max} lies below the first eigenvalue; empty system"
        )
    return EigenSystem(box, idx, lam, ("threshold", float(lambda_max)))


def weyl_count(box: HyperBox, t: float) -> int:
    """N(t): number of eigenvalues <= t, by exact lattice enumeration."""
    if t <= 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    idx = _lattice_below(box.lengths, t)
    if idx.size == 0:
        return 0
    return int(np.count_nonzero(eigenvalues_of(box, idx) <= t))


def _boundary_mask(box: HyperBox, pts: np.ndarray) -> np.ndarray:
    return np.any((pts == box.lower) | (pts == box.upper), axis=1)


def eigen_matrix(system: EigenSystem, points: np.ndarray) -> np.ndarray:
    """Matrix E[j, i] = e_{k_j}(x_i) for the system's indices at given points.

    Points on the boundary evaluate to exactly zero (Dirichlet), bypassing
    the sine roundoff at the endpoints.
    """
    box = system.box
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != box.dim:
        raise ValueError(f"points have dim {pts.shape[1]}, box has {box.dim}")
    if not np.all(box.contains(pts)):
        raise ValueError("point outside the closed box")
    lengths, lower = box.lengths, box.lower
    out = np.ones((len(system), pts.shape[0]))
    for j in range(box.dim):
        phase = np.pi * np.outer(system.indices[:, j], (pts[:, j] - lower[j]) / lengths[j])
        out *= math.sqrt(2.0 / lengths[j]) * np.sin(phase)
    out[:, _boundary_mask(box, pts)] = 0.0
    return out


def eigenfunction_eval(box: HyperBox, index, x) -> float:
    """Value of one eigenfunction at one point; exactly 0 on the boundary."""
    idx = np.atleast_1d(np.asarray(index, dtype=np.int64))
    if idx.ndim != 1 or len(idx) != box.dim or np.any(idx < 1):
        raise ValueError(f"index {index} invalid for a dim-{box.dim} box")
    system = EigenSystem(box, idx[None, :], eigenvalues_of(box, idx[None, :]), ("count", 1))
    return float(eigen_matrix(system, np.atleast_2d(np.asarray(x, dtype=float)))[0, 0])


def constant_fourier(system: EigenSystem) -> np.ndarray:
    """Coefficients <1, e_k> for every index of the system (closed form).

    Per axis: int_a^b sqrt(2/L) sin(pi k (x-a)/L) dx = sqrt(2 L) (1-(-1)^k)/(pi k).
    """
    lengths = system.box.lengths
    out = np.ones(len(system))
    for j in range(system.box.dim):
        k = system.indices[:, j].astype(float)
        parity = 1.0 - np.where(system.indices[:, j] % 2 == 0, 1.0, -1.0)
        out *= math.sqrt(2.0 * lengths[j]) * parity / (math.pi * k)
    return out


@lru_cache(maxsize=64)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_nodes(box: HyperBox, n_per_axis: int):
    """Tensor Gauss-Legendre nodes and weights on the box; ((n^d, d), (n^d,))."""
    axes, wts = [], []
    for a, b in box.intervals:
        x, w = _leggauss(int(n_per_axis))
        axes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        wts.append(0.5 * (b - a) * w)
    if box.dim == 1:
        return axes[0][:, None], wts[0]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    weight = wts[0]
    for w in wts[1:]:
        weight = np.outer(weight, w).ravel()
    return pts, weight


def adaptive_tensor_quad(
    evaluate,
    box: HyperBox,
    tol: float = 1e-10,
    n0: int = 32,
    n_max: int = 4096,
) -> float:
    """Integrate evaluate(points) over the box, doubling nodes until stable.

    Raises QuadratureError when doubling stalls above the tolerance before
    reaching ``n_max`` nodes per axis.
    """
    n = int(n0)
    pts, w = gauss_nodes(box, n)
    prev = float(np.dot(w, evaluate(pts)))
    while n < n_max:
        n *= 2
        pts, w = gauss_nodes(box, n)
        cur = float(np.dot(w, evaluate(pts)))
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(
        f"quadrature did not converge to {tol} within {n_max} nodes per axis"
    )


def box_integral(evaluate, box: HyperBox, tol: float = 1e-8) -> float:
    """Integrate over the box with a node budget that respects the dimension.

    Adaptive refinement in d <= 2 (where tolerance claims apply); a fixed
    tensor rule above that, where the node count would otherwise explode.
    """
    if box.dim == 1:
        return adaptive_tensor_quad(evaluate, box, tol=tol, n0=32, n_max=4096)
    if box.dim == 2:
        return adaptive_tensor_quad(evaluate, box, tol=tol, n0=32, n_max=1024)
    n = {3: 32, 4: 12, 5: 8}.get(box.dim, 6)
    pts, w = gauss_nodes(box, n)
    return float(np.dot(w, evaluate(pts)))
