"""Truncated lattice geometry and discrete calculus on Z^N.

The infinite lattice is approximated by the l1 ball B_R with zero Dirichlet
extension: a function lives on the enumerated sites of the ball and evaluates
to exactly 0 everywhere else.  Every edge from B_R to its exterior layer
contributes to gradient quantities.  Site enumeration is lexicographic so all
reductions run in a fixed, reproducible order.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

Site = tuple[int, ...]


def as_site(coords: Sequence[int]) -> Site:
    """Coerce a coordinate sequence to a Site tuple of ints."""
    return tuple(int(c) for c in coords)


@lru_cache(maxsize=None)
def _box_tables(dim: int, radius: int):
    """Site coordinates, index map, neighbor table and boundary degrees for B_radius.

    The neighbor table has one row per site and 2*dim columns (directions
    +e1, -e1, +e2, -e2, ...).  Entries for neighbors outside the ball point at
    a padding slot (index == site count) so vectorized gathers read 0 there.
    """
    coords = np.array(
        [
            x
            for x in itertools.product(range(-radius, radius + 1), repeat=dim)
            if sum(abs(c) for c in x) <= radius
        ],
        dtype=np.int64,
    )
    index = {as_site(row): i for i, row in enumerate(coords)}
    nsites = len(coords)
    nbr = np.full((nsites, 2 * dim), nsites, dtype=np.int64)
    col = 0
    for axis in range(dim):
        for sign in (1, -1):
            shifted = coords.copy()
            shifted[:, axis] += sign
            for i in range(nsites):
                nbr[i, col] = index.get(as_site(shifted[i]), nsites)
            col += 1
    out_degree = (nbr == nsites).sum(axis=1).astype(np.float64)
    coords.setflags(write=False)
    nbr.setflags(write=False)
    out_degree.setflags(write=False)
    return coords, index, nbr, out_degree


@dataclass(frozen=True)
class LatticeBox:
    """The l1 ball {x in Z^N : |x|_1 <= radius} with a fixed site enumeration."""

    dim: int
    radius: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"lattice dimension must be >= 2, got {self.dim}")
        if self.radius < 1:
            raise ValueError(f"box radius must be >= 1, got {self.radius}")

    @property
    def sites(self) -> np.ndarray:
        """(site_count, dim) int array of coordinates in lexicographic order."""
        return _box_tables(self.dim, self.radius)[0]

    @property
    def site_index(self) -> Mapping[Site, int]:
        return _box_tables(self.dim, self.radius)[1]

    @property
    def neighbor_table(self) -> np.ndarray:
        return _box_tables(self.dim, self.radius)[2]

    @property
    def boundary_degree(self) -> np.ndarray:
        """Per site, the number of its 2N lattice edges that leave the box."""
        return _box_tables(self.dim, self.radius)[3]

    @property
    def site_count(self) -> int:
        return len(self.sites)

    def contains(self, x: Sequence[int]) -> bool:
        return as_site(x) in self.site_index

    def index_of(self, x: Sequence[int]) -> int:
        return self.site_index[as_site(x)]

    def site_list(self) -> list[Site]:
        return [as_site(row) for row in self.sites]


@dataclass(frozen=True)
class LatticeFunction:
    """Real values on a LatticeBox, identically 0 outside it (Dirichlet extension)."""

    box: LatticeBox
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).copy()
        if vals.shape != (self.box.site_count,):
            raise ValueError(
                f"expected {self.box.site_count} values for {self.box}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("lattice function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, box: LatticeBox) -> "LatticeFunction":
        return cls(box, np.zeros(box.site_count))

    @classmethod
    def from_pairs(cls, box: LatticeBox, pairs: Mapping[Site, float]) -> "LatticeFunction":
        """Build from a {site: value} table; sites must lie in the box."""
        vals = np.zeros(box.site_count)
        for site, value in pairs.items():
            vals[box.index_of(site)] = value
        return cls(box, vals)

    def value_at(self, x: Sequence[int]) -> float:
        site = as_site(x)
        if len(site) != self.box.dim:
            raise ValueError(f"site dimension {len(site)} != box dimension {self.box.dim}")
        i = self.box.site_index.get(site)
        return 0.0 if i is None else float(self.values[i])

    def sample(self, coords: np.ndarray) -> np.ndarray:
        """Evaluate at an (m, dim) coordinate array, honoring the zero extension."""
        index = self.box.site_index
        out = np.zeros(len(coords))
        for k, row in enumerate(coords):
            i = index.get(as_site(row))
            if i is not None:
                out[k] = self.values[i]
        return out

    def support(self) -> list[Site]:
        return [as_site(self.box.sites[i]) for i in np.flatnonzero(self.values)]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def _check_same_box(self, other: "LatticeFunction") -> None:
        if self.box != other.box:
            raise ValueError(f"box mismatch: {self.box} vs {other.box}")

    def __add__(self, other: "LatticeFunction") -> "LatticeFunction":
        self._check_same_box(other)
        return LatticeFunction(self.box, self.values + other.values)

    def __sub__(self, other: "LatticeFunction") -> "LatticeFunction":
        self._check_same_box(other)
        return LatticeFunction(self.box, self.values - other.values)

    def __mul__(self, scalar: float) -> "LatticeFunction":
        return LatticeFunction(self.box, self.values * float(scalar))

    __rmul__ = __mul__


def delta(box: LatticeBox, site: Sequence[int] = None, height: float = 1.0) -> LatticeFunction:
    """A single spike of the given height (default: at the origin)."""
    if site is None:
        site = (0,) * box.dim
    return LatticeFunction.from_pairs(box, {as_site(site): height})


def embed(u: LatticeFunction, box: LatticeBox) -> LatticeFunction:
    """Re-sample u on another box of the same dimension (zero extension applies)."""
    if box.dim != u.box.dim:
        raise ValueError(f"dimension mismatch: {u.box.dim} vs {box.dim}")
    if box == u.box:
        return u
    return LatticeFunction(box, u.sample(box.sites))


def place(u: LatticeFunction, center: Sequence[int], box: LatticeBox) -> LatticeFunction:
    """u shifted so its origin sits at ``center``, sampled on ``box``.

    place(u, y, box)(x) = u(x - y); the companion of translate for building
    superpositions on larger boxes.
    """
    center = as_site(center)
    if len(center) != u.box.dim or box.dim != u.box.dim:
        raise ValueError("dimension mismatch in place()")
    return LatticeFunction(box, u.sample(box.sites - np.asarray(center, dtype=np.int64)))


# ---------------------------------------------------------------------------
# Discrete calculus
# ---------------------------------------------------------------------------


def neighbors(box: LatticeBox, x: Sequence[int]) -> list[Site]:
    """The 2N sites at l1 distance 1 from x, including ones outside the box."""
    site = as_site(x)
    if len(site) != box.dim:
        raise ValueError(f"site dimension {len(site)} != box dimension {box.dim}")
    out = []
    for axis in range(box.dim):
        for sign in (1, -1):
            y = list(site)
            y[axis] += sign
            out.append(tuple(y))
    return out


def graph_distance(x: Sequence[int], y: Sequence[int]) -> int:
    """Graph distance on Z^N, i.e. the l1 distance."""
    a, b = as_site(x), as_site(y)
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum(abs(p - q) for p, q in zip(a, b))


def translate(u: LatticeFunction, shift: Sequence[int]) -> LatticeFunction:
    """translate(u, s)(x) = u(x + s), on the same box.

    Values carried past the box boundary are dropped and sites shifted in from
    outside receive 0, so every l^p norm can only decrease or stay equal.
    """
    s = as_site(shift)
    if len(s) != u.box.dim:
        raise ValueError(f"shift dimension {len(s)} != box dimension {u.box.dim}")
    if all(c == 0 for c in s):
        return u
    return LatticeFunction(u.box, u.sample(u.box.sites + np.asarray(s, dtype=np.int64)))


def lp_norm(u: LatticeFunction, p: float) -> float:
    """Counting-measure l^p norm over all of Z^N (p = inf gives the sup)."""
    if p != np.inf and p < 1:
        raise ValueError(f"lp_norm requires p >= 1 or p = inf, got {p}")
    if p == np.inf:
        return u.sup_norm()
    return float(np.sum(np.abs(u.values) ** p) ** (1.0 / p))


def _padded(u: LatticeFunction) -> np.ndarray:
    return np.append(u.values, 0.0)


def gradient_form(u: LatticeFunction, v: LatticeFunction, x: Sequence[int]) -> float:
    """The gradient form (1/2) sum_{y~x} (u(y)-u(x))(v(y)-v(x)) at a single site."""
    u._check_same_box(v)
    ux, vx = u.value_at(x), v.value_at(x)
    total = 0.0
    for y in neighbors(u.box, x):
        total += (u.value_at(y) - ux) * (v.value_at(y) - vx)
    return 0.5 * total


def gradient_norm_sq(u: LatticeFunction) -> float:
    """sum_x Gamma(u)(x) over Z^N: each undirected edge meeting the box counts once."""
    vals = u.values
    padded = _padded(u)
    diffs = padded[u.box.neighbor_table] - vals[:, None]
    directed = float(np.sum(diffs * diffs))
    boundary = float(np.sum(u.box.boundary_degree * vals * vals))
    # directed double-counts interior edges and counts boundary edges once
    return 0.5 * (directed + boundary)


def laplacian(u: LatticeFunction) -> LatticeFunction:
    """(Delta u)(x) = sum_{y~x} (u(y) - u(x)) on box sites, with zero extension."""
    padded = _padded(u)
    nbr_sum = padded[u.box.neighbor_table].sum(axis=1)
    return LatticeFunction(u.box, nbr_sum - 2 * u.box.dim * u.values)


def epq_norm(u: LatticeFunction, p: float, q: float, a=None, b=None) -> float:
    """The energy-space norm |grad u|_2 + |u|_p + |u|_q, optionally weighted.

    With coefficient fields a and b the p and q terms become |a^(1/p) u|_p and
    |b^(1/q) u|_q.  Requires 1 <= p <= q < inf.
    """
    if p < 1 or q < p or not np.isfinite(q):
        raise ValueError(f"epq_norm requires 1 <= p <= q < inf, got p={p}, q={q}")
    grad = gradient_norm_sq(u) ** 0.5
    abs_u = np.abs(u.values)
    wa = 1.0 if a is None else a.values_on(u.box)
    wb = 1.0 if b is None else b.values_on(u.box)
    term_p = float(np.sum(wa * abs_u**p) ** (1.0 / p))
    term_q = float(np.sum(wb * abs_u**q) ** (1.0 / q))
    return grad + term_p + term_q


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------


def write_function_csv(u: LatticeFunction, path) -> None:
    """Write one row per nonzero site, lexicographic order, header x1,...,xN,value."""
    header = [f"x{i+1}" for i in range(u.box.dim)] + ["value"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in np.flatnonzero(u.values):
            writer.writerow([*map(int, u.box.sites[i]), repr(float(u.values[i]))])


def read_function_csv(path, radius: int) -> LatticeFunction:
    """Read a function written by write_function_csv onto B_radius."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[-1] != "value":
            raise ValueError(f"malformed lattice CSV header in {path}: {header}")
        dim = len(header) - 1
        box = LatticeBox(dim, radius)
        pairs: dict[Site, float] = {}
        for row in reader:
            if not row:
                continue
            site = as_site(row[:-1])
            if not box.contains(site):
                raise ValueError(f"site {site} outside B_{radius} in {path}")
            pairs[site] = float(row[-1])
    return LatticeFunction.from_pairs(box, pairs)
