"""Coefficient functions a(x), b(x) with a declared positive limit at infinity.

Two kinds are supported: a strictly positive constant, and a constant limit
plus a finite perturbation table (so the limit behavior holds by construction
and is machine-checkable).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .lattice import LatticeBox, Site, as_site

CONSTANT = "constant"
RADIAL_LIMIT = "radial_limit"


@dataclass(frozen=True)
class CoefficientField:
    """A nonnegative coefficient on Z^N equal to ``limit`` outside a finite table."""

    kind: str
    limit: float
    profile: Mapping[Site, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in (CONSTANT, RADIAL_LIMIT):
            raise ValueError(f"unknown coefficient kind {self.kind!r}")
        if self.limit <= 0:
            raise ValueError(f"coefficient limit must be positive, got {self.limit}")
        if self.kind == CONSTANT and self.profile:
            raise ValueError("constant coefficient cannot carry a profile")
        prof = {as_site(s): float(d) for s, d in self.profile.items()}
        for s, d in prof.items():
            if self.limit + d < 0:
                raise ValueError(f"coefficient value {self.limit + d} < 0 at {s}")
        object.__setattr__(self, "profile", prof)

    @classmethod
    def constant(cls, value: float) -> "CoefficientField":
        return cls(CONSTANT, value)

    @classmethod
    def radial_limit(cls, limit: float, profile: Mapping[Site, float]) -> "CoefficientField":
        return cls(RADIAL_LIMIT, limit, profile)

    @property
    def is_constant(self) -> bool:
        return self.kind == CONSTANT or not self.profile

    def eval(self, x: Sequence[int]) -> float:
        """Field value at a site: the limit plus the table entry, if any."""
        if self.kind == CONSTANT:
            return self.limit
        return self.limit + self.profile.get(as_site(x), 0.0)

    def values_on(self, box: LatticeBox) -> np.ndarray:
        """Values at every box site, in site-enumeration order."""
        vals = np.full(box.site_count, self.limit)
        for site, dev in self.profile.items():
            i = box.site_index.get(site)
            if i is not None:
                vals[i] += dev
        return vals

    def tail_deviation(self, radius: int) -> float:
        """sup over |x|_1 > radius of |value - limit|; certifies the R_eps tail bound."""
        if radius < 1:
            raise ValueError(f"tail_deviation requires radius >= 1, got {radius}")
        if self.kind == CONSTANT:
            return 0.0
        return max(
            (abs(dev) for site, dev in self.profile.items() if sum(map(abs, site)) > radius),
            default=0.0,
        )

    def to_spec(self) -> dict:
        if self.kind == CONSTANT:
            return {"kind": CONSTANT, "value": self.limit}
        return {
            "kind": RADIAL_LIMIT,
            "limit": self.limit,
            "profile": [
                {"site": list(site), "delta": dev}
                for site, dev in sorted(self.profile.items())
            ],
        }


def field_from_spec(spec: dict) -> CoefficientField:
    """Parse {"kind":"constant","value":c} or {"kind":"radial_limit","limit":c,"profile":[...]}."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError(f"coefficient spec must be a dict with a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind == CONSTANT:
        unknown = set(spec) - {"kind", "value"}
        if unknown:
            raise ValueError(f"unknown keys in constant coefficient spec: {sorted(unknown)}")
        return CoefficientField.constant(float(spec["value"]))
    if kind == RADIAL_LIMIT:
        unknown = set(spec) - {"kind", "limit", "profile"}
        if unknown:
            raise ValueError(f"unknown keys in radial_limit coefficient spec: {sorted(unknown)}")
        profile = {}
        for entry in spec.get("profile", []):
            unknown = set(entry) - {"site", "delta"}
            if unknown:
                raise ValueError(f"unknown keys in profile entry: {sorted(unknown)}")
            profile[as_site(entry["site"])] = float(entry["delta"])
        return CoefficientField.radial_limit(float(spec["limit"]), profile)
    raise ValueError(f"unknown coefficient kind {kind!r}")
