"""Bubble decomposition of function sequences on growing boxes.

Implements the constructive side of the concentration-compactness dichotomy:
a sequence either vanishes in sup norm or carries a translating profile
("bubble") that can be recentered, extracted as a pointwise limit on a fixed
window, and subtracted.  Extraction repeats until the remainder drops below a
vanishing threshold, and an energy ledger accounts for the level as the energy
of the localized limit plus the constant-coefficient energies of the bubbles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .functionals import ProblemParams, phi, phi_bar, residual_norm
from .lattice import (
    LatticeBox,
    LatticeFunction,
    Site,
    as_site,
    lp_norm,
    place,
    read_function_csv,
    write_function_csv,
)

STABILIZATION_TOL = 1e-9


@dataclass(frozen=True)
class FunctionSequence:
    """An ordered, finite stand-in for a function sequence; boxes may grow with n."""

    terms: tuple[LatticeFunction, ...]
    level: float | None = None

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a function sequence needs at least one term")
        dims = {t.box.dim for t in self.terms}
        if len(dims) != 1:
            raise ValueError(f"sequence terms must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "terms", tuple(self.terms))

    @property
    def dim(self) -> int:
        return self.terms[0].box.dim

    @property
    def min_radius(self) -> int:
        return min(t.box.radius for t in self.terms)

    def __len__(self) -> int:
        return len(self.terms)


@dataclass
class Decomposition:
    """Localized limit, bubbles, center tracks and the energy ledger."""

    u0: LatticeFunction
    bubbles: list[LatticeFunction]
    center_tracks: list[list[Site]]
    u0_energy: float
    bubble_energies: list[float]
    bubble_masses: list[float]
    bubble_heights: list[float]
    bubble_residuals: list[float]
    remainder_sup: float
    sigma: float
    unstable_sites: list[Site] = field(default_factory=list)
    quantization_stop: bool = False

    @property
    def k(self) -> int:
        return len(self.bubbles)


class BubbleBudgetError(RuntimeError):
    """Raised when extraction would exceed max_bubbles; carries the partial result."""

    def __init__(self, message: str, partial: Decomposition):
        super().__init__(message)
        self.partial = partial


def _check_diverging(tracks: list[list[Site]]) -> None:
    for i, track in enumerate(tracks):
        norms = [sum(map(abs, y)) for y in track]
        if any(b <= a for a, b in zip(norms, norms[1:])):
            raise ValueError(f"center track {i} is not strictly diverging: {track}")
    for i in range(len(tracks)):
        for j in range(i + 1, len(tracks)):
            seps = [
                sum(abs(p - q) for p, q in zip(a, b))
                for a, b in zip(tracks[i], tracks[j])
            ]
            if any(b <= a for a, b in zip(seps, seps[1:])):
                raise ValueError(
                    f"separation of tracks {i} and {j} is not strictly increasing: {seps}"
                )


def synthesize_sequence(
    u0: LatticeFunction,
    bubbles: list[LatticeFunction],
    center_tracks: list[list[Site]],
    boxes: list[LatticeBox],
    level: float | None = None,
) -> FunctionSequence:
    """u_n = u0 + sum_i bubble_i placed at y_n^i, on the n-th box.

    The tracks must diverge strictly (in norm and pairwise separation), so the
    defect of the synthesized decomposition is identically zero by construction.
    """
    if len(bubbles) != len(center_tracks):
        raise ValueError("need one center track per bubble")
    for track in center_tracks:
        if len(track) != len(boxes):
            raise ValueError("each center track needs one site per sequence term")
    if bubbles:
        _check_diverging([[as_site(y) for y in track] for track in center_tracks])
    terms = []
    for n, box in enumerate(boxes):
        term = place(u0, (0,) * box.dim, box)
        for bubble, track in zip(bubbles, center_tracks):
            term = term + place(bubble, track[n], box)
        terms.append(term)
    return FunctionSequence(tuple(terms), level=level)


def pointwise_limit(
    seq: FunctionSequence, window: int, stab_tol: float = STABILIZATION_TOL
) -> tuple[LatticeFunction, list[Site]]:
    """Finite surrogate of the pointwise limit on B_window.

    Returns the final term restricted to the window plus the list of sites
    where the last two terms still differ by more than ``stab_tol`` (empty for
    a single-term sequence): stabilization is documented, never assumed.
    """
    if window > seq.min_radius:
        raise ValueError(
            f"window {window} exceeds the smallest box radius {seq.min_radius}"
        )
    wbox = LatticeBox(seq.dim, window)
    last = seq.terms[-1].sample(wbox.sites)
    unstable: list[Site] = []
    if len(seq.terms) >= 2:
        prev = seq.terms[-2].sample(wbox.sites)
        for i in np.flatnonzero(np.abs(last - prev) > stab_tol):
            unstable.append(as_site(wbox.sites[i]))
    return LatticeFunction(wbox, last), unstable


def _lex_argmax(u: LatticeFunction) -> Site:
    """Site of the largest |value|; ties break lexicographically smallest."""
    return as_site(u.box.sites[int(np.argmax(np.abs(u.values)))])


def extract_bubbles(
    seq: FunctionSequence,
    params: ProblemParams,
    sigma: float | None = None,
    window: int | None = None,
    max_bubbles: int = 8,
    energy_floor: float | None = None,
) -> Decomposition:
    """Run the vanishing / non-vanishing dichotomy on the sequence tail.

    Subtract the pointwise limit, then repeatedly: if the remainder sup norm is
    below ``sigma`` stop (vanishing); otherwise recenter at the remainder's max
    site, take the pointwise limit on the window as the next bubble, record the
    per-term centers, and subtract.  ``sigma`` defaults to a thousandth of the
    final term's sup norm.  If ``energy_floor`` is given, a candidate bubble
    whose constant-coefficient energy falls below the floor stops extraction
    (the finite mirror of energy quantization) and is flagged, not extracted.
    """
    if window is None:
        window = seq.min_radius
    if sigma is None:
        sigma = lp_norm(seq.terms[-1], np.inf) / 1e3
    if sigma <= 0:
        raise ValueError(f"vanishing threshold sigma must be positive, got {sigma}")

    u0, unstable = pointwise_limit(seq, window)
    residuals = [term - place(u0, (0,) * seq.dim, term.box) for term in seq.terms]
    wbox = LatticeBox(seq.dim, window)

    bubbles: list[LatticeFunction] = []
    tracks: list[list[Site]] = []
    quantization_stop = False

    def build(remainder_sup: float) -> Decomposition:
        limit_params = params.at_limits()
        return Decomposition(
            u0=u0,
            bubbles=bubbles,
            center_tracks=tracks,
            u0_energy=phi(u0, params),
            bubble_energies=[phi_bar(b, params) for b in bubbles],
            bubble_masses=[
                params.beta * lp_norm(b, params.q) ** params.q for b in bubbles
            ],
            bubble_heights=[lp_norm(b, np.inf) for b in bubbles],
            bubble_residuals=[residual_norm(b, limit_params) for b in bubbles],
            remainder_sup=remainder_sup,
            sigma=sigma,
            unstable_sites=unstable,
            quantization_stop=quantization_stop,
        )

    while True:
        remainder_sup = lp_norm(residuals[-1], np.inf)
        if remainder_sup < sigma:
            return build(remainder_sup)
        if len(bubbles) == max_bubbles:
            raise BubbleBudgetError(
                f"remainder sup {remainder_sup:.3e} >= sigma {sigma:.3e} "
                f"after extracting {max_bubbles} bubbles",
                build(remainder_sup),
            )
        track = [_lex_argmax(r) for r in residuals]
        centered_last = LatticeFunction(
            wbox, residuals[-1].sample(wbox.sites + np.asarray(track[-1], dtype=np.int64))
        )
        if energy_floor is not None and phi_bar(centered_last, params) < energy_floor:
            quantization_stop = True
            return build(remainder_sup)
        bubbles.append(centered_last)
        tracks.append(track)
        residuals = [
            r - place(centered_last, y, r.box) for r, y in zip(residuals, track)
        ]


def energy_identity_check(
    dec: Decomposition, params: ProblemParams, level: float
) -> float:
    """|level - Phi(u0) - sum_i PhiBar(u_i)|, the defect of the energy ledger."""
    total = phi(dec.u0, params) + sum(phi_bar(b, params) for b in dec.bubbles)
    return abs(level - total)


def separation_check(dec: Decomposition) -> bool:
    """True iff every center track diverges strictly, individually and pairwise."""
    if dec.k < 1:
        raise ValueError("separation_check requires at least one bubble")
    try:
        _check_diverging(dec.center_tracks)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------------------
# Sequence manifest I/O
# ---------------------------------------------------------------------------


def save_sequence(seq: FunctionSequence, directory, stem: str = "term") -> Path:
    """Write per-term CSV dumps plus a manifest JSON; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for n, term in enumerate(seq.terms):
        name = f"{stem}_{n:03d}.csv"
        write_function_csv(term, directory / name)
        entries.append({"csv": name, "radius": term.box.radius})
    manifest = {"dim": seq.dim, "level": seq.level, "terms": entries}
    path = directory / "sequence.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_sequence(manifest_path) -> FunctionSequence:
    """Read a sequence written by save_sequence (or an equivalent manifest)."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    unknown = set(manifest) - {"dim", "level", "terms"}
    if unknown:
        raise ValueError(f"unknown keys in sequence manifest: {sorted(unknown)}")
    dim = int(manifest["dim"])
    terms = []
    for entry in manifest["terms"]:
        unknown = set(entry) - {"csv", "radius"}
        if unknown:
            raise ValueError(f"unknown keys in manifest term entry: {sorted(unknown)}")
        term = read_function_csv(manifest_path.parent / entry["csv"], int(entry["radius"]))
        if term.box.dim != dim:
            raise ValueError(
                f"term {entry['csv']} has dimension {term.box.dim}, manifest says {dim}"
            )
        terms.append(term)
    level = manifest.get("level")
    return FunctionSequence(tuple(terms), level=None if level is None else float(level))
