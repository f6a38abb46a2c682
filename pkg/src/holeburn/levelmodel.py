"""Field-dependent hyperfine/superhyperfine levels of the Y1 and X1 doublets.

Each doublet splits linearly in the field into two hyperfine levels, and
each hyperfine level splits again into two lattice-spin sublevels. Only the
difference of the superhyperfine splittings within a doublet is observable;
the lower hyperfine level of each doublet is given zero superhyperfine
splitting and the upper one carries the full difference.

Hole patterns are obtained by brute-force bookkeeping over burn scenarios:
for every allowed transition that the burn laser can be resonant with,
every other allowed transition sharing its lower level (depleted) or its
upper level (populated) shows reduced absorption at the difference of the
two transition frequencies.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

MHZ = 1e6


class SelectionRule(str, enum.Enum):
    SPIN_CONSERVING = "spin_conserving"
    SPIN_FREE = "spin_free"


class Doublet(str, enum.Enum):
    Y1 = "Y1"
    X1 = "X1"


class Spin(str, enum.Enum):
    DOWN = "down"
    UP = "up"

    @property
    def sign(self) -> int:
        return -1 if self is Spin.DOWN else 1


class FeatureClass(str, enum.Enum):
    CENTRAL = "central"
    INNER = "inner_cluster"
    OUTER = "outer_cluster"
    ANTIHOLE = "antihole"


@dataclass(frozen=True)
class HyperfineModel:
    """Linear splitting rates in Hz/T.

    ``rate_y1``/``rate_x1`` are the hyperfine splittings per tesla of the
    lower (Y1) and upper (X1) doublets; ``shf_diff_*`` are the rates of the
    difference between the superhyperfine splittings of the up and down
    hyperfine levels of each doublet.
    """

    rate_y1: float = 25.6 * MHZ
    rate_x1: float = 41.6 * MHZ
    shf_diff_y1: float = 3.05 * MHZ
    shf_diff_x1: float = 2.35 * MHZ
    selection_rule: SelectionRule = SelectionRule.SPIN_CONSERVING

    def __post_init__(self):
        for name in ("rate_y1", "rate_x1", "shf_diff_y1", "shf_diff_x1"):
            v = getattr(self, name)
            if not (v >= 0 and v != float("inf")):
                raise DomainError(f"{name} must be finite and non-negative, got {v}")
        object.__setattr__(self, "selection_rule", SelectionRule(self.selection_rule))

    def splitting(self, doublet: Doublet, field: float) -> float:
        rate = self.rate_y1 if doublet is Doublet.Y1 else self.rate_x1
        return rate * field

    def shf_splitting(self, doublet: Doublet, hyperfine: Spin, field: float) -> float:
        """Superhyperfine splitting of one hyperfine level (zero for the down level)."""
        if hyperfine is Spin.DOWN:
            return 0.0
        diff = self.shf_diff_y1 if doublet is Doublet.Y1 else self.shf_diff_x1
        return diff * field


@dataclass(frozen=True)
class LevelState:
    doublet: Doublet
    hyperfine: Spin
    lattice_spin: Spin
    energy_offset: float  # Hz, from the doublet's zero-field position


@dataclass(frozen=True)
class TransitionLine:
    lower: LevelState
    upper: LevelState
    detuning: float  # Hz, from the zero-field Y1-X1 line
    allowed: bool


@dataclass(frozen=True)
class PatternFeature:
    detuning: float  # Hz, from the burn frequency
    feature_class: FeatureClass
    weight: float
    sign: int  # +1 hole, -1 anti-hole


@dataclass(frozen=True)
class HolePattern:
    field: float
    model: HyperfineModel
    features: tuple[PatternFeature, ...]
    # satellites around the central hole; the measured spectra show none
    inconsistent_with_data: bool = False

    def detunings(self, feature_class: FeatureClass | None = None, sign: int | None = None) -> list[float]:
        return sorted(
            f.detuning
            for f in self.features
            if (feature_class is None or f.feature_class is feature_class) and (sign is None or f.sign == sign)
        )

    @property
    def holes(self) -> tuple[PatternFeature, ...]:
        return tuple(f for f in self.features if f.sign > 0)

    @property
    def antiholes(self) -> tuple[PatternFeature, ...]:
        return tuple(f for f in self.features if f.sign < 0)


def _check_field(field: float) -> None:
    if not field >= 0:
        raise DomainError(f"magnetic field must be >= 0 T, got {field}")


def enumerate_levels(model: HyperfineModel, field: float) -> list[LevelState]:
    """The eight (doublet, hyperfine, lattice spin) sublevels at ``field`` tesla."""
    _check_field(field)
    levels = []
    for doublet in (Doublet.Y1, Doublet.X1):
        delta = model.splitting(doublet, field)
        for hf in (Spin.DOWN, Spin.UP):
            d = model.shf_splitting(doublet, hf, field)
            for ls in (Spin.DOWN, Spin.UP):
                offset = hf.sign * delta / 2 + ls.sign * d / 2
                levels.append(LevelState(doublet, hf, ls, offset))
    return levels


def enumerate_transitions(levels: list[LevelState], model: HyperfineModel) -> list[TransitionLine]:
    """All Y1 -> X1 pairs, flagged by the model's lattice-spin selection rule."""
    lower = [s for s in levels if s.doublet is Doublet.Y1]
    upper = [s for s in levels if s.doublet is Doublet.X1]
    lines = []
    for lo, up in itertools.product(lower, upper):
        allowed = model.selection_rule is SelectionRule.SPIN_FREE or lo.lattice_spin is up.lattice_spin
        lines.append(TransitionLine(lo, up, up.energy_offset - lo.energy_offset, allowed))
    return lines


def _classify(burn: TransitionLine, other: TransitionLine) -> FeatureClass:
    same_lower_hf = burn.lower.hyperfine is other.lower.hyperfine
    same_upper_hf = burn.upper.hyperfine is other.upper.hyperfine
    if same_lower_hf and same_upper_hf:
        return FeatureClass.CENTRAL
    if same_upper_hf:
        return FeatureClass.INNER  # lower level differs: Y1 splitting
    return FeatureClass.OUTER


def _exact_offset(model: HyperfineModel, s: LevelState, field: float) -> Fraction:
    # same formula as enumerate_levels, in exact rationals
    rate = model.rate_y1 if s.doublet is Doublet.Y1 else model.rate_x1
    diff = model.shf_diff_y1 if s.doublet is Doublet.Y1 else model.shf_diff_x1
    F = Fraction(field)
    d = Fraction(diff) * F if s.hyperfine is Spin.UP else Fraction(0)
    return (s.hyperfine.sign * Fraction(rate) * F + s.lattice_spin.sign * d) / 2


def predict_hole_pattern(model: HyperfineModel, field: float, include_antiholes: bool = False) -> HolePattern:
    """Signed spectral features, relative to the burn frequency, at ``field``.

    Every allowed transition is an equally likely burn scenario (equal
    oscillator strengths). Within one scenario, population moves from the
    burned lower level to the burned upper level: the burned line itself
    counts twice (depletion plus stimulated emission), every other allowed
    line sharing one of the two levels counts once. With
    ``include_antiholes`` the upper level is assumed to have relaxed, half
    into each Y1 hyperfine level, keeping its lattice spin under the
    spin-conserving rule and spreading over both otherwise; the extra
    population in the other Y1 hyperfine level shows up as increased
    absorption (sign -1) on all allowed lines leaving it.

    Coincident features of the same class and sign are merged. Weights are
    normalised so that the central hole has weight 1.
    """
    _check_field(field)
    levels = enumerate_levels(model, field)
    lines = [t for t in enumerate_transitions(levels, model) if t.allowed]
    exact = {id(t): _exact_offset(model, t.upper, field) - _exact_offset(model, t.lower, field) for t in lines}
    raw: dict = {}
    n = len(lines)
    conserving = model.selection_rule is SelectionRule.SPIN_CONSERVING

    def add(cls, sign, burn, other, w):
        # Exact rational detunings, merged on millihertz bins. Half-even
        # rounding is odd-symmetric, so mirror images land in mirror bins.
        det = exact[id(other)] - exact[id(burn)]
        key = (cls, sign, round(det * 1000))
        wsum, moment = raw.get(key, (Fraction(0), Fraction(0)))
        wn = Fraction(w) / n
        raw[key] = (wsum + wn, moment + wn * det)

    for burn in lines:
        for other in lines:
            if other is burn:
                add(FeatureClass.CENTRAL, 1, burn, burn, 2)
            elif other.lower == burn.lower or other.upper == burn.upper:
                add(_classify(burn, other), 1, burn, other, 1)
        if include_antiholes:
            for other in lines:
                lo = other.lower
                if lo.hyperfine is burn.lower.hyperfine:
                    continue
                if conserving:
                    if lo.lattice_spin is burn.upper.lattice_spin:
                        add(FeatureClass.ANTIHOLE, -1, burn, other, Fraction(1, 2))
                else:
                    # relaxation spreads over both lattice-spin sublevels
                    add(FeatureClass.ANTIHOLE, -1, burn, other, Fraction(1, 4))

    central = raw[(FeatureClass.CENTRAL, 1, 0)][0]
    merged = [(cls, sign, moment / wsum, wsum) for (cls, sign, _), (wsum, moment) in raw.items()]
    features = tuple(
        PatternFeature(float(det) + 0.0, cls, float(w / central), sign)
        for cls, sign, det, w in sorted(merged, key=lambda m: (m[2], m[0].value, m[1]))
    )
    satellites = any(
        f.feature_class is FeatureClass.CENTRAL and f.detuning != 0.0 for f in features
    )
    return HolePattern(field, model, features, inconsistent_with_data=satellites)


def cluster_summary(model: HyperfineModel, field: float) -> dict[str, float]:
    """Cluster centres and internal splittings, in Hz, for reporting."""
    _check_field(field)
    return {
        "inner_center_hz": model.rate_y1 * field,
        "outer_center_hz": model.rate_x1 * field,
        "inner_splitting_hz": model.shf_diff_y1 * field,
        "outer_splitting_hz": model.shf_diff_x1 * field,
    }
