"""Preparation procedures and their classification.

A preparation is more than a density operator: it carries an ensemble
decomposition, a provenance tag, and the spacetime locations where
classical records of the realized ensemble member exist. Membership
policies decide which preparations exhibit a box's nonlinear evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, ShapeError, ValidationError
from .qcore import DensityOperator, trace_distance
from .tolerances import ATOL, DTOL, PURITY_MIN


@dataclass(frozen=True)
class SpacetimeEvent:
    """A point in 1+1 Minkowski spacetime with c = 1."""

    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise ValidationError("spacetime coordinates must be finite")


class ProvenanceTag(str, Enum):
    LOCAL_DETERMINISTIC = "local_deterministic"
    LOCAL_ENSEMBLE = "local_ensemble"
    REMOTE_STEERED = "remote_steered"


@dataclass(frozen=True)
class Provenance:
    """How a preparation came about, and where its classical records live."""

    tag: ProvenanceTag
    records: tuple

    def __post_init__(self):
        records = tuple(self.records)
        if len(records) < 1:
            raise ValidationError(f"{self.tag.value} provenance requires >= 1 record event")
        for e in records:
            if not isinstance(e, SpacetimeEvent):
                raise ValidationError("provenance records must be SpacetimeEvent values")
        object.__setattr__(self, "records", records)


def _normalize_ensemble(ensemble, what):
    members = []
    total = 0.0
    dim = None
    for w, state in ensemble:
        w = float(w)
        if w <= 0:
            raise ValidationError(f"{what} weights must be positive, got {w}")
        if not isinstance(state, DensityOperator):
            raise ValidationError(f"{what} members must be DensityOperator values")
        if dim is None:
            dim = state.dim
        elif state.dim != dim:
            raise ShapeError(f"{what} members have mixed dimensions")
        total += w
        members.append((w, state))
    if not members:
        raise ValidationError(f"{what} must have at least one member")
    if abs(total - 1.0) > ATOL:
        raise ValidationError(f"{what} weights sum to {total}, not 1")
    return tuple(members)


def _mix(ensemble) -> DensityOperator:
    acc = sum(w * state.matrix for w, state in ensemble)
    return DensityOperator(acc)


@dataclass(frozen=True)
class Preparation:
    """An operational preparation procedure.

    `ensemble` is the realized (possibly post-selected) decomposition the
    procedure delivers. For heralded preparations, `unconditioned` holds
    the full outcome ensemble an observer without the heralding record
    would assign; it defaults to the realized ensemble.
    """

    ensemble: tuple
    provenance: Provenance
    label: str
    unconditioned: tuple | None = None

    def __post_init__(self):
        members = _normalize_ensemble(self.ensemble, "ensemble")
        object.__setattr__(self, "ensemble", members)
        _mix(members)  # raises if the average is not a valid density
        if self.unconditioned is not None:
            unc = _normalize_ensemble(self.unconditioned, "unconditioned ensemble")
            if unc[0][1].dim != members[0][1].dim:
                raise ShapeError("unconditioned ensemble dimension mismatch")
            object.__setattr__(self, "unconditioned", unc)

    @property
    def dim(self) -> int:
        return self.ensemble[0][1].dim


def effective_density(p: Preparation) -> DensityOperator:
    """The weighted average of the ensemble: the linear-theory state."""
    return _mix(p.ensemble)


def unconditioned_density(p: Preparation) -> DensityOperator:
    """The state assigned without access to any heralding record."""
    return _mix(p.unconditioned) if p.unconditioned is not None else _mix(p.ensemble)


def linearly_equivalent(p1: Preparation, p2: Preparation) -> bool:
    """True iff the two preparations give identical statistics under every
    linear transformation and measurement, i.e. equal effective densities."""
    if p1.dim != p2.dim:
        raise ShapeError(f"preparation dims differ: {p1.dim} vs {p2.dim}")
    return trace_distance(effective_density(p1), effective_density(p2)) <= DTOL


def in_past_light_cone(e: SpacetimeEvent, box: SpacetimeEvent) -> bool:
    """True iff e lies in (or on) the past light cone of the box event."""
    return box.t - e.t >= abs(box.x - e.x)


class PolicyKind(str, Enum):
    NAIVE_PURE = "naive_pure"
    KENT_LIGHT_CONE = "kent_light_cone"
    DETERMINISTIC_EXPERIMENTER = "deterministic_experimenter"
    EXPLICIT_LIST = "explicit_list"


@dataclass(frozen=True)
class MembershipPolicy:
    """The rule deciding which preparations exhibit the nonlinear evolution."""

    kind: PolicyKind
    box_event: SpacetimeEvent | None = None
    labels: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind is PolicyKind.KENT_LIGHT_CONE and self.box_event is None:
            raise ConfigurationError("kent_light_cone policy requires a box event")
        if self.kind is PolicyKind.EXPLICIT_LIST and not self.labels:
            raise ConfigurationError("explicit_list policy requires a label set")
        object.__setattr__(self, "labels", frozenset(self.labels))


def classify_membership(p: Preparation, policy: MembershipPolicy) -> bool:
    """Decide whether a preparation belongs to the verifying set."""
    if policy.kind is PolicyKind.NAIVE_PURE:
        return all(state.purity() >= PURITY_MIN for _, state in p.ensemble)
    if policy.kind is PolicyKind.KENT_LIGHT_CONE:
        return all(in_past_light_cone(e, policy.box_event) for e in p.provenance.records)
    if policy.kind is PolicyKind.DETERMINISTIC_EXPERIMENTER:
        return (p.provenance.tag is ProvenanceTag.LOCAL_DETERMINISTIC
                and len(p.ensemble) == 1)
    if policy.kind is PolicyKind.EXPLICIT_LIST:
        return p.label in policy.labels
    raise ConfigurationError(f"unknown policy kind {policy.kind!r}")
