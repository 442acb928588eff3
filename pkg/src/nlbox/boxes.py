"""The nonlinear boxes and their application rules.

Each box maps preparations to output density operators. A membership
policy decides which preparations exhibit the nonlinear evolution; a
semantics policy decides whether a member box acts on the effective
density or on each ensemble member separately. Linear quantum mechanics
holds for everything the policy excludes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    ShapeError,
    ValidationError,
)
from .preparations import (
    MembershipPolicy,
    Preparation,
    SpacetimeEvent,
    classify_membership,
    effective_density,
    in_past_light_cone,
    unconditioned_density,
)
from .qcore import (
    DensityOperator,
    KetVector,
    Povm,
    Unitary,
    _partial_trace_raw,
    born_probabilities,
    computational_povm,
    tensor,
    trace_norm,
)
from .tolerances import ATOL, PURITY_MIN


class Semantics(str, Enum):
    STATE = "state"
    DECOMPOSITION = "decomposition"


@dataclass(frozen=True)
class BrunBoxConfig:
    """The basis-discriminating map on two non-identical orthonormal bases.

    The four domain states psi0, psi1, phi0, phi1 are sent to the four
    two-qubit computational basis states; the second input qubit |0> is
    supplied internally. `completion` is either "strict" (the map is
    undefined off the domain) or a callable KetVector -> DensityOperator
    giving a custom action on other pure states.
    """

    psi_basis: tuple
    phi_basis: tuple
    completion: str | Callable = "strict"

    def __post_init__(self):
        for name, (b0, b1) in (("psi", self.psi_basis), ("phi", self.phi_basis)):
            if b0.dim != 2 or b1.dim != 2:
                raise ShapeError(f"{name} basis must be single-qubit kets")
            if abs(b0.overlap(b1)) > ATOL:
                raise ValidationError(f"{name} basis is not orthogonal")
        overlaps = [abs(p.overlap(q)) for p in self.psi_basis for q in self.phi_basis]
        if all(o < 1e-6 or o > 1 - 1e-6 for o in overlaps):
            raise ValidationError("psi and phi bases must be non-identical "
                                  "(some cross overlap strictly between 0 and 1)")
        if isinstance(self.completion, str) and self.completion != "strict":
            raise ConfigurationError(f"unknown completion {self.completion!r}")

    @property
    def domain_states(self) -> tuple:
        return (self.psi_basis[0], self.psi_basis[1],
                self.phi_basis[0], self.phi_basis[1])


def _two_qubit_basis_state(index: int) -> DensityOperator:
    m = np.zeros((4, 4), dtype=complex)
    m[index, index] = 1.0
    return DensityOperator(m)


def brun_apply_pure(config: BrunBoxConfig, input_ket: KetVector) -> DensityOperator:
    """Apply the basis-discriminating map to a pure one-qubit input.

    Domain inputs map to the corresponding two-qubit computational state;
    anything else is a domain error under strict completion.
    """
    if input_ket.dim != 2:
        raise ShapeError("box input must be a single qubit")
    for i, state in enumerate(config.domain_states):
        if input_ket.fidelity(state) >= PURITY_MIN:
            return _two_qubit_basis_state(i)
    if callable(config.completion):
        return config.completion(input_ket)
    raise DomainError("input is not one of the four domain states and the "
                      "map has no completion off its domain")


@dataclass(frozen=True)
class DeutschBoxConfig:
    """A consistency-condition box: the state entering the loop equals the
    state exiting it, solved as a density-operator fixed point."""

    unitary: Unitary
    ctc_dim: int
    fp_tol: float = 1e-9
    max_iterations: int = 5000

    def __post_init__(self):
        if self.ctc_dim < 1:
            raise ValidationError("ctc_dim must be positive")
        if self.unitary.dim % self.ctc_dim != 0:
            raise ShapeError("unitary dim must be system_dim * ctc_dim")

    @property
    def system_dim(self) -> int:
        return self.unitary.dim // self.ctc_dim


def _induced_loop_map(config: DeutschBoxConfig, rho_in: DensityOperator):
    u = config.unitary.matrix
    dims = (rho_in.dim, config.ctc_dim)

    def loop(sigma: np.ndarray) -> np.ndarray:
        joint = u @ np.kron(rho_in.matrix, sigma) @ u.conj().T
        return _partial_trace_raw(joint, dims, [1])

    return loop


def _cesaro_limit(loop, sigma0: np.ndarray) -> np.ndarray:
    """Cesaro-mean limit of loop^n(sigma0) via the spectral projector onto
    the eigenvalue-1 subspace of the superoperator.

    Peripheral eigenvalues other than 1 average to zero, so this equals
    the long-run mean of the iterates without the O(1/n) averaging tail.
    """
    dc = sigma0.shape[0]
    basis = np.eye(dc * dc, dtype=complex)
    m = np.column_stack([loop(basis[:, k].reshape(dc, dc)).reshape(-1)
                         for k in range(dc * dc)])
    evals, evecs = np.linalg.eig(m)
    coeffs = np.linalg.solve(evecs, sigma0.reshape(-1))
    fixed = np.abs(evals - 1.0) < 1e-9
    return (evecs[:, fixed] @ coeffs[fixed]).reshape(dc, dc)


def deutsch_fixed_point(config: DeutschBoxConfig, rho_in: DensityOperator) -> DensityOperator:
    """The canonical loop state: the Cesaro-mean limit of the induced map's
    iterates started from the maximally mixed state."""
    if rho_in.dim != config.system_dim:
        raise ShapeError(f"input dim {rho_in.dim} != system dim {config.system_dim}")
    loop = _induced_loop_map(config, rho_in)
    sigma0 = np.eye(config.ctc_dim, dtype=complex) / config.ctc_dim

    def finish(candidate: np.ndarray):
        candidate = 0.5 * (candidate + candidate.conj().T)
        tr = float(np.trace(candidate).real)
        if abs(tr) > 1e-12:
            candidate = candidate / tr
        residual = trace_norm(loop(candidate) - candidate)
        if residual <= max(config.fp_tol, 1e-8):
            return DensityOperator(candidate), residual
        return None, residual

    try:
        state, residual = finish(_cesaro_limit(loop, sigma0))
        if state is not None:
            return state
    except np.linalg.LinAlgError:
        residual = np.inf

    # Fallback: plain iteration with running average.
    sigma, mean = sigma0, sigma0.copy()
    for k in range(1, config.max_iterations + 1):
        sigma = loop(sigma)
        mean = mean * (k / (k + 1)) + sigma / (k + 1)
        state, residual = finish(mean)
        if state is not None:
            return state
    raise ConvergenceError(
        f"fixed-point residual {residual} after {config.max_iterations} iterations",
        residual=residual)


def deutsch_apply(config: DeutschBoxConfig, rho_in: DensityOperator) -> DensityOperator:
    """System output once the loop state is consistent."""
    star = deutsch_fixed_point(config, rho_in)
    u = config.unitary.matrix
    joint = u @ np.kron(rho_in.matrix, star.matrix) @ u.conj().T
    out = _partial_trace_raw(joint, (rho_in.dim, config.ctc_dim), [0])
    return DensityOperator(0.5 * (out + out.conj().T))


@dataclass(frozen=True)
class KentBoxConfig:
    """A readout box: emits the density matrix knowable from classical data
    in its past light cone, then re-prepares through a target map."""

    target: Callable  # DensityOperator -> DensityOperator
    brun: BrunBoxConfig | None = None


def kent_brun_emulation(brun: BrunBoxConfig) -> KentBoxConfig:
    """Emulate the basis-discriminating map via readout-then-re-prepare:
    a pure readout matching a domain state yields its two-qubit target;
    any other readout passes through with an untouched ancilla."""

    def target(readout: DensityOperator) -> DensityOperator:
        if readout.purity() >= PURITY_MIN:
            k = readout.principal_ket()
            for i, state in enumerate(brun.domain_states):
                if k.fidelity(state) >= PURITY_MIN:
                    return _two_qubit_basis_state(i)
        return tensor(readout, _QUBIT0)

    return KentBoxConfig(target=target, brun=brun)


@dataclass(frozen=True)
class LinearBoxConfig:
    """An ordinary CPTP channel in box clothing, for control experiments.

    With `ancilla=True` the channel acts on input (x) |0><0| so its output
    space matches the two-qubit boxes.
    """

    kraus: tuple
    ancilla: bool = False

    def __post_init__(self):
        mats = tuple(np.array(k, dtype=complex) for k in self.kraus)
        if not mats:
            raise ValidationError("channel needs at least one Kraus operator")
        din = mats[0].shape[1]
        total = sum(k.conj().T @ k for k in mats)
        if float(np.max(np.abs(total - np.eye(din)))) > ATOL:
            raise ValidationError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus", mats)

    def apply(self, rho: DensityOperator) -> DensityOperator:
        mat = rho.matrix
        if self.ancilla:
            anc = np.zeros((2, 2), dtype=complex)
            anc[0, 0] = 1.0
            mat = np.kron(mat, anc)
        if mat.shape[0] != self.kraus[0].shape[1]:
            raise ShapeError("channel input dimension mismatch")
        out = sum(k @ mat @ k.conj().T for k in self.kraus)
        return DensityOperator(0.5 * (out + out.conj().T))


@dataclass(frozen=True)
class NonlinearBox:
    """A bounded spacetime region applying a state map under a semantics
    and membership policy; linear quantum mechanics holds outside it."""

    config: object  # Brun | Deutsch | Kent | Linear config
    box_event: SpacetimeEvent
    semantics: Semantics
    membership: MembershipPolicy


_QUBIT0 = DensityOperator(np.array([[1, 0], [0, 0]], dtype=complex))


def _brun_on_density(config: BrunBoxConfig, rho: DensityOperator) -> DensityOperator:
    """Density-level action of the basis-discriminating map.

    Pure domain states follow the map; pure off-domain states hit the
    completion (a domain error when strict); mixed states, on which the
    map is undefined, pass through with an untouched ancilla.
    """
    if rho.purity() >= PURITY_MIN:
        return brun_apply_pure(config, rho.principal_ket())
    return tensor(rho, _QUBIT0)


def kent_readout(p: Preparation, box_event: SpacetimeEvent):
    """What a readout box learns about a preparation.

    If every provenance record lies in the box's past light cone the
    realized identity is knowable and the readout is the effective
    density (the realized member, for singleton ensembles). Otherwise the
    readout is the unconditioned mixture: heralded states prepared from
    outside the light cone appear mixed. The preparation passes through
    unchanged.
    """
    knowable = all(in_past_light_cone(e, box_event) for e in p.provenance.records)
    readout = effective_density(p) if knowable else unconditioned_density(p)
    return readout, p


def _box_visible_density(p: Preparation, member: bool) -> DensityOperator:
    """The density a linearly-acting box responds to.

    Excluded heralded preparations present their unconditioned mixture:
    the heralding record is exactly the information the policy says is
    not available to the box.
    """
    return effective_density(p) if member else unconditioned_density(p)


def _map_on_density(box: NonlinearBox, rho: DensityOperator) -> DensityOperator:
    cfg = box.config
    if isinstance(cfg, BrunBoxConfig):
        return _brun_on_density(cfg, rho)
    if isinstance(cfg, DeutschBoxConfig):
        return deutsch_apply(cfg, rho)
    if isinstance(cfg, KentBoxConfig):
        return cfg.target(rho)
    if isinstance(cfg, LinearBoxConfig):
        return cfg.apply(rho)
    raise ConfigurationError(f"unknown box config {type(cfg).__name__}")


def apply_box(box: NonlinearBox, p: Preparation) -> DensityOperator:
    """Send a preparation through a box.

    Non-members see only linear physics: the box acts on the density the
    policy leaves visible (identity-with-ancilla for the strict
    basis-discriminating map, the plain channel otherwise). Members evolve
    under the box map, either on the effective density (state semantics)
    or member by member (decomposition semantics).
    """
    member = classify_membership(p, box.membership)
    cfg = box.config

    if not member:
        rho = _box_visible_density(p, member=False)
        if isinstance(cfg, BrunBoxConfig):
            return tensor(rho, _QUBIT0)
        if isinstance(cfg, KentBoxConfig):
            readout, _ = kent_readout(p, box.box_event)
            return cfg.target(readout)
        return _map_on_density(box, rho)

    if box.semantics is Semantics.DECOMPOSITION:
        parts = [(w, _map_on_density(box, state)) for w, state in p.ensemble]
        acc = sum(w * out.matrix for w, out in parts)
        return DensityOperator(acc)
    return _map_on_density(box, effective_density(p))


def box_output_qubit_distribution(out: DensityOperator) -> np.ndarray:
    """Computational-basis distribution of the first output qubit."""
    if out.dim == 2:
        reduced = out
    elif out.dim == 4:
        reduced = DensityOperator(_partial_trace_raw(out.matrix, (2, 2), [0]))
    else:
        raise ShapeError(f"unexpected box output dimension {out.dim}")
    return born_probabilities(reduced, computational_povm(2))
