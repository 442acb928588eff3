"""Executable experiments: map verification, the remote-preparation
signaling test, the preparation-class split, and the key-distribution
intercept attack."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .boxes import (
    BrunBoxConfig,
    KentBoxConfig,
    NonlinearBox,
    Semantics,
    apply_box,
    box_output_qubit_distribution,
)
from .errors import ConfigurationError, MisuseError
from .preparations import (
    Preparation,
    Provenance,
    ProvenanceTag,
    SpacetimeEvent,
    classify_membership,
    linearly_equivalent,
)
from .qcore import (
    COMPUTATIONAL_BASIS,
    HADAMARD_BASIS,
    DensityOperator,
    KetVector,
    basis_povm,
    born_probabilities,
    computational_povm,
    ket,
    tensor,
    trace_distance,
)
from .steering import assemblage_from
from .tolerances import PURITY_MIN

# Default spacetime layout: the sender's record is spacelike separated
# from the box at (1, 0).
DEFAULT_ALICE_EVENT = SpacetimeEvent(0.0, 10.0)

_STATE_NAMES = ("psi0", "psi1", "phi0", "phi1")


def singlet() -> DensityOperator:
    amp = np.zeros(4, dtype=complex)
    amp[1] = 1 / np.sqrt(2)
    amp[2] = -1 / np.sqrt(2)
    return KetVector(amp).projector()


def _box_bases(box: NonlinearBox):
    cfg = box.config
    if isinstance(cfg, BrunBoxConfig):
        return cfg.psi_basis, cfg.phi_basis
    if isinstance(cfg, KentBoxConfig) and cfg.brun is not None:
        return cfg.brun.psi_basis, cfg.brun.phi_basis
    return None


def _domain_states(box: NonlinearBox):
    bases = _box_bases(box)
    if bases is None:
        raise ConfigurationError("box carries no discrimination bases")
    (p0, p1), (q0, q1) = bases
    return (p0, p1, q0, q1)


def _local_prep(state: KetVector, label: str, record: SpacetimeEvent) -> Preparation:
    return Preparation(
        ensemble=((1.0, state.projector()),),
        provenance=Provenance(ProvenanceTag.LOCAL_DETERMINISTIC, (record,)),
        label=label,
    )


@dataclass(frozen=True)
class VerificationReport:
    table: dict  # input label -> tuple of 4 outcome probabilities
    identified: bool
    tol: float

    def to_payload(self) -> dict:
        return {
            "table": {k: list(v) for k, v in self.table.items()},
            "identified": self.identified,
            "tol": self.tol,
        }


def run_verification(box: NonlinearBox, tol: float = 1e-6, states=None) -> VerificationReport:
    """Check whether the four verifying preparations reveal the map.

    Each domain state is prepared locally and deterministically, sent
    through the box, and both output qubits are measured in the
    computational basis; the map is identified iff every input lands on
    its target outcome with probability >= 1 - tol.
    """
    if states is None:
        states = _domain_states(box)
    povm = computational_povm(4)
    table = {}
    identified = True
    anc = DensityOperator(np.diag([1.0, 0.0]).astype(complex))
    for i, (name, state) in enumerate(zip(_STATE_NAMES, states)):
        prep = _local_prep(state, f"verify_{name}", box.box_event)
        out = apply_box(box, prep)
        if out.dim == 2:
            out = tensor(out, anc)
        probs = born_probabilities(out, povm)
        table[name] = tuple(float(x) for x in probs)
        if probs[i] < 1.0 - tol:
            identified = False
    return VerificationReport(table=table, identified=identified, tol=tol)


@dataclass(frozen=True)
class SignalingReport:
    distributions: dict  # setting label -> receiver outcome distribution
    signaling_metric: float
    semantics: str
    policy: str

    def to_payload(self) -> dict:
        return {
            "distributions": {k: list(v) for k, v in self.distributions.items()},
            "signaling_metric": self.signaling_metric,
            "semantics": self.semantics,
            "policy": self.policy,
        }


def _resolve_setting(box: NonlinearBox, setting):
    if isinstance(setting, str):
        bases = _box_bases(box)
        if setting == "psi":
            return setting, (bases[0] if bases else COMPUTATIONAL_BASIS)
        if setting == "phi":
            return setting, (bases[1] if bases else HADAMARD_BASIS)
        raise ConfigurationError(f"unknown setting name {setting!r}")
    b0, b1 = setting
    return None, (b0, b1)


def run_signaling_test(box: NonlinearBox, settings,
                       alice_event: SpacetimeEvent = DEFAULT_ALICE_EVENT) -> SignalingReport:
    """Can the receiver tell which basis the distant sender measured?

    For each setting the sender measures her half of a singlet, remotely
    preparing the receiver's qubit; the receiver pushes each heralded
    preparation through the box and reads the first output qubit. The
    metric is the worst total-variation distance between his outcome
    distributions across setting pairs.
    """
    if not settings:
        raise ConfigurationError("signaling test needs at least one setting")
    state = singlet()
    distributions = {}
    for idx, setting in enumerate(settings):
        name, (b0, b1) = _resolve_setting(box, setting)
        name = name or f"setting{idx}"
        assemblage = assemblage_from(state, 2, 2, basis_povm((b0, b1)))
        q = np.zeros(2)
        for i in range(assemblage.n_outcomes):
            p_i, heralded = assemblage.heralded[i]
            prep = Preparation(
                ensemble=((1.0, heralded),),
                provenance=Provenance(ProvenanceTag.REMOTE_STEERED, (alice_event,)),
                label=f"remote_{name}_{i}",
                unconditioned=tuple(assemblage.heralded),
            )
            out = apply_box(box, prep)
            q += p_i * box_output_qubit_distribution(out)
        distributions[name] = tuple(float(x) for x in q)

    labels = list(distributions)
    metric = 0.0
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            a = np.array(distributions[labels[i]])
            b = np.array(distributions[labels[j]])
            metric = max(metric, 0.5 * float(np.sum(np.abs(a - b))))
    return SignalingReport(
        distributions=distributions,
        signaling_metric=metric,
        semantics=box.semantics.value,
        policy=box.membership.kind.value,
    )


@dataclass(frozen=True)
class ClassSplitReport:
    entries: tuple  # one dict per domain state
    hazard: bool    # True when the policy fails to exclude remote preparations

    def to_payload(self) -> dict:
        return {"entries": [dict(e) for e in self.entries], "hazard": self.hazard}


def run_preparation_problem_demo(box: NonlinearBox,
                                 alice_event: SpacetimeEvent = DEFAULT_ALICE_EVENT) -> ClassSplitReport:
    """Exhibit linearly equivalent preparation pairs the box tells apart.

    For each domain state, a local deterministic preparation and a remote
    heralded one share the same pure state, yet the box output differs;
    if the membership policy fails to exclude the remote preparations the
    demo reports a signaling hazard instead of a split.
    """
    states = _domain_states(box)
    partners = (1, 0, 3, 2)  # the basis partner of each domain state
    pairs = []
    for i, (name, state) in enumerate(zip(_STATE_NAMES, states)):
        local = _local_prep(state, f"local_{name}", box.box_event)
        partner = states[partners[i]]
        remote = Preparation(
            ensemble=((1.0, state.projector()),),
            provenance=Provenance(ProvenanceTag.REMOTE_STEERED, (alice_event,)),
            label=f"remote_{name}",
            unconditioned=((0.5, state.projector()), (0.5, partner.projector())),
        )
        pairs.append((name, local, remote))

    hazard = any(classify_membership(remote, box.membership) for _, _, remote in pairs)
    entries = []
    for name, local, remote in pairs:
        entry = {
            "state": name,
            "linearly_equivalent": linearly_equivalent(local, remote),
            "local_member": classify_membership(local, box.membership),
            "remote_member": classify_membership(remote, box.membership),
        }
        if not hazard:
            entry["output_distance"] = trace_distance(
                apply_box(box, local), apply_box(box, remote))
        entries.append(entry)
    return ClassSplitReport(entries=tuple(entries), hazard=hazard)


@dataclass(frozen=True)
class AttackReport:
    n_bits: int
    eve_bit_accuracy: float
    eve_basis_accuracy: float
    induced_qber: float
    sifted_key_fraction: float
    strategy: str
    seed: int

    def to_payload(self) -> dict:
        return {
            "n_bits": self.n_bits,
            "eve_bit_accuracy": self.eve_bit_accuracy,
            "eve_basis_accuracy": self.eve_basis_accuracy,
            "induced_qber": self.induced_qber,
            "sifted_key_fraction": self.sifted_key_fraction,
            "strategy": self.strategy,
            "seed": self.seed,
        }


def _require_bb84_bases(box: NonlinearBox):
    psi, phi = _box_bases(box) or (None, None)
    if psi is None:
        raise ConfigurationError("attack requires a basis-discriminating box")
    ok = (psi[0].fidelity(COMPUTATIONAL_BASIS[0]) >= PURITY_MIN
          and psi[1].fidelity(COMPUTATIONAL_BASIS[1]) >= PURITY_MIN
          and phi[0].fidelity(HADAMARD_BASIS[0]) >= PURITY_MIN
          and phi[1].fidelity(HADAMARD_BASIS[1]) >= PURITY_MIN)
    if not ok:
        raise ConfigurationError(
            "attack requires psi = computational and phi = hadamard bases")
    return psi, phi


def run_bb84_attack(box: NonlinearBox, n_bits: int, seed: int,
                    eve_strategy: str = "identify") -> AttackReport:
    """Intercept-resend with a basis-discriminating box in the middle.

    The sender emits random basis/bit states; the eavesdropper routes each
    through the box (whose two output qubits name basis and bit),
    re-prepares, and forwards; the receiver measures in a random basis.
    With `eve_strategy="fixed_basis"` the eavesdropper re-prepares in the
    computational basis regardless of what she identified.
    """
    if eve_strategy not in ("identify", "fixed_basis"):
        raise ConfigurationError(f"unknown eavesdropper strategy {eve_strategy!r}")
    if n_bits == 0:
        return AttackReport(0, 0.0, 0.0, 0.0, 0.0, eve_strategy, seed)
    psi, phi = _require_bb84_bases(box)
    bases = (psi, phi)
    rng = np.random.default_rng(seed)
    povm4 = computational_povm(4)
    meas = (basis_povm(psi), basis_povm(phi))

    # Per (basis, bit): the box's outcome distribution on Alice's state.
    eve_dist = {}
    for a_basis in range(2):
        for a_bit in range(2):
            prep = _local_prep(bases[a_basis][a_bit],
                               f"alice_{a_basis}{a_bit}", box.box_event)
            eve_dist[a_basis, a_bit] = born_probabilities(apply_box(box, prep), povm4)

    # Per (resent state index, receiver basis): the receiver's distribution.
    def resent_state(e_basis, e_bit):
        if eve_strategy == "identify":
            return bases[e_basis][e_bit]
        return COMPUTATIONAL_BASIS[e_bit]

    bob_dist = {}
    for e_basis in range(2):
        for e_bit in range(2):
            for b_basis in range(2):
                rho = resent_state(e_basis, e_bit).projector()
                bob_dist[e_basis, e_bit, b_basis] = born_probabilities(rho, meas[b_basis])

    eve_bit_hits = eve_basis_hits = sifted = errors = 0
    for _ in range(n_bits):
        a_basis = int(rng.integers(2))
        a_bit = int(rng.integers(2))
        idx = int(rng.choice(4, p=eve_dist[a_basis, a_bit]))
        e_basis, e_bit = idx >> 1, idx & 1
        eve_basis_hits += e_basis == a_basis
        eve_bit_hits += e_bit == a_bit
        b_basis = int(rng.integers(2))
        b_bit = int(rng.choice(2, p=bob_dist[e_basis, e_bit, b_basis]))
        if b_basis == a_basis:
            sifted += 1
            errors += b_bit != a_bit
    return AttackReport(
        n_bits=n_bits,
        eve_bit_accuracy=eve_bit_hits / n_bits,
        eve_basis_accuracy=eve_basis_hits / n_bits,
        induced_qber=(errors / sifted) if sifted else 0.0,
        sifted_key_fraction=sifted / n_bits,
        strategy=eve_strategy,
        seed=seed,
    )
