import numpy as np
import pytest

from nlbox.boxes import BrunBoxConfig, NonlinearBox, Semantics
from nlbox.preparations import (
    MembershipPolicy,
    PolicyKind,
    Preparation,
    Provenance,
    ProvenanceTag,
    SpacetimeEvent,
)
from nlbox.qcore import COMPUTATIONAL_BASIS, HADAMARD_BASIS

BOX_EVENT = SpacetimeEvent(1.0, 0.0)
FAR_EVENT = SpacetimeEvent(0.0, 10.0)

SWAP = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1],
                 [0, 0, 1, 0]], dtype=complex)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def brun_config():
    return BrunBoxConfig(COMPUTATIONAL_BASIS, HADAMARD_BASIS)


def make_box(config, semantics=Semantics.DECOMPOSITION,
             policy=None, box_event=BOX_EVENT):
    policy = policy or MembershipPolicy(PolicyKind.NAIVE_PURE)
    return NonlinearBox(config=config, box_event=box_event,
                        semantics=semantics, membership=policy)


def local_prep(state_density, label="p", record=BOX_EVENT,
               tag=ProvenanceTag.LOCAL_DETERMINISTIC):
    return Preparation(ensemble=((1.0, state_density),),
                       provenance=Provenance(tag, (record,)),
                       label=label)


def ensemble_prep(members, label="p", record=BOX_EVENT,
                  tag=ProvenanceTag.LOCAL_ENSEMBLE):
    return Preparation(ensemble=tuple(members),
                       provenance=Provenance(tag, (record,)),
                       label=label)


def remote_prep(state_density, unconditioned, label="r", record=FAR_EVENT):
    return Preparation(ensemble=((1.0, state_density),),
                       provenance=Provenance(ProvenanceTag.REMOTE_STEERED, (record,)),
                       label=label,
                       unconditioned=tuple(unconditioned))
