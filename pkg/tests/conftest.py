"""Shared builders for randomized chains and springs."""

from __future__ import annotations

import numpy as np
import pytest

from kinetostat import (
    ActuatedJoint,
    BeamSegment,
    KinematicChain,
    PassiveJoint,
    RigidLink,
    VirtualSpring6,
    beam_compliance,
    elementary,
)

AXES = ("x", "y", "z")


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_spd6(rng, translational=3.0e4, rotational=6.0e6):
    """Dense SPD 6x6 spring stiffness with mixed units."""
    a = rng.normal(size=(6, 6))
    m = a @ a.T + 6.0 * np.eye(6)
    d = np.sqrt(np.diag([translational] * 3 + [rotational] * 3))
    k = d @ m @ d
    return 0.5 * (k + k.T)


def random_beam(rng, length=None):
    side = rng.uniform(20.0, 50.0)
    return BeamSegment(
        length=length if length is not None else rng.uniform(120.0, 300.0),
        elastic_modulus=70000.0,
        shear_modulus=26300.0,
        area=side * side,
        I_y=side**4 / 12.0,
        I_z=side**4 / 12.0,
        J_torsion=0.1406 * side**4,
    )


def random_chain(rng, n_passive_max=3, dense_springs=True):
    """Random short chain: drive, springs, passive joints, rigid links."""
    elements = [
        ActuatedJoint("prismatic", AXES[rng.integers(3)],
                      rng.uniform(50.0, 150.0), rng.uniform(2.0e4, 8.0e4)),
    ]
    spring = (random_spd6(rng) if dense_springs
              else beam_compliance(random_beam(rng)).stiffness())
    elements.append(VirtualSpring6(spring))
    for _ in range(int(rng.integers(0, n_passive_max + 1))):
        elements.append(PassiveJoint("revolute", AXES[rng.integers(3)]))
        elements.append(RigidLink(elementary("translation", "x", rng.uniform(80.0, 280.0))))
    spring2 = (random_spd6(rng) if dense_springs
               else beam_compliance(random_beam(rng)).stiffness())
    elements.append(VirtualSpring6(spring2))
    return KinematicChain(elements)


def random_uu_chain(rng):
    """Drive + foot spring + U-joint + elastic leg + U-joint.

    A translational-architecture chain: the passive U-joints keep the
    transmitted moment small, which keeps the loaded-stiffness model
    close to the exact equilibrium derivative.
    """
    leg = rng.uniform(200.0, 320.0)
    elements = [
        ActuatedJoint("prismatic", AXES[rng.integers(3)],
                      rng.uniform(60.0, 140.0), rng.uniform(2.0e3, 8.0e3)),
        VirtualSpring6(beam_compliance(random_beam(rng, length=80.0)).stiffness()),
        PassiveJoint("revolute", "z"),
        PassiveJoint("revolute", "y"),
        RigidLink(elementary("translation", "x", leg)),
        VirtualSpring6(beam_compliance(random_beam(rng, length=leg)).stiffness()),
        PassiveJoint("revolute", "y"),
        PassiveJoint("revolute", "z"),
    ]
    return KinematicChain(elements)


def random_state_arrays(rng, chain, q_scale=0.3, theta_scale=1.0e-3):
    q = rng.normal(0.0, q_scale, chain.n_passive)
    theta = rng.normal(0.0, theta_scale, chain.n_virtual)
    return q, theta


def column_block_error(candidate, reference):
    """Worst per-column error, rows split into force and moment blocks.

    Each column is compared against the largest column norm of its row
    block, so near-zero columns of rank-deficient chains do not blow up
    the metric and mixed units stay separated.
    """
    worst = 0.0
    for rows in (slice(0, 3), slice(3, 6)):
        ref = max(np.linalg.norm(reference[rows, k]) for k in range(reference.shape[1]))
        ref = max(ref, 1e-300)
        for k in range(reference.shape[1]):
            err = np.linalg.norm((candidate - reference)[rows, k]) / ref
            worst = max(worst, err)
    return worst
