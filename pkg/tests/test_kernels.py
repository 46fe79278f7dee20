"""Backend equivalence: the compiled kernels must match the numpy ones."""

import numpy as np
import pytest

from kinetostat._kernels import available_backends, backend_name
from conftest import random_chain, random_state_arrays

BACKENDS = available_backends()

needs_compiled = pytest.mark.skipif(
    "compiled" not in BACKENDS, reason="compiled extension not built")


def test_selected_backend_is_known():
    assert backend_name() in BACKENDS


@needs_compiled
def test_forward_matches_pure():
    rng = np.random.default_rng(7)
    for _ in range(20):
        chain = random_chain(rng)
        q, theta = random_state_arrays(rng, chain, q_scale=0.8, theta_scale=0.05)
        r_p, p_p = BACKENDS["pure"].forward(chain.program, q, theta)
        r_c, p_c = BACKENDS["compiled"].forward(chain.program, q, theta)
        np.testing.assert_allclose(r_c, r_p, rtol=0, atol=1e-14)
        np.testing.assert_allclose(p_c, p_p, rtol=0, atol=1e-11)


@needs_compiled
def test_jacobian_matches_pure():
    rng = np.random.default_rng(8)
    for _ in range(20):
        chain = random_chain(rng)
        q, theta = random_state_arrays(rng, chain, q_scale=0.8, theta_scale=0.05)
        out_p = BACKENDS["pure"].jacobian(chain.program, q, theta)
        out_c = BACKENDS["compiled"].jacobian(chain.program, q, theta)
        for a, b in zip(out_c, out_p):
            scale = max(np.abs(b).max(initial=0.0), 1.0)
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * scale)


@needs_compiled
def test_empty_chain():
    from kinetostat import KinematicChain

    chain = KinematicChain([])
    empty = np.zeros(0)
    for impl in BACKENDS.values():
        r, p = impl.forward(chain.program, empty, empty)
        np.testing.assert_array_equal(r, np.eye(3))
        np.testing.assert_array_equal(p, np.zeros(3))
        jq, jt, _, _ = impl.jacobian(chain.program, empty, empty)
        assert jq.shape == (6, 0) and jt.shape == (6, 0)
