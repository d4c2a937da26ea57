import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flagstat.exceptions import CutLocusError, DomainError
from flagstat.grassmann import principal_cosines, projector_from_frame
from flagstat.stiefel import check_frame, geodesic_decomposition, holonomy

from conftest import random_orthogonal, random_projector


def frame_and_target(d, q, rng):
    while True:
        U = random_orthogonal(d, rng)[:, :q]
        P = U @ U.T
        R = random_projector(d, q, rng)
        if principal_cosines(P, R)[-1] > 1e-3:
            return U, P, R


class TestHolonomy:
    def test_zero_distance(self, rng):
        U = random_orthogonal(5, rng)[:, :2]
        P = U @ U.T
        np.testing.assert_allclose(holonomy(P, P, U), U, atol=1e-14)

    def test_frame_not_in_fiber(self, rng):
        U = random_orthogonal(4, rng)[:, :2]
        with pytest.raises(DomainError):
            holonomy(random_projector(4, 2, rng), random_projector(4, 2, rng), U)

    def test_cut_locus(self):
        U = np.array([[1.0], [0.0]])
        with pytest.raises(CutLocusError):
            holonomy(U @ U.T, np.diag([0.0, 1.0]), U)

    def test_rotation_in_plane(self):
        # a line transported in the plane it rotates in keeps orientation
        theta = 0.9
        U = np.array([[math.cos(theta)], [math.sin(theta)]])
        V = holonomy(U @ U.T, np.diag([1.0, 0.0]), U)
        np.testing.assert_allclose(V, [[1.0], [0.0]], atol=1e-13)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 8), st.data())
    def test_property_fiber_and_inverse(self, d, data):
        q = data.draw(st.integers(1, min(3, d - 1)))
        rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 32 - 1)))
        U, P, R = frame_and_target(d, q, rng)
        V = holonomy(P, R, U)
        assert np.linalg.norm(V.T @ V - np.eye(q)) < 1e-10
        assert np.linalg.norm(V @ V.T - R) < 1e-8
        assert np.linalg.norm(holonomy(R, P, V) - U) < 1e-8

    def test_equivariance(self, rng):
        for _ in range(30):
            U, P, R = frame_and_target(5, 2, rng)
            Q = random_orthogonal(5, rng)
            np.testing.assert_allclose(holonomy(Q @ P @ Q.T, Q @ R @ Q.T, Q @ U),
                                       Q @ holonomy(P, R, U), atol=1e-9)

    def test_right_equivariance(self, rng):
        # transport commutes with a change of basis inside the fiber
        for _ in range(30):
            U, P, R = frame_and_target(5, 2, rng)
            H = random_orthogonal(2, rng)
            np.testing.assert_allclose(holonomy(P, R, U @ H), holonomy(P, R, U) @ H, atol=1e-9)


class TestGeodesicDecomposition:
    def test_frame_already_in_fiber(self, rng):
        U = random_orthogonal(4, rng)[:, :2]
        R = U @ U.T
        P, V = geodesic_decomposition(U, R)
        np.testing.assert_allclose(P, R, atol=1e-14)
        np.testing.assert_allclose(V, U, atol=1e-13)

    def test_recomposition(self, rng):
        for _ in range(50):
            U, _, R = frame_and_target(6, 3, rng)
            P, V = geodesic_decomposition(U, R)
            np.testing.assert_allclose(P, projector_from_frame(U), atol=1e-14)
            np.testing.assert_allclose(V @ V.T, R, atol=1e-8)
            np.testing.assert_allclose(holonomy(R, P, V), U, atol=1e-8)

    @pytest.mark.parametrize("theta", [0.3, -0.7, 1.3])
    def test_two_by_two(self, theta):
        U = np.array([math.cos(theta), math.sin(theta)])
        P, V = geodesic_decomposition(U, np.diag([1.0, 0.0]))
        np.testing.assert_allclose(P, np.outer(U, U), atol=1e-15)
        # the 2x2 transport rotates by -theta, so V keeps the sign of cos(theta)
        np.testing.assert_allclose(V, [[math.copysign(1.0, math.cos(theta))], [0.0]], atol=1e-13)

    def test_cut(self):
        with pytest.raises(CutLocusError):
            geodesic_decomposition(np.array([0.0, 1.0]), np.diag([1.0, 0.0]))

    def test_check_frame(self):
        with pytest.raises(DomainError):
            check_frame(np.ones((3, 2)))
        with pytest.raises(DomainError):
            check_frame(np.ones((2, 3)))
