import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwedge import packets as pk

import oracles


def make_packet(cx, cy, px, py, width, phase=0.0, birth=0.0):
    return pk.GaussianPacket(
        center=[cx, cy], momentum=[px, py], width=width, global_phase=phase, birth_time=birth
    )


@st.composite
def packets_(draw):
    f = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    return make_packet(
        draw(f(-3, 3)), draw(f(-3, 3)),
        draw(f(-4, 4)), draw(f(-4, 4)),
        draw(f(0.4, 2.0)), draw(f(-np.pi, np.pi)), draw(f(-1.0, 1.0)),
    )


def symmetric_state(scenario):
    a = 2**-0.5
    return pk.Superposition(terms=((a, scenario.packet_c()), (a, scenario.packet_d())))


class TestConstruction:
    def test_width_must_be_positive(self):
        with pytest.raises(ValueError):
            make_packet(0, 0, 1, 0, width=0.0)
        with pytest.raises(ValueError):
            make_packet(0, 0, 1, 0, width=-1.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            make_packet(np.nan, 0, 1, 0, width=1.0)

    def test_empty_superposition_rejected(self):
        with pytest.raises(ValueError):
            pk.Superposition(terms=())

    def test_mirror_is_exact(self):
        p = make_packet(-5.66, 5.66, 3.5, -3.5, 1.0)
        m = p.mirrored()
        assert m.center[1] == -p.center[1]
        assert m.momentum[1] == -p.momentum[1]
        assert m.center[0] == p.center[0]


class TestEvolution:
    def test_identity_at_birth_time(self):
        p = make_packet(1.0, -2.0, 3.0, 0.5, 1.3, phase=0.2, birth=0.7)
        ev = pk.evolve_packet(p, 0.7)
        assert np.array_equal(ev.center, p.center)
        assert ev.sigma_t == p.width
        x = np.array([[1.2, -1.7]])
        direct = pk.packet_value(p, x, 0.7)
        assert np.allclose(ev.value(x), direct, rtol=0, atol=1e-15)

    def test_center_moves_at_group_velocity(self):
        p = make_packet(0.0, 0.0, 5.0, 0.0, 1.0)
        ev = pk.evolve_packet(p, 2.0)
        assert np.allclose(ev.center, [10.0, 0.0], atol=1e-14)

    def test_backwards_evolution_rejected(self):
        p = make_packet(0, 0, 1, 0, 1.0, birth=1.0)
        with pytest.raises(ValueError):
            pk.evolve_packet(p, 0.5)

    def test_spread_against_spectral_oracle(self):
        # sigma = 1, dt = 2: measure the position std-dev on a 512^2 grid
        # propagated by the spectral free-evolution oracle.
        p = make_packet(0.0, 0.0, 5.0, 0.0, 1.0)
        xs, pts = oracles.grid_2d(28.0, 512)
        vals0 = pk.packet_value(p, pts, 0.0)
        # remove the drift so the packet stays on the grid
        vals0_rest = pk.packet_value(make_packet(0, 0, 0, 0, 1.0), pts, 0.0)
        vt = oracles.spectral_free_evolution(vals0_rest, xs, 2.0)
        dens = np.abs(vt) ** 2
        dens /= dens.sum()
        X = pts[..., 0]
        mx = (dens * X).sum()
        sigma_grid = np.sqrt((dens * (X - mx) ** 2).sum())
        sigma_cf = pk.evolve_packet(p, 2.0).sigma_t
        assert abs(sigma_grid - sigma_cf) / sigma_cf < 1e-6

    @pytest.mark.parametrize("seed", range(6))
    def test_pointwise_against_spectral_oracle(self, seed):
        rng = np.random.default_rng(seed)
        p = make_packet(
            rng.uniform(-2, 2), rng.uniform(-2, 2),
            rng.uniform(-3, 3), rng.uniform(-3, 3),
            rng.uniform(0.6, 1.6), rng.uniform(-3, 3),
        )
        t = rng.uniform(0.2, 2.0)
        xs, pts = oracles.grid_2d(30.0, 512)
        v0 = pk.packet_value(p, pts, 0.0)
        vt = oracles.spectral_free_evolution(v0, xs, t)
        ref = pk.packet_value(p, pts, t)
        mask = np.abs(ref) > 1e-6 * np.abs(ref).max()
        rel = np.abs(vt[mask] - ref[mask]) / np.abs(ref[mask])
        assert rel.max() < 1e-6


class TestEvaluate:
    def test_single_packet_peak_at_center(self):
        p = make_packet(0.3, -0.8, 2.0, 1.0, 1.0)
        psi = pk.Superposition(terms=((1.0, p),))
        t = 1.4
        ev = pk.evolve_packet(p, t)
        xs = np.linspace(-8, 8, 61)
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        grid_vals = np.abs(pk.evaluate(psi, np.stack([X, Y], -1), t))
        peak = np.abs(pk.evaluate(psi, ev.center, t))
        assert peak >= grid_vals.max()

    def test_symmetric_state_equal_moduli_on_plane(self, scenario):
        psi = symmetric_state(scenario)
        x = np.array([[0.5, 0.0], [-3.0, 0.0], [2.0, 0.0]])
        for t in (scenario.t1, scenario.t2, scenario.t4):
            va = pk.packet_value(psi.terms[0][1], x, t)
            vb = pk.packet_value(psi.terms[1][1], x, t)
            assert np.array_equal(np.abs(va), np.abs(vb))

    def test_norm_of_initial_state_by_quadrature(self, scenario):
        psi = symmetric_state(scenario)
        assert abs(oracles.quad_norm(psi, scenario.t1) - 1.0) < 1e-8

    def test_norm_conserved_at_grid_times(self, scenario):
        psi = symmetric_state(scenario)
        for t in scenario.times[1:]:
            assert abs(pk.norm(psi, t) - 1.0) < 1e-10
            assert abs(oracles.quad_norm(psi, t) - 1.0) < 1e-8


class TestGradient:
    def test_log_derivative_at_center_is_momentum(self):
        p = make_packet(1.0, 2.0, -1.5, 0.7, 0.9)
        psi = pk.Superposition(terms=((1.0, p),))
        t = 1.1
        ev = pk.evolve_packet(p, t)
        x = ev.center.reshape(1, 2)
        ratio = pk.gradient(psi, x, t)[0] / pk.evaluate(psi, x, t)[0]
        assert np.allclose(ratio.imag, p.momentum, atol=1e-12)
        assert np.allclose(ratio.real, 0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(4))
    def test_finite_difference_agreement(self, seed, scenario):
        rng = np.random.default_rng(seed)
        psi = symmetric_state(scenario)
        t = rng.uniform(scenario.t1, scenario.t4)
        # points near the packets, where |psi| is healthy
        centers = [pk.evolve_packet(p, t).center for _, p in psi.terms]
        x = np.concatenate(
            [c + rng.normal(scale=1.0, size=(50, 2)) for c in centers], axis=0
        )
        val = pk.evaluate(psi, x, t)
        keep = np.abs(val) > 1e-6 * np.abs(val).max()
        g = pk.gradient(psi, x, t)[keep]
        fd = oracles.fd_gradient(psi, x[keep], t)
        assert np.max(np.abs(g - fd) / np.abs(g)) < 1e-6

    def test_plane_normal_gradient_exactly_zero(self, scenario):
        psi = symmetric_state(scenario)
        x = np.stack([np.linspace(-10, 10, 41), np.zeros(41)], axis=-1)
        for t in scenario.times[1:]:
            gy = pk.gradient(psi, x, t)[..., 1]
            assert np.all(gy == 0.0)


class TestOverlap:
    def test_self_overlap_is_one(self):
        p = make_packet(0.5, -1.0, 2.0, 3.0, 1.2, phase=0.4)
        assert abs(pk.overlap(p, p, 1.0) - 1.0) < 1e-12

    def test_far_packets_orthogonal(self):
        # equal momenta: |<a|b>| = exp(-sep^2 / (8 sigma^2)) is the tail bound
        a = make_packet(0.0, 6.0, 1.0, 0.0, 1.0)
        b = make_packet(0.0, -6.0, 1.0, 0.0, 1.0)
        ov12 = abs(pk.overlap(a, b, 0.0))
        assert ov12 <= np.exp(-(12.0**2) / 8.0) * (1 + 1e-10)
        a16 = make_packet(0.0, 8.0, 1.0, 0.0, 1.0)
        b16 = make_packet(0.0, -8.0, 1.0, 0.0, 1.0)
        assert abs(pk.overlap(a16, b16, 0.0)) < 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_against_quadrature(self, seed):
        rng = np.random.default_rng(100 + seed)
        a = make_packet(*rng.uniform(-2, 2, 2), *rng.uniform(-2, 2, 2),
                        rng.uniform(0.5, 1.8), rng.uniform(-3, 3), 0.0)
        b = make_packet(*rng.uniform(-2, 2, 2), *rng.uniform(-2, 2, 2),
                        rng.uniform(0.5, 1.8), rng.uniform(-3, 3), 0.0)
        t = rng.uniform(0.0, 2.0)
        assert abs(pk.overlap(a, b, t) - oracles.quad_overlap(a, b, t)) < 1e-8

    @given(a=packets_(), b=packets_(), t1=st.floats(1.0, 4.0), t2=st.floats(4.0, 9.0))
    @settings(max_examples=60, deadline=None)
    def test_unitarity_overlap_time_independent(self, a, b, t1, t2):
        o1 = pk.overlap(a, b, t1)
        o2 = pk.overlap(a, b, t2)
        assert abs(o1 - o2) < 1e-10
        assert abs(o1) <= 1.0 + 1e-12

    @given(p=packets_(), t=st.floats(1.0, 5.0))
    @settings(max_examples=60, deadline=None)
    def test_closed_form_norm_is_one(self, p, t):
        psi = pk.Superposition(terms=((1.0, p),))
        assert abs(pk.norm(psi, t) - 1.0) < 1e-10
