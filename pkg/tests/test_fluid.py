import numpy as np
import pytest
from hypothesis import given, strategies as st

from phmix.dirac import LineField
from phmix.errors import MaterialError, StateValidityError
from phmix.fluid import FluidMaterial, FluidPorts, FluidSystem, eos, \
    sound_speed
from phmix.geometry import IntervalMesh

import oracles

MAT = FluidMaterial(r_gas=0.4, c_v=1.0, friction=0.1, phi_ref=1.0,
                    s_ref=0.0, t_ref=300.0)


def small_system(n=8, friction=0.1):
    mat = FluidMaterial(r_gas=0.4, c_v=1.0, friction=friction, phi_ref=1.0,
                        s_ref=0.0, t_ref=300.0)
    return FluidSystem(IntervalMesh(0.0, 1.0, n), mat, 3)


class TestEos:
    def test_reference_point(self):
        p, t, u = eos(MAT.phi_ref, MAT.s_ref, MAT)
        assert t == pytest.approx(300.0, rel=1e-14)
        assert p == pytest.approx(MAT.r_gas * 300.0 / MAT.phi_ref, rel=1e-14)
        assert u == pytest.approx(MAT.c_v * 300.0, rel=1e-14)

    def test_isentropic_compression_scaling(self):
        _, t0, _ = eos(1.0, 0.2, MAT)
        _, t1, _ = eos(0.5, 0.2, MAT)
        assert t1 / t0 == pytest.approx(2.0 ** (MAT.r_gas / MAT.c_v), rel=1e-13)

    def test_gibbs_relation_by_finite_differences(self):
        # central-difference oracle: du = -p dphi + T ds at random states
        rng = np.random.default_rng(0)
        for _ in range(100):
            phi = rng.uniform(0.3, 3.0)
            s = rng.uniform(-1.0, 1.0)
            p, t, _ = eos(phi, s, MAT)
            du_dphi = oracles.central_difference(
                lambda x: eos(x, s, MAT)[2], phi, 1e-6 * phi)
            du_ds = oracles.central_difference(
                lambda x: eos(phi, x, MAT)[2], s, 1e-6)
            assert abs(du_dphi + p) <= 1e-7 * abs(p)
            assert abs(du_ds - t) <= 1e-7 * abs(t)

    def test_invalid_specific_volume_identified(self):
        with pytest.raises(StateValidityError, match=r"specific volume\[2\]"):
            eos(np.array([1.0, 1.0, -0.5]), np.zeros(3), MAT)

    def test_material_validation(self):
        with pytest.raises(MaterialError, match="r_gas"):
            FluidMaterial(r_gas=0.0, c_v=1.0)
        with pytest.raises(MaterialError, match="friction"):
            FluidMaterial(r_gas=1.0, c_v=1.0, friction=-1.0)

    def test_sound_speed_closed_form(self):
        c = sound_speed(300.0, MAT)
        assert c == pytest.approx(np.sqrt(1.4 * 0.4 * 300.0), rel=1e-14)


class TestRhs:
    def test_equilibrium_fixed_point(self):
        sys = small_system()
        rates, y = sys.rhs(sys.uniform_state(300.0))
        assert np.abs(rates.phi).max() <= 1e-12
        assert np.abs(rates.vel).max() <= 1e-12
        assert np.abs(rates.s).max() <= 1e-12
        assert np.abs(y.values - 300.0).max() <= 1e-12 * 300.0

    def test_output_is_temperature(self):
        sys = small_system()
        rng = np.random.default_rng(1)
        st_ = sys.uniform_state(300.0)
        st_.s = st_.s + 0.2 * rng.standard_normal(sys.n_dofs)
        _, y = sys.rhs(st_)
        assert np.array_equal(y.values, sys.temperature(st_))

    def test_sealed_energy_rate_is_port_power(self):
        sys = small_system()
        rng = np.random.default_rng(2)
        st_ = sys.uniform_state(310.0)
        st_.phi = st_.phi * (1 + 0.1 * rng.standard_normal(sys.n_dofs))
        st_.vel = 0.4 * rng.standard_normal(sys.n_dofs)
        st_.vel[0] = st_.vel[-1] = 0.0
        st_.s = st_.s + 0.1 * rng.standard_normal(sys.n_dofs)
        w = LineField(rng.standard_normal(sys.n_dofs), sys.mesh)
        rates, y = sys.rhs(st_, w)
        ports = FluidPorts(w_in=w, y_out=y)
        p, t, _ = eos(st_.phi, st_.s, sys.material)
        dh = float(sys.mass @ (-p * rates.phi + st_.vel * rates.vel
                               + t * rates.s))
        port = float(ports.y_out.values
                     @ (sys.mass_consistent @ ports.w_in.values))
        assert abs(dh - port) <= 1e-10 * (1 + abs(port))

    def test_friction_produces_entropy_conserves_energy(self):
        sys = small_system(friction=0.5)
        rng = np.random.default_rng(3)
        st_ = sys.uniform_state(300.0)
        st_.vel = 0.5 * rng.standard_normal(sys.n_dofs)
        st_.vel[0] = st_.vel[-1] = 0.0
        rates, _ = sys.rhs(st_)
        p, t, _ = eos(st_.phi, st_.s, sys.material)
        dh = float(sys.mass @ (-p * rates.phi + st_.vel * rates.vel
                               + t * rates.s))
        ds_total = float(sys.mass @ rates.s)
        assert abs(dh) <= 1e-10 * (1 + sys.hamiltonian(st_))
        assert ds_total >= 0.0
        assert np.all(sys.material.friction * st_.vel ** 2 / t >= 0.0)
        assert ds_total == pytest.approx(sys.entropy_production(st_),
                                         rel=1e-12)

    def test_sealed_ends_hold(self):
        sys = small_system()
        rng = np.random.default_rng(4)
        st_ = sys.uniform_state(300.0)
        st_.s = st_.s + 0.3 * rng.standard_normal(sys.n_dofs)
        rates, _ = sys.rhs(st_)
        assert rates.vel[0] == 0.0 and rates.vel[-1] == 0.0

    def test_periodic_channel_rejected(self):
        with pytest.raises(MaterialError, match="non-periodic"):
            FluidSystem(IntervalMesh(0, 1, 8, periodic=True), MAT, 3)


class TestHamiltonian:
    def test_rest_state_closed_form(self):
        sys = small_system()
        h = sys.hamiltonian(sys.uniform_state(300.0))
        assert h == pytest.approx(MAT.c_v * 300.0 * 1.0, rel=1e-13)

    def test_kinetic_part_scales_quadratically(self):
        sys = small_system()
        st1 = sys.uniform_state(300.0, velocity=0.5)
        st2 = sys.uniform_state(300.0, velocity=1.0)
        rest = sys.hamiltonian(sys.uniform_state(300.0))
        k1 = sys.hamiltonian(st1) - rest
        k2 = sys.hamiltonian(st2) - rest
        assert k2 == pytest.approx(4.0 * k1, rel=1e-12)

    @given(st.floats(100.0, 900.0), st.floats(0.2, 4.0))
    def test_uniform_state_hits_requested_temperature(self, t0, phi0):
        sys = small_system()
        state = sys.uniform_state(t0, phi=phi0)
        assert np.abs(sys.temperature(state) - t0).max() <= 1e-10 * t0


def test_grad_pairing_symmetric_part_is_boundary_only():
    sys = small_system(n=6)
    sym = sys.grad_pairing + sys.grad_pairing.T
    expected = np.zeros_like(sym)
    expected[0, 0] = -1.0
    expected[-1, -1] = 1.0
    assert np.abs(sym - expected).max() <= 1e-13


def test_grad_pairing_matches_reference_quadrature():
    sys = small_system(n=4)
    nodes = sys.mesh.nodes
    h = sys.mesh.h
    for i in range(sys.n_dofs):
        for j in range(sys.n_dofs):
            ref = oracles.integrate(
                lambda x: oracles.hat(x, nodes[i], h)
                * oracles.hat_deriv(x, nodes[j], h),
                0.0, 1.0, pieces=4)
            assert sys.grad_pairing[i, j] == pytest.approx(ref, abs=1e-13)
