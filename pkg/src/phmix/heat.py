"""Entropy-formulation heat conduction on the solid box.

State is the nodal entropy density s.  The constitutive law T(s) =
t_ref * exp(s / (rho c)) keeps temperature positive for every real s and
satisfies dq/ds = T for the energy density q(s) = rho c (T(s) - t_ref).

Discretization: Q1 Galerkin with a lumped (row-sum) mass.  The fluxes are
built from the interpolated temperature, and the entropy production term is
evaluated at the same quadrature points, so the discrete energy rate
sum_i m_i T_i ds_i/dt reduces exactly to the boundary port power: interior
flux work and production cancel pointwise at the quadrature points.  The
discrete Hamiltonian is the matching nodal quadrature sum_i m_i q(s_i).

The coupling face takes a temperature input (enforced nodally on the trace
through the entropy variable); the conjugate output, the negative normal
entropy flux, is recovered variationally from the boundary-row residuals.
All other faces are adiabatic unless the external face temperature is set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dirac import SurfaceField
from .errors import MaterialError, StateValidityError
from .fem import SurfaceBasis, VolumeBasis, assemble_mass, lumped_mass
from .geometry import SolidDomain, quadrature_rule


@dataclass(frozen=True)
class HeatMaterial:
    """Solid material: density, specific heat, conductivity and the
    reference temperature of the entropy origin."""

    rho: float
    c: float
    conductivity: float
    t_ref: float

    def __post_init__(self):
        for name in ("rho", "c", "conductivity", "t_ref"):
            if not getattr(self, name) > 0:
                raise MaterialError(f"heat material {name} must be positive, "
                                    f"got {getattr(self, name)}")

    @property
    def rho_c(self) -> float:
        return self.rho * self.c


def temperature_of_entropy(s, mat: HeatMaterial):
    """T(s) = t_ref * exp(s / (rho c)); positive for all real s."""
    return mat.t_ref * np.exp(np.asarray(s, dtype=float) / mat.rho_c)


def entropy_of_temperature(t, mat: HeatMaterial):
    """Inverse constitutive law, s = rho c * log(T / t_ref)."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        node = int(np.argmax(~(t > 0)))
        raise StateValidityError("temperature", node, float(t.flat[node]))
    return mat.rho_c * np.log(t / mat.t_ref)


def energy_density(s, mat: HeatMaterial):
    """Thermal energy density q(s) with q(0) = 0 and dq/ds = T(s)."""
    return mat.rho_c * (temperature_of_entropy(s, mat) - mat.t_ref)


@dataclass
class HeatState:
    """Nodal entropy density on the solid domain."""

    s: np.ndarray

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=float)

    def copy(self) -> "HeatState":
        return HeatState(self.s.copy())


@dataclass
class HeatPorts:
    """Coupling-face port pair: temperature input and negative normal
    entropy-flux output, both on the trace surface."""

    u_T: SurfaceField
    v_out: SurfaceField


@dataclass
class HeatEffortFlow:
    """Efforts and flows of the conduction structure at the quadrature
    points: temperatures, entropy flux, temperature gradient and the
    production pair.  Vector quantities have shape (n_cells, nq, 3)."""

    e_s: np.ndarray      # temperature
    e_phi: np.ndarray    # entropy flux
    f_phi: np.ndarray    # negative temperature gradient
    f_sigma: np.ndarray  # temperature (production flow)
    e_sigma: np.ndarray  # -grad(1/T) . heat flux
    phi_q: np.ndarray    # heat flux


class HeatSystem:
    """Semi-discrete conduction operator on a solid domain."""

    def __init__(self, domain: SolidDomain, material: HeatMaterial,
                 quad_degree: int = 3):
        self.domain = domain
        self.material = material
        self.quad = quadrature_rule(quad_degree)
        self.basis = VolumeBasis(domain)
        tab = self.basis.tables(self.quad)
        self.dofmap = self.basis.cell_dofs()
        self._values_w = tab.values * tab.wdet[:, None]
        self._grads_w = tab.gradients * tab.wdet[:, None, None]
        self._values = tab.values
        self._grads = tab.gradients
        self._wdet = tab.wdet
        self.mass = lumped_mass(self.basis, self.quad)

        self.boundary = domain.coupling_boundary()
        self.surface = SurfaceBasis(self.boundary)
        self.surface_mass = assemble_mass(self.surface, self.quad)
        self._surface_lu = spla.splu(sp.csc_matrix(self.surface_mass))
        self.coupling_dofs = domain.face_dofs("coupling")
        self.external_dofs = domain.face_dofs("external")

    @property
    def n_dofs(self) -> int:
        return self.basis.n_dofs

    def uniform_state(self, temperature: float) -> HeatState:
        s0 = entropy_of_temperature(temperature, self.material)
        return HeatState(np.full(self.n_dofs, float(s0)))

    def temperature(self, state: HeatState) -> np.ndarray:
        return temperature_of_entropy(state.s, self.material)

    def hamiltonian(self, state: HeatState) -> float:
        return float(self.mass @ energy_density(state.s, self.material))

    def total_entropy(self, state: HeatState) -> float:
        return float(self.mass @ state.s)

    def _quad_fields(self, s: np.ndarray):
        """Temperature and its gradient at every quadrature point."""
        if not np.all(np.isfinite(s)):
            node = int(np.argmax(~np.isfinite(s)))
            raise StateValidityError("entropy", node, float(s[node]))
        t_nodal = temperature_of_entropy(s, self.material)
        tc = t_nodal[self.dofmap]
        tq = tc @ self._values.T
        gq = np.einsum("qbd,cb->cqd", self._grads, tc)
        return tq, gq

    def assemble_loads(self, s: np.ndarray) -> np.ndarray:
        """Galerkin load vector: flux work plus entropy production.

        Both terms use the interpolated temperature at the same quadrature
        points, which makes the temperature-weighted sum of the loads vanish
        identically (the flux work against the temperature gradient equals
        minus the production heating).
        """
        lam = self.material.conductivity
        tq, gq = self._quad_fields(s)
        flux = -lam * gq / tq[:, :, None]
        prod = lam * np.einsum("cqd,cqd->cq", gq, gq) / tq ** 2
        local = np.einsum("qbd,cqd->cb", self._grads_w, flux) \
            + prod @ self._values_w
        return np.bincount(self.dofmap.ravel(), weights=local.ravel(),
                           minlength=self.n_dofs)

    def entropy_production(self, state: HeatState) -> float:
        """Total production integral(lambda |grad T|^2 / T^2) >= 0."""
        lam = self.material.conductivity
        tq, gq = self._quad_fields(state.s)
        prod = lam * np.einsum("cqd,cqd->cq", gq, gq) / tq ** 2
        return float(np.einsum("q,cq->", self._wdet, prod))

    def apply_closure(self, state: HeatState) -> HeatEffortFlow:
        """Evaluate all efforts and flows at the quadrature points.

        Fourier's law enters as e_phi = lambda f_phi / e_s and the heat-flux
        pair as phi_q = e_s * e_phi, so both closure relations hold to
        round-off at every point.
        """
        lam = self.material.conductivity
        tq, gq = self._quad_fields(state.s)
        f_phi = -gq
        e_phi = lam * f_phi / tq[:, :, None]
        phi_q = tq[:, :, None] * e_phi
        # e_sigma = -grad(1/T) . phi_q = (grad T / T^2) . phi_q
        e_sigma = np.einsum("cqd,cqd->cq", gq / tq[:, :, None] ** 2, phi_q)
        return HeatEffortFlow(e_s=tq, e_phi=e_phi, f_phi=f_phi,
                              f_sigma=tq, e_sigma=e_sigma, phi_q=phi_q)

    def solve_surface(self, b: np.ndarray) -> np.ndarray:
        return self._surface_lu.solve(b)

    def rhs(self, state: HeatState, u_T: SurfaceField | None = None,
            ext_temperature: float | None = None
            ) -> tuple[np.ndarray, SurfaceField]:
        """Semi-discrete rate of the entropy field and the recovered
        coupling-face output.

        With a temperature input the trace entropy is pinned to match it and
        held (quasi-static port); the conjugate output -(entropy flux . n)
        is recovered from the boundary-row residuals through the surface
        mass matrix.  Faces without a port are adiabatic.
        """
        s = state.s.copy()
        if u_T is not None:
            if np.any(u_T.values <= 0):
                node = int(np.argmax(~(u_T.values > 0)))
                raise StateValidityError("boundary temperature", node,
                                         float(u_T.values[node]))
            s[self.coupling_dofs] = entropy_of_temperature(u_T.values,
                                                           self.material)
        if ext_temperature is not None:
            s[self.external_dofs] = entropy_of_temperature(ext_temperature,
                                                           self.material)
        loads = self.assemble_loads(s)
        ds_dt = loads / self.mass
        if u_T is not None:
            ds_dt[self.coupling_dofs] = 0.0
            v = self.solve_surface(-loads[self.coupling_dofs])
        else:
            v = np.zeros(self.boundary.n_nodes)
        if ext_temperature is not None:
            ds_dt[self.external_dofs] = 0.0
        return ds_dt, SurfaceField(v, self.boundary)

    def trace_temperature(self, state: HeatState) -> SurfaceField:
        """Temperature of the coupling-face nodes as a surface field."""
        t = temperature_of_entropy(state.s[self.coupling_dofs], self.material)
        return SurfaceField(t, self.boundary)


def heat_rhs(system: HeatSystem, state: HeatState,
             u_T: SurfaceField | None = None,
             ext_temperature: float | None = None):
    return system.rhs(state, u_T, ext_temperature)


def heat_hamiltonian(system: HeatSystem, state: HeatState) -> float:
    return system.hamiltonian(state)


def apply_closure(system: HeatSystem, state: HeatState) -> HeatEffortFlow:
    return system.apply_closure(state)
