"""1D compressible coolant channel in entropy formulation.

State: specific volume phi, velocity and specific entropy on the channel
nodes.  The ideal-gas law realizes the Gibbs relation du = -p dphi + T ds in
closed form; friction enters as the matched pair -f v / T (momentum row) and
+f v / T (entropy row), so it moves kinetic energy into heat without creating
or destroying energy.

Discretization: collocated P1 fields with a lumped mass on the left.  The
derivative pairing integral(phi_i dphi_j/dz) is assembled once; its symmetric
part is supported on the two endpoints only, so with sealed ends (v = 0 at
both) the semi-discrete energy rate reduces exactly to the distributed port
power <T, w> taken with the consistent line mass.  Friction loss and heating
cancel nodally.  The Hamiltonian is the matching nodal quadrature
sum_i m_i (v_i^2 / 2 + c_v T_i).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dirac import LineField
from .errors import MaterialError, StateValidityError
from .fem import LineBasis, assemble_mass, lumped_mass
from .geometry import IntervalMesh, quadrature_rule


@dataclass(frozen=True)
class FluidMaterial:
    """Ideal-gas coolant: gas constant, heat capacity at constant volume,
    friction coefficient and the reference point of the entropy scale."""

    r_gas: float
    c_v: float
    friction: float = 0.0
    phi_ref: float = 1.0
    s_ref: float = 0.0
    t_ref: float = 1.0

    def __post_init__(self):
        for name in ("r_gas", "c_v", "phi_ref", "t_ref"):
            if not getattr(self, name) > 0:
                raise MaterialError(f"fluid material {name} must be positive, "
                                    f"got {getattr(self, name)}")
        if self.friction < 0:
            raise MaterialError(f"friction must be >= 0, got {self.friction}")

    @property
    def gamma(self) -> float:
        return 1.0 + self.r_gas / self.c_v


def eos(phi, s, mat: FluidMaterial):
    """Pressure, temperature and internal energy of the ideal gas.

    T = t_ref (phi_ref/phi)^(r/c_v) exp((s - s_ref)/c_v), p = r T / phi,
    u = c_v T; these satisfy du/dphi = -p and du/ds = T identically.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(~(phi > 0)):
        node = int(np.argmax(~(phi > 0)))
        raise StateValidityError("specific volume", node, float(phi.flat[node]))
    t = mat.t_ref * (mat.phi_ref / phi) ** (mat.r_gas / mat.c_v) \
        * np.exp((s - mat.s_ref) / mat.c_v)
    p = mat.r_gas * t / phi
    return p, t, mat.c_v * t


def sound_speed(temperature: float, mat: FluidMaterial) -> float:
    """Acoustic propagation speed sqrt(gamma r T) at unit specific volume."""
    return float(np.sqrt(mat.gamma * mat.r_gas * temperature))


@dataclass
class FluidState:
    """Nodal (specific volume, velocity, specific entropy) fields."""

    phi: np.ndarray
    vel: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=float)
        self.vel = np.asarray(self.vel, dtype=float)
        self.s = np.asarray(self.s, dtype=float)

    def copy(self) -> "FluidState":
        return FluidState(self.phi.copy(), self.vel.copy(), self.s.copy())


@dataclass
class FluidPorts:
    """Distributed port pair: entropy-rate input and temperature output."""

    w_in: LineField
    y_out: LineField


class FluidSystem:
    """Semi-discrete channel operator with sealed ends."""

    def __init__(self, mesh: IntervalMesh, material: FluidMaterial,
                 quad_degree: int = 3):
        if mesh.periodic:
            raise MaterialError("channel mesh must be non-periodic")
        self.mesh = mesh
        self.material = material
        self.quad = quadrature_rule(quad_degree)
        self.basis = LineBasis(mesh)
        self.mass_consistent = assemble_mass(self.basis, self.quad)
        self.mass = lumped_mass(self.basis, self.quad)
        tab = self.basis.tables(self.quad)
        local = np.einsum("q,qa,qb->ab", tab.wdet, tab.values,
                          tab.gradients[:, :, 0])
        dofs = self.basis.cell_dofs()
        nc = dofs.shape[0]
        rows = np.broadcast_to(dofs[:, :, None], (nc, 2, 2))
        cols = np.broadcast_to(dofs[:, None, :], (nc, 2, 2))
        data = np.broadcast_to(local, (nc, 2, 2))
        n = self.n_dofs
        pairing = np.bincount((rows * n + cols).ravel(), weights=data.ravel(),
                              minlength=n * n).reshape(n, n)
        self.grad_pairing = pairing  # integral(phi_i dphi_j/dz); dense is fine in 1D

    @property
    def n_dofs(self) -> int:
        return self.basis.n_dofs

    def uniform_state(self, temperature: float, phi: float | None = None,
                      velocity: float = 0.0) -> FluidState:
        mat = self.material
        phi0 = mat.phi_ref if phi is None else float(phi)
        # invert T(phi, s) for s at the requested temperature
        s0 = mat.s_ref + mat.c_v * np.log(temperature / mat.t_ref) \
            + mat.r_gas * np.log(phi0 / mat.phi_ref)
        n = self.n_dofs
        return FluidState(np.full(n, phi0), np.full(n, float(velocity)),
                          np.full(n, s0))

    def temperature(self, state: FluidState) -> np.ndarray:
        _, t, _ = eos(state.phi, state.s, self.material)
        return t

    def pressure(self, state: FluidState) -> np.ndarray:
        p, _, _ = eos(state.phi, state.s, self.material)
        return p

    def hamiltonian(self, state: FluidState) -> float:
        _, _, u = eos(state.phi, state.s, self.material)
        return float(self.mass @ (0.5 * state.vel ** 2 + u))

    def total_entropy(self, state: FluidState) -> float:
        return float(self.mass @ state.s)

    def rhs(self, state: FluidState, w_in: LineField | None = None
            ) -> tuple[FluidState, LineField]:
        """Semi-discrete rates (as a FluidState triple) and the temperature
        output.  Ends are sealed: the endpoint velocity rows are held at
        zero.  The entropy-rate input enters through the consistent mass so
        its power contribution is exactly <y, w>."""
        mat = self.material
        p, t, _ = eos(state.phi, state.s, mat)
        dphi = (self.grad_pairing @ state.vel) / self.mass
        dvel = -(self.grad_pairing @ p) / self.mass - mat.friction * state.vel
        dvel[0] = 0.0
        dvel[-1] = 0.0
        ds = mat.friction * state.vel ** 2 / t
        if w_in is not None:
            ds = ds + (self.mass_consistent @ w_in.values) / self.mass
        return FluidState(dphi, dvel, ds), LineField(t, self.mesh)

    def entropy_production(self, state: FluidState) -> float:
        """Total friction production sum_i m_i f v_i^2 / T_i >= 0."""
        _, t, _ = eos(state.phi, state.s, self.material)
        return float(self.mass @ (self.material.friction * state.vel ** 2 / t))


def fluid_rhs(system: FluidSystem, state: FluidState,
              w_in: LineField | None = None):
    return system.rhs(state, w_in)


def fluid_hamiltonian(system: FluidSystem, state: FluidState) -> float:
    return system.hamiltonian(state)
