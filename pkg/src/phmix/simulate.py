"""Monolithic implicit-midpoint integration of the coupled solid/channel
system with energy and entropy bookkeeping.

Each step solves the nonlinear midpoint system over (solid entropy, channel
state) with the ports eliminated inside the residual: the channel temperature
is embedded onto the wall through the surface mass system, the wall trace is
constrained to it through the entropy variable, the wall output flux is
recovered from the constrained boundary rows, and its azimuthal integral
drives the channel entropy equation.  Power conjugacy of the eliminated
relations makes the per-step coupling powers cancel to round-off and the
total-entropy increment a sum of squares, independent of the step size.

Newton uses a finite-difference Jacobian that is factorized once and reused
(chord iterations) until convergence degrades, then rebuilt.  Everything is
deterministic: same inputs give a bit-identical ledger.
"""

from __future__ import annotations

import os
import time as _time
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .coupling import CoupledPorts
from .dirac import LineField, SurfaceField
from .errors import ConfigurationError, MeshCompatibilityError, StateValidityError, \
    StepFailureError
from .fem import CouplingOperators
from .fluid import FluidState, FluidSystem, eos
from .heat import HeatState, HeatSystem, entropy_of_temperature, \
    temperature_of_entropy

LEDGER_HEADER = ("time,Q_heat,H_fluid,total,P_couple_heat,P_couple_fluid,"
                 "P_couple_residual,P_ext,S_solid,S_fluid")

SCENARIOS = ("equilibrium", "hot-wall-cooldown", "heated-ext-face",
             "acoustic-pulse")


@dataclass(frozen=True)
class SimConfig:
    dt: float
    t_end: float
    newton_tol: float = 1e-12
    newton_max_iters: int = 40
    output_every: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ConfigurationError(
                f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        if not self.newton_tol > 0:
            raise ConfigurationError("newton_tol must be positive")
        if self.newton_max_iters < 1:
            raise ConfigurationError("newton_max_iters must be >= 1")


@dataclass
class LedgerRecord:
    time: float
    q_heat: float
    h_fluid: float
    total: float
    p_couple_heat: float
    p_couple_fluid: float
    p_couple_residual: float
    p_ext: float
    s_solid: float
    s_fluid: float

    def csv_row(self) -> str:
        vals = (self.time, self.q_heat, self.h_fluid, self.total,
                self.p_couple_heat, self.p_couple_fluid,
                self.p_couple_residual, self.p_ext, self.s_solid,
                self.s_fluid)
        return ",".join(repr(v) for v in vals)


_LEDGER_FIELDS = {
    "time": "time", "Q_heat": "q_heat", "H_fluid": "h_fluid", "total": "total",
    "P_couple_heat": "p_couple_heat", "P_couple_fluid": "p_couple_fluid",
    "P_couple_residual": "p_couple_residual", "P_ext": "p_ext",
    "S_solid": "s_solid", "S_fluid": "s_fluid",
}


class EnergyLedger:
    """Per-step record of Hamiltonians, port powers and entropy totals."""

    def __init__(self):
        self.records: list[LedgerRecord] = []

    def append(self, rec: LedgerRecord):
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        attr = _LEDGER_FIELDS[name]
        return np.array([getattr(r, attr) for r in self.records])

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(LEDGER_HEADER + "\n")
            for rec in self.records:
                fh.write(rec.csv_row() + "\n")

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class SimResult:
    ledger: EnergyLedger
    heat_state: HeatState
    fluid_state: FluidState
    steps: int
    newton_iterations: int
    jacobian_builds: int
    wall_time: float


@dataclass
class ScenarioSetup:
    name: str
    heat_state: HeatState
    fluid_state: FluidState
    coupled: bool = True
    ext_temperature: float | None = None


def _smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def build_scenario(name: str, heat_sys: HeatSystem, fluid_sys: FluidSystem,
                   params: dict | None = None) -> ScenarioSetup:
    """Initial states and coupling flags for a named scenario.

    equilibrium:       everything at one temperature, at rest.
    hot-wall-cooldown: hot solid, cold coolant; the solid temperature blends
                       smoothly down to the coolant value at the wall so the
                       initial data satisfy the trace condition.
    heated-ext-face:   as equilibrium, with the external face held hot.
    acoustic-pulse:    uncoupled, frictionless checks use it; small entropy
                       (pressure) bump at the channel center.
    """
    p = dict(params or {})
    if name == "equilibrium":
        t0 = p.pop("t_common", 320.0)
        setup = ScenarioSetup(name, heat_sys.uniform_state(t0),
                              fluid_sys.uniform_state(t0))
    elif name == "hot-wall-cooldown":
        t_solid = p.pop("t_solid", 390.0)
        t_fluid = p.pop("t_fluid", 300.0)
        zeta = heat_sys.domain.node_coordinates()[:, 2]
        depth = heat_sys.domain.thickness.measure
        t_profile = t_fluid + (t_solid - t_fluid) * _smoothstep(zeta / depth)
        heat0 = HeatState(entropy_of_temperature(t_profile, heat_sys.material))
        setup = ScenarioSetup(name, heat0, fluid_sys.uniform_state(t_fluid))
    elif name == "heated-ext-face":
        t0 = p.pop("t_common", 300.0)
        t_ext = p.pop("t_ext", 380.0)
        heat0 = heat_sys.uniform_state(t0)
        heat0.s[heat_sys.external_dofs] = entropy_of_temperature(
            t_ext, heat_sys.material)
        setup = ScenarioSetup(name, heat0, fluid_sys.uniform_state(t0),
                              ext_temperature=t_ext)
    elif name == "acoustic-pulse":
        t0 = p.pop("t_base", 300.0)
        amp = p.pop("amplitude", 1e-3)
        width = p.pop("width", 0.05)
        center = p.pop("center", 0.5)
        fluid0 = fluid_sys.uniform_state(t0, phi=1.0)
        mesh = fluid_sys.mesh
        zc = mesh.start + center * mesh.measure
        sigma = width * mesh.measure
        bump = np.exp(-((mesh.nodes - zc) / sigma) ** 2)
        fluid0.s = fluid0.s + amp * fluid_sys.material.c_v * bump
        setup = ScenarioSetup(name, heat_sys.uniform_state(t0), fluid0,
                              coupled=False)
    else:
        raise ConfigurationError(
            f"unknown scenario {name!r}; valid: {', '.join(SCENARIOS)}")
    if p:
        raise ConfigurationError(
            f"unknown scenario parameters for {name!r}: {sorted(p)}")
    return setup


class CoupledSimulation:
    """Implicit-midpoint stepper for the coupled (or channel-only) system."""

    _FD_EPS = 1.49e-8  # sqrt(machine epsilon)

    def __init__(self, heat_sys: HeatSystem, fluid_sys: FluidSystem,
                 ops: CouplingOperators, cfg: SimConfig, *,
                 coupled: bool = True, ext_temperature: float | None = None,
                 coupling_scale: float = 1.0):
        self.heat = heat_sys
        self.fluid = fluid_sys
        self.ops = ops
        self.cfg = cfg
        self.coupled = coupled
        self.ext_temperature = ext_temperature
        self.coupling_scale = coupling_scale

        if coupled:
            if not np.array_equal(fluid_sys.mesh.nodes,
                                  heat_sys.domain.axial.nodes):
                raise MeshCompatibilityError(
                    f"channel mesh {fluid_sys.mesh} does not match the solid "
                    f"axial mesh {heat_sys.domain.axial}")
            if not np.array_equal(ops.line.mesh.nodes, fluid_sys.mesh.nodes):
                raise MeshCompatibilityError(
                    f"coupling operators' line mesh {ops.line.mesh} does not "
                    f"match the channel mesh {fluid_sys.mesh}")

        n_solid = heat_sys.n_dofs
        pinned = []
        if coupled:
            pinned.append(heat_sys.coupling_dofs)
            if ext_temperature is not None:
                pinned.append(heat_sys.external_dofs)
        self._pinned = np.concatenate(pinned) if pinned else np.array([], int)
        mask = np.ones(n_solid, dtype=bool)
        mask[self._pinned] = False
        self._free = np.nonzero(mask)[0]
        self._nf = fluid_sys.n_dofs
        self._nfree = len(self._free) if coupled else 0
        self._nx = self._nfree + 3 * self._nf

        if ext_temperature is not None:
            self._s_ext_target = float(entropy_of_temperature(
                ext_temperature, heat_sys.material))

        self._lu = None
        self.newton_iterations = 0
        self.jacobian_builds = 0

    # ---- state packing -------------------------------------------------

    def _pack(self, heat_s: np.ndarray, fl: FluidState) -> np.ndarray:
        parts = []
        if self.coupled:
            parts.append(heat_s[self._free])
        parts.extend([fl.phi, fl.vel, fl.s])
        return np.concatenate(parts)

    def _unpack_fluid(self, x: np.ndarray):
        nf, off = self._nf, self._nfree
        return (x[off:off + nf], x[off + nf:off + 2 * nf],
                x[off + 2 * nf:off + 3 * nf])

    # ---- midpoint residual ----------------------------------------------

    def _residual(self, x: np.ndarray, with_aux: bool = False):
        """Residual of the midpoint system at the trial end-of-step state.

        Ports are eliminated: the trial channel midpoint temperature fixes
        the wall input and the wall trace entropy; the constrained boundary
        rows of the solid define the recovered wall output, whose azimuthal
        integral feeds the channel entropy rows.
        """
        dt = self.cfg.dt
        s0, fl0 = self._s_old, self._fluid_old
        phi1, vel1, sf1 = self._unpack_fluid(x)
        phi_m = 0.5 * (fl0.phi + phi1)
        vel_m = 0.5 * (fl0.vel + vel1)
        sf_m = 0.5 * (fl0.s + sf1)
        p_m, t_m, _ = eos(phi_m, sf_m, self.fluid.material)

        aux = {}
        if self.coupled:
            heat = self.heat
            u = self.ops.solve_psi(self.ops.d_psi @ t_m)
            if np.any(~(u > 0)):
                node = int(np.argmax(~(u > 0)))
                raise StateValidityError("wall temperature", node,
                                         float(u[node]))
            s1 = np.empty(heat.n_dofs)
            s1[self._free] = x[:self._nfree]
            cdofs = heat.coupling_dofs
            sb_mid = entropy_of_temperature(u, heat.material)
            s1[cdofs] = 2.0 * sb_mid - s0[cdofs]
            if self.ext_temperature is not None:
                edofs = heat.external_dofs
                s1[edofs] = 2.0 * self._s_ext_target - s0[edofs]
            s_mid = 0.5 * (s0 + s1)
            loads = heat.assemble_loads(s_mid)
            flux_rhs = heat.mass[cdofs] * (s1[cdofs] - s0[cdofs]) / dt \
                - loads[cdofs]
            v = self.ops.solve_psi(flux_rhs)
            w_load = -self.coupling_scale * (self.ops.d_chi @ v)
            r_solid = heat.mass[self._free] * (s1 - s0)[self._free] \
                - dt * loads[self._free]
        else:
            s1 = s0
            v = None
            w_load = 0.0
            r_solid = np.empty(0)

        mat = self.fluid.material
        mf = self.fluid.mass
        grad = self.fluid.grad_pairing
        r_phi = mf * (phi1 - fl0.phi) - dt * (grad @ vel_m)
        r_vel = mf * (vel1 - fl0.vel) \
            - dt * (-(grad @ p_m) - mat.friction * mf * vel_m)
        r_vel[0] = mf[0] * vel1[0]
        r_vel[-1] = mf[-1] * vel1[-1]
        r_s = mf * (sf1 - fl0.s) \
            - dt * (mf * mat.friction * vel_m ** 2 / t_m + w_load)
        res = np.concatenate([r_solid, r_phi, r_vel, r_s])

        if with_aux:
            aux["s1"] = s1
            aux["fluid1"] = FluidState(phi1, vel1, sf1)
            if self.coupled:
                aux["u"] = u
                aux["v"] = v
                aux["y"] = t_m
                aux["w_load"] = w_load
                if self.ext_temperature is not None:
                    edofs = self.heat.external_dofs
                    ext_rhs = self.heat.mass[edofs] * (s1 - s0)[edofs] / dt \
                        - loads[edofs]
                    aux["v_ext"] = self.ops.solve_psi(ext_rhs)
            return res, aux
        return res

    # ---- Newton ----------------------------------------------------------

    def _build_jacobian(self, x: np.ndarray):
        r0 = self._residual(x)
        n = len(x)
        jac = np.empty((n, n))
        for j in range(n):
            h = self._FD_EPS * max(abs(x[j]), self._typ[j])
            xp = x.copy()
            xp[j] += h
            jac[:, j] = (self._residual(xp) - r0) / h
        self._lu = sla.lu_factor(jac)
        self.jacobian_builds += 1

    def _scaled_norm(self, r: np.ndarray) -> float:
        return float(np.max(np.abs(r) / self._row_scale))

    def _prepare(self, heat_state: HeatState, fluid_state: FluidState):
        """Typical magnitudes for FD steps and residual row scaling."""
        typ = []
        if self.coupled:
            typ.append(np.full(self._nfree,
                               max(1.0, float(np.max(np.abs(heat_state.s))))))
        for arr in (fluid_state.phi, fluid_state.vel, fluid_state.s):
            typ.append(np.full(self._nf, max(1.0, float(np.max(np.abs(arr))))))
        self._typ = np.concatenate(typ)
        mass_rows = []
        if self.coupled:
            mass_rows.append(self.heat.mass[self._free])
        mass_rows.extend([self.fluid.mass] * 3)
        self._row_scale = np.concatenate(mass_rows) * self._typ

    def step(self, heat_state: HeatState, fluid_state: FluidState,
             x_pred: np.ndarray | None = None):
        """One implicit-midpoint step.

        Returns (heat', fluid', ports, powers, p_ext, newton_iters); ports
        and powers are the converged midpoint quantities entering the ledger.
        """
        self._s_old = heat_state.s
        self._fluid_old = fluid_state
        if not hasattr(self, "_row_scale"):
            self._prepare(heat_state, fluid_state)
        x0 = self._pack(heat_state.s, fluid_state)
        x = x0.copy() if x_pred is None else x_pred.copy()

        tol = self.cfg.newton_tol
        max_iters = self.cfg.newton_max_iters
        iters = 0
        for attempt in range(2):
            r = self._residual(x)
            norm = self._scaled_norm(r)
            stale = self._lu is None
            converged = norm <= tol
            while not converged and iters < max_iters:
                if stale:
                    self._build_jacobian(x)
                    stale = False
                x = x - sla.lu_solve(self._lu, r)
                iters += 1
                r = self._residual(x)
                new_norm = self._scaled_norm(r)
                if new_norm <= tol:
                    converged = True
                elif new_norm > 0.5 * norm:
                    stale = True  # chord Jacobian no longer contracting
                norm = new_norm
            if converged:
                break
            if attempt == 0:
                self._lu = None  # retry once with a fresh factorization
            else:
                raise StepFailureError("implicit midpoint step did not converge",
                                       residual=norm, iterations=iters)
        self.newton_iterations += iters

        r, aux = self._residual(x, with_aux=True)
        heat_new = HeatState(aux["s1"])
        fluid_new = aux["fluid1"]
        if self.coupled:
            ports = CoupledPorts(
                u_T=SurfaceField(aux["u"], self.ops.surface.boundary),
                v_out=SurfaceField(aux["v"], self.ops.surface.boundary),
                w_in=LineField(self.ops.solve_chi(aux["w_load"]),
                               self.ops.line.mesh),
                y_out=LineField(aux["y"], self.ops.line.mesh))
            p_heat = self.ops.surface_inner(aux["u"], aux["v"])
            p_fluid = float(aux["y"] @ aux["w_load"])
            p_ext = 0.0
            if self.ext_temperature is not None:
                u_ext = np.full(self.ops.n_psi, self.ext_temperature)
                p_ext = self.ops.surface_inner(u_ext, aux["v_ext"])
        else:
            ports = None
            p_heat = p_fluid = p_ext = 0.0
        return heat_new, fluid_new, ports, (p_heat, p_fluid), p_ext, x

    def run(self, setup: ScenarioSetup, output_dir=None) -> SimResult:
        """Integrate to t_end, recording one ledger row per step (plus the
        initial row) and optionally writing snapshots and the ledger CSV."""
        t_start = _time.perf_counter()
        cfg = self.cfg
        if setup.coupled != self.coupled or \
                setup.ext_temperature != self.ext_temperature:
            raise ConfigurationError(
                f"scenario {setup.name!r} expects coupled={setup.coupled}, "
                f"ext_temperature={setup.ext_temperature}; the simulation was "
                f"built with coupled={self.coupled}, "
                f"ext_temperature={self.ext_temperature}")
        n_steps = int(round(cfg.t_end / cfg.dt))
        heat_state = setup.heat_state.copy()
        fluid_state = setup.fluid_state.copy()
        self._prepare(heat_state, fluid_state)

        ledger = EnergyLedger()
        q0 = self.heat.hamiltonian(heat_state)
        h0 = self.fluid.hamiltonian(fluid_state)
        ledger.append(LedgerRecord(
            0.0, q0, h0, q0 + h0, 0.0, 0.0, 0.0, 0.0,
            self.heat.total_entropy(heat_state),
            self.fluid.total_entropy(fluid_state)))
        if output_dir is not None:
            self._snapshot(output_dir, setup.name, 0, heat_state, fluid_state)

        x_prev = None
        x_curr = self._pack(heat_state.s, fluid_state)
        for k in range(1, n_steps + 1):
            pred = None
            if x_prev is not None:
                pred = 2.0 * x_curr - x_prev  # linear extrapolation
            try:
                heat_state, fluid_state, ports, powers, p_ext, x_new = \
                    self.step(heat_state, fluid_state, x_pred=pred)
            except StepFailureError as exc:
                exc.ledger = ledger  # partial record for diagnostics
                raise
            x_prev, x_curr = x_curr, x_new
            q = self.heat.hamiltonian(heat_state)
            h = self.fluid.hamiltonian(fluid_state)
            ledger.append(LedgerRecord(
                k * cfg.dt, q, h, q + h, powers[0], powers[1],
                powers[0] + powers[1], p_ext,
                self.heat.total_entropy(heat_state),
                self.fluid.total_entropy(fluid_state)))
            if output_dir is not None and \
                    (k % cfg.output_every == 0 or k == n_steps):
                self._snapshot(output_dir, setup.name, k, heat_state,
                               fluid_state)
        if output_dir is not None:
            ledger.write(os.path.join(output_dir, f"{setup.name}_ledger.csv"))
        return SimResult(ledger, heat_state, fluid_state, n_steps,
                         self.newton_iterations, self.jacobian_builds,
                         _time.perf_counter() - t_start)

    def _snapshot(self, output_dir, scenario, step, heat_state, fluid_state):
        write_heat_snapshot(
            os.path.join(output_dir, f"{scenario}_heat_{step}.csv"),
            self.heat, heat_state)
        write_fluid_snapshot(
            os.path.join(output_dir, f"{scenario}_fluid_{step}.csv"),
            self.fluid, fluid_state)


def write_heat_snapshot(path, system: HeatSystem, state: HeatState) -> None:
    coords = system.domain.node_coordinates()
    t = temperature_of_entropy(state.s, system.material)
    with open(path, "w") as fh:
        fh.write("node,x,y,z,s,T\n")
        for i in range(system.n_dofs):
            cells = (coords[i, 0], coords[i, 1], coords[i, 2],
                     state.s[i], t[i])
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in cells) + "\n")


def write_fluid_snapshot(path, system: FluidSystem, state: FluidState) -> None:
    z = system.mesh.nodes
    p, t, _ = eos(state.phi, state.s, system.material)
    with open(path, "w") as fh:
        fh.write("node,z,phi,vel,s,T,p\n")
        for i in range(system.n_dofs):
            cells = (z[i], state.phi[i], state.vel[i], state.s[i], t[i], p[i])
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in cells) + "\n")


def measure_pulse_speed(system: FluidSystem, initial: FluidState,
                        final: FluidState, elapsed: float) -> float:
    """Propagation speed of the right-moving pressure pulse.

    Locates the pressure-perturbation peak (parabolic sub-cell refinement)
    in the right half-channel of the final state and divides the distance
    from the initial bump center by the elapsed time.
    """
    z = system.mesh.nodes
    h = system.mesh.h
    p0 = system.pressure(initial)
    p1 = system.pressure(final)
    d0 = p0 - np.median(p0)
    d1 = p1 - np.median(p1)
    k0 = int(np.argmax(d0))
    mask = z > z[k0] + 2 * h
    idx = np.nonzero(mask)[0]
    k1 = idx[int(np.argmax(d1[mask]))]
    z_peak = z[k1]
    if 0 < k1 < len(z) - 1:
        denom = d1[k1 - 1] - 2 * d1[k1] + d1[k1 + 1]
        if denom != 0:
            z_peak = z[k1] + 0.5 * h * (d1[k1 - 1] - d1[k1 + 1]) / denom
    return float((z_peak - z[k0]) / elapsed)
