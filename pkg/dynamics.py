"""Evaluate and integrate the upwind two-species interaction dynamics."""

from dataclasses import dataclass, field
import itertools
import logging

import numpy as np
import pandas as pd

import graph_core

CLAMP_TOLERANCE = 1e-12
DT_MINIMUM = 1e-14
ENERGY_SLACK = 1e-10
TIE_TOLERANCE = 1e-12
MAXIMUM_BRUTE_FORCE_SIZE = 6
CHUNK_ENTRIES = 2**22

logger = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """Signal that the integrator had to abort."""

    def __init__(self, message, time=None, state=None):
        """Store the time and the last accepted state."""
        super().__init__(message)
        self.time = time
        self.state = state


@dataclass(frozen=True)
class Mobility:
    """Represent the mobility m(r, s) = r^theta1 (1 - s)^theta2."""

    theta1: float = 1.0
    theta2: float = 0.0

    def __post_init__(self):
        """Check that both exponents lie in [0, 1]."""
        for name in ('theta1', 'theta2'):
            value = float(getattr(self, name))
            if not 0 <= value <= 1:
                raise ValueError(f'{name} must lie in [0, 1], got {value}.')
            object.__setattr__(self, name, value)

    @classmethod
    def linear(cls):
        """Return m(r, s) = r."""
        return cls(1.0, 0.0)

    @classmethod
    def volume_filling(cls):
        """Return m(r, s) = r (1 - s)."""
        return cls(1.0, 1.0)

    @property
    def threshold(self):
        """Return the density cap implied by the second factor."""
        return 1.0 if self.theta2 > 0 else np.inf

    @property
    def upwind_admissible(self):
        """Return whether empty vertices emit no mass."""
        return self.theta1 > 0

    def factors(self, u):
        """Return the source factor r^theta1 and target factor (1-s)^theta2."""
        return np.power(u, self.theta1), np.power(1.0 - u, self.theta2)

    def evaluate(self, r, s):
        """Return m(r, s)."""
        source, _ = self.factors(np.asarray(r, dtype=float))
        _, target = self.factors(np.asarray(s, dtype=float))
        return source * target


@dataclass(frozen=True)
class DynamicsParams:
    """Hold the exponent, speed factors, mobility, and step controls."""

    p: float = 2.0
    beta: tuple = (1.0, 1.0)
    mobility: Mobility = field(default_factory=Mobility.linear)
    dt_max: float = 1e-2
    cfl_safety: float = 0.5
    stationarity_tol: float = 1e-10
    t_end: float = 10.0

    def __post_init__(self):
        """Validate the parameters."""
        beta = tuple(float(value) for value in self.beta)
        if len(beta) != 2 or min(beta) <= 0:
            raise ValueError('beta must hold two positive values.')
        object.__setattr__(self, 'beta', beta)
        if not self.p > 1:
            raise ValueError(f'p must exceed 1, got {self.p}.')
        if not 0 < self.cfl_safety < 1:
            raise ValueError('cfl_safety must lie in (0, 1).')
        if not self.dt_max > 0:
            raise ValueError('dt_max must be positive.')
        if self.stationarity_tol < 0:
            raise ValueError('stationarity_tol must be nonnegative.')

    @property
    def q(self):
        """Return the conjugate exponent p / (p - 1)."""
        return self.p / (self.p - 1.0)


@dataclass(frozen=True, eq=False)
class FluxField:
    """Hold the antisymmetric net upwind flux of both species."""

    j: np.ndarray


@dataclass(frozen=True)
class StationarityReport:
    """Report the largest edge violation of stationarity."""

    stationary: bool
    max_violation: float
    species: int
    edge: tuple


@dataclass
class Trajectory:
    """Collect output times, states, and diagnostics of a run."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    center_of_mass: list = field(default_factory=list)
    dissipation: list = field(default_factory=list)
    rate: list = field(default_factory=list)
    stationary: bool = False
    stopped: bool = False
    steps: int = 0

    @property
    def final_state(self):
        """Return the last recorded state."""
        return self.states[-1]

    def append(self, time, state, graph, kernels, params):
        """Record a state with its diagnostics."""
        du, _ = rhs(state, graph, kernels, params)
        self.times.append(float(time))
        self.states.append(state)
        self.energy.append(energy(state, graph, kernels))
        self.mass.append(graph_core.total_mass(state, graph).tolist())
        self.center_of_mass.append(
            graph_core.center_of_mass(state, graph).tolist())
        self.dissipation.append(dissipation(state, graph, kernels, params))
        self.rate.append(float(np.max(np.abs(du))))


# Velocities and Fluxes #

def check_domain(state, graph, params):
    """Raise if the state lies outside the domain of the dynamics."""
    graph_core.check_dimensions(state, graph)
    if not params.mobility.upwind_admissible:
        raise ValueError('theta1 = 0 lets empty vertices emit mass.')
    if np.any(state.u > params.mobility.threshold):
        raise ValueError('State lies outside the mobility domain.')


def potentials(state, graph, kernels):
    """Return the interaction potential felt by each species."""
    masses = state.u * graph.weights
    return np.array([kernels.kernel(i, 0) @ masses[0]
                     + kernels.kernel(i, 1) @ masses[1] for i in range(2)])


def velocity(state, graph, kernels, params):
    """Return the edge velocities v[i, iota, kappa] of both species."""
    field_values = potentials(state, graph, kernels)
    beta = np.array(params.beta)[:, np.newaxis, np.newaxis]
    return beta * (field_values[:, :, np.newaxis]
                   - field_values[:, np.newaxis, :])


def flow_terms(state, graph, kernels, params):
    """Return the velocity, the edge mobility, and the forward flux."""
    v = velocity(state, graph, kernels, params)
    source, target = params.mobility.factors(state.u)
    mobility = source[:, :, np.newaxis] * target[:, np.newaxis, :]
    forward = mobility * np.power(np.maximum(v, 0.0), params.q - 1.0)
    return v, mobility, forward


def forward_flux(state, graph, kernels, params):
    """Return the velocity and the outgoing flux m(u_i, u_k) (v_ik)+^(q-1)."""
    v, _, forward = flow_terms(state, graph, kernels, params)
    return v, forward


def upwind_flux(state, graph, kernels, params):
    """Return the net upwind flux of both species."""
    check_domain(state, graph, params)
    _, forward = forward_flux(state, graph, kernels, params)
    return FluxField(forward - np.swapaxes(forward, 1, 2))


def divergence(flux, graph):
    """Return du/dt of a net flux."""
    return -(flux.j * graph.eta) @ graph.weights


def rhs(state, graph, kernels, params):
    """Return du/dt and the net upwind flux."""
    flux = upwind_flux(state, graph, kernels, params)
    return divergence(flux, graph), flux


def flux_rates(state, graph, params, forward):
    """Return relative outflow and inflow-to-headroom rates of a flux."""
    weighted = forward * graph.eta
    outflow = weighted @ graph.weights
    inflow = np.swapaxes(weighted, 1, 2) @ graph.weights

    u = state.u
    outflow_rate = np.divide(outflow, u, out=np.zeros_like(u), where=u > 0)
    inflow_rate = np.zeros_like(u)
    threshold = params.mobility.threshold
    if np.isfinite(threshold):
        headroom = threshold - u
        inflow_rate = np.divide(inflow, headroom, out=np.zeros_like(u),
                                where=(headroom > 0) & (inflow > 0))
    return outflow_rate, inflow_rate


def relative_rates(state, graph, kernels, params):
    """Return relative outflow rates and inflow-to-headroom rates."""
    check_domain(state, graph, params)
    _, forward = forward_flux(state, graph, kernels, params)
    return flux_rates(state, graph, params, forward)


def bounded_step(params, outflow_rate, inflow_rate):
    """Return the step allowed by the largest relative rate."""
    rate = max(float(np.max(outflow_rate)), float(np.max(inflow_rate)))
    if rate <= 0:
        return params.dt_max
    return min(params.dt_max, params.cfl_safety / rate)


def step_size(state, graph, kernels, params):
    """Return the largest step that keeps densities inside their box."""
    return bounded_step(params,
                        *relative_rates(state, graph, kernels, params))


# Energy and Stationarity #

def energy(state, graph, kernels):
    """Return the cross-interaction energy of a state."""
    masses = state.u * graph.weights
    return float(0.5 * masses[0] @ kernels.k11 @ masses[0]
                 + 0.5 * masses[1] @ kernels.k22 @ masses[1]
                 + masses[0] @ kernels.k12 @ masses[1])


def dissipation(state, graph, kernels, params):
    """Return the energy dissipation rate, which is never positive."""
    v = velocity(state, graph, kernels, params)
    source, target = params.mobility.factors(state.u)
    mobility = source[:, :, np.newaxis] * target[:, np.newaxis, :]
    terms = mobility * np.power(np.maximum(v, 0.0), params.q) * graph.eta
    weights = np.outer(graph.weights, graph.weights)
    per_species = np.sum(terms * weights, axis=(1, 2))
    return -float(np.sum(per_species / np.array(params.beta)))


def stationarity_report(graph, v, mobility, tol):
    """Return the largest m(u_i, u_k) (v_ik)+ over the edges."""
    violation = np.where(graph.eta > 0, mobility * np.maximum(v, 0.0), 0.0)
    species, iota, kappa = np.unravel_index(np.argmax(violation),
                                            violation.shape)
    max_violation = float(violation[species, iota, kappa])
    return StationarityReport(stationary=max_violation <= tol,
                              max_violation=max_violation,
                              species=int(species) + 1,
                              edge=(int(iota), int(kappa)))


def is_stationary(state, graph, kernels, params, tol=None):
    """Check that m(u_i, u_k) (v_ik)+ vanishes on every edge."""
    if tol is None:
        tol = params.stationarity_tol
    v, mobility, _ = flow_terms(state, graph, kernels, params)
    return stationarity_report(graph, v, mobility, tol)


def center_of_mass_drift(state, graph, kernels, params):
    """Return the time derivative of each species' center of mass."""
    du, _ = rhs(state, graph, kernels, params)
    return (du * graph.weights) @ graph.positions


# Competitors #

def shift_mass(state, graph, source, target, shift):
    """Move shift[i] mass of species i from source to target."""
    masses = state.u * graph.weights
    shift = np.asarray(shift, dtype=float)
    if np.any(shift > masses[:, source]) or np.any(-shift > masses[:, target]):
        raise ValueError('Shift leaves the box of admissible transfers.')
    masses[:, source] -= shift
    masses[:, target] += shift
    return graph_core.state_from_masses(np.maximum(masses, 0.0), graph)


def competitor_energy_change(quadratic, shift):
    """Return the energy change of a shift described by a quadratic."""
    shift = np.asarray(shift, dtype=float)
    return float(2.0 * (quadratic.vector @ shift
                        + 0.5 * shift @ quadratic.matrix @ shift))


# Integration #

def euler_step(state, graph, kernels, params, dt):
    """Return the explicit Euler update without step control."""
    du, _ = rhs(state, graph, kernels, params)
    return graph_core.SpeciesState(state.u + dt * du)


def integrate(initial_state, graph, kernels, params, observers=(),
              output_times=None, stride=1):
    """Integrate with adaptive explicit Euler steps until t_end."""
    graph_core.validate_state(initial_state, graph, params.mobility)
    check_domain(initial_state, graph, params)
    if not params.t_end > 0:
        raise ValueError('t_end must be positive.')
    if stride < 1:
        raise ValueError('stride must be at least 1.')
    checkpoints = sorted({float(t) for t in output_times or ()
                          if 0 < t < params.t_end})
    checkpoints.append(float(params.t_end))

    u = initial_state.u.copy()
    time = 0.0
    steps = 0
    state = graph_core.SpeciesState(u)
    trajectory = Trajectory()
    trajectory.append(time, state, graph, kernels, params)
    current_energy = trajectory.energy[-1]
    threshold = params.mobility.threshold
    logger.info('Integrating %d vertices up to t=%g.', graph.size,
                params.t_end)

    while time < params.t_end:
        v, mobility, forward = flow_terms(state, graph, kernels, params)
        if stationarity_report(graph, v, mobility,
                               params.stationarity_tol).stationary:
            trajectory.stationary = True
            logger.info('Stationary at t=%g after %d steps.', time, steps)
            break

        du = divergence(FluxField(forward - np.swapaxes(forward, 1, 2)),
                        graph)
        dt = bounded_step(params,
                          *flux_rates(state, graph, params, forward))
        if dt < DT_MINIMUM:
            raise IntegrationError(
                f'Step size {dt:g} underflows at t={time:g}.', time=time,
                state=state)
        while checkpoints[0] <= time:
            checkpoints.pop(0)
        landing = time + dt >= checkpoints[0]
        if landing:
            dt = checkpoints[0] - time

        while True:
            candidate = u + dt * du
            if np.any(candidate < -CLAMP_TOLERANCE):
                raise IntegrationError(f'Negative density at t={time:g}.',
                                       time=time, state=state)
            candidate[candidate < 0] = 0.0
            if np.isfinite(threshold):
                if np.any(candidate > threshold + CLAMP_TOLERANCE):
                    raise IntegrationError(
                        f'Density above {threshold:g} at t={time:g}.',
                        time=time, state=state)
                np.minimum(candidate, threshold, out=candidate)
            candidate_state = graph_core.SpeciesState(candidate)
            candidate_energy = energy(candidate_state, graph, kernels)
            if candidate_energy <= current_energy + ENERGY_SLACK:
                break
            dt /= 2
            landing = False
            logger.debug('Energy rose at t=%g, halving the step to %g.',
                         time, dt)
            if dt < DT_MINIMUM:
                raise IntegrationError(
                    f'Step size underflows at t={time:g} while the energy '
                    'keeps rising.', time=time, state=state)

        u = candidate
        state = candidate_state
        current_energy = candidate_energy
        time = checkpoints[0] if landing else time + dt
        steps += 1
        if landing or steps % stride == 0:
            trajectory.append(time, state, graph, kernels, params)

        if observers:
            verdicts = [observer(time, state, trajectory)
                        for observer in observers]
            if any(verdicts):
                trajectory.stopped = True
                logger.info('Stopped by an observer at t=%g.', time)
                break

    if trajectory.times[-1] != time:
        trajectory.append(time, state, graph, kernels, params)
    trajectory.steps = steps
    logger.info('Finished at t=%g after %d steps.', time, steps)
    return trajectory


# Brute-force Minimization #

def simplex_grid(size, resolution):
    """Return all integer compositions of resolution in lexicographic order."""
    bars = np.array(list(itertools.combinations(
        range(resolution + size - 1), size - 1)), dtype=int)
    bars = bars.reshape(-1, size - 1)
    bounds = np.column_stack((np.full(len(bars), -1), bars,
                              np.full(len(bars), resolution + size - 1)))
    return np.diff(bounds, axis=1) - 1


def brute_force_minimize(kernels, graph, resolution, max_pairs=10**9):
    """Minimize the energy over a grid on the product of two simplices.

    Candidate pairs are streamed in row chunks; only the per-chunk minima
    are kept, and the chunk holding the first minimizer in lexicographic
    order is evaluated again to locate it.
    """
    if graph.size > MAXIMUM_BRUTE_FORCE_SIZE:
        raise ValueError(f'Brute force is limited to '
                         f'{MAXIMUM_BRUTE_FORCE_SIZE} vertices.')
    if resolution < 1:
        raise ValueError('resolution must be at least 1.')
    grid = simplex_grid(graph.size, resolution) / resolution
    count = len(grid)
    if count**2 > max_pairs:
        raise ValueError(f'{count**2} candidate pairs exceed the limit of '
                         f'{max_pairs}.')

    self_energy = [0.5 * np.einsum('gi,ij,gj->g', grid, matrix, grid)
                   for matrix in (kernels.k11, kernels.k22)]
    cross = grid @ kernels.k12
    rows = max(1, CHUNK_ENTRIES // count)

    def pair_energies(start):
        """Return the energies of the candidate pairs of one row chunk."""
        stop = min(start + rows, count)
        return (self_energy[0][start:stop, np.newaxis]
                + self_energy[1][np.newaxis, :]
                + cross[start:stop] @ grid.T)

    starts = range(0, count, rows)
    minima = [float(np.min(pair_energies(start))) for start in starts]
    minimum = min(minima)
    cutoff = minimum + TIE_TOLERANCE * max(1.0, abs(minimum))
    start = next(start for start, value in zip(starts, minima)
                 if value <= cutoff)
    candidates = np.flatnonzero(pair_energies(start) <= cutoff)
    row, column = divmod(int(candidates[0]), count)
    logger.debug('Searched %d candidate pairs in %d chunks.', count**2,
                 len(minima))

    masses = np.vstack((grid[start + row], grid[column]))
    state = graph_core.state_from_masses(masses, graph)
    return state, energy(state, graph, kernels)


# Export #

def trajectory_frame(trajectory, graph):
    """Return the trajectory as a long table of densities and masses."""
    size = graph.size
    records = {'t': [], 'species': [], 'vertex': [], 'u': [], 'mass': []}
    for time, state in zip(trajectory.times, trajectory.states):
        for species in range(2):
            records['t'].extend([time] * size)
            records['species'].extend([species + 1] * size)
            records['vertex'].extend(range(size))
            records['u'].extend(state.u[species].tolist())
            records['mass'].extend((state.u[species]
                                    * graph.weights).tolist())
    return pd.DataFrame(records, columns=['t', 'species', 'vertex', 'u',
                                          'mass'])


def diagnostics_records(trajectory):
    """Return the per-time diagnostics as JSON-compatible records."""
    return [{'t': time, 'energy': value, 'mass': mass,
             'center_of_mass': center, 'dissipation': rate_of_energy,
             'max_rate': rate}
            for time, value, mass, center, rate_of_energy, rate in zip(
                trajectory.times, trajectory.energy, trajectory.mass,
                trajectory.center_of_mass, trajectory.dissipation,
                trajectory.rate)]
