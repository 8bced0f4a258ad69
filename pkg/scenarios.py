"""Build the seeded experiment setups with their oracles and expectations."""

from dataclasses import dataclass
import itertools
import logging
import math

import numpy as np

import dynamics
import graph_core
import kernels

ORACLE_TOLERANCE = 1e-12
LATTICE_VARIANTS = ('kef_global', 'kef_truncated')
MOBILITY_VARIANTS = ('linear', 'volume_filling')

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Oracle:
    """Hold a closed-form initial velocity or derivative."""

    name: str
    kind: str
    index: tuple
    expected: float


@dataclass(frozen=True)
class Expectation:
    """Hold a machine-checkable statement about a finished run."""

    description: str
    predicate: object


@dataclass(frozen=True, eq=False)
class Scenario:
    """Bundle a graph, kernels, dynamics, and initial state of a run."""

    name: str
    parameters: dict
    graph: graph_core.FiniteGraph
    kernel_specs: dict
    kernels: kernels.KernelSet
    params: dynamics.DynamicsParams
    initial_state: graph_core.SpeciesState
    output_times: tuple = ()
    oracles: tuple = ()
    expectations: tuple = ()
    stride: int = 1


def positive_part(value):
    """Return max(value, 0)."""
    return max(value, 0.0)


def negative_part(value):
    """Return max(-value, 0)."""
    return max(-value, 0.0)


def random_initial_state(graph, seed):
    """Draw uniform masses per vertex from Philox and normalize each species.

    The generator is numpy's Philox4x64-10 keyed by the seed, and the draws
    are the first 2 N doubles of Generator.random in species-major order.
    """
    generator = np.random.Generator(np.random.Philox(seed))
    draws = generator.random((2, graph.size))
    return graph_core.SpeciesState(draws / (draws @ graph.weights)[:, None])


# Three Points on a Line #

def three_point_velocities(r1, r2, alpha, delta, beta2=1.0):
    """Return the closed-form initial velocities of both species."""
    return {
        (1, 0, 1): r1 * (alpha * delta + 1),
        (1, 0, 2): r1 - r2 + alpha * delta * (r1 + r2),
        (1, 1, 2): r2 * (alpha * delta - 1),
        (2, 0, 1): beta2 * r1 * (-alpha - delta),
        (2, 0, 2): beta2 * (alpha * r2 - alpha * r1 - delta * (r1 + r2)),
        (2, 1, 2): beta2 * r2 * (alpha - delta)}


def three_point_derivatives(r1, r2, alpha, delta, cutoff_r, beta2=1.0):
    """Return the closed-form initial derivatives of both species."""
    v = three_point_velocities(r1, r2, alpha, delta, beta2)
    eta12, eta23, eta13 = (float(distance < cutoff_r)
                           for distance in (r1, r2, r1 + r2))
    left, right = 0.5 * (1 + delta), 0.5 * (1 - delta)

    species1 = [negative_part(r1 * (1 + alpha * delta)) * eta12, 0.0,
                negative_part(r2 * (1 - alpha * delta)) * eta23]
    species1[1] = -species1[0] - species1[2]

    v12, v13, v23 = v[(2, 0, 1)], v[(2, 0, 2)], v[(2, 1, 2)]
    species2 = [
        -left * positive_part(v12) * eta12
        - left * positive_part(v13) * eta13
        + right * negative_part(v13) * eta13,
        left * positive_part(v12) * eta12
        + right * negative_part(v23) * eta23,
        -right * negative_part(v23) * eta23
        - right * negative_part(v13) * eta13
        + left * positive_part(v13) * eta13]
    return {(1, vertex): value for vertex, value in enumerate(species1)} | {
        (2, vertex): value for vertex, value in enumerate(species2)}


def three_point_stationary(r1, r2, alpha, delta, cutoff_r):
    """Return whether the initial three-point state is stationary."""
    edges = {'12': r1 < cutoff_r, '23': r2 < cutoff_r,
             '13': r1 + r2 < cutoff_r}
    conditions = []
    if edges['12']:
        conditions += [alpha * delta >= -1, delta >= -alpha]
    if edges['23']:
        conditions += [alpha * delta <= 1, delta <= alpha]
    if edges['13']:
        conditions.append(math.isclose(
            delta * (r1 + r2), alpha * (r2 - r1), abs_tol=ORACLE_TOLERANCE))
    return all(conditions)


def three_point(r1=1.0, r2=1.0, alpha=0.5, delta=0.25, cutoff_r=1.5,
                beta2=1.0, t_end=10.0):
    """Build three points on a line with one species between the other."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError('r1 and r2 must be positive.')
    if not -1 < delta < 1:
        raise ValueError('delta must lie in (-1, 1).')
    if alpha < 0:
        raise ValueError('alpha must be nonnegative.')
    if cutoff_r <= 0:
        raise ValueError('cutoff_r must be positive.')

    graph = graph_core.build_graph([-r1, 0.0, r2], eta_rule={
        'rule': 'cutoff', 'r': cutoff_r})
    specs = {'11': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
             '22': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
             '12': kernels.KernelSpec('abs_scaled', {'c': -alpha})}
    initial_state = graph_core.SpeciesState(
        [[0.0, 1.0, 0.0], [0.5 * (1 + delta), 0.0, 0.5 * (1 - delta)]])

    oracles = [Oracle(f'v{species}_{i + 1}{k + 1}', 'velocity',
                      (species, i, k), value)
               for (species, i, k), value in three_point_velocities(
                   r1, r2, alpha, delta, beta2).items()]
    oracles += [Oracle(f'du{species}_{vertex + 1}', 'derivative',
                       (species, vertex), value)
                for (species, vertex), value in three_point_derivatives(
                    r1, r2, alpha, delta, cutoff_r, beta2).items()]

    stationary = three_point_stationary(r1, r2, alpha, delta, cutoff_r)
    expectations = [Expectation(
        'initial state is stationary' if stationary
        else 'initial state moves',
        lambda scenario, trajectory: (trajectory.stationary
                                      and trajectory.steps == 0)
        == stationary)]
    return Scenario(
        name='three_point',
        parameters={'r1': r1, 'r2': r2, 'alpha': alpha, 'delta': delta,
                    'cutoff_r': cutoff_r, 'beta2': beta2, 't_end': t_end},
        graph=graph, kernel_specs=specs,
        kernels=kernels.evaluate(specs, graph),
        params=dynamics.DynamicsParams(beta=(1.0, beta2), t_end=t_end),
        initial_state=initial_state, oracles=tuple(oracles),
        expectations=tuple(expectations))


# Four Points in the Plane #

def four_point(epsilon=0.25, alpha=1.5, beta2=1.0, t_end=60.0):
    """Build the four-point geometry with one-norm kernels."""
    if not 0 <= epsilon <= 1:
        raise ValueError('epsilon must lie in [0, 1].')
    if alpha < 0:
        raise ValueError('alpha must be nonnegative.')
    if beta2 <= 0:
        raise ValueError('beta2 must be positive.')

    graph = graph_core.build_graph(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [epsilon, 1.0]],
        norm='one_norm')
    specs = {'11': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
             '22': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
             '12': kernels.KernelSpec('abs_scaled', {'c': -alpha})}
    initial_state = graph_core.SpeciesState(
        [[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0]])
    oracles = (
        Oracle('du1_3', 'derivative', (1, 2),
               negative_part((1 - alpha) * (1 - epsilon))),
        Oracle('du2_1', 'derivative', (2, 0), -beta2 * (
            positive_part(alpha - 1 - 2 * alpha * epsilon)
            + positive_part(-2 - 2 * alpha * epsilon)
            + positive_part(-(1 + alpha) * (1 + epsilon)))))

    expectations = []
    if alpha < 1:
        expectations.append(Expectation(
            'species 1 stays on x4',
            lambda scenario, trajectory: all(
                state.u[0, 3] >= 1 - 1e-9 for state in trajectory.states)))
    if alpha - 1 - 2 * alpha * epsilon < 0 and alpha > 1:
        expectations.append(Expectation(
            'species 2 stays on x1 while species 1 moves to x3',
            lambda scenario, trajectory: (
                trajectory.final_state.u[1, 0] >= 1 - 1e-9
                and trajectory.final_state.u[0, 2] >= 1 - 1e-6)))
    if epsilon == 0 and alpha == 1.5 and beta2 == 1:
        expectations.append(Expectation(
            'both species split evenly',
            lambda scenario, trajectory: bool(np.allclose(
                trajectory.final_state.u,
                [[0.0, 0.0, 0.5, 0.5], [0.5, 0.5, 0.0, 0.0]], atol=1e-3))))
    return Scenario(
        name='four_point',
        parameters={'epsilon': epsilon, 'alpha': alpha, 'beta2': beta2,
                    't_end': t_end},
        graph=graph, kernel_specs=specs,
        kernels=kernels.evaluate(specs, graph),
        params=dynamics.DynamicsParams(beta=(1.0, beta2), t_end=t_end),
        initial_state=initial_state, oracles=oracles,
        expectations=tuple(expectations))


# Lattices #

def lattice_pattern(n=10, variant='kef_global', seed=0, spacing=None,
                    literal_self_kernel=False, t_end=None, dt_max=0.1):
    """Build the pattern-formation run on an n-by-n lattice."""
    if n < 3:
        raise ValueError('lattice_pattern needs n >= 3.')
    if variant not in LATTICE_VARIANTS:
        raise ValueError(f'Unknown lattice variant {variant!r}.')
    b = -1 / 200 if literal_self_kernel else 1 / 200
    if variant == 'kef_global':
        cross = kernels.KernelSpec('tent', {'c1': 10.0, 'c2': 20.0})
        self_kernel = kernels.KernelSpec('log_quad', {'a': 1.0, 'b': b})
        output_times = (0.0, 1.0, 10.0, 200.0, 5000.0)
    else:
        cross = kernels.KernelSpec('tent', {'c1': 4.0, 'c2': 20.0})
        self_kernel = kernels.KernelSpec('trunc_log_quad',
                                         {'a': 1.0, 'b': b, 's': 0.2})
        output_times = (0.0, 50.0, 100.0, 200.0)
    if t_end is None:
        t_end = output_times[-1]
    output_times = tuple(t for t in output_times if t <= t_end)

    graph = graph_core.build_graph(graph_core.lattice_positions(n, spacing))
    specs = {'11': self_kernel, '22': self_kernel, '12': cross}
    expectations = [Expectation(
        'energy never increases',
        lambda scenario, trajectory: bool(np.all(
            np.diff(trajectory.energy) <= dynamics.ENERGY_SLACK)))]
    if variant == 'kef_truncated':
        expectations += [
            Expectation('overlap of the species drops by at least half',
                        lambda scenario, trajectory: overlap_drop(
                            trajectory, scenario.graph) >= 0.5),
            Expectation('supports of the species are disjoint',
                        lambda scenario, trajectory: not supports_intersect(
                            trajectory.final_state, scenario.graph))]
    return Scenario(
        name='lattice_pattern',
        parameters={'n': n, 'variant': variant, 'seed': seed,
                    'spacing': spacing,
                    'literal_self_kernel': literal_self_kernel,
                    't_end': t_end, 'dt_max': dt_max},
        graph=graph, kernel_specs=specs,
        kernels=kernels.evaluate(specs, graph),
        params=dynamics.DynamicsParams(t_end=t_end, dt_max=dt_max),
        initial_state=random_initial_state(graph, seed),
        output_times=output_times, expectations=tuple(expectations),
        stride=100)


def mobility_experiment(variant='linear', p=2.0, seed=0, n=10,
                        literal_exp_sign=False, t_end=2000.0, dt_max=0.1):
    """Build the fully connected mobility and exponent comparison run."""
    if variant not in MOBILITY_VARIANTS:
        raise ValueError(f'Unknown mobility variant {variant!r}.')
    graph = graph_core.build_graph(graph_core.lattice_positions(n),
                                   np.full(n * n, 1 / 20))
    mobility = (dynamics.Mobility.linear() if variant == 'linear'
                else dynamics.Mobility.volume_filling())
    initial_state = random_initial_state(graph, seed)
    graph_core.validate_state(initial_state, graph, mobility)

    sign = -1.0 if literal_exp_sign else 1.0
    specs = {pair: kernels.KernelSpec('exp_scaled', {'c': 20.0}, sign=sign)
             for pair in kernels.SPECIES_PAIRS}
    expectations = []
    if variant == 'linear':
        expectations.append(Expectation(
            'both species aggregate on a single vertex',
            lambda scenario, trajectory: aggregation_time(
                trajectory, scenario.graph) is not None))
    else:
        expectations += [
            Expectation('densities stay at most 1',
                        lambda scenario, trajectory: all(
                            np.max(state.u) <= 1 for state
                            in trajectory.states)),
            Expectation('each species covers 20 to 25 vertices',
                        lambda scenario, trajectory: all(
                            20 <= size <= 25 for size in support_size(
                                trajectory.final_state, scenario.graph)))]
    return Scenario(
        name='mobility_experiment',
        parameters={'variant': variant, 'p': p, 'seed': seed, 'n': n,
                    'literal_exp_sign': literal_exp_sign, 't_end': t_end,
                    'dt_max': dt_max},
        graph=graph, kernel_specs=specs,
        kernels=kernels.evaluate(specs, graph),
        params=dynamics.DynamicsParams(p=p, mobility=mobility, t_end=t_end,
                                       dt_max=dt_max),
        initial_state=initial_state, expectations=tuple(expectations),
        stride=100)


SCENARIOS = {
    'three_point': three_point,
    'four_point': four_point,
    'lattice_pattern': lattice_pattern,
    'mobility_experiment': mobility_experiment}


def build_scenario(name, parameters=None):
    """Build a registered scenario from keyword parameters."""
    if name not in SCENARIOS:
        raise ValueError(f'Unknown scenario {name!r}, expected one of '
                         f'{sorted(SCENARIOS)}.')
    try:
        return SCENARIOS[name](**(parameters or {}))
    except TypeError as e:
        raise ValueError(f'Invalid parameters for {name}: {e}') from e


# Running #

def run(scenario, observers=(), stride=1):
    """Integrate a scenario, recording at least every scenario.stride steps."""
    logger.info('Running %s with %s.', scenario.name, scenario.parameters)
    return dynamics.integrate(scenario.initial_state, scenario.graph,
                              scenario.kernels, scenario.params,
                              observers=observers,
                              output_times=scenario.output_times,
                              stride=max(stride, scenario.stride))


def check_oracles(scenario):
    """Compare the closed-form oracles with the generic dynamics."""
    v = dynamics.velocity(scenario.initial_state, scenario.graph,
                          scenario.kernels, scenario.params)
    du, _ = dynamics.rhs(scenario.initial_state, scenario.graph,
                         scenario.kernels, scenario.params)
    results = {}
    for oracle in scenario.oracles:
        if oracle.kind == 'velocity':
            species, i, k = oracle.index
            computed = v[species - 1, i, k]
        else:
            species, vertex = oracle.index
            computed = du[species - 1, vertex]
        results[oracle.name] = {
            'expected': oracle.expected, 'computed': float(computed),
            'passed': abs(computed - oracle.expected) <= ORACLE_TOLERANCE}
    return results


def evaluate_expectations(scenario, trajectory):
    """Evaluate the expectations of a scenario on a finished run."""
    return {expectation.description:
            bool(expectation.predicate(scenario, trajectory))
            for expectation in scenario.expectations}


def is_aggregated(state, graph, tolerance=1e-3):
    """Return whether both species sit on single vertices."""
    masses = state.u * graph.weights
    return bool(np.all(np.max(masses, axis=1) >= 1 - tolerance))


def aggregation_time(trajectory, graph, tolerance=1e-3):
    """Return the first recorded time both species sit on single vertices."""
    for time, state in zip(trajectory.times, trajectory.states):
        if is_aggregated(state, graph, tolerance):
            return time
    return None


def support_size(state, graph, threshold=1e-6):
    """Return the number of vertices each species occupies."""
    graph_core.check_dimensions(state, graph)
    return tuple(int(count) for count in np.sum(state.u > threshold, axis=1))


def supports_intersect(state, graph, threshold=1e-6):
    """Return whether some vertex carries mass of both species."""
    graph_core.check_dimensions(state, graph)
    occupied = state.u * graph.weights > threshold
    return bool(np.any(occupied[0] & occupied[1]))


def overlap_drop(trajectory, graph):
    """Return the relative decrease of the overlap index over a run."""
    initial = graph_core.overlap_index(trajectory.states[0], graph)
    if initial == 0:
        return 0.0
    return 1 - graph_core.overlap_index(trajectory.final_state,
                                        graph) / initial


# Observers #

def stop_when_aggregated(graph, tolerance=1e-3):
    """Return an observer that stops a run once both species aggregate."""
    def observer(time, state, trajectory):
        return is_aggregated(state, graph, tolerance)

    return observer


def stop_when_stationary(scenario, tol=1e-9, every=100):
    """Return an observer that stops a run at a stationary state.

    The check costs one velocity evaluation, so it runs every few steps.
    """
    steps = itertools.count(1)

    def observer(time, state, trajectory):
        if next(steps) % every:
            return False
        return dynamics.is_stationary(state, scenario.graph, scenario.kernels,
                                      scenario.params, tol=tol).stationary

    return observer
