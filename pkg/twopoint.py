"""Classify, rank, and portray the stationary states on two vertices."""

from dataclasses import asdict, dataclass, field
import logging
import math

import numpy as np
import pandas as pd

import dynamics
import graph_core
import kernels

ASYMPTOTICALLY_STABLE = 'asymptotically_stable'
STABLE_NOT_ASYMPTOTIC = 'stable_not_asymptotic'
UNSTABLE = 'unstable'
TAGS = ('a', 'a_r_family', 'b1', 'b2', 'c', 'd')
DEGENERACY_TOLERANCE = 1e-12

logger = logging.getLogger(__name__)


class StabilityMismatchError(RuntimeError):
    """Signal that analytic and numerical stability labels disagree."""

    def __init__(self, message, mismatches=None):
        """Store the disagreeing verdicts."""
        super().__init__(message)
        self.mismatches = mismatches or []


@dataclass(frozen=True)
class TwoPointProblem:
    """Describe constant-diagonal kernels on two vertices by D11, D22, D12."""

    d11: float
    d22: float
    d12: float
    beta: tuple = (1.0, 1.0)
    p: float = 2.0
    mobility: dynamics.Mobility = field(
        default_factory=dynamics.Mobility.linear)

    def __post_init__(self):
        """Check the differences and the mobility."""
        for name in ('d11', 'd22', 'd12'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f'{name} must be finite.')
            object.__setattr__(self, name, value)
        object.__setattr__(self, 'beta',
                           tuple(float(value) for value in self.beta))
        check_mobility(self.mobility)

    @property
    def coupled(self):
        """Return whether the species interact."""
        return self.d12 != 0

    @property
    def degenerate(self):
        """Return whether D11 D22 equals D12 squared."""
        product = self.d11 * self.d22
        square = self.d12**2
        return abs(product - square) <= DEGENERACY_TOLERANCE * max(
            1.0, abs(product), square)


@dataclass(frozen=True)
class StationaryEntry:
    """Hold one stationary state, or family, with its stability label."""

    tag: str
    point: tuple
    stability: str
    energy: float
    pair: bool = True
    r_range: tuple = None
    direction: tuple = None
    free_species: tuple = ()


@dataclass(frozen=True)
class TwoPointClassification:
    """Hold every stationary state of a two-vertex problem."""

    problem: TwoPointProblem
    entries: tuple
    boundary: tuple = ()

    @property
    def tags(self):
        """Return the tags of the listed states in order."""
        return tuple(dict.fromkeys(entry.tag for entry in self.entries))

    def entry(self, tag):
        """Return the first entry with a tag."""
        for entry in self.entries:
            if entry.tag == tag:
                return entry
        raise ValueError(f'State {tag!r} is not stationary for this problem.')

    def to_dict(self):
        """Convert the classification to a JSON-compatible dictionary."""
        problem = self.problem
        return {'d11': problem.d11, 'd22': problem.d22, 'd12': problem.d12,
                'coupled': problem.coupled,
                'degenerate': problem.coupled and problem.degenerate,
                'entries': [asdict(entry) for entry in self.entries],
                'boundary': list(self.boundary)}


# System #

def check_mobility(mobility, weights=(1.0, 1.0)):
    """Check that the mobility vanishes exactly on empty vertices."""
    if not mobility.upwind_admissible:
        raise ValueError('theta1 = 0 gives positive mobility on empty '
                         'vertices.')
    if mobility.theta2 > 0 and max(weights) > 1:
        raise ValueError('Volume filling needs vertex weights of at most 1.')


def two_point_system(problem, **overrides):
    """Return the graph, kernels, and dynamics parameters of a problem."""
    graph = graph_core.build_graph([[0.0], [1.0]], [1.0, 1.0])
    kernel_set = kernels.two_point_kernels(problem.d11, problem.d22,
                                           problem.d12)
    params = dynamics.DynamicsParams(p=problem.p, beta=problem.beta,
                                     mobility=problem.mobility, **overrides)
    return graph, kernel_set, params


def point_state(x, y):
    """Return the state with rho1(x1) = x and rho2(x1) = y."""
    return graph_core.SpeciesState([[x, 1.0 - x], [y, 1.0 - y]])


def point_energy(problem, x, y):
    """Return the energy at (x, y) in terms of the differences."""
    return (-problem.d11 * x * (1 - x) - problem.d22 * y * (1 - y)
            - problem.d12 * (x * (1 - y) + (1 - x) * y))


def energy_hessian(problem):
    """Return the Hessian of the energy in (x, y)."""
    return 2.0 * np.array([[problem.d11, problem.d12],
                           [problem.d12, problem.d22]])


def a_is_minimizer(problem):
    """Check that the half-half state strictly minimizes the energy."""
    return bool(np.all(np.linalg.eigvalsh(energy_hessian(problem)) > 0))


def only_a_condition(problem):
    """Check the condition under which the half-half state is the only one."""
    return (problem.d11 > 0 and problem.d22 > 0
            and problem.d11 * problem.d22 > problem.d12**2
            and not problem.degenerate)


def only_a_r_condition(problem):
    """Check the condition under which only a or the a_r family remain."""
    return (problem.d11 > 0 and problem.d22 > 0
            and (problem.d11 * problem.d22 > problem.d12**2
                 or problem.degenerate))


def family_range(problem):
    """Return the admissible range of the family parameter r."""
    limit = abs(problem.d22 / problem.d12)
    return max(-1.0, -limit), min(1.0, limit)


def representative_point(problem, tag, r=0.0):
    """Return (rho1(x1), rho2(x1)) of a tagged state."""
    if tag == 'a':
        return 0.5, 0.5
    if tag == 'a_r_family':
        return 0.5 * (1 + r), 0.5 * (1 - problem.d12 / problem.d22 * r)
    if tag == 'b1':
        return 1.0, 0.5 * (1 - problem.d12 / problem.d22)
    if tag == 'b2':
        return 0.5 * (1 - problem.d12 / problem.d11), 1.0
    if tag == 'c':
        return 1.0, 1.0
    if tag == 'd':
        return 1.0, 0.0
    raise ValueError(f'Unknown tag {tag!r}.')


# Energy Gaps #

GAP_FORMULAS = {
    ('a', 'a_r_family'): lambda d11, d22, d12, r: (
        0.25 * (d11 - d12**2 / d22) * r**2),
    ('a', 'b1'): lambda d11, d22, d12, r: 0.25 * (d11 - d12**2 / d22),
    ('a', 'b2'): lambda d11, d22, d12, r: 0.25 * (d22 - d12**2 / d11),
    ('a', 'c'): lambda d11, d22, d12, r: 0.25 * (d11 + 2 * d12 + d22),
    ('a', 'd'): lambda d11, d22, d12, r: 0.25 * (d11 - 2 * d12 + d22),
    ('b1', 'c'): lambda d11, d22, d12, r: (d22 + d12)**2 / (4 * d22),
    ('b1', 'd'): lambda d11, d22, d12, r: (d22 - d12)**2 / (4 * d22),
    ('b2', 'c'): lambda d11, d22, d12, r: (d11 + d12)**2 / (4 * d11),
    ('b2', 'd'): lambda d11, d22, d12, r: (d11 - d12)**2 / (4 * d11),
    ('c', 'd'): lambda d11, d22, d12, r: -d12}


def closed_form_gap(d11, d22, d12, tag1, tag2, r=0.0):
    """Return E(tag2) - E(tag1) from the closed-form gap table."""
    for tag in (tag1, tag2):
        if tag not in TAGS:
            raise ValueError(f'Unknown tag {tag!r}.')
    if tag1 == tag2 and tag1 != 'a_r_family':
        return 0.0
    if (tag1, tag2) in GAP_FORMULAS:
        return GAP_FORMULAS[(tag1, tag2)](d11, d22, d12, r)
    if (tag2, tag1) in GAP_FORMULAS:
        return -GAP_FORMULAS[(tag2, tag1)](d11, d22, d12, r)
    return (closed_form_gap(d11, d22, d12, 'a', tag2, r)
            - closed_form_gap(d11, d22, d12, 'a', tag1, r))


def energy_gap(problem, tag1, tag2, r=0.0):
    """Return E(tag2) - E(tag1) for two stationary states of a problem."""
    classification = classify(problem)
    first = classification.entry(tag1)
    second = classification.entry(tag2)
    if problem.coupled:
        return closed_form_gap(problem.d11, problem.d22, problem.d12,
                               tag1, tag2, r)
    return entry_energy(problem, second, r) - entry_energy(problem, first, r)


def entry_energy(problem, entry, r=0.0):
    """Return the energy of an entry relative to the half-half state."""
    x, y = entry.point
    if entry.direction is not None:
        x += r * entry.direction[0]
        y += r * entry.direction[1]
    return point_energy(problem, x, y) - point_energy(problem, 0.5, 0.5)


# Classification #

def classify(problem):
    """Enumerate the stationary states with their stability labels."""
    if problem.coupled:
        return classify_coupled(problem)
    return classify_decoupled(problem)


def classify_coupled(problem):
    """Classify a problem whose species interact."""
    d11, d22, d12 = problem.d11, problem.d22, problem.d12
    present = {}
    boundary = []

    for tag, own, other in (('b1', d11, d22), ('b2', d22, d11)):
        if other == 0 or abs(d12) > abs(other):
            continue
        threshold = d12**2 / other
        if own < threshold and not problem.degenerate:
            present[tag] = True
        elif math.isclose(own, threshold, rel_tol=DEGENERACY_TOLERANCE,
                          abs_tol=DEGENERACY_TOLERANCE):
            boundary.append(tag)
    for tag, limit in (('c', -d12), ('d', d12)):
        if d11 < limit and d22 < limit:
            present[tag] = True
        elif d11 <= limit and d22 <= limit:
            boundary.append(tag)

    entries = []
    if problem.degenerate:
        stability = STABLE_NOT_ASYMPTOTIC if d11 > 0 else UNSTABLE
        entries.append(_entry(problem, 'a', stability, pair=False))
        entries.append(StationaryEntry(
            tag='a_r_family', point=(0.5, 0.5), stability=stability,
            energy=0.0, pair=False, r_range=family_range(problem),
            direction=(0.5, -0.5 * d12 / d22)))
    else:
        stability = ASYMPTOTICALLY_STABLE if not present else UNSTABLE
        entries.append(_entry(problem, 'a', stability, pair=False))
    for tag, other in (('b1', 'b2'), ('b2', 'b1')):
        if tag in present:
            alone = not ({other, 'c', 'd'} & set(present))
            entries.append(_entry(problem, tag, ASYMPTOTICALLY_STABLE
                                  if alone else UNSTABLE))
    for tag in ('c', 'd'):
        if tag in present:
            entries.append(_entry(problem, tag, ASYMPTOTICALLY_STABLE))

    logger.debug('Classified (%g, %g, %g): %s.', d11, d22, d12,
                 [entry.tag for entry in entries])
    return TwoPointClassification(problem, tuple(entries), tuple(boundary))


def classify_decoupled(problem):
    """Classify a problem whose species move independently."""
    species_states = [_species_states(problem.d11),
                      _species_states(problem.d22)]
    entries = []
    for first in species_states[0]:
        for second in species_states[1]:
            kinds = (first[0], second[0])
            labels = (first[2], second[2])
            if UNSTABLE in labels:
                stability = UNSTABLE
            elif all(label == ASYMPTOTICALLY_STABLE for label in labels):
                stability = ASYMPTOTICALLY_STABLE
            else:
                stability = STABLE_NOT_ASYMPTOTIC
            point = (first[1], second[1])
            free = tuple(species for species, kind in enumerate(kinds, 1)
                         if kind == 'free')

            if len(free) == 1:
                direction = (0.5, 0.0) if free[0] == 1 else (0.0, 0.5)
                entry = StationaryEntry(
                    tag='a_r_family', point=point, stability=stability,
                    energy=0.0, pair='aggregated' in kinds,
                    r_range=(-1.0, 1.0), direction=direction,
                    free_species=free)
            elif free:
                entry = StationaryEntry(
                    tag='a_r_family', point=point, stability=stability,
                    energy=0.0, pair=False, free_species=free)
            else:
                tag = DECOUPLED_TAGS[kinds]
                if kinds == ('aggregated', 'aggregated'):
                    for tag, point in (('c', (1.0, 1.0)), ('d', (1.0, 0.0))):
                        entries.append(StationaryEntry(
                            tag=tag, point=point, stability=stability,
                            energy=0.0))
                    continue
                entry = StationaryEntry(tag=tag, point=point,
                                        stability=stability, energy=0.0,
                                        pair=tag != 'a')
            entries.append(entry)

    entries = [StationaryEntry(**{**asdict(entry),
                                  'energy': entry_energy(problem, entry)})
               for entry in entries]
    entries.sort(key=lambda entry: TAGS.index(entry.tag))
    return TwoPointClassification(problem, tuple(entries))


DECOUPLED_TAGS = {
    ('half', 'half'): 'a',
    ('aggregated', 'half'): 'b1',
    ('half', 'aggregated'): 'b2',
    ('aggregated', 'aggregated'): 'c'}


def _species_states(difference):
    """Return (kind, coordinate, stability) for one uncoupled species."""
    if difference > 0:
        return [('half', 0.5, ASYMPTOTICALLY_STABLE)]
    if difference < 0:
        return [('half', 0.5, UNSTABLE),
                ('aggregated', 1.0, ASYMPTOTICALLY_STABLE)]
    return [('free', 0.5, STABLE_NOT_ASYMPTOTIC)]


def _entry(problem, tag, stability, pair=True):
    """Return the entry of a tagged isolated state."""
    point = representative_point(problem, tag)
    return StationaryEntry(
        tag=tag, point=point, stability=stability, pair=pair,
        energy=closed_form_gap(problem.d11, problem.d22, problem.d12, 'a',
                               tag))


def entry_points(entry, samples=11):
    """Return sample points of an entry, walking along a family."""
    if entry.direction is None:
        return [entry.point]
    low, high = entry.r_range
    return [(entry.point[0] + r * entry.direction[0],
             entry.point[1] + r * entry.direction[1])
            for r in np.linspace(low, high, samples)]


# Phase Portrait #

def phase_portrait(problem, grid_n):
    """Return the energy and velocity grid with the stationary layer."""
    if grid_n < 2:
        raise ValueError('grid_n must be at least 2.')
    graph, kernel_set, params = two_point_system(problem)
    records = []
    for x in np.linspace(0.0, 1.0, grid_n):
        for y in np.linspace(0.0, 1.0, grid_n):
            du, _ = dynamics.rhs(point_state(x, y), graph, kernel_set, params)
            records.append((x, y, point_energy(problem, x, y), du[0, 0],
                            du[1, 0]))
    grid = pd.DataFrame(records, columns=['x', 'y', 'E', 'dxdt', 'dydt'])
    return grid, stationary_layer(classify(problem))


def stationary_layer(classification):
    """Return the stationary states, with their mirror images, as a table."""
    problem = classification.problem
    records = []
    for entry in classification.entries:
        for x, y in entry_points(entry):
            images = [(x, y)]
            if entry.pair:
                images.append((1.0 - x, 1.0 - y))
            for image in images:
                records.append((entry.tag, image[0], image[1],
                                point_energy(problem, *image),
                                entry.stability))
    layer = pd.DataFrame(records, columns=['tag', 'x', 'y', 'E', 'stability'])
    return layer.drop_duplicates(ignore_index=True)


# Numerical Cross-validation #

def perturbation_verdict(problem, point, samples=100, magnitude=1e-2, seed=0,
                         escape=0.1, converge=1e-3, t_end=100.0,
                         stop_on_escape=False):
    """Integrate from perturbations of a point and summarize the outcomes."""
    graph, kernel_set, params = two_point_system(problem, dt_max=0.1,
                                                 t_end=t_end)
    rng = np.random.Generator(np.random.Philox(seed))
    angles = rng.uniform(0.0, 2 * np.pi, samples)
    escaped = 0
    converged = 0
    for angle in angles:
        x = min(max(point[0] + magnitude * np.cos(angle), 0.0), 1.0)
        y = min(max(point[1] + magnitude * np.sin(angle), 0.0), 1.0)
        outcome = {'escaped': False}

        def watch(time, state, trajectory):
            """Stop once the run leaves or settles near the point."""
            distance = math.hypot(state.u[0, 0] - point[0],
                                  state.u[1, 0] - point[1])
            if distance > escape:
                outcome['escaped'] = True
                return True
            return distance <= converge

        trajectory = dynamics.integrate(point_state(x, y), graph, kernel_set,
                                        params, observers=(watch,),
                                        stride=10**9)
        final = trajectory.final_state.u
        distance = math.hypot(final[0, 0] - point[0], final[1, 0] - point[1])
        if outcome['escaped']:
            escaped += 1
            if stop_on_escape:
                break
        elif distance <= converge:
            converged += 1
    return {'samples': samples, 'escaped': escaped, 'converged': converged}


def cross_validate_stability(problem, samples=100, magnitude=1e-2, seed=0,
                             t_end=100.0):
    """Compare analytic stability labels with perturbed simulations."""
    classification = classify(problem)
    results = []
    mismatches = []
    for entry in classification.entries:
        verdict = perturbation_verdict(
            problem, entry.point, samples=samples, magnitude=magnitude,
            seed=seed, t_end=t_end,
            stop_on_escape=entry.stability == UNSTABLE)
        if verdict['escaped']:
            numeric = UNSTABLE
        elif verdict['converged'] == samples:
            numeric = ASYMPTOTICALLY_STABLE
        else:
            numeric = STABLE_NOT_ASYMPTOTIC
        agrees = {ASYMPTOTICALLY_STABLE: numeric == ASYMPTOTICALLY_STABLE,
                  UNSTABLE: numeric == UNSTABLE,
                  STABLE_NOT_ASYMPTOTIC: numeric != UNSTABLE}[entry.stability]
        result = {'tag': entry.tag, 'point': entry.point,
                  'analytic': entry.stability, 'numeric': numeric, **verdict}
        results.append(result)
        if not agrees:
            mismatches.append(result)

    if mismatches:
        logger.error('Stability mismatch for (%g, %g, %g): %s.', problem.d11,
                     problem.d22, problem.d12, mismatches)
        raise StabilityMismatchError(
            f'{len(mismatches)} stability labels disagree with simulation.',
            mismatches)
    return results
