"""Represent finite weighted graphs and the two-species states on them."""

from dataclasses import dataclass
import json

import numpy as np

MASS_TOLERANCE = 1e-9
NORMS = ('euclidean', 'one_norm')
ETA_RULES = ('complete', 'cutoff')


@dataclass(frozen=True, eq=False)
class FiniteGraph:
    """Hold vertex positions, vertex weights, and edge weights."""

    positions: np.ndarray
    weights: np.ndarray
    eta: np.ndarray
    norm: str = 'euclidean'
    eta_rule: dict = None

    def __post_init__(self):
        """Validate the arrays and freeze them."""
        positions = np.array(self.positions, dtype=float)
        if positions.ndim == 1:
            positions = positions[:, np.newaxis]
        weights = np.array(self.weights, dtype=float)
        eta = np.array(self.eta, dtype=float)

        if positions.ndim != 2 or positions.shape[0] < 2:
            raise ValueError('A graph needs at least 2 vertices.')
        size = positions.shape[0]
        if weights.shape != (size,):
            raise ValueError(f'Expected {size} weights, got {weights.shape}.')
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError('Vertex weights must be positive and finite.')
        if eta.shape != (size, size):
            raise ValueError(f'Expected a {size}x{size} eta matrix, '
                             f'got {eta.shape}.')
        if np.any(eta < 0):
            raise ValueError('Edge weights must be nonnegative.')
        if not np.array_equal(eta, eta.T):
            raise ValueError('Edge weights must be symmetric.')
        if self.norm not in NORMS:
            raise ValueError(f'Unknown norm {self.norm!r}.')

        np.fill_diagonal(eta, 0.0)
        for array in (positions, weights, eta):
            array.flags.writeable = False
        object.__setattr__(self, 'positions', positions)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'eta', eta)

    @property
    def size(self):
        """Return the number of vertices."""
        return self.positions.shape[0]

    @property
    def dimension(self):
        """Return the dimension of the embedding space."""
        return self.positions.shape[1]

    def distances(self, norm=None):
        """Return the matrix of pairwise distances under a norm."""
        norm = norm or self.norm
        differences = self.positions[:, np.newaxis, :] - self.positions
        if norm == 'euclidean':
            return np.sqrt(np.sum(differences**2, axis=-1))
        if norm == 'one_norm':
            return np.sum(np.abs(differences), axis=-1)
        raise ValueError(f'Unknown norm {norm!r}.')


@dataclass(frozen=True, eq=False)
class SpeciesState:
    """Hold the densities of both species relative to the vertex weights."""

    u: np.ndarray

    def __post_init__(self):
        """Check the shape and freeze the array."""
        u = np.array(self.u, dtype=float)
        if u.ndim != 2 or u.shape[0] != 2:
            raise ValueError(f'Expected a 2xN density array, got {u.shape}.')
        if not np.all(np.isfinite(u)):
            raise ValueError('Densities must be finite.')
        if np.any(u < 0):
            raise ValueError('Densities must be nonnegative.')
        u.flags.writeable = False
        object.__setattr__(self, 'u', u)

    @property
    def size(self):
        """Return the number of vertices the state lives on."""
        return self.u.shape[1]


# Graph Construction #

def build_graph(positions, weights=None, eta_rule='complete',
                norm='euclidean'):
    """Build a validated graph from positions, weights, and an eta rule."""
    positions = np.array(positions, dtype=float)
    if positions.ndim == 1:
        positions = positions[:, np.newaxis]
    if positions.ndim != 2 or positions.shape[0] < 2:
        raise ValueError('A graph needs at least 2 vertices.')
    size = positions.shape[0]
    if weights is None:
        weights = np.ones(size)
    if len(np.unique(positions, axis=0)) != size:
        raise ValueError('Vertex positions must be distinct.')

    rule = None
    if isinstance(eta_rule, str):
        eta_rule = {'rule': eta_rule}
    if isinstance(eta_rule, dict):
        rule = dict(eta_rule)
        name = rule.get('rule')
        if name == 'complete':
            eta = np.ones((size, size))
        elif name == 'cutoff':
            if 'r' not in rule:
                raise ValueError('The cutoff rule needs a radius r.')
            probe = FiniteGraph(positions, weights, np.zeros((size, size)),
                                norm=norm)
            eta = (probe.distances() < float(rule['r'])).astype(float)
        else:
            raise ValueError(f'Unknown eta rule {name!r}.')
    else:
        eta = np.array(eta_rule, dtype=float)

    if eta.shape == (size, size):
        eta = eta.copy()
        np.fill_diagonal(eta, 0.0)
    return FiniteGraph(positions, weights, eta, norm=norm, eta_rule=rule)


def lattice_positions(n, spacing=None):
    """Return row-major positions of an n-by-n lattice from the origin."""
    if n < 2:
        raise ValueError('A lattice needs n >= 2.')
    if spacing is None:
        spacing = 1.0 / (n - 1)
    rows, columns = np.divmod(np.arange(n * n), n)
    return np.column_stack((columns, rows)).astype(float) * spacing


# State Operations #

def state_from_masses(masses, graph):
    """Convert per-vertex masses into densities relative to the weights."""
    return SpeciesState(np.asarray(masses, dtype=float) / graph.weights)


def total_mass(state, graph):
    """Return the total mass of each species."""
    check_dimensions(state, graph)
    return state.u @ graph.weights


def is_probability(state, graph, tolerance=MASS_TOLERANCE):
    """Check that both species carry unit mass."""
    return bool(np.all(np.abs(total_mass(state, graph) - 1.0) <= tolerance))


def center_of_mass(state, graph):
    """Return the center of mass of each species as a 2xd array."""
    check_dimensions(state, graph)
    return (state.u * graph.weights) @ graph.positions


def overlap_index(state, graph):
    """Return the mass both species share on common vertices."""
    check_dimensions(state, graph)
    return float(np.minimum(state.u[0], state.u[1]) @ graph.weights)


def check_dimensions(state, graph):
    """Raise if the state and the graph disagree on the vertex count."""
    if state.size != graph.size:
        raise ValueError(f'State has {state.size} vertices, '
                         f'graph has {graph.size}.')


def validate_state(state, graph, mobility=None, tolerance=MASS_TOLERANCE):
    """Raise unless the state is a pair of probability densities."""
    check_dimensions(state, graph)
    masses = total_mass(state, graph)
    for species, mass in enumerate(masses, start=1):
        if abs(mass - 1.0) > tolerance:
            raise ValueError(f'Species {species} has mass {float(mass)!r}, '
                             'expected 1.')
    if mobility is not None and np.isfinite(mobility.threshold):
        if np.any(state.u > mobility.threshold):
            raise ValueError('Densities exceed the mobility threshold '
                             f'{mobility.threshold}.')


# Serialization #

def graph_to_dict(graph):
    """Convert a graph to a JSON-compatible dictionary."""
    return {'positions': graph.positions.tolist(),
            'weights': graph.weights.tolist(),
            'eta': graph.eta_rule or graph.eta.tolist(),
            'norm': graph.norm}


def graph_from_dict(document):
    """Build a graph from a dictionary in the JSON graph format."""
    unknown = set(document) - {'positions', 'weights', 'eta', 'norm'}
    if unknown:
        raise ValueError(f'Unknown graph keys: {sorted(unknown)}.')
    if 'positions' not in document:
        raise ValueError('The graph document needs positions.')
    return build_graph(document['positions'], document.get('weights'),
                       eta_rule=document.get('eta', 'complete'),
                       norm=document.get('norm', 'euclidean'))


def load_graph(path):
    """Load a graph from a JSON file."""
    with open(path, encoding='utf-8') as f:
        return graph_from_dict(json.load(f))


def save_graph(graph, path):
    """Save a graph to a JSON file."""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(graph_to_dict(graph), f, indent=2, sort_keys=True)
        f.write('\n')
