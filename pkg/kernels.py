"""Evaluate interaction kernels and check aggregation conditions."""

from dataclasses import dataclass
import os

import numpy as np
import pandas as pd

SPECIES_PAIRS = ('11', '22', '12')
DIAGONAL_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-12


# Kernel Forms #

def tent(distances, c1, c2):
    """Return (c1 - c2 |x|)+."""
    return np.maximum(c1 - c2 * distances, 0.0)


def log_quad(distances, a, b):
    """Return -a log|x| + b |x|^2 / 2 with a zero diagonal."""
    with np.errstate(divide='ignore', invalid='ignore'):
        values = -a * np.log(distances) + b * distances**2 / 2
    np.fill_diagonal(values, 0.0)
    return values


def trunc_log_quad(distances, a, b, s):
    """Return log_quad inside the radius s and its value at s beyond."""
    if s <= 0:
        raise ValueError('The truncation radius s must be positive.')
    return log_quad(np.minimum(distances, s), a, b)


def exp_scaled(distances, c):
    """Return c (exp|x| - 1)."""
    return c * np.expm1(distances)


def abs_scaled(distances, c):
    """Return c |x - y|."""
    return c * distances


def constant(distances, c):
    """Return the constant c everywhere."""
    return np.full_like(distances, float(c))


KERNEL_FORMS = {
    'tent': tent,
    'log_quad': log_quad,
    'trunc_log_quad': trunc_log_quad,
    'exp_scaled': exp_scaled,
    'abs_scaled': abs_scaled,
    'constant': constant,
    'explicit': None}
FORM_PARAMETERS = {
    'tent': ('c1', 'c2'),
    'log_quad': ('a', 'b'),
    'trunc_log_quad': ('a', 'b', 's'),
    'exp_scaled': ('c',),
    'abs_scaled': ('c',),
    'constant': ('c',),
    'explicit': ('matrix',)}
LOG_SINGULAR_FORMS = ('log_quad', 'trunc_log_quad')


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Describe one interaction kernel by its form and parameters."""

    form: str
    params: dict
    norm: str = None
    sign: float = 1.0

    def __post_init__(self):
        """Check the form and its parameters."""
        if self.form not in KERNEL_FORMS:
            raise ValueError(f'Unknown kernel form {self.form!r}.')
        expected = set(FORM_PARAMETERS[self.form])
        if set(self.params) != expected:
            raise ValueError(f'Kernel form {self.form!r} takes parameters '
                             f'{sorted(expected)}, got {sorted(self.params)}.')
        if self.norm not in (None, 'euclidean', 'one_norm'):
            raise ValueError(f'Unknown norm {self.norm!r}.')


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Hold the three interaction matrices and their diagonal differences."""

    k11: np.ndarray
    k22: np.ndarray
    k12: np.ndarray

    def __post_init__(self):
        """Validate the matrices and derive the diagonal differences."""
        matrices = []
        for name in ('k11', 'k22', 'k12'):
            matrix = np.array(getattr(self, name), dtype=float)
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise ValueError(f'{name} must be a square matrix.')
            if not np.all(np.isfinite(matrix)):
                raise ValueError(f'{name} must be finite.')
            if not np.array_equal(matrix, matrix.T):
                raise ValueError(f'{name} must be symmetric.')
            matrix.flags.writeable = False
            matrices.append(matrix)
        if len({matrix.shape for matrix in matrices}) != 1:
            raise ValueError('Kernel matrices must share one shape.')

        for name, matrix in zip(('k11', 'k22', 'k12'), matrices):
            object.__setattr__(self, name, matrix)
            difference = diagonal_difference(matrix)
            difference.flags.writeable = False
            object.__setattr__(self, 'd' + name[1:], difference)

    @property
    def size(self):
        """Return the number of vertices the kernels act on."""
        return self.k11.shape[0]

    def kernel(self, i, k):
        """Return K^(ik) for zero-based species indices."""
        if i == k:
            return self.k11 if i == 0 else self.k22
        return self.k12

    def difference(self, i, k):
        """Return D^(ik) for zero-based species indices."""
        if i == k:
            return self.d11 if i == 0 else self.d22
        return self.d12


@dataclass(frozen=True)
class AggregationReport:
    """Report which aggregation conditions hold for a kernel set."""

    case_a: bool
    case_a_boundary: bool
    case_b: tuple
    case_b_boundary: tuple
    case_c: bool
    cross_sign: int
    constant_diagonal: tuple


@dataclass(frozen=True, eq=False)
class CompetitorQuadratic:
    """Hold the quadratic shift problem between two vertices."""

    matrix: np.ndarray
    vector: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    negative_definite: bool


# Evaluation #

def diagonal_difference(matrix):
    """Return D with D[i, j] = K[i, i] - K[i, j]."""
    return np.diag(matrix)[:, np.newaxis] - matrix


def symmetrize(matrix):
    """Mirror the upper triangle so the matrix is bitwise symmetric."""
    upper = np.triu(matrix)
    return upper + np.triu(matrix, 1).T


def evaluate_kernel(spec, graph):
    """Evaluate one kernel spec on the vertex pairs of a graph."""
    if spec.form == 'explicit':
        matrix = np.array(spec.params['matrix'], dtype=float)
        if matrix.shape != (graph.size, graph.size):
            raise ValueError(f'Explicit kernel has shape {matrix.shape}, '
                             f'expected {(graph.size, graph.size)}.')
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValueError('Explicit kernel must be symmetric.')
    else:
        distances = graph.distances(spec.norm)
        if spec.form in LOG_SINGULAR_FORMS:
            off_diagonal = ~np.eye(graph.size, dtype=bool)
            if np.any(distances[off_diagonal] == 0):
                raise ValueError('Duplicate positions with a log-singular '
                                 'kernel.')
        matrix = KERNEL_FORMS[spec.form](distances, **spec.params)
    return symmetrize(spec.sign * matrix)


def evaluate(specs, graph):
    """Evaluate the kernel specs for all species pairs on a graph."""
    missing = set(SPECIES_PAIRS) - set(specs)
    if missing:
        raise ValueError(f'Missing kernel specs: {sorted(missing)}.')
    return KernelSet(*(evaluate_kernel(specs[pair], graph)
                       for pair in SPECIES_PAIRS))


def two_point_kernels(d11, d22, d12):
    """Return zero-diagonal two-vertex kernels with the given differences."""
    return KernelSet(*(np.array([[0.0, -d], [-d, 0.0]])
                       for d in (d11, d22, d12)))


# Optimality Conditions #

def check_aggregation_conditions(kernels):
    """Check the conditions under which minimizers aggregate."""
    off_diagonal = ~np.eye(kernels.size, dtype=bool)
    d11 = kernels.d11[off_diagonal]
    d22 = kernels.d22[off_diagonal]
    d12 = kernels.d12[off_diagonal]

    product = d11 * d22
    square = d12**2
    case_a = bool(np.all(d11 < 0) and np.all(d22 < 0)
                  and np.all(product > square))
    case_a_boundary = (not case_a and bool(
        np.all(d11 <= 0) and np.all(d22 <= 0) and np.all(product >= square)))

    constant_diagonal = tuple(
        bool(np.ptp(np.diag(matrix)) <= DIAGONAL_TOLERANCE)
        for matrix in (kernels.k11, kernels.k22))
    case_b = []
    case_b_boundary = []
    for difference, is_constant in zip((d11, d22), constant_diagonal):
        is_negative = is_constant and bool(np.all(difference < 0))
        case_b.append(is_negative)
        case_b_boundary.append(not is_negative and is_constant
                               and bool(np.all(difference <= 0)))

    if np.all(d12 > 0):
        cross_sign = 1
    elif np.all(d12 < 0):
        cross_sign = -1
    else:
        cross_sign = 0

    return AggregationReport(
        case_a=case_a, case_a_boundary=case_a_boundary,
        case_b=tuple(case_b), case_b_boundary=tuple(case_b_boundary),
        case_c=all(case_b), cross_sign=cross_sign,
        constant_diagonal=constant_diagonal)


def segregation_margin(kernels):
    """Return the slack of the full segregation condition."""
    off_diagonal = ~np.eye(kernels.size, dtype=bool)
    gap = float(np.min(kernels.d12[off_diagonal]))
    spread = 0.5 * sum(float(np.ptp(matrix))
                       for matrix in (kernels.k11, kernels.k22))
    return gap - spread


def check_segregation_condition(kernels):
    """Check that full segregation is energetically optimal."""
    return segregation_margin(kernels) > 0


def competitor_quadratic(kernels, state, graph, source, target):
    """Return the quadratic problem of shifting mass from source to target."""
    if source == target:
        raise ValueError('Source and target vertices must differ.')
    masses = state.u * graph.weights

    matrix = np.empty((2, 2))
    vector = np.zeros(2)
    for i in range(2):
        for k in range(2):
            difference = kernels.difference(i, k)
            matrix[i, k] = 0.5 * (difference[target, source]
                                  + difference[source, target])
            vector[i] += 0.5 * masses[k] @ (difference[:, source]
                                            - difference[:, target])

    a11, a12, a22 = matrix[0, 0], matrix[0, 1], matrix[1, 1]
    negative_definite = bool(
        a11 + a22 < -np.sqrt((a11 - a22)**2 + 4 * a12**2))
    return CompetitorQuadratic(
        matrix=matrix, vector=vector, lower=-masses[:, target],
        upper=masses[:, source].copy(), negative_definite=negative_definite)


# Specs #

def kernel_spec_from_dict(document, base_directory=None):
    """Build a kernel spec from a configuration dictionary."""
    document = dict(document)
    form = document.pop('form', None)
    if form not in KERNEL_FORMS:
        raise ValueError(f'Unknown kernel form {form!r}.')
    norm = document.pop('norm', None)
    sign = float(document.pop('sign', 1.0))

    if form == 'explicit' and 'path' in document:
        path = document.pop('path')
        if base_directory and not os.path.isabs(path):
            path = os.path.join(base_directory, path)
        document['matrix'] = pd.read_csv(path, header=None).to_numpy(
            dtype=float).tolist()
    params = {key: (value if key == 'matrix' else float(value))
              for key, value in document.items()}
    return KernelSpec(form, params, norm=norm, sign=sign)


def kernel_spec_to_dict(spec):
    """Convert a kernel spec to a configuration dictionary."""
    document = {'form': spec.form, 'sign': spec.sign, **spec.params}
    if spec.norm:
        document['norm'] = spec.norm
    return document
