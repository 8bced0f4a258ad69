import numpy as np
import pytest

import dynamics
import graph_core
import kernels


def test_kernel_forms():
    distances = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(kernels.tent(distances, 10.0, 20.0),
                                  [[10.0, 0.0], [0.0, 10.0]])
    np.testing.assert_allclose(kernels.log_quad(distances, 1.0, 0.5),
                               [[0.0, 0.25], [0.25, 0.0]])
    np.testing.assert_allclose(
        kernels.trunc_log_quad(np.array([[0.0, 2.0], [2.0, 0.0]]), 1.0, 0.0,
                               0.5),
        [[0.0, np.log(2)], [np.log(2), 0.0]])
    np.testing.assert_allclose(kernels.exp_scaled(distances, 2.0),
                               [[0.0, 2 * (np.e - 1)], [2 * (np.e - 1), 0.0]])
    np.testing.assert_array_equal(kernels.constant(distances, 3),
                                  np.full((2, 2), 3.0))


def test_spec_checks_form_and_parameters():
    with pytest.raises(ValueError, match='Unknown kernel form'):
        kernels.KernelSpec('gaussian', {'c': 1.0})
    with pytest.raises(ValueError, match='takes parameters'):
        kernels.KernelSpec('tent', {'c1': 1.0})
    with pytest.raises(ValueError, match='norm'):
        kernels.KernelSpec('abs_scaled', {'c': 1.0}, norm='max')


def test_evaluate_derives_differences(line_graph, abs_specs):
    kernel_set = kernels.evaluate(abs_specs, line_graph)
    np.testing.assert_array_equal(kernel_set.k12, -0.5 * np.array(
        [[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]]))
    np.testing.assert_array_equal(kernel_set.d11, -kernel_set.k11)
    assert kernel_set.kernel(1, 0) is kernel_set.k12
    assert kernel_set.difference(1, 1) is kernel_set.d22
    assert kernel_set.size == 3


def test_evaluate_needs_every_pair(line_graph, abs_specs):
    del abs_specs['12']
    with pytest.raises(ValueError, match='Missing'):
        kernels.evaluate(abs_specs, line_graph)


def test_sign_and_norm_overrides():
    graph = graph_core.build_graph([[0.0, 0.0], [1.0, 1.0]])
    spec = kernels.KernelSpec('abs_scaled', {'c': 1.0}, norm='one_norm',
                              sign=-1.0)
    np.testing.assert_array_equal(kernels.evaluate_kernel(spec, graph),
                                  [[0.0, -2.0], [-2.0, 0.0]])


def test_explicit_kernels_are_checked(line_graph):
    with pytest.raises(ValueError, match='shape'):
        kernels.evaluate_kernel(
            kernels.KernelSpec('explicit', {'matrix': np.eye(2)}), line_graph)
    asymmetric = np.arange(9.0).reshape(3, 3)
    with pytest.raises(ValueError, match='symmetric'):
        kernels.evaluate_kernel(
            kernels.KernelSpec('explicit', {'matrix': asymmetric}),
            line_graph)


def test_symmetrize_is_bitwise_exact():
    matrix = np.array([[1.0, 0.1 + 0.2], [0.3, 2.0]])
    symmetric = kernels.symmetrize(matrix)
    np.testing.assert_array_equal(symmetric, symmetric.T)
    assert symmetric[1, 0] == 0.1 + 0.2


def test_log_kernel_rejects_coincident_vertices():
    graph = graph_core.FiniteGraph([[0.0], [0.0]], [1.0, 1.0],
                                   np.zeros((2, 2)))
    with pytest.raises(ValueError, match='log-singular'):
        kernels.evaluate_kernel(
            kernels.KernelSpec('log_quad', {'a': 1.0, 'b': 0.0}), graph)


def test_kernel_sets_must_be_symmetric():
    with pytest.raises(ValueError, match='symmetric'):
        kernels.KernelSet(np.zeros((2, 2)), np.zeros((2, 2)),
                          np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ValueError, match='shape'):
        kernels.KernelSet(np.zeros((2, 2)), np.zeros((2, 2)),
                          np.zeros((3, 3)))


def test_two_point_kernels():
    kernel_set = kernels.two_point_kernels(1.0, -2.0, 0.5)
    np.testing.assert_array_equal(kernel_set.d11, [[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(kernel_set.d22, [[0.0, -2.0], [-2.0, 0.0]])
    np.testing.assert_array_equal(kernel_set.d12, [[0.0, 0.5], [0.5, 0.0]])


@pytest.mark.parametrize('d11, d22, d12, case_a, boundary, cross_sign', [
    (-1.0, -1.0, 0.5, True, False, 1),
    (-1.0, -1.0, -0.5, True, False, -1),
    (-1.0, -1.0, 1.0, False, True, 1),
    (1.0, 1.0, 0.5, False, False, 1),
    (-1.0, -1.0, 0.0, True, False, 0)])
def test_aggregation_conditions(d11, d22, d12, case_a, boundary, cross_sign):
    report = kernels.check_aggregation_conditions(
        kernels.two_point_kernels(d11, d22, d12))
    assert report.case_a is case_a
    assert report.case_a_boundary is boundary
    assert report.cross_sign == cross_sign
    assert report.constant_diagonal == (True, True)
    assert report.case_c is (d11 < 0 and d22 < 0)


def test_case_b_needs_constant_diagonal(line_graph):
    specs = {'11': kernels.KernelSpec('explicit', {'matrix': [
        [1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]}),
             '22': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
             '12': kernels.KernelSpec('constant', {'c': 0.0})}
    report = kernels.check_aggregation_conditions(
        kernels.evaluate(specs, line_graph))
    assert report.constant_diagonal == (False, True)
    assert report.case_b == (False, True)
    assert not report.case_c


def test_segregation_condition():
    assert kernels.segregation_margin(
        kernels.two_point_kernels(1.0, 1.0, 2.0)) == pytest.approx(1.0)
    assert kernels.check_segregation_condition(
        kernels.two_point_kernels(1.0, 1.0, 2.0))
    assert not kernels.check_segregation_condition(
        kernels.two_point_kernels(1.0, 1.0, 0.5))


def test_competitor_quadratic_predicts_the_energy_change(line_graph):
    specs = {'11': kernels.KernelSpec('tent', {'c1': 2.0, 'c2': 1.0}),
             '22': kernels.KernelSpec('log_quad', {'a': 1.0, 'b': 0.3}),
             '12': kernels.KernelSpec('abs_scaled', {'c': 0.7})}
    kernel_set = kernels.evaluate(specs, line_graph)
    state = graph_core.SpeciesState([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]])
    quadratic = kernels.competitor_quadratic(kernel_set, state, line_graph,
                                             source=0, target=2)
    np.testing.assert_array_equal(quadratic.upper, [0.2, 0.6])
    np.testing.assert_array_equal(quadratic.lower, [-0.3, -0.3])

    for shift in ([0.1, -0.2], [0.2, 0.6], [-0.3, 0.05]):
        shifted = dynamics.shift_mass(state, line_graph, 0, 2, shift)
        change = (dynamics.energy(shifted, line_graph, kernel_set)
                  - dynamics.energy(state, line_graph, kernel_set))
        assert dynamics.competitor_energy_change(quadratic, shift) == \
            pytest.approx(change, abs=1e-12)


def test_competitor_quadratic_needs_distinct_vertices(line_graph, abs_specs):
    state = graph_core.SpeciesState([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(ValueError, match='differ'):
        kernels.competitor_quadratic(kernels.evaluate(abs_specs, line_graph),
                                     state, line_graph, 1, 1)


def random_kernels(condition, size, seed):
    """Draw a kernel set that satisfies one optimality condition."""
    generator = np.random.Generator(np.random.Philox(seed))

    def symmetric(low, high):
        upper = np.triu(generator.uniform(low, high, (size, size)), 1)
        return upper + upper.T

    def attractive(diagonal):
        matrix = np.maximum.outer(diagonal, diagonal) + symmetric(0.5, 1.5)
        np.fill_diagonal(matrix, diagonal)
        return matrix

    if condition == 'case_a':
        k11, k22 = (attractive(generator.uniform(0.0, 0.5, size))
                    for _ in range(2))
        product = (kernels.diagonal_difference(k11)
                   * kernels.diagonal_difference(k22))
        k12 = symmetric(-0.9, 0.9) * np.sqrt(np.minimum(product, product.T))
    elif condition == 'case_b1':
        k11 = attractive(np.full(size, generator.uniform(-1.0, 1.0)))
        k22, k12 = (symmetric(-1.0, 1.0)
                    + np.diag(generator.uniform(-1.0, 1.0, size))
                    for _ in range(2))
    elif condition in {'case_c_same', 'case_c_apart'}:
        k11, k22 = (attractive(np.full(size, generator.uniform(-1.0, 1.0)))
                    for _ in range(2))
        sign = 1.0 if condition == 'case_c_same' else -1.0
        k12 = generator.uniform(-1.0, 1.0) + sign * symmetric(0.5, 1.5)
    else:
        k11, k22 = (np.full((size, size), generator.uniform(-1.0, 1.0))
                    for _ in range(2))
        k12 = generator.uniform(-1.0, 1.0) - symmetric(0.5, 1.5)
    return kernels.KernelSet(k11, k22, k12)


@pytest.mark.parametrize('seed', range(5))
@pytest.mark.parametrize('size', [2, 3, 4])
def test_case_a_makes_every_competitor_concave(size, seed):
    kernel_set = random_kernels('case_a', size, seed)
    assert kernels.check_aggregation_conditions(kernel_set).case_a
    graph = graph_core.build_graph(np.arange(float(size)))
    state = graph_core.state_from_masses(np.full((2, size), 1 / size), graph)
    for source in range(size):
        for target in range(size):
            if source != target:
                assert kernels.competitor_quadratic(
                    kernel_set, state, graph, source,
                    target).negative_definite


@pytest.mark.parametrize('size', [
    2, 3, pytest.param(4, marks=pytest.mark.slow)])
@pytest.mark.parametrize('condition', [
    'case_a', 'case_b1', 'case_c_same', 'case_c_apart', 'segregation'])
def test_brute_force_minimizers_take_the_predicted_form(condition, size):
    kernel_set = random_kernels(condition, size, seed=size)
    report = kernels.check_aggregation_conditions(kernel_set)
    graph = graph_core.build_graph(np.arange(float(size)))
    state, _ = dynamics.brute_force_minimize(kernel_set, graph, 50)
    supports = np.count_nonzero(state.u, axis=1)
    peaks = np.argmax(state.u, axis=1)

    if condition == 'case_a':
        assert report.case_a
        assert supports.tolist() == [1, 1]
    elif condition == 'case_b1':
        assert report.case_b[0]
        assert supports[0] == 1
    elif condition.startswith('case_c'):
        assert report.case_c
        assert supports.tolist() == [1, 1]
        if condition == 'case_c_same':
            assert report.cross_sign == -1
            assert peaks[0] == peaks[1]
        else:
            assert report.cross_sign == 1
            assert peaks[0] != peaks[1]
    else:
        assert kernels.check_segregation_condition(kernel_set)
        assert not np.any(state.u[0] * state.u[1])


def test_spec_documents(tmp_path):
    matrix_path = tmp_path / 'k12.csv'
    matrix_path.write_text('0,1\n1,0\n', encoding='utf-8')
    spec = kernels.kernel_spec_from_dict(
        {'form': 'explicit', 'path': 'k12.csv', 'sign': -1},
        base_directory=str(tmp_path))
    assert spec.params['matrix'] == [[0.0, 1.0], [1.0, 0.0]]
    assert spec.sign == -1.0

    spec = kernels.kernel_spec_from_dict({'form': 'tent', 'c1': 10,
                                          'c2': 20, 'norm': 'one_norm'})
    assert kernels.kernel_spec_to_dict(spec) == {
        'form': 'tent', 'sign': 1.0, 'c1': 10.0, 'c2': 20.0,
        'norm': 'one_norm'}
    with pytest.raises(ValueError, match='Unknown kernel form'):
        kernels.kernel_spec_from_dict({'c': 1.0})
