import numpy as np
import pytest

import graph_core
import kernels


@pytest.fixture
def line_graph():
    return graph_core.build_graph([-1.0, 0.0, 1.0])


@pytest.fixture
def random_graph():
    generator = np.random.Generator(np.random.Philox(3))
    return graph_core.build_graph(generator.random((5, 2)),
                                  generator.uniform(0.5, 1.5, 5))


@pytest.fixture
def abs_specs():
    return {'11': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
            '22': kernels.KernelSpec('abs_scaled', {'c': 1.0}),
            '12': kernels.KernelSpec('abs_scaled', {'c': -0.5})}
