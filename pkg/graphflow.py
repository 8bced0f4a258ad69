"""Simulate and analyze two-species interaction flows on finite graphs."""

import argparse
import configparser
import inspect
import logging
import os
import sys

import numpy as np

import configuration
import data_utilities
import dynamics
import file_utilities
import graph_core
import initializer
import kernels
import scenarios
import twopoint

LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

logger = logging.getLogger(__name__)


class Flow(initializer.Initializer):
    """Represent one invocation of the graph flow engine."""

    def __init__(self, config_path=None):
        """Initialize the flow with an optional configuration path."""
        super().__init__(__file__, config_path=config_path)
        self.completions = {
            self.graph_section: {'norm': graph_core.NORMS,
                                 'eta': graph_core.ETA_RULES},
            self.initial_state_section: {'masses': ('random',)},
            self.scenario_section: {'name': tuple(scenarios.SCENARIOS)}}


def main():
    """Execute the main program based on command-line arguments."""
    args = get_arguments()
    logging.basicConfig(level=LOG_LEVELS[min(args.v, 2)],
                        format='%(levelname)s:%(name)s: %(message)s')
    flow = Flow(args.config)

    try:
        if args.config and not os.path.isfile(flow.config_path):
            raise ValueError(f'{flow.config_path} does not exist.')
        config = configure(flow)
        if args.seed is not None:
            config[flow.general_section]['seed'] = str(args.seed)
        if args.out:
            config[flow.general_section]['output_directory'] = args.out
        run_command(args.command, flow, config)
    except (ValueError, OSError) as e:
        print(e)
        sys.exit(1)
    except (dynamics.IntegrationError, twopoint.StabilityMismatchError) as e:
        logger.error('Numerical abort: %s', e)
        print(e)
        sys.exit(2)


def get_arguments():
    """Parse and return command-line arguments."""
    parser = argparse.ArgumentParser(
        description='simulate and analyze two-species interaction flows'
        ' on finite weighted graphs',
        epilog='the lattice scenarios place n-by-n vertices on the unit'
        ' square with spacing 1/(n - 1) unless the spacing parameter is'
        ' given')
    parser.add_argument(
        'command',
        choices=initializer.extract_commands(inspect.getsource(run_command)),
        help='run a simulation, classify the two-point states,'
        ' compute a phase portrait, minimize the energy by brute force,'
        ' check the optimality conditions, run a named scenario,'
        ' or edit the configuration interactively')
    parser.add_argument(
        '-c', '--config',
        help='read the configuration from CONFIG'
        ' [default: the per-user configuration file]')
    parser.add_argument(
        '-s', '--seed', type=int,
        help='override the random seed of the configuration')
    parser.add_argument(
        '-o', '--out', metavar='DIRECTORY',
        help='write the outputs to DIRECTORY')
    parser.add_argument(
        '-v', action='count', default=0,
        help='log progress, repeat for debug messages')

    return parser.parse_args(None if sys.argv[1:] else ['-h'])


def configure(flow, can_override=True):
    """Build the default configuration and overlay the user's file."""
    config = configparser.ConfigParser(interpolation=None)

    config[flow.general_section] = {
        'seed': 0,
        'output_directory': 'output',
        'stride': 1,
        'output_times': ()}
    config[flow.graph_section] = {
        'positions': [-1.0, 0.0, 1.0],
        'weights': 'None',
        'eta': 'complete',
        'norm': 'euclidean',
        'graph_file': ''}
    config[flow.kernels_section] = {
        'k11': {'form': 'abs_scaled', 'c': 1.0},
        'k22': {'form': 'abs_scaled', 'c': 1.0},
        'k12': {'form': 'abs_scaled', 'c': -0.5}}
    config[flow.mobility_section] = {
        'theta1': 1.0,
        'theta2': 0.0}
    config[flow.dynamics_section] = {
        'p': 2.0,
        'beta': (1.0, 1.0),
        't_end': 10.0,
        'dt_max': 1e-2,
        'cfl_safety': 0.5,
        'stationarity_tol': 1e-10}
    config[flow.initial_state_section] = {
        'masses': 'random'}
    config[flow.two_point_section] = {
        'd11': 1.0,
        'd22': 1.0,
        'd12': 0.5,
        'grid_n': 21,
        'cross_validate': False,
        'samples': 100}
    config[flow.minimize_section] = {
        'resolution': 50,
        'max_pairs': 10**9}
    config[flow.scenario_section] = {
        'name': 'four_point',
        'parameters': {}}

    if can_override and os.path.isfile(flow.config_path):
        configuration.check_unknown_options(config, flow.config_path)
        configuration.read_config(config, flow.config_path)

    return config


def configure_exit(flow, config):
    """Edit the configuration interactively and exit."""
    file_utilities.check_directory(flow.config_directory)
    for section in config.sections():
        if configuration.modify_section(
                config, section, flow.config_path,
                completions=flow.completions.get(section)) == 'quit':
            break
    sys.exit()


def run_command(command, flow, config):
    """Run a command and return the names of the files it wrote."""
    if command == 'simulate':
        return simulate(flow, config)
    if command == 'classify':
        return classify(flow, config)
    if command == 'portrait':
        return portrait(flow, config)
    if command == 'minimize':
        return minimize(flow, config)
    if command == 'check':
        return check(flow, config)
    if command == 'scenario':
        return run_scenario(flow, config)
    if command == 'configure':
        return configure_exit(flow, config)
    raise ValueError(f'Unknown command {command!r}.')


# Configuration Values #

def get_float(flow, config, section, option):
    """Return a float option."""
    return configuration.get_typed(config, section, option, float,
                                   flow.config_path)


def get_int(flow, config, section, option):
    """Return an integer option."""
    return configuration.get_typed(config, section, option, int,
                                   flow.config_path)


def get_literal(flow, config, section, option, allow_text=False):
    """Return a literal option."""
    return configuration.get_literal(config, section, option,
                                     flow.config_path, allow_text=allow_text)


def locate(flow, error, section, option=None):
    """Return a ValueError prefixed with the location of an option."""
    location = configuration.describe_location(flow.config_path, section,
                                               option)
    return ValueError(f'{location}{error}')


def resolve_path(flow, path):
    """Resolve a path relative to the configuration directory."""
    if os.path.isabs(path):
        return path
    return os.path.join(flow.config_directory, path)


def build_graph(flow, config):
    """Build the graph from a graph file or the Graph section."""
    section = flow.graph_section
    graph_file = config[section]['graph_file'].strip()
    if graph_file:
        try:
            return graph_core.load_graph(resolve_path(flow, graph_file))
        except (OSError, ValueError) as e:
            raise locate(flow, e, section, 'graph_file') from e

    positions = get_literal(flow, config, section, 'positions')
    weights = get_literal(flow, config, section, 'weights')
    eta = get_literal(flow, config, section, 'eta', allow_text=True)
    try:
        return graph_core.build_graph(positions, weights, eta_rule=eta,
                                      norm=config[section]['norm'].strip())
    except (TypeError, ValueError) as e:
        raise locate(flow, e, section) from e


def build_kernels(flow, config, graph):
    """Evaluate the kernels of the Kernels section on a graph."""
    section = flow.kernels_section
    specs = {}
    for pair in kernels.SPECIES_PAIRS:
        option = f'k{pair}'
        document = get_literal(flow, config, section, option)
        if not isinstance(document, dict):
            raise locate(flow, f'{option} must be a dictionary.', section,
                         option)
        try:
            specs[pair] = kernels.kernel_spec_from_dict(
                document, base_directory=flow.config_directory)
        except (OSError, ValueError) as e:
            raise locate(flow, e, section, option) from e
    try:
        return kernels.evaluate(specs, graph)
    except ValueError as e:
        raise locate(flow, e, section) from e


def build_params(flow, config):
    """Build the mobility and dynamics parameters."""
    section = flow.mobility_section
    theta1 = get_float(flow, config, section, 'theta1')
    theta2 = get_float(flow, config, section, 'theta2')
    try:
        mobility = dynamics.Mobility(theta1, theta2)
    except ValueError as e:
        raise locate(flow, e, section) from e

    section = flow.dynamics_section
    values = {option: get_float(flow, config, section, option)
              for option in ('p', 'dt_max', 'cfl_safety', 'stationarity_tol',
                             't_end')}
    beta = get_literal(flow, config, section, 'beta')
    try:
        return dynamics.DynamicsParams(beta=beta, mobility=mobility,
                                       **values)
    except (TypeError, ValueError) as e:
        raise locate(flow, e, section) from e


def build_initial_state(flow, config, graph, params):
    """Build the initial state from masses or a seeded draw."""
    section = flow.initial_state_section
    masses = get_literal(flow, config, section, 'masses', allow_text=True)
    seed = get_int(flow, config, flow.general_section, 'seed')
    try:
        if masses == 'random':
            state = scenarios.random_initial_state(graph, seed)
        else:
            state = graph_core.state_from_masses(masses, graph)
        graph_core.validate_state(state, graph, params.mobility)
    except ValueError as e:
        raise locate(flow, e, section, 'masses') from e
    return state


def build_problem(flow, config):
    """Build the two-point problem of the Two Point section."""
    params = build_params(flow, config)
    section = flow.two_point_section
    differences = [get_float(flow, config, section, option)
                   for option in ('d11', 'd22', 'd12')]
    try:
        return twopoint.TwoPointProblem(
            *differences, beta=params.beta, p=params.p,
            mobility=params.mobility)
    except ValueError as e:
        raise locate(flow, e, section) from e


def get_output_times(flow, config):
    """Return the requested output times."""
    output_times = get_literal(flow, config, flow.general_section,
                               'output_times')
    if not isinstance(output_times, (list, tuple)):
        output_times = (output_times,)
    try:
        return tuple(float(t) for t in output_times)
    except (TypeError, ValueError) as e:
        raise locate(flow, e, flow.general_section, 'output_times') from e


# Commands #

def simulate(flow, config):
    """Integrate the configured system and write its trajectory."""
    graph = build_graph(flow, config)
    kernel_set = build_kernels(flow, config, graph)
    params = build_params(flow, config)
    state = build_initial_state(flow, config, graph, params)
    output_times = get_output_times(flow, config)
    stride = get_int(flow, config, flow.general_section, 'stride')

    trajectory = dynamics.integrate(state, graph, kernel_set, params,
                                    output_times=output_times, stride=stride)
    print(f'Finished at t={trajectory.times[-1]:g} after {trajectory.steps} '
          f'steps, energy {trajectory.energy[-1]:.6g}'
          f"{', stationary' if trajectory.stationary else ''}.")
    return write_outputs(
        flow, config, 'simulate',
        tables={'trajectory.csv': dynamics.trajectory_frame(trajectory,
                                                            graph)},
        documents={'diagnostics.json': summarize(trajectory)})


def classify(flow, config):
    """Classify the stationary states of the two-point problem."""
    problem = build_problem(flow, config)
    classification = twopoint.classify(problem)
    document = classification.to_dict()
    if configuration.get_strict_boolean(config, flow.two_point_section,
                                        'cross_validate'):
        document['cross_validation'] = twopoint.cross_validate_stability(
            problem, samples=get_int(flow, config, flow.two_point_section,
                                     'samples'),
            seed=get_int(flow, config, flow.general_section, 'seed'))

    for entry in classification.entries:
        print(f'{entry.tag}: ({entry.point[0]:.6g}, {entry.point[1]:.6g}) '
              f'{entry.stability}, energy {entry.energy:+.6g}')
    return write_outputs(flow, config, 'classify',
                         documents={'classification.json': document})


def portrait(flow, config):
    """Write the energy and velocity grid of the two-point problem."""
    problem = build_problem(flow, config)
    grid_n = get_int(flow, config, flow.two_point_section, 'grid_n')
    try:
        grid, layer = twopoint.phase_portrait(problem, grid_n)
    except ValueError as e:
        raise locate(flow, e, flow.two_point_section, 'grid_n') from e
    print(f'Evaluated {len(grid)} grid nodes and {len(layer)} stationary '
          'points.')
    return write_outputs(flow, config, 'portrait',
                         tables={'portrait.csv': grid,
                                 'stationary.csv': layer})


def minimize(flow, config):
    """Minimize the energy over a simplex grid by brute force."""
    graph = build_graph(flow, config)
    kernel_set = build_kernels(flow, config, graph)
    section = flow.minimize_section
    resolution = get_int(flow, config, section, 'resolution')
    try:
        state, value = dynamics.brute_force_minimize(
            kernel_set, graph, resolution,
            max_pairs=get_int(flow, config, section, 'max_pairs'))
    except ValueError as e:
        raise locate(flow, e, section) from e

    masses = state.u * graph.weights
    print(f'Minimal energy {value:.6g} at masses {np.round(masses, 6)}.')
    return write_outputs(
        flow, config, 'minimize',
        documents={'minimizer.json': {'energy': value, 'masses': masses,
                                      'u': state.u,
                                      'resolution': resolution}})


def check(flow, config):
    """Check the aggregation and segregation conditions of the kernels."""
    graph = build_graph(flow, config)
    kernel_set = build_kernels(flow, config, graph)
    report = kernels.check_aggregation_conditions(kernel_set)
    margin = kernels.segregation_margin(kernel_set)
    document = {'aggregation': report, 'segregation_margin': margin,
                'segregation_condition': margin > 0,
                'segregation_boundary': margin == 0}
    print(f'Aggregation (a): {report.case_a}, (b): {report.case_b}, '
          f'(c): {report.case_c}, segregation: {margin > 0}.')
    return write_outputs(flow, config, 'check',
                         documents={'check.json': document})


def run_scenario(flow, config):
    """Build, run, and evaluate a named scenario."""
    section = flow.scenario_section
    name = config[section]['name'].strip()
    parameters = get_literal(flow, config, section, 'parameters')
    if not isinstance(parameters, dict):
        raise locate(flow, 'parameters must be a dictionary.', section,
                     'parameters')
    builder = scenarios.SCENARIOS.get(name)
    if builder and 'seed' in inspect.signature(builder).parameters:
        parameters.setdefault(
            'seed', get_int(flow, config, flow.general_section, 'seed'))
    try:
        scenario = scenarios.build_scenario(name, parameters)
    except ValueError as e:
        raise locate(flow, e, section) from e

    trajectory = scenarios.run(
        scenario, stride=get_int(flow, config, flow.general_section,
                                 'stride'))
    expectations = scenarios.evaluate_expectations(scenario, trajectory)
    oracles = scenarios.check_oracles(scenario)
    for description, passed in {
            **{oracle: result['passed'] for oracle, result in oracles.items()},
            **expectations}.items():
        print(f"{description}: {'passed' if passed else 'FAILED'}")
    return write_outputs(
        flow, config, 'scenario',
        tables={'trajectory.csv': dynamics.trajectory_frame(
            trajectory, scenario.graph)},
        documents={'diagnostics.json': summarize(trajectory),
                   'expectations.json': {
                       'scenario': scenario.name,
                       'parameters': scenario.parameters,
                       'oracles': oracles,
                       'expectations': expectations}})


# Outputs #

def summarize(trajectory):
    """Return the diagnostics document of a trajectory."""
    return {'records': dynamics.diagnostics_records(trajectory),
            'stationary': trajectory.stationary,
            'stopped': trajectory.stopped,
            'steps': trajectory.steps,
            'final_time': trajectory.times[-1]}


def write_outputs(flow, config, command, tables=None, documents=None):
    """Write tables, documents, the effective config, and the manifest."""
    output_directory = config[flow.general_section]['output_directory']
    file_utilities.check_directory(output_directory)
    tables = tables or {}
    documents = documents or {}

    for name, frame in tables.items():
        file_utilities.write_csv(os.path.join(output_directory, name), frame)
    for name, document in documents.items():
        file_utilities.write_json(os.path.join(output_directory, name),
                                  document)
    configuration.write_config(config, os.path.join(output_directory,
                                                    'config.ini'))

    outputs = sorted([*tables, *documents, 'config.ini'])
    file_utilities.write_json(
        os.path.join(output_directory, 'manifest.json'),
        {'command': command,
         'seed': get_int(flow, config, flow.general_section, 'seed'),
         'outputs': outputs,
         'parameters': {section: data_utilities.section_to_dictionary(
             config[section]) for section in config.sections()},
         'config_hash': file_utilities.git_blob_hash(
             configuration.config_to_string(config))})
    logger.info('Wrote %s to %s.', outputs, output_directory)
    return [*outputs, 'manifest.json']


if __name__ == '__main__':
    main()
