"""Initialize the script execution environment."""

import ast
import os

import file_utilities


class Initializer:
    """Initialize the script execution environment."""

    def __init__(self, script_path, config_path=None):
        """Resolve the script name and its configuration file."""
        self.script_file = os.path.basename(script_path)
        self.script_base = os.path.splitext(self.script_file)[0]
        if config_path:
            self.config_path = os.path.abspath(config_path)
        else:
            self.config_path = file_utilities.get_config_path(
                script_path, can_create_directory=False)
        self.config_directory = os.path.dirname(self.config_path)

        self.general_section = 'General'
        self.graph_section = 'Graph'
        self.kernels_section = 'Kernels'
        self.mobility_section = 'Mobility'
        self.dynamics_section = 'Dynamics'
        self.initial_state_section = 'Initial State'
        self.two_point_section = 'Two Point'
        self.minimize_section = 'Minimize'
        self.scenario_section = 'Scenario'


def extract_commands(source, command='command'):
    """Extract the values compared with a command name in source code."""
    commands = []
    tree = ast.parse(source)
    for node in ast.walk(tree):
        if isinstance(node, ast.If):
            test = node.test
            if isinstance(test, ast.Compare):
                left = test.left
                if isinstance(left, ast.Name) and left.id == command:
                    comparator = test.comparators[0]
                    if isinstance(comparator, ast.Constant):
                        commands.append(comparator.value)
    return commands
