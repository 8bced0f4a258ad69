import json
import os
import sys

import pandas as pd
import pytest

import dynamics
import file_utilities
import graph_core
import graphflow


def write_config(tmp_path, text):
    path = tmp_path / 'graphflow.ini'
    path.write_text(text, encoding='utf-8')
    return str(path)


def run_cli(monkeypatch, *arguments):
    monkeypatch.setattr(sys, 'argv', ['graphflow.py', *arguments])
    graphflow.main()


def read_json(directory, name):
    with open(os.path.join(directory, name), encoding='utf-8') as f:
        return json.load(f)


def test_commands_come_from_the_dispatcher():
    flow = graphflow.Flow()
    assert flow.script_base == 'graphflow'
    assert graphflow.initializer.extract_commands(
        graphflow.inspect.getsource(graphflow.run_command)) == [
            'simulate', 'classify', 'portrait', 'minimize', 'check',
            'scenario', 'configure']


def test_help_states_the_lattice_spacing(monkeypatch, capsys):
    with pytest.raises(SystemExit) as e:
        run_cli(monkeypatch, '-h')
    assert e.value.code == 0
    assert 'spacing 1/(n - 1)' in ' '.join(capsys.readouterr().out.split())


def test_simulate_writes_outputs(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, '[Dynamics]\nt_end = 0.5\n')
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'simulate', '-c', config_path, '-o', out)

    manifest = read_json(out, 'manifest.json')
    assert manifest['command'] == 'simulate'
    assert manifest['seed'] == 0
    assert manifest['outputs'] == ['config.ini', 'diagnostics.json',
                                   'trajectory.csv']
    assert manifest['parameters']['Dynamics']['t_end'] == '0.5'
    with open(os.path.join(out, 'config.ini'), encoding='utf-8') as f:
        assert manifest['config_hash'] == file_utilities.git_blob_hash(
            f.read())

    frame = pd.read_csv(os.path.join(out, 'trajectory.csv'))
    assert list(frame.columns) == ['t', 'species', 'vertex', 'u', 'mass']
    assert frame['t'].max() == 0.5
    diagnostics = read_json(out, 'diagnostics.json')
    assert diagnostics['final_time'] == 0.5
    energies = [record['energy'] for record in diagnostics['records']]
    assert all(later <= earlier + dynamics.ENERGY_SLACK
               for earlier, later in zip(energies, energies[1:]))


def test_seeded_runs_are_reproducible(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, '[Dynamics]\nt_end = 0.2\n')
    outputs = []
    for seed, directory in (('1', 'a'), ('1', 'b'), ('2', 'c')):
        out = str(tmp_path / directory)
        run_cli(monkeypatch, 'simulate', '-c', config_path, '-s', seed,
                '-o', out)
        with open(os.path.join(out, 'trajectory.csv'), 'rb') as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]
    assert outputs[0] != outputs[2]
    assert read_json(str(tmp_path / 'a'), 'manifest.json')['seed'] == 1


def test_explicit_masses_and_graph_file(tmp_path, monkeypatch):
    graph = graph_core.build_graph([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                                   [0.5, 0.25, 0.25])
    graph_core.save_graph(graph, tmp_path / 'graph.json')
    config_path = write_config(tmp_path, (
        '[Graph]\ngraph_file = graph.json\n'
        '[Initial State]\nmasses = [[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]]\n'
        '[Dynamics]\nt_end = 0.1\n'))
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'simulate', '-c', config_path, '-o', out)
    frame = pd.read_csv(os.path.join(out, 'trajectory.csv'))
    first = frame[(frame['t'] == 0) & (frame['species'] == 1)]
    assert first['u'].tolist() == [2.0, 0.0, 0.0]


def test_classify(tmp_path, monkeypatch, capsys):
    config_path = write_config(
        tmp_path, '[Two Point]\nd11 = -1\nd22 = -1\nd12 = 0.5\n')
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'classify', '-c', config_path, '-o', out)
    document = read_json(out, 'classification.json')
    assert [entry['tag'] for entry in document['entries']] == \
        ['a', 'b1', 'b2', 'c', 'd']
    assert 'b1: (1, 0.75) unstable' in capsys.readouterr().out


def test_classify_with_cross_validation(tmp_path, monkeypatch):
    config_path = write_config(
        tmp_path, '[Two Point]\ncross_validate = True\nsamples = 4\n')
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'classify', '-c', config_path, '-o', out)
    validation = read_json(out, 'classification.json')['cross_validation']
    assert [result['numeric'] for result in validation] == [
        'asymptotically_stable']


def test_portrait(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, '[Two Point]\ngrid_n = 5\n')
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'portrait', '-c', config_path, '-o', out)
    assert len(pd.read_csv(os.path.join(out, 'portrait.csv'))) == 25
    layer = pd.read_csv(os.path.join(out, 'stationary.csv'))
    assert layer['tag'].tolist() == ['a']


def test_minimize_and_check(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, '[Minimize]\nresolution = 10\n')
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'minimize', '-c', config_path, '-o', out)
    minimizer = read_json(out, 'minimizer.json')
    assert minimizer['resolution'] == 10
    assert [sum(masses) for masses in minimizer['masses']] == \
        pytest.approx([1.0, 1.0])

    run_cli(monkeypatch, 'check', '-c', config_path, '-o', out)
    document = read_json(out, 'check.json')
    assert document['aggregation']['case_c'] is True
    assert document['segregation_condition'] is False


def test_scenario(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, (
        '[Scenario]\nname = three_point\n'
        "parameters = {'delta': 0.75, 't_end': 0.5}\n"))
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'scenario', '-c', config_path, '-o', out)
    document = read_json(out, 'expectations.json')
    assert document['scenario'] == 'three_point'
    assert all(result['passed'] for result in document['oracles'].values())
    assert document['expectations'] == {'initial state moves': True}


def test_scenario_receives_the_seed(tmp_path, monkeypatch):
    config_path = write_config(tmp_path, (
        '[Scenario]\nname = lattice_pattern\n'
        "parameters = {'n': 3, 't_end': 0.5}\n"))
    out = str(tmp_path / 'out')
    run_cli(monkeypatch, 'scenario', '-c', config_path, '-s', '5', '-o', out)
    document = read_json(out, 'expectations.json')
    assert document['parameters']['seed'] == 5


@pytest.mark.parametrize('text, message', [
    ('seed = 1\n', 'graphflow.ini'),
    ('[General]\nseed = 1\nsede = 2\n', 'graphflow.ini:3: unknown option'),
    ('[Dynamics]\np = abc\n', 'graphflow.ini:2: invalid value for p'),
    ('[Dynamics]\np = 0.5\n', 'graphflow.ini:1: p must exceed 1'),
    ('[Graph]\npositions = [0.0, 0.0]\n', 'graphflow.ini:1: Vertex'),
    ('[Initial State]\nmasses = [[1, 1, 0], [0, 0, 1]]\n',
     'graphflow.ini:2: Species 1'),
    ("[Kernels]\nk12 = {'form': 'gauss'}\n", 'graphflow.ini:2: Unknown')])
def test_invalid_configs_exit_without_outputs(tmp_path, monkeypatch, capsys,
                                              text, message):
    config_path = write_config(tmp_path, text)
    out = tmp_path / 'out'
    with pytest.raises(SystemExit) as excinfo:
        run_cli(monkeypatch, 'simulate', '-c', config_path, '-o', str(out))
    assert excinfo.value.code == 1
    assert message in capsys.readouterr().out
    assert not out.exists()


def test_missing_config_exits(tmp_path, monkeypatch):
    with pytest.raises(SystemExit) as excinfo:
        run_cli(monkeypatch, 'simulate', '-c', str(tmp_path / 'none.ini'))
    assert excinfo.value.code == 1


def test_numerical_aborts_exit_with_2(tmp_path, monkeypatch):
    def abort(*args, **kwargs):
        raise dynamics.IntegrationError('Step size underflows.', time=0.0)

    monkeypatch.setattr(graphflow.dynamics, 'integrate', abort)
    config_path = write_config(tmp_path, '[Dynamics]\nt_end = 0.5\n')
    out = tmp_path / 'out'
    with pytest.raises(SystemExit) as excinfo:
        run_cli(monkeypatch, 'simulate', '-c', config_path, '-o', str(out))
    assert excinfo.value.code == 2
    assert not out.exists()
