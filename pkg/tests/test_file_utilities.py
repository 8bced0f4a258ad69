from dataclasses import dataclass
import json
import os

import numpy as np
import pandas as pd
import pytest

import data_utilities
import file_utilities
import initializer


@dataclass
class Record:
    name: str
    values: tuple


def test_git_blob_hash():
    assert file_utilities.git_blob_hash('') == \
        'e69de29bb2d1d6434b8b29ae775ad8c2e48c5391'
    assert file_utilities.git_blob_hash('a\n') != \
        file_utilities.git_blob_hash('a')


def test_write_json_converts_numpy(tmp_path):
    path = tmp_path / 'document.json'
    file_utilities.write_json(path, {'b': np.float64(0.5), 'a': np.arange(2),
                                     'flag': np.bool_(True),
                                     'record': Record('x', (1, 2))})
    text = path.read_text(encoding='utf-8')
    assert text.endswith('}\n')
    assert json.loads(text) == {'a': [0, 1], 'b': 0.5, 'flag': True,
                                'record': {'name': 'x', 'values': [1, 2]}}
    assert text.index('"a"') < text.index('"b"')


def test_write_csv_keeps_full_precision(tmp_path):
    path = tmp_path / 'table.csv'
    file_utilities.write_csv(path, pd.DataFrame({'x': [0.1 + 0.2]}))
    assert path.read_bytes() == b'x\n0.30000000000000004\n'


def test_to_builtin_leaves_plain_values():
    assert data_utilities.to_builtin('text') == 'text'
    assert data_utilities.to_builtin({1: np.int64(2)}) == {'1': 2}


@pytest.mark.skipif(os.name == 'nt', reason='uses XDG_CONFIG_HOME')
def test_config_path_follows_xdg(tmp_path, monkeypatch):
    monkeypatch.setenv('XDG_CONFIG_HOME', str(tmp_path))
    path = file_utilities.get_config_path('/opt/graph-flow/graphflow.py')
    assert path == str(tmp_path / 'graph-flow' / 'graphflow.ini')
    assert (tmp_path / 'graph-flow').is_dir()

    monkeypatch.delenv('XDG_CONFIG_HOME')
    monkeypatch.setenv('HOME', str(tmp_path / 'home'))
    path = file_utilities.get_config_path('/opt/graph-flow/graphflow.py',
                                          can_create_directory=False)
    assert path == str(tmp_path / 'home' / '.config' / 'graph-flow'
                       / 'graphflow.ini')


def test_initializer_uses_the_given_config(tmp_path):
    path = tmp_path / 'custom.ini'
    flow = initializer.Initializer('/opt/graph-flow/graphflow.py', str(path))
    assert flow.config_path == str(path)
    assert flow.config_directory == str(tmp_path)
    assert flow.initial_state_section == 'Initial State'
