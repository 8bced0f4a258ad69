"""Locate configuration files and write run outputs."""

import hashlib
import json
import os
import sys

import data_utilities

CSV_FLOAT_FORMAT = '%.17g'


# Paths #

def check_directory(directory):
    """Check if a directory exists, and create it if it doesn't."""
    if not os.path.isdir(directory):
        try:
            os.makedirs(directory)
        except OSError as e:
            print(e)
            sys.exit(1)


def get_config_path(script_path, can_create_directory=True):
    """Get the path to the configuration file."""
    script_directory = os.path.basename(os.path.dirname(os.path.abspath(
        script_path)))
    config_file = os.path.splitext(os.path.basename(script_path))[0] + '.ini'

    if os.name == 'nt':
        config_home = os.path.expandvars('%LOCALAPPDATA%')
    elif os.environ.get('XDG_CONFIG_HOME'):
        config_home = os.environ['XDG_CONFIG_HOME']
    else:
        config_home = os.path.expanduser('~/.config')
    config_path = os.path.join(config_home, script_directory, config_file)

    if can_create_directory:
        check_directory(os.path.dirname(config_path))

    return config_path


# Outputs #

def git_blob_hash(text):
    """Return the git blob SHA-1 of a text."""
    data = text.encode('utf-8')
    return hashlib.sha1(b'blob %d\0' % len(data) + data).hexdigest()


def write_json(path, document):
    """Write a document as sorted, indented JSON ending with a newline."""
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data_utilities.to_builtin(document), f, indent=2,
                  sort_keys=True)
        f.write('\n')


def write_csv(path, frame):
    """Write a table with round-trip float precision."""
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT,
                 lineterminator='\n')
