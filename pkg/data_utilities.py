"""Convert values between numpy, Python, and JSON representations."""

import dataclasses

import numpy as np


# Data Conversions #

def to_builtin(value):
    """Convert numpy values, tuples, and dataclasses to JSON types."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        value = dataclasses.asdict(value)
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def section_to_dictionary(section):
    """Return the options of a configparser section as a plain dictionary."""
    return {option: section[option] for option in section}
