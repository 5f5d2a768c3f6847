"""
Configuration lookups for sparse-modes
"""

import os

from .constants import SETTINGS_ENV_PREFIX


def get_setting(name):
    """
    Get a package setting, honouring environment overrides.

    Args:
        name: Key of ``sparsemodes.default_settings``

    Returns:
        Value of ``SPARSEMODES_<NAME>`` converted to the default's type,
        or the default when the variable is unset.
    """
    from . import default_settings

    default = default_settings[name]
    raw = os.environ.get(f"{SETTINGS_ENV_PREFIX}{name.upper()}")
    if raw is None or raw == "":
        return default
    return type(default)(raw)


def get_output_root():
    """
    Get the default root directory for command outputs.

    Returns value of SPARSEMODES_OUTPUT_ROOT or DEFAULT_OUTPUT_ROOT if not configured.
    """
    return get_setting("output_root")
