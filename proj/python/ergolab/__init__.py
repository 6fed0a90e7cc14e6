"""Python bindings for the ergo toolkit.

`run` and `run_cli` expose every subcommand; the remaining functions give direct
access to the Lyapunov, Hormander, simulation and weak-error routines.
"""

from ._ergolab import (  # noqa: F401
    ConfigError,
    DimensionError,
    Error,
    __version__,
    elliptic_L,
    find_min_r0,
    hormander_rank,
    normals,
    read_trajectory,
    run,
    run_cli,
    simulate,
    weak_error_probe,
)
