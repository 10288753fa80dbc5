"""Deterministic federated-learning simulator with graph-based client sampling.

Thin Python surface over the C++ core: sampling-count statistics, the
shortest-path machinery, the masked scalar-product exchange, the client
selector, and the full experiment loop.
"""

import json as _json

from ._core import (
    FedgsError,
    counts_variance,
    floyd_warshall,
    run_experiment_json,
    scalar_product,
    select_clients,
    z_vector,
)

__version__ = "0.1.0"

__all__ = [
    "FedgsError",
    "counts_variance",
    "floyd_warshall",
    "run_experiment",
    "run_experiment_json",
    "scalar_product",
    "select_clients",
    "z_vector",
]


def run_experiment(config, write_outputs=False):
    """Run one experiment and return its summary as a dict.

    ``config`` may be a dict or JSON text. Unknown keys are rejected.
    With ``write_outputs=True`` the configured CSV/JSON artifacts are also
    written under ``output.dir``.
    """
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(run_experiment_json(config, write_outputs))
