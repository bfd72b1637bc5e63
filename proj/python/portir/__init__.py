# Copyright 2026 The portir Authors
# SPDX-License-Identifier: Apache-2.0

"""Python front end for the portir deployment toolkit."""

from ._portir import (
    Graph,
    PortirError,
    Project,
    apply_pass,
    builtin_profiles,
    check,
    generate_feeds,
    load_graph,
    passes,
    round_f16,
    run,
    run_cli,
    save_graph,
    verify_equivalence,
    zoo_graph,
    zoo_names,
)

__all__ = [
    "Graph",
    "PortirError",
    "Project",
    "apply_pass",
    "builtin_profiles",
    "check",
    "generate_feeds",
    "load_graph",
    "passes",
    "round_f16",
    "run",
    "run_cli",
    "save_graph",
    "verify_equivalence",
    "zoo_graph",
    "zoo_names",
]
