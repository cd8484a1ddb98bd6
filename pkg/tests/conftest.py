"""Shared fixtures: a small synthesized-and-degraded dataset on disk."""

import pytest

from gdnet.cli import cmd_degrade, cmd_synth


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    """Six 64x64 toy pairs (two per attribute), degraded BI x4.

    Session-scoped and treated as read-only by tests; anything that rewrites
    the manifest or adds SR outputs must work on its own copy or directory.
    """
    root = tmp_path_factory.mktemp("dataset")
    assert cmd_synth(root, n=6, seed=1, size=64) == 0
    assert cmd_degrade(root / "manifest.jsonl", scale=4, mode="BI", seed=9,
                       workers=1) == 0
    return root
