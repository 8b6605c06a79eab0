"""Fixtures: a 20-bundle dataset built via the generator CLI, a mock endpoint.

The runner is exercised strictly through the surfaces the generator package
publishes: its console script and the files it writes. Nothing here imports
the generator.
"""

from __future__ import annotations

import pytest

from mock_endpoint import FAMILY, MockEndpoint, run_generator


@pytest.fixture(scope="session")
def dataset(tmp_path_factory):
    """Dataset root with one family and a 20-bundle test split."""
    root = tmp_path_factory.mktemp("runner_data")
    proc = run_generator([
        "generate", "--seed", "5", "--out", str(root),
        "--family", FAMILY, "--splits", "0,0,20", "--canvas", "96x96"])
    assert proc.returncode == 0, proc.stderr
    return root


@pytest.fixture(scope="session")
def family_dir(dataset):
    return dataset / "families" / FAMILY


@pytest.fixture()
def endpoint():
    mock = MockEndpoint()
    yield mock
    mock.close()
