import logging
import warnings

import numpy as np
import pytest

from hierdetect import model, scenario, setops, simulation


def random_cz(rng, dim, n_gen=None, n_con=None, scale=1.0):
    """Random constrained zonotope that is nonempty by construction."""
    n_gen = int(rng.integers(1, 5)) if n_gen is None else n_gen
    n_con = int(rng.integers(0, min(n_gen, 2) + 1)) if n_con is None else n_con
    c = rng.normal(scale=scale, size=dim)
    g = rng.normal(scale=scale, size=(dim, n_gen))
    a = rng.normal(size=(n_con, n_gen))
    beta0 = rng.uniform(-0.6, 0.6, size=n_gen)
    return setops.ConstrainedZonotope(c, g, a, a @ beta0)


def beta_grid_points(z, per_axis=21):
    """Feasible points of ``z`` found by brute force over a beta grid (tolerant)."""
    axes = [np.linspace(-1, 1, per_axis)] * z.n_gen
    betas = np.array(np.meshgrid(*axes, indexing="ij")).reshape(z.n_gen, -1).T
    return betas


@pytest.fixture(scope="session")
def example():
    return model.example_model()


@pytest.fixture(scope="session")
def example_tree():
    return scenario.read_tree(scenario.bundled_path("paper_example"))


def _quiet_parse(tree):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return scenario.parse_scenario(tree)


@pytest.fixture(scope="session")
def example_cfg(example_tree):
    return _quiet_parse(example_tree)


@pytest.fixture(scope="session")
def attacked_run(example_cfg):
    return simulation.run(example_cfg, compute_if=False)


@pytest.fixture(scope="session")
def nominal_run(example_cfg):
    return simulation.run(example_cfg.nominal(), compute_if=False, keep_sets=True)


@pytest.fixture(scope="session")
def attacked_run_if(example_cfg):
    return simulation.run(example_cfg, compute_if=True)


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.ERROR, logger="hierdetect")


CRITERIA_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA_RESULTS):
        ok, detail = CRITERIA_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
