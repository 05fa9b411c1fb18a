from pathlib import Path

import numpy as np
import pytest
import pytest_asyncio

import anwfit
from anwfit.kernels import Dataset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def wavy_dataset():
    """41 evenly spaced samples of a wavy curve with two waypoints."""
    xs = np.linspace(0.0, 1.0, 41)
    ys = np.sin(2 * np.pi * xs) + 0.05 * np.cos(37.0 * xs)
    ys[10] = 1.2
    ys[30] = -1.2
    return Dataset(xs, ys, (10, 30))


@pytest.fixture
def random_dataset(rng):
    def make(n=30, q=2):
        xs = np.sort(rng.uniform(0.0, 1.0, n))
        ys = np.sin(2 * np.pi * xs) + rng.normal(0.0, 0.2, n)
        constraints = tuple(rng.choice(n, size=q, replace=False)) if q else ()
        return Dataset(xs, ys, constraints)

    return make


@pytest_asyncio.fixture
async def client(monkeypatch):
    monkeypatch.setenv("ANWFIT_GRID_SIZE", "11")
    monkeypatch.setenv("ANWFIT_FOLDS", "3")

    quart_app = anwfit.create_app(testing=True)

    async with quart_app.test_app() as test_app:
        quart_app.config.update({"TESTING": True})

        yield test_app.test_client()
