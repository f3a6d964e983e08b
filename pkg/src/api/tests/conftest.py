import json
from pathlib import Path

import pytest
import pytest_asyncio
from httpx import ASGITransport, AsyncClient

from api.main import app
from services.graph_core import ScopedGraph
from services.settings import get_settings

EXAMPLES = Path(__file__).resolve().parents[3] / "docs" / "examples"


@pytest_asyncio.fixture
async def test_client():
    """Test client for FastAPI app"""
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        yield ac


@pytest.fixture
def settings_env(monkeypatch):
    """Set MATERIALITY_* variables for one test; cached settings are rebuilt around it."""
    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"MATERIALITY_{key.upper()}", str(value))
        get_settings.cache_clear()

    yield apply
    get_settings.cache_clear()


@pytest.fixture
def example_document():
    """Load one of the JSON documents under docs/examples"""
    def load(name: str) -> dict:
        return json.loads((EXAMPLES / name).read_text())

    return load


@pytest.fixture
def example_path():
    return lambda name: str(EXAMPLES / name)


@pytest.fixture
def yes_voi_graph() -> ScopedGraph:
    return ScopedGraph.build(chance=["Z"], decisions={"X": ["Z"]}, edges=[("X", "Y"), ("Z", "Y")])


@pytest.fixture
def triangle_graph() -> ScopedGraph:
    return ScopedGraph.build(decisions={"Z": [], "X": ["Z"]}, edges=[("X", "Y"), ("Z", "Y")])
