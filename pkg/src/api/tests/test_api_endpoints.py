import json

import pytest
from httpx import AsyncClient

from services.fixtures import fixture_names, scm_fixture


def scm_payload(name: str) -> dict:
    return json.loads(scm_fixture(name).scm.to_json())


@pytest.mark.asyncio
class TestServiceEndpoints:
    """Root, health and fixture listing"""

    async def test_root(self, test_client: AsyncClient):
        response = await test_client.get("/")

        assert response.status_code == 200
        assert response.json()["message"] == "Materiality API"

    async def test_health(self, test_client: AsyncClient):
        response = await test_client.get("/health")

        assert response.status_code == 200
        assert response.json() == {"status": "healthy"}

    async def test_list_fixtures(self, test_client: AsyncClient):
        """Test every named fixture is listed once"""
        # Make request
        response = await test_client.get("/fixtures")

        # Verify response
        assert response.status_code == 200
        fixtures = response.json()["fixtures"]
        assert [f["name"] for f in fixtures] == fixture_names()
        by_name = {f["name"]: f for f in fixtures}
        assert by_name["yes-voi"]["has_graph"] and by_name["yes-voi"]["has_scm"]
        assert not by_name["obstacle-2"]["has_graph"]


@pytest.mark.asyncio
class TestReproduceEndpoint:
    """GET /reproduce/{name}"""

    async def test_reproduce_success(self, test_client: AsyncClient):
        """Test a fixture with graph and model expectations"""
        # Make request
        response = await test_client.get("/reproduce/xor-collider")

        # Verify response
        assert response.status_code == 200
        data = response.json()
        assert data["fixture"] == "xor-collider"
        assert data["ok"] is True
        assert all(c["ok"] for c in data["checks"])

    async def test_reproduce_not_found(self, test_client: AsyncClient):
        # Make request
        response = await test_client.get("/reproduce/nonexistent_fixture")

        # Verify response
        assert response.status_code == 404
        assert "Fixture not found" in response.json()["detail"]
        assert "nonexistent_fixture" in response.json()["detail"]

    async def test_reproduce_invalid_k(self, test_client: AsyncClient):
        response = await test_client.get("/reproduce/yes-voi?k_override=0")
        assert response.status_code == 422


@pytest.mark.asyncio
class TestCheckEndpoint:
    """POST /check"""

    async def test_check_material_edge(self, test_client: AsyncClient, example_document):
        """Test criteria on the basic value-of-information graph"""
        # Make request
        response = await test_client.post("/check", json=example_document("yes-voi-graph.json"))

        # Verify response
        assert response.status_code == 200
        data = response.json()
        assert data["main_theorem_applies"] is True
        assert data["soluble"] is True
        assert data["edges"][0]["verdict"] == "MaterialByThm1"

    async def test_check_immaterial_edge(self, test_client: AsyncClient, example_document):
        response = await test_client.post("/check", json=example_document("triangle-graph.json"))

        assert response.status_code == 200
        edge = next(e for e in response.json()["edges"] if e["decision"] == "X")
        assert edge["verdict"] == "ImmaterialLB2"
        assert edge["witness"]["ordering"] == ["Z", "X"]

    async def test_check_cyclic_graph(self, test_client: AsyncClient, example_document):
        """Test malformed graphs are rejected as bad input"""
        graph = example_document("yes-voi-graph.json")
        graph["edges"].append(["X", "Z"])

        # Make request
        response = await test_client.post("/check", json=graph)

        # Verify response
        assert response.status_code == 400


@pytest.mark.asyncio
class TestModelEndpoints:
    """POST /synthesize, /meu and /voi"""

    async def test_synthesize(self, test_client: AsyncClient, example_document):
        """Test synthesis with a small k"""
        # Make request
        response = await test_client.post("/synthesize", json={
            "graph": example_document("yes-voi-graph.json"),
            "decision": "X",
            "context": "Z",
            "k_override": 1,
        })

        # Verify response
        assert response.status_code == 200
        data = response.json()
        assert data["k"] == 1
        assert data["compliant_utility"]["value"] == "1/1"
        assert data["paths"]["control_path"] == "Z -> X -> Y"
        assert data["scm"]["notes"]["target_context"] == "Z"

    async def test_synthesize_not_a_context(self, test_client: AsyncClient, example_document):
        response = await test_client.post("/synthesize", json={
            "graph": example_document("yes-voi-graph.json"), "decision": "X", "context": "Y",
        })
        assert response.status_code == 400

    async def test_synthesize_k_out_of_range(self, test_client: AsyncClient, example_document):
        response = await test_client.post("/synthesize", json={
            "graph": example_document("yes-voi-graph.json"), "decision": "X", "context": "Z", "k_override": 0,
        })
        assert response.status_code == 422

    async def test_meu(self, test_client: AsyncClient, example_document):
        """Test exact MEU with and without a scope edit"""
        # Make request
        full = await test_client.post("/meu", json={"scm": example_document("yes-voi-scm.json")})
        edited = await test_client.post(
            "/meu", json={"scm": example_document("yes-voi-scm.json"), "scope_edits": "X-Z"})

        # Verify response
        assert full.status_code == 200
        assert full.json()["value"]["value"] == "1/1"
        assert full.json()["witness"]["X"]["rules"] == {"0": "0", "1": "1"}
        assert full.json()["policies_examined"] == 1
        assert edited.status_code == 200
        assert edited.json()["value"]["value"] == "1/2"

    async def test_meu_budget(self, test_client: AsyncClient):
        """Test oversized policy spaces are refused"""
        # Make request
        response = await test_client.post("/meu", json={"scm": scm_payload("obstacle-2"), "budget": 1})

        # Verify response
        assert response.status_code == 413
        assert "budget is 1" in response.json()["detail"]

    async def test_meu_invalid_model(self, test_client: AsyncClient, example_document):
        scm = example_document("yes-voi-scm.json")
        scm["utility"] = "Q"

        response = await test_client.post("/meu", json={"scm": scm})

        assert response.status_code == 400

    async def test_voi(self, test_client: AsyncClient):
        # Make request
        response = await test_client.post(
            "/voi", json={"scm": scm_payload("finite-domain-2"), "decision": "X0", "context": "Z0"})

        # Verify response
        assert response.status_code == 200
        data = response.json()
        assert data["meu_with"]["value"] == "1/1"
        assert data["meu_without"]["value"] == "3/4"
        assert data["voi"]["value"] == "1/4"

    async def test_voi_unknown_decision(self, test_client: AsyncClient, example_document):
        response = await test_client.post(
            "/voi", json={"scm": example_document("yes-voi-scm.json"), "decision": "Q", "context": "Z"})
        assert response.status_code == 400
