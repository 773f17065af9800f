# file: tests/test_api.py
import pytest
from fastapi.testclient import TestClient

from aacord.main import app
from aacord.utils.config import Config


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json() == {"message": "aacord is running", "version": Config.VERSION}


def test_catalog(client):
    body = client.get("/catalog").json()
    names = [entry["name"] for entry in body["systems"]]
    assert "e2-noncommutative" in names
    e2 = body["systems"][names.index("e2-noncommutative")]
    assert (e2["n"], e2["k"], e2["m"]) == (2, 3, 1)
    assert "description" in body["table"]


def test_validate(client):
    response = client.post("/validate", json={"system": "e2-noncommutative"})
    assert response.status_code == 200
    body = response.json()
    assert body["passed"] is True
    assert body["results"]["m"] == 1
    assert body["results"]["casimirs"] == ["C"]


def test_chart_payload(client):
    body = client.post("/chart", json={"system": "free1d", "seed": 3}).json()
    assert body["passed"] is True
    assert body["seed"] == 3
    assert body["chart"]["coordinates"] == ["I1", "t1"]
    assert body["chart"]["lattice"]["signature"] == [1, 0]


def test_spec_errors_are_unprocessable(client):
    response = client.post("/validate", json={"system": "no-such-system"})
    assert response.status_code == 422
    assert "not a catalog system" in response.json()["detail"]


def test_server_files_are_never_read(client, tmp_path):
    secret = tmp_path / "settings.ini"
    secret.write_text("[system]\nname = s3cr3t-value\n", encoding="utf-8")
    response = client.post("/validate", json={"system": str(secret)})
    assert response.status_code == 422
    assert "not a catalog system" in response.json()["detail"]
    assert "s3cr3t" not in response.text


def test_request_validation(client):
    response = client.post("/verify", json={"system": "harmonic1d", "t_max": -1})
    assert response.status_code == 422
# end file
