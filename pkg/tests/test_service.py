"""HTTP service: endpoints, status codes, parity with the in-process API."""

import threading

import numpy as np
import pytest
from fastapi.testclient import TestClient

from cxrsearch.knn import SearchParams, top_k_search
from cxrsearch.service import create_app
from cxrsearch.store import RecordMeta, write_store
from cxrsearch.vote import majority_vote


@pytest.fixture(scope="module")
def store_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("svc") / "svc.cxrf"
    records = [
        (RecordMeta("case-a", 1, "chexpert"), np.array([0, 0], np.float32)),
        (RecordMeta("case-b", 0, "mimic-cxr"), np.array([1, 0], np.float32)),
        (RecordMeta("case-c", 1, "chestxray14"), np.array([0, 2], np.float32)),
    ]
    write_store(records, path)
    return path


@pytest.fixture(scope="module")
def image_dir(tmp_path_factory):
    directory = tmp_path_factory.mktemp("images")
    # 1x1 PNG
    png = bytes.fromhex(
        "89504e470d0a1a0a0000000d49484452000000010000000108060000001f15c489"
        "0000000d49444154789c626001000000ffff03000006000557bfabd40000000049"
        "454e44ae426082")
    (directory / "case-a.png").write_bytes(png)
    return directory


@pytest.fixture()
def client(store_path, image_dir):
    app = create_app(str(store_path), image_dir=str(image_dir))
    with TestClient(app) as c:
        yield c


class TestStoreSummary:
    def test_summary(self, client):
        reply = client.get("/v1/store")
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["v"] == 1
        assert doc["n_records"] == 3
        assert doc["dim"] == 2
        assert doc["class_counts"] == {"positive": 2, "negative": 1}
        assert doc["sources"] == {"chexpert": 1, "mimic-cxr": 1,
                                  "chestxray14": 1}

    def test_before_load_returns_503(self, store_path):
        app = create_app(str(store_path))
        client = TestClient(app)  # lifespan never started: store not loaded
        assert client.get("/v1/store").status_code == 503
        assert client.post("/v1/query",
                           json={"vector": [0, 0]}).status_code == 503


class TestQuery:
    def test_vector_exact_match(self, client):
        reply = client.post("/v1/query", json={"vector": [0, 0], "k": 1})
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["v"] == 1
        first = doc["neighbors"][0]
        assert (first["rank"], first["record_id"], first["dist2"]) == \
            (1, "case-a", 0.0)
        assert first["source"] == "chexpert"
        assert doc["vote"]["score"] == 1.0
        assert doc["vote"]["decision"] == 1

    def test_record_id_with_exclude_self(self, client):
        reply = client.post("/v1/query", json={
            "record_id": "case-a", "k": 2, "exclude_self": True})
        assert reply.status_code == 200
        ids = [n["record_id"] for n in reply.json()["neighbors"]]
        assert "case-a" not in ids
        assert ids == ["case-b", "case-c"]

    def test_default_k_is_11(self, client):
        reply = client.post("/v1/query", json={"vector": [0, 0]})
        assert reply.status_code == 422  # pool of 3 cannot serve k=11
        assert "k exceeds pool" in reply.json()["error"]

    def test_matches_in_process_api(self, client, store_path):
        from cxrsearch.store import open_store
        store = open_store(store_path)
        query = np.array([0.7, 0.3], np.float32)
        reply = client.post("/v1/query",
                            json={"vector": query.tolist(), "k": 3})
        doc = reply.json()
        expected = top_k_search(store, query, SearchParams(k=3))
        vote = majority_vote(expected)
        assert [n["dist2"] for n in doc["neighbors"]] == \
            [n.dist2 for n in expected]
        assert [n["label"] for n in doc["neighbors"]] == \
            [n.label for n in expected]
        assert doc["vote"]["score"] == vote.score

    def test_replay_identical(self, client):
        body = {"vector": [0.3, 0.4], "k": 3}
        a = client.post("/v1/query", json=body).json()
        b = client.post("/v1/query", json=body).json()
        a.pop("timing_ms"), b.pop("timing_ms")
        assert a == b

    def test_malformed_requests_400(self, client):
        assert client.post(
            "/v1/query", content=b"{not json",
            headers={"content-type": "application/json"}).status_code == 400
        assert client.post("/v1/query", json={}).status_code == 400
        assert client.post("/v1/query", json={
            "vector": [0, 0], "record_id": "case-a"}).status_code == 400
        assert client.post("/v1/query", json={
            "vector": "zero"}).status_code == 400
        assert client.post("/v1/query", json={
            "vector": [0, 0], "k": "three"}).status_code == 400

    def test_domain_errors_422(self, client):
        assert client.post("/v1/query", json={
            "vector": [0, 0, 0], "k": 1}).status_code == 422
        assert client.post("/v1/query", json={
            "vector": [0, 0], "k": 9}).status_code == 422
        assert client.post("/v1/query", json={
            "record_id": "missing", "k": 1}).status_code == 422

    def test_image_ref_without_extractor_502(self, client):
        reply = client.post("/v1/query", json={"image_ref": "x.png", "k": 1})
        assert reply.status_code == 502

    def test_image_ref_with_unreachable_extractor_502(self, store_path):
        app = create_app(str(store_path),
                         extractor_url="http://127.0.0.1:9/extract")
        with TestClient(app) as client:
            reply = client.post("/v1/query",
                                json={"image_ref": "x.png", "k": 1})
            assert reply.status_code == 502
            assert "unreachable" in reply.json()["error"]

    def test_image_ref_roundtrip_through_stub_extractor(self, store_path):
        import http.server
        import json as jsonlib

        class Stub(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers["Content-Length"]))
                ref = jsonlib.loads(body)["image_ref"]
                payload = jsonlib.dumps(
                    {"vector": [0.0, 2.0], "image_ref": ref}).encode()
                self.send_response(200)
                self.send_header("content-type", "application/json")
                self.send_header("content-length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        server = http.server.HTTPServer(("127.0.0.1", 0), Stub)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            url = f"http://127.0.0.1:{server.server_port}/extract"
            app = create_app(str(store_path), extractor_url=url)
            with TestClient(app) as client:
                reply = client.post("/v1/query",
                                    json={"image_ref": "scan.png", "k": 1})
                assert reply.status_code == 200
                doc = reply.json()
                assert doc["neighbors"][0]["record_id"] == "case-c"
                assert doc["neighbors"][0]["dist2"] == 0.0
        finally:
            server.shutdown()

    def test_vector_query_never_calls_extractor(self, store_path):
        app = create_app(str(store_path),
                         extractor_url="http://127.0.0.1:9/extract")
        with TestClient(app) as client:
            reply = client.post("/v1/query", json={"vector": [0, 0], "k": 1})
            assert reply.status_code == 200


class TestRecord:
    def test_known_record(self, client):
        reply = client.get("/v1/record/case-b")
        assert reply.status_code == 200
        doc = reply.json()
        assert doc["label"] == 0
        assert doc["source"] == "mimic-cxr"
        assert doc["has_image"] is False

    def test_unknown_record_404(self, client):
        assert client.get("/v1/record/nope").status_code == 404

    def test_image_bytes(self, client):
        meta = client.get("/v1/record/case-a").json()
        assert meta["has_image"] is True
        reply = client.get("/v1/record/case-a/image")
        assert reply.status_code == 200
        assert reply.headers["content-type"] == "image/png"
        assert reply.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_missing_image_404_with_meta_available(self, client):
        assert client.get("/v1/record/case-b/image").status_code == 404
        assert client.get("/v1/record/case-b").status_code == 200
