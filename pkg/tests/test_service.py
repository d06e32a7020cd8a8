import json
import threading

import pytest
from fastapi.testclient import TestClient

from capsmith.service import ServiceConfig, create_app
from capsmith.store import FileStore, MemoryStore

from conftest import make_bundle, make_figure

BUNDLE = make_bundle(
    doc_id="doc-svc",
    paragraphs=[
        "Figure 1 shows that accuracy improves with depth across all datasets.",
        "Irrelevant middle paragraph about implementation details.",
        "In Figure 1 and Figure 2 the trends are compared, and Figure 2 is flat.",
    ],
    figures=[
        make_figure(id="1", caption="Accuracy versus depth.", figure_text=["accuracy", "depth"]),
        make_figure(id="2", page=2, caption=""),
        make_figure(id="T1", kind="table", caption="A table."),
    ],
)


@pytest.fixture
def client():
    app = create_app(ServiceConfig(), store=MemoryStore())
    return TestClient(app)


def upload(client, payload=BUNDLE, fmt="bundle"):
    return client.post(f"/documents?format={fmt}", content=payload)


class TestHealth:
    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}


class TestCreateDocument:
    def test_bundle_upload(self, client):
        resp = upload(client)
        assert resp.status_code == 201
        body = resp.json()
        assert body["doc_id"] == "doc-svc"
        assert body["figure_count"] == 2
        assert body["dropped_tables"] == 1

    def test_json_content_type_implies_bundle(self, client):
        resp = client.post(
            "/documents",
            content=BUNDLE,
            headers={"Content-Type": "application/json"},
        )
        assert resp.status_code == 201

    def test_multipart_upload(self, client):
        resp = client.post(
            "/documents",
            files={"file": ("paper.json", BUNDLE, "application/octet-stream")},
            data={"format": "bundle"},
        )
        assert resp.status_code == 201
        assert resp.json()["figure_count"] == 2

    def test_pdf_text_layer_upload(self, client, two_page_paper):
        resp = upload(client, two_page_paper, fmt="pdf")
        assert resp.status_code == 201
        body = resp.json()
        assert body["figure_count"] == 2
        assert body["dropped_tables"] == 1

    def test_malformed_bundle_is_400_with_path(self, client):
        resp = upload(client, b'{"doc_id": "x"}')
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "invalid_bundle"
        assert "$." in body["message"]

    def test_oversize_payload_rejected(self):
        app = create_app(ServiceConfig(max_upload_bytes=64), store=MemoryStore())
        client = TestClient(app)
        resp = upload(client, b"x" * 100)
        assert resp.status_code == 413
        assert resp.json()["code"] == "payload_too_large"

    def test_unknown_format_rejected(self, client):
        resp = client.post("/documents?format=docx", content=b"zzz")
        assert resp.status_code == 400


class TestListFigures:
    def test_document_order_with_scores(self, client):
        upload(client)
        resp = client.get("/documents/doc-svc/figures")
        assert resp.status_code == 200
        figs = resp.json()
        assert [f["id"] for f in figs] == ["1", "2"]
        assert figs[0]["page"] == 1
        assert isinstance(figs[0]["rating_score"], int)
        # figure 2 has an empty caption: no stored rating
        assert figs[1]["rating_score"] is None

    def test_unknown_document(self, client):
        resp = client.get("/documents/nope/figures")
        assert resp.status_code == 404
        assert resp.json()["code"] == "not_found"

    def test_empty_figure_document_lists_nothing(self, client):
        bundle = make_bundle(doc_id="doc-empty", paragraphs=["text"], figures=[])
        upload(client, bundle)
        resp = client.get("/documents/doc-empty/figures")
        assert resp.status_code == 200
        assert resp.json() == []


class TestFigureDetail:
    def test_full_panel_payload(self, client):
        upload(client)
        resp = client.get("/documents/doc-svc/figures/1")
        assert resp.status_code == 200
        body = resp.json()
        assert body["figure"]["id"] == "1"
        assert body["current_caption"] == "Accuracy versus depth."
        assert set(body["aspect_report"]["aspects"]) == {
            "helpfulness", "ocr", "relation", "stats", "takeaway", "visual",
        }
        assert 1 <= body["rating"]["score"] <= 6
        assert body["rating"]["explanation"]
        assert body["generated"]["long"] is not None
        assert body["generated"]["short"] is not None
        assert 1 <= body["generated"]["short"]["rating"]["score"] <= 6
        assert [p["index"] for p in body["mention_paragraphs"]] == [0, 2]
        assert body["session"] == {
            "evaluations_used": 0,
            "evaluation_limit": 2,
            "drafts": 0,
        }

    def test_mention_paragraphs_match_linker(self, client):
        from capsmith.bundle import parse_bundle
        from capsmith.mentions import link_paragraphs

        upload(client)
        doc = parse_bundle(BUNDLE)
        index = link_paragraphs(doc)
        body = client.get("/documents/doc-svc/figures/2").json()
        assert [p["index"] for p in body["mention_paragraphs"]] == index["2"]

    def test_unknown_figure_404(self, client):
        upload(client)
        resp = client.get("/documents/doc-svc/figures/99")
        assert resp.status_code == 404

    def test_never_mentioned_figure_has_generation_errors(self, client):
        bundle = make_bundle(
            doc_id="doc-lonely",
            paragraphs=["Nothing refers to any figure here."],
            figures=[make_figure(id="5")],
        )
        upload(client, bundle)
        body = client.get("/documents/doc-lonely/figures/5").json()
        assert body["mention_paragraphs"] == []
        assert body["generated"]["long"] is None
        assert "no source material" in body["generated"]["errors"]["long"]


class TestDrafts:
    def test_drafts_do_not_consume_evaluations(self, client):
        upload(client)
        for i in range(3):
            resp = client.put(
                "/documents/doc-svc/figures/1/draft", json={"caption": f"draft {i}"}
            )
            assert resp.status_code == 200
        summary = resp.json()
        assert summary["drafts"] == 3
        assert summary["evaluations_used"] == 0

    def test_empty_draft_flagged(self, client):
        upload(client)
        resp = client.put("/documents/doc-svc/figures/1/draft", json={"caption": ""})
        assert resp.status_code == 200
        assert resp.json()["empty_caption"] is True

    def test_draft_updates_current_caption(self, client):
        upload(client)
        client.put("/documents/doc-svc/figures/1/draft", json={"caption": "my new caption"})
        body = client.get("/documents/doc-svc/figures/1").json()
        assert body["current_caption"] == "my new caption"

    def test_unknown_document_404(self, client):
        resp = client.put("/documents/zzz/figures/1/draft", json={"caption": "x"})
        assert resp.status_code == 404


class TestEvaluate:
    URL = "/documents/doc-svc/figures/1/evaluate"

    def test_two_evaluations_then_limit(self, client):
        upload(client)
        first = client.post(self.URL, json={"caption": "A is lower than B."})
        assert first.status_code == 200
        assert first.json()["session"]["evaluations_used"] == 1
        second = client.post(self.URL, json={"caption": "A is higher than B."})
        assert second.status_code == 200
        assert second.json()["session"]["evaluations_used"] == 2

        third = client.post(self.URL, json={"caption": "Third try."})
        assert third.status_code == 409
        body = third.json()
        assert body["code"] == "submission_limit_reached"
        assert body["detail"] == {"used": 2, "limit": 2}
        # state unchanged
        detail = client.get("/documents/doc-svc/figures/1").json()
        assert detail["session"]["evaluations_used"] == 2

    def test_evaluation_payload_shape(self, client):
        upload(client)
        resp = client.post(self.URL, json={"caption": "The red line is 20% higher than blue."})
        body = resp.json()
        assert body["aspect_report"]["aspects"]["relation"]["satisfied"] == "yes"
        assert body["aspect_report"]["aspects"]["stats"]["satisfied"] == "yes"
        assert 1 <= body["rating"]["score"] <= 6

    def test_empty_caption_rejected(self, client):
        upload(client)
        resp = client.post(self.URL, json={"caption": "   "})
        assert resp.status_code == 400

    def test_drafts_then_evaluate_succeeds(self, client):
        upload(client)
        client.put("/documents/doc-svc/figures/1/draft", json={"caption": "d1"})
        client.put("/documents/doc-svc/figures/1/draft", json={"caption": "d2"})
        resp = client.post(self.URL, json={"caption": "Real submission."})
        assert resp.status_code == 200

    def test_configurable_limit(self):
        app = create_app(ServiceConfig(evaluation_limit=1), store=MemoryStore())
        client = TestClient(app)
        upload(client)
        assert client.post(self.URL, json={"caption": "one"}).status_code == 200
        assert client.post(self.URL, json={"caption": "two"}).status_code == 409

    def test_concurrent_evaluations_respect_limit(self):
        app = create_app(ServiceConfig(), store=MemoryStore())
        client = TestClient(app)
        upload(client)
        statuses = []
        lock = threading.Lock()

        def submit(i):
            resp = client.post(self.URL, json={"caption": f"attempt {i} text"})
            with lock:
                statuses.append(resp.status_code)

        threads = [threading.Thread(target=submit, args=(i,)) for i in range(16)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert statuses.count(200) == 2
        assert statuses.count(409) == 14
        detail = client.get("/documents/doc-svc/figures/1").json()
        assert detail["session"]["evaluations_used"] == 2


class TestPersistence:
    def test_restart_preserves_evaluations(self, tmp_path):
        root = tmp_path / "svc-store"
        app = create_app(ServiceConfig(), store=FileStore(root))
        client = TestClient(app)
        upload(client)
        client.post(
            "/documents/doc-svc/figures/1/evaluate",
            json={"caption": "Persisted caption review."},
        )

        # simulate a restart: fresh app over the same directory
        app2 = create_app(ServiceConfig(), store=FileStore(root))
        client2 = TestClient(app2)
        detail = client2.get("/documents/doc-svc/figures/1").json()
        assert detail["session"]["evaluations_used"] == 1
        resp = client2.post(
            "/documents/doc-svc/figures/1/evaluate", json={"caption": "Second one."}
        )
        assert resp.status_code == 200
        resp = client2.post(
            "/documents/doc-svc/figures/1/evaluate", json={"caption": "Third one."}
        )
        assert resp.status_code == 409

    def test_reads_do_not_mutate(self, client):
        upload(client)
        before = client.get("/documents/doc-svc/figures/1").json()
        for _ in range(3):
            client.get("/documents/doc-svc/figures/1")
            client.get("/documents/doc-svc/figures")
        after = client.get("/documents/doc-svc/figures/1").json()
        assert before == after


class TestRatingFallback:
    def test_hosted_failure_falls_back_to_heuristic(self):
        from capsmith.rating import HeuristicRatingBackend, RatingError
        from capsmith.service import Pipeline

        class DownBackend:
            backend_id = "hosted:down"

            def rate(self, ctx, report=None):
                raise RatingError("endpoint unreachable")

        pipeline = Pipeline(
            rating_backend=DownBackend(), fallback_rating=HeuristicRatingBackend()
        )
        app = create_app(ServiceConfig(), store=MemoryStore(), pipeline=pipeline)
        client = TestClient(app)
        upload(client)
        resp = client.post(
            "/documents/doc-svc/figures/1/evaluate",
            json={"caption": "A is lower than B by 20% overall."},
        )
        assert resp.status_code == 200
        assert resp.json()["rating"]["backend_id"].startswith("heuristic")
        # generated-caption ratings computed at upload use the fallback too
        detail = client.get("/documents/doc-svc/figures/1").json()
        assert detail["generated"]["short"]["rating"]["backend_id"].startswith("heuristic")

    def test_no_fallback_surfaces_error(self):
        from capsmith.rating import RatingError
        from capsmith.service import Pipeline

        class DownBackend:
            backend_id = "hosted:down"

            def rate(self, ctx, report=None):
                raise RatingError("endpoint unreachable")

        pipeline = Pipeline(rating_backend=DownBackend(), fallback_rating=None)
        app = create_app(ServiceConfig(), store=MemoryStore(), pipeline=pipeline)
        client = TestClient(app, raise_server_exceptions=False)
        resp = client.post("/documents?format=bundle", content=BUNDLE)
        assert resp.status_code == 500


class TestErrorSchema:
    def test_error_shape(self, client):
        resp = client.get("/documents/none/figures/1")
        body = resp.json()
        assert set(body) <= {"code", "message", "detail"}
        assert body["code"] == "not_found"
        assert isinstance(body["message"], str)
