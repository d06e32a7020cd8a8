import json
from pathlib import Path

import pytest

from capsmith.model import Document, FigureKind, FigureRecord, Paragraph

FIXTURES = Path(__file__).parent / "fixtures"


def make_bundle(
    doc_id="doc-1",
    title="A Study",
    abstract="We study things.",
    paragraphs=(),
    figures=(),
) -> bytes:
    return json.dumps(
        {
            "doc_id": doc_id,
            "title": title,
            "abstract": abstract,
            "paragraphs": list(paragraphs),
            "figures": [dict(f) for f in figures],
        }
    ).encode("utf-8")


def make_figure(id="1", kind="chart", page=1, caption="", **extra) -> dict:
    fig = {"id": id, "kind": kind, "page": page, "caption": caption}
    fig.update(extra)
    return fig


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def mentions_corpus() -> dict:
    return json.loads((FIXTURES / "mentions_corpus.json").read_text("utf-8"))


@pytest.fixture
def two_page_paper() -> bytes:
    return (FIXTURES / "two_page_paper.txt").read_bytes()


@pytest.fixture
def sample_document() -> Document:
    """Two figures, three paragraphs; figure 1 mentioned twice, figure 2 once."""
    return Document(
        doc_id="doc-sample",
        title="Sample",
        abstract="An abstract.",
        paragraphs=(
            Paragraph(0, "Figure 1 shows that accuracy improves steadily with depth."),
            Paragraph(1, "We describe the training setup and the datasets used."),
            Paragraph(2, "In Figure 1 and Figure 2 the trends are compared directly."),
        ),
        figures=(
            FigureRecord(
                id="1",
                kind=FigureKind.CHART,
                caption="Accuracy versus depth.",
                page=1,
                figure_text=("accuracy", "depth", "epochs"),
            ),
            FigureRecord(id="2", kind=FigureKind.OTHER, caption="", page=2),
        ),
        source_digest="0" * 64,
    )


@pytest.fixture
def sample_bundle_bytes(sample_document) -> bytes:
    from capsmith.bundle import serialize_bundle

    return serialize_bundle(sample_document)
