"""Build the small demo corpus used by the tests and the README walkthrough.

Run standalone to materialize the files:

    python3 tests/make_fixtures.py out_dir/
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

MICRO_K002_ADUS = [
    "Actually it would be justified if all German universities charged tuition fees.",
    "As long as it is ensured that the funds really benefit the universities directly, "
    "one can continue to regard this as social justice.",
    "Those who study later decide this early on, anyway.",
    "It's always possible to take out a student loan or to earn a scholarship.",
    "To oblige non-academics to finance others' degrees through taxes, however, is not just.",
]

MICRO_K002_RU_EN_ADUS = [
    "In fact, it would be justified if all German universities charged tuition fees.",
    "As long as it is guaranteed that the funds really benefit the universities directly, "
    "we can continue to regard it as social justice.",
    "In any case, the question of further training must be decided in advance.",
    "You can always take a student loan or get a scholarship.",
    "However, it is unfair to oblige people who do not belong to scientific circles to pay "
    "for someone else's education by collecting additional taxes.",
]

MICRO_K002_EDUS = [
    "Actually it would be justified",
    "if all German universities charged tuition fees.",
    "As long as it is ensured that the funds really benefit the universities directly,",
    "one can continue to regard this as social justice.",
    "Those who study later decide this early on, anyway.",
    "It's always possible to take out a student loan",
    "or to earn a scholarship.",
    "To oblige non-academics to finance others' degrees through taxes, however, is not just.",
]


def arggraph_xml(doc_id: str, adu_texts: list[str], edges: list[tuple[str, str, str, str]]) -> str:
    lines = [f'<?xml version="1.0" encoding="UTF-8"?>', f'<arggraph id="{doc_id}">']
    for i, text in enumerate(adu_texts, start=1):
        lines.append(f"  <edu id=\"e{i}\"><![CDATA[{text}]]></edu>")
    for i in range(1, len(adu_texts) + 1):
        lines.append(f'  <adu id="a{i}" type="pro"/>')
    for i in range(1, len(adu_texts) + 1):
        lines.append(f'  <edge id="s{i}" src="e{i}" trg="a{i}" type="seg"/>')
    for eid, src, trg, typ in edges:
        lines.append(f'  <edge id="{eid}" src="{src}" trg="{trg}" type="{typ}"/>')
    lines.append("</arggraph>")
    return "\n".join(lines) + "\n"


def micro_k002_xml() -> str:
    edges = [(f"c{i}", f"a{i + 1}", "a1", "sup") for i in range(1, 5)]
    return arggraph_xml("micro_k002", MICRO_K002_ADUS, edges)


def micro_b_mock_xml() -> str:
    """A document exercising rebut, undercut, and linked-support edges."""
    texts = [
        "Waste separation is annoying and cumbersome.",
        "Three different bin bags stink away in the kitchen.",
        "But Germany produces way too much rubbish.",
        "And too many resources are lost when recyclables are burnt.",
        "We should become pioneers in waste separation.",
    ]
    edges = [
        ("c1", "a1", "a5", "reb"),
        ("c2", "a2", "a1", "sup"),
        ("c3", "a3", "c1", "und"),
        ("c4", "a4", "c3", "add"),
    ]
    return arggraph_xml("micro_b_mock", texts, edges)


def doc_text(adu_texts: list[str]) -> str:
    return " ".join(adu_texts)


def tiling_spans(text: str, pieces: list[str]) -> list[list[int]]:
    """Contiguous spans for ordered substrings; trailing separators attach left."""
    starts = []
    cursor = 0
    for piece in pieces:
        idx = text.index(piece, cursor)
        starts.append(idx)
        cursor = idx + len(piece)
    spans = []
    for i, start in enumerate(starts):
        end = starts[i + 1] if i + 1 < len(starts) else len(text)
        spans.append([start, end])
    return spans


def micro_k002_rst() -> dict:
    """Eight-EDU discourse tree over the original English text."""
    text = doc_text(MICRO_K002_ADUS)
    return {
        "doc_id": "micro_k002",
        "leaves": [{"span": sp} for sp in tiling_spans(text, MICRO_K002_EDUS)],
        "nodes": [
            {
                "children": [{"node": 1}, {"node": 4}],
                "nuclearities": ["N", "S"],
                "relations": [None, "Contrast"],
            },
            {
                "children": [{"node": 2}, {"node": 3}],
                "nuclearities": ["N", "S"],
                "relations": [None, "Condition"],
            },
            {
                "children": [{"leaf": 0}, {"leaf": 1}],
                "nuclearities": ["N", "S"],
                "relations": [None, "Condition"],
            },
            {
                "children": [{"leaf": 2}, {"leaf": 3}],
                "nuclearities": ["S", "N"],
                "relations": ["Condition", None],
            },
            {
                "children": [{"leaf": 4}, {"node": 5}, {"leaf": 7}],
                "nuclearities": ["N", "S", "S"],
                "relations": [None, "Elaborate", "Contrast"],
            },
            {
                "children": [{"leaf": 5}, {"leaf": 6}],
                "nuclearities": ["N", "N"],
                "relations": [None, "Joint"],
            },
        ],
    }


def micro_k002_ru_en_bundle() -> dict:
    text_pieces = MICRO_K002_RU_EN_ADUS
    text = doc_text(text_pieces)
    units = []
    cursor = 0
    for i, piece in enumerate(text_pieces, start=1):
        units.append(
            {"id": f"a{i}", "text": piece, "span": [cursor, cursor + len(piece)], "kind": "adu"}
        )
        cursor += len(piece) + 1
    return {
        "id": "micro_k002_ru-en",
        "language": "en",
        "variant": "back-translated",
        "source_doc_id": "micro_k002",
        "units": units,
        "argument": {
            "heads": {"1": 0, "2": 1, "3": 1, "4": 1, "5": 1},
            "functions": {"1": "cc", "2": "support", "3": "support", "4": "support", "5": "support"},
        },
    }


def micro_k002_ru_en_rst() -> dict:
    """Five-leaf tree over the paraphrase (leaves already match the ADUs)."""
    bundle = micro_k002_ru_en_bundle()
    text_len = bundle["units"][-1]["span"][1]
    spans = []
    for i, unit in enumerate(bundle["units"]):
        start = unit["span"][0]
        end = bundle["units"][i + 1]["span"][0] if i + 1 < len(bundle["units"]) else text_len
        spans.append([start, end])
    return {
        "doc_id": "micro_k002_ru-en",
        "leaves": [{"span": sp} for sp in spans],
        "nodes": [
            {
                "children": [{"node": 1}, {"leaf": 4}],
                "nuclearities": ["N", "S"],
                "relations": [None, "Contrast"],
            },
            {
                "children": [{"leaf": 0}, {"leaf": 1}, {"node": 2}],
                "nuclearities": ["N", "S", "S"],
                "relations": [None, "Elaborate", "Explanation"],
            },
            {
                "children": [{"leaf": 2}, {"leaf": 3}],
                "nuclearities": ["N", "S"],
                "relations": [None, "Cause"],
            },
        ],
    }


def write_all(out_dir: Path):
    out_dir = Path(out_dir)
    xml_dir = out_dir / "xml"
    bundles = out_dir / "bundles"
    rst_dir = out_dir / "rst"
    for d in (xml_dir, bundles, rst_dir):
        d.mkdir(parents=True, exist_ok=True)
    (xml_dir / "micro_k002.xml").write_text(micro_k002_xml(), encoding="utf-8")
    (xml_dir / "micro_b_mock.xml").write_text(micro_b_mock_xml(), encoding="utf-8")
    (bundles / "micro_k002_ru-en.json").write_text(
        json.dumps(micro_k002_ru_en_bundle(), ensure_ascii=False, indent=2), encoding="utf-8"
    )
    (rst_dir / "micro_k002.rst.json").write_text(
        json.dumps(micro_k002_rst(), indent=2), encoding="utf-8"
    )
    (rst_dir / "micro_k002_ru-en.rst.json").write_text(
        json.dumps(micro_k002_ru_en_rst(), indent=2), encoding="utf-8"
    )


if __name__ == "__main__":
    write_all(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_data"))
    print("fixtures written")
