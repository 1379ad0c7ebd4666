import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import make_fixtures


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("corpus")
    make_fixtures.write_all(out)
    return out


@pytest.fixture(scope="session")
def k002(fixture_dir):
    """The micro_k002 document and its simplified gold tree."""
    from dbap.corpus import load_arggraph_xml, simplify_functions

    doc, raw = load_arggraph_xml(fixture_dir / "xml" / "micro_k002.xml")
    return doc, simplify_functions(raw)


@pytest.fixture(scope="session")
def k002_rst(fixture_dir):
    from dbap.rst import parse_rst_json

    return parse_rst_json(fixture_dir / "rst" / "micro_k002.rst.json")
