import os
import pathlib
import shutil

import pytest

REPO = pathlib.Path(os.environ.get("IPSIM_REPO", pathlib.Path(__file__).resolve().parents[2]))
FIXTURES = REPO / "tests" / "fixtures"
CORPUS = REPO / "corpus"


@pytest.fixture
def full_adder():
    return str(FIXTURES / "full_adder.v")


@pytest.fixture
def tiny_corpus(tmp_path):
    """Two families of base designs copied from the shipped corpus."""
    root = tmp_path / "corpus"
    for family in ("adder", "counter", "shifter"):
        dst = root / family
        dst.mkdir(parents=True)
        for src in sorted((CORPUS / family / "rtl").glob("*.v")):
            shutil.copy(src, dst / src.name)
    return root
