import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from grg.corpus import CleanDocument


@pytest.fixture
def make_doc():
    def _make(doc_id="d0", body="body text", **kwargs):
        defaults = dict(source_kind="other", title="", body=body)
        defaults.update(kwargs)
        return CleanDocument(doc_id=doc_id, **defaults)

    return _make
