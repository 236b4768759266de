import json

import pytest

from exactmrf import model


@pytest.fixture
def write_model(tmp_path):
    """Serialize a spec (or raw document dict) to a temp file, return path."""

    def _write(spec_or_doc, name="model.json"):
        path = tmp_path / name
        if isinstance(spec_or_doc, model.ModelSpec):
            path.write_text(model.serialize(spec_or_doc))
        else:
            path.write_text(json.dumps(spec_or_doc))
        return str(path)

    return _write
