import pytest

from oifcore import native


@pytest.fixture(autouse=True)
def default_impl_env(monkeypatch):
    """Run every binding test against the bundled implementation root."""
    monkeypatch.delenv("OIF_IMPL_PATH", raising=False)
    native.default_impl_root()
