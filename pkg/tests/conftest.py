from __future__ import annotations

import os
from pathlib import Path

import pytest

from oifcore import native

FIXTURE_SRC = Path(__file__).parent / "fixtures" / "native"

FIXTURE_LIBS = {
    "echo": "libecho.so",
    "baddestroy": "libbaddestroy.so",
    "nocreate": "libnocreate.so",
    "crhs": "libcrhs.so",
}


@pytest.fixture(scope="session")
def bundled_root() -> Path:
    """Implementation root with the bundled plugins built."""
    return native.default_impl_root()


@pytest.fixture(scope="session")
def fixture_libs(tmp_path_factory) -> dict[str, Path]:
    """Compile the test-only shared libraries once per session."""
    out_dir = tmp_path_factory.mktemp("fixture-libs")
    libs = {}
    for name, libname in FIXTURE_LIBS.items():
        libs[name] = native.compile_shared(
            [FIXTURE_SRC / f"{name}.c"], out_dir / libname)
    return libs


def write_manifest(root: Path, interface: str, impl: str, *,
                   bridge_kind: str = "plugin",
                   details: tuple[str, ...] = (),
                   version: tuple[int, int] = (1, 0),
                   body: str | None = None) -> Path:
    impl_dir = root / interface / impl
    impl_dir.mkdir(parents=True, exist_ok=True)
    path = impl_dir / f"{impl}.oifm"
    if body is None:
        lines = [bridge_kind, f"version {version[0]} {version[1]}",
                 *details]
        body = "\n".join(lines) + "\n"
    path.write_text(body, encoding="utf-8")
    return path


@pytest.fixture()
def fixture_impl_root(tmp_path, fixture_libs, monkeypatch) -> Path:
    """A manifest tree exposing the test plugins, activated via
    OIF_IMPL_PATH for the duration of the test."""
    root = tmp_path / "impls"
    write_manifest(root, "ivp", "echo",
                   details=(str(fixture_libs["echo"]), "oif_ivp"))
    write_manifest(root, "ivp", "baddestroy",
                   details=(str(fixture_libs["baddestroy"]), "oif_ivp"))
    write_manifest(root, "ivp", "nocreate",
                   details=(str(fixture_libs["nocreate"]), "oif_ivp"))
    monkeypatch.setenv("OIF_IMPL_PATH", str(root))
    return root


@pytest.fixture()
def default_impl_env(bundled_root, monkeypatch):
    """Force the default (bundled) search root regardless of the
    caller's environment."""
    monkeypatch.delenv("OIF_IMPL_PATH", raising=False)
    return bundled_root
