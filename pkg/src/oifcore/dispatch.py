"""Implementation discovery and call routing.

A process-wide registry finds implementation manifests on disk,
instantiates the bridge for each manifest's kind (once per kind), keeps
the table of loaded implementations keyed by integer handle, and routes
method calls to the owning bridge.

Manifest files are named ``<impl_name>.oifm`` and live at
``<root>/<interface_name>/<impl_name>/``.  After dropping blank lines and
``#`` comments, line 1 is the bridge kind, line 2 is ``version <major>
<minor>``, and any further lines are bridge-specific details (for the
"plugin" bridge: library path, then symbol prefix).  Search roots come
from the colon-separated ``OIF_IMPL_PATH`` environment variable; when it
is unset the bundled implementation directory is used.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OifError, Status, diag, set_last_error
from .marshal import PackedArgs

__all__ = [
    "ImplManifest", "ImplRecord", "discover", "init_impl", "call_impl",
    "unload_impl", "search_roots", "register_bridge_kind", "bridges",
    "live_handles",
]

MANIFEST_SUFFIX = ".oifm"
IMPL_PATH_VAR = "OIF_IMPL_PATH"


@dataclass(frozen=True)
class ImplManifest:
    interface_name: str
    impl_name: str
    bridge_kind: str
    version_major: int
    version_minor: int
    details: tuple[str, ...]
    path: Path


@dataclass
class ImplRecord:
    handle: int
    manifest: ImplManifest
    bridge_ref: str
    plugin_state: object = field(repr=False, default=None)


def search_roots() -> list[Path]:
    """Active manifest search roots, in priority order."""
    env = os.environ.get(IMPL_PATH_VAR)
    if env is not None:
        return [Path(p) for p in env.split(":") if p]
    from . import native
    return [native.default_impl_root()]


def _parse_manifest(path: Path, interface_name: str) -> ImplManifest:
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValueError("manifest needs a bridge kind and a version line")
    bridge_kind = lines[0]
    parts = lines[1].split()
    if len(parts) != 3 or parts[0] != "version":
        raise ValueError(f"bad version line {lines[1]!r}")
    try:
        major, minor = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ValueError(f"bad version numbers in {lines[1]!r}") from exc
    return ImplManifest(
        interface_name=interface_name,
        impl_name=path.stem,
        bridge_kind=bridge_kind,
        version_major=major,
        version_minor=minor,
        details=tuple(lines[2:]),
        path=path,
    )


def discover(interface_name: str) -> list[ImplManifest]:
    """All parseable manifests for an interface under the search roots,
    in lexicographic path order.  Malformed manifests are skipped with a
    diagnostic, never fatally."""
    manifests = []
    for root in search_roots():
        base = root / interface_name
        if not base.is_dir():
            continue
        candidates = sorted(base.glob(f"*/*{MANIFEST_SUFFIX}"))
        for path in candidates:
            if path.stem != path.parent.name:
                diag(f"skipping manifest {path}: file name does not match "
                     f"its directory")
                continue
            try:
                manifests.append(_parse_manifest(path, interface_name))
            except (ValueError, OSError, UnicodeDecodeError) as exc:
                diag(f"skipping malformed manifest {path}: {exc}")
    return manifests


class _Registry:
    """Singleton table of loaded implementations and instantiated bridges."""

    def __init__(self):
        self._lock = threading.Lock()
        self._next_handle = 0
        self._records: dict[int, ImplRecord] = {}
        self._bridges: dict[str, object] = {}
        self._bridge_factories: dict[str, object] = {}

    def register_bridge_kind(self, kind: str, factory) -> None:
        self._bridge_factories[kind] = factory

    def _bridge_for(self, kind: str):
        bridge = self._bridges.get(kind)
        if bridge is None:
            factory = self._bridge_factories.get(kind)
            if factory is None:
                raise OifError(Status.PLUGIN_FAILURE,
                               f"no bridge registered for kind '{kind}'")
            bridge = factory()
            self._bridges[kind] = bridge
        return bridge

    def init_impl(self, interface_name: str, impl_name: str,
                  version_major: int, version_minor: int) -> int:
        manifest = None
        for cand in discover(interface_name):
            if cand.impl_name == impl_name:
                manifest = cand
                break
        if manifest is None:
            raise OifError(
                Status.NOT_FOUND,
                f"no implementation '{impl_name}' of interface "
                f"'{interface_name}' under {[str(r) for r in search_roots()]}")
        with self._lock:
            bridge = self._bridge_for(manifest.bridge_kind)
            state = bridge.load(list(manifest.details),
                                base_dir=manifest.path.parent)
            handle = self._next_handle
            self._next_handle += 1
            # Requested version is recorded but intentionally not matched.
            self._records[handle] = ImplRecord(
                handle=handle,
                manifest=manifest,
                bridge_ref=manifest.bridge_kind,
                plugin_state=state,
            )
        return handle

    def call_impl(self, handle: int, method: str, in_args: PackedArgs,
                  out_args: PackedArgs) -> int:
        record = self._records.get(handle)
        if record is None:
            set_last_error(f"no loaded implementation with handle {handle}")
            return Status.NOT_FOUND
        bridge = self._bridges[record.bridge_ref]
        return bridge.call(record.plugin_state, method, in_args, out_args)

    def unload_impl(self, handle: int) -> int:
        with self._lock:
            record = self._records.pop(handle, None)
            if record is None:
                set_last_error(f"no loaded implementation with handle {handle}")
                return Status.NOT_FOUND
            bridge = self._bridges[record.bridge_ref]
            return bridge.unload(record.plugin_state)

    def live_handles(self) -> list[int]:
        return sorted(self._records)

    def bridges(self) -> dict[str, object]:
        return dict(self._bridges)


_registry = _Registry()


def register_bridge_kind(kind: str, factory) -> None:
    """Make ``factory()`` the bridge constructor for manifests of ``kind``."""
    _registry.register_bridge_kind(kind, factory)


def init_impl(interface_name: str, impl_name: str, version_major: int = 1,
              version_minor: int = 0) -> int:
    """Load an implementation and return its handle.

    The version arguments are accepted for forward compatibility but not
    matched against the manifest.  Raises :class:`OifError` with a
    not-found status when no manifest matches, or a plugin-failure status
    when the bridge cannot load the implementation.
    """
    return _registry.init_impl(interface_name, impl_name, version_major,
                               version_minor)


def call_impl(handle: int, method: str, in_args: PackedArgs,
              out_args: PackedArgs) -> int:
    """Route a method call to the implementation behind ``handle``.

    Returns the implementation's status unchanged; a dead handle yields a
    not-found status.
    """
    return _registry.call_impl(handle, method, in_args, out_args)


def unload_impl(handle: int) -> int:
    """Release the implementation behind ``handle``.

    The bridge stays instantiated for later loads.  A second unload of
    the same handle returns a not-found status.
    """
    return _registry.unload_impl(handle)


def live_handles() -> list[int]:
    """Handles currently in the implementation table (introspection)."""
    return _registry.live_handles()


def bridges() -> dict[str, object]:
    """Instantiated bridges by kind (introspection)."""
    return _registry.bridges()


def _register_builtin_bridges() -> None:
    from .bridge import PluginBridge
    register_bridge_kind("plugin", PluginBridge)


_register_builtin_bridges()
