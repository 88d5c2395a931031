"""Bridge for natively compiled implementations.

Loads the shared library named in the manifest details, resolves adapter
entry points as ``<prefix>_<method>``, converts packed arguments to the
native calling convention, and invokes them.  Array payloads cross as
struct pointers, so no element is ever copied.
"""

from __future__ import annotations

import ctypes as ct
import _ctypes
from dataclasses import dataclass, field
from pathlib import Path

from .errors import OifError, Status, set_last_error
from .marshal import PackedArgs, TypeTag

__all__ = ["PluginState", "PluginBridge"]


@dataclass
class PluginState:
    library: ct.CDLL
    library_path: str
    symbol_prefix: str
    session: int
    closed: bool = False
    _symbols: dict = field(default_factory=dict, repr=False)


class PluginBridge:
    """Loads shared-library adapters and routes calls into them."""

    kind = "plugin"

    def load(self, details: list[str], *, base_dir: Path | None = None
             ) -> PluginState:
        """Open the library named by ``details`` and start a session.

        ``details`` holds the library path (resolved against the manifest
        directory when relative) followed by the symbol prefix.
        """
        if len(details) < 2:
            raise OifError(
                Status.PLUGIN_FAILURE,
                f"plugin details need [library path, symbol prefix], "
                f"got {details!r}")
        lib_path = Path(details[0])
        if not lib_path.is_absolute() and base_dir is not None:
            lib_path = Path(base_dir) / lib_path
        prefix = details[1]
        try:
            lib = ct.CDLL(str(lib_path))
        except OSError as exc:
            raise OifError(Status.PLUGIN_FAILURE,
                           f"cannot load plugin library {lib_path}: {exc}"
                           ) from exc
        create = self._resolve(lib, prefix, "create", lib_path)
        self._resolve(lib, prefix, "destroy", lib_path)
        create.restype = ct.c_void_p
        session = create()
        if not session:
            self._close(lib)
            raise OifError(Status.PLUGIN_FAILURE,
                           f"{prefix}_create returned a null session")
        return PluginState(library=lib, library_path=str(lib_path),
                           symbol_prefix=prefix, session=session)

    @staticmethod
    def _resolve(lib: ct.CDLL, prefix: str, method: str, lib_path):
        symbol = f"{prefix}_{method}"
        try:
            return getattr(lib, symbol)
        except AttributeError as exc:
            raise OifError(Status.PLUGIN_FAILURE,
                           f"symbol '{symbol}' not found in {lib_path}"
                           ) from exc

    def call(self, state: PluginState, method: str, in_args: PackedArgs,
             out_args: PackedArgs) -> int:
        """Invoke ``<prefix>_<method>`` with the session followed by the
        unpacked arguments; the plugin's integer status comes back
        unchanged."""
        if state.closed:
            set_last_error("plugin session already unloaded")
            return Status.PLUGIN_FAILURE
        fn = state._symbols.get(method)
        if fn is None:
            try:
                fn = self._resolve(state.library, state.symbol_prefix,
                                   method, state.library_path)
            except OifError as exc:
                set_last_error(str(exc))
                return exc.status
            fn.restype = ct.c_int
            state._symbols[method] = fn
        cargs = [ct.c_void_p(state.session)]
        for arg in (*in_args.args, *out_args.args):
            self._append_carg(cargs, arg)
        status = fn(*cargs)
        if status != 0:
            set_last_error(self._plugin_message(state, status))
        return status

    @staticmethod
    def _append_carg(cargs: list, arg) -> None:
        tag = arg.tag
        if tag == TypeTag.ARRAY_F64:
            cargs.append(ct.byref(arg.value.struct))
        elif tag == TypeTag.CALLBACK:
            cargs.append(arg.value.trampoline)
        elif tag == TypeTag.USER_DATA:
            cargs.append(ct.c_void_p(arg.value))
        elif tag == TypeTag.CONFIG_DICT:
            buf, length = arg.payload
            cargs.append(ct.cast(buf, ct.c_void_p))
            cargs.append(ct.c_size_t(length))
        else:
            # INT, FLOAT64, STR payloads are already ctypes values.
            cargs.append(arg.payload)

    def _plugin_message(self, state: PluginState, status: int) -> str:
        fallback = (f"{state.symbol_prefix} plugin "
                    f"({Path(state.library_path).name}) returned status "
                    f"{status}")
        try:
            fn = getattr(state.library, f"{state.symbol_prefix}_last_error")
        except AttributeError:
            return fallback
        fn.restype = ct.c_char_p
        raw = fn(ct.c_void_p(state.session))
        if not raw:
            return fallback
        return raw.decode("utf-8", errors="replace")

    def unload(self, state: PluginState) -> int:
        """End the session and close the library (exactly once)."""
        if state.closed:
            set_last_error("plugin session already unloaded")
            return Status.PLUGIN_FAILURE
        destroy = getattr(state.library, f"{state.symbol_prefix}_destroy")
        destroy.restype = ct.c_int
        status = destroy(ct.c_void_p(state.session))
        state.closed = True
        state._symbols.clear()
        self._close(state.library)
        if status != 0:
            set_last_error(f"{state.symbol_prefix}_destroy returned status "
                           f"{status}")
            return Status.PLUGIN_FAILURE
        return Status.OK

    @staticmethod
    def _close(lib: ct.CDLL) -> None:
        _ctypes.dlclose(lib._handle)
