"""Intermediate data representation shared by every component.

Values cross component boundaries as type-tagged payloads.  The tags and
the binary layouts here are the marshalling protocol: they must match the
plugin side bit for bit (see ``native/include/oif_ivp_plugin.h``).

Layouts
-------
``ArrayF64`` crosses the boundary as a three-field struct with natural
alignment and no extra padding:

    field 0: nd    pointer-sized signed integer, number of dimensions
    field 1: dims  pointer to nd pointer-sized signed extents
    field 2: data  pointer to contiguous row-major float64 storage

The struct never owns the storage it describes; creating or packing a
view copies no elements.

``ConfigDict`` crosses as concatenated little-endian records with no
header or trailer:

    u32 key length | key bytes (UTF-8, no NUL) | u32 tag | 8-byte value

where the tag is INT (value stored sign-extended as int64) or FLOAT64
(IEEE 754 binary64 bits).
"""

from __future__ import annotations

import ctypes as ct
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable as PyCallable, Iterable, Sequence

import numpy as np

from .errors import OifError, Status

__all__ = [
    "TypeTag", "OIFArrayF64", "RHS_CFUNC", "ArrayF64",
    "make_array_f64", "view_array_f64", "free_array_f64",
    "array_view_from_numpy", "Callback", "callback_from_python",
    "callback_from_address", "ConfigDict", "PackedArg", "PackedArgs",
    "pack_args", "unpack_args",
]

_INT32_MIN = -(2**31)
_INT32_MAX = 2**31 - 1


class TypeTag(IntEnum):
    """Type identifiers attached to every boundary-crossing value.

    The numeric codes are part of the plugin protocol and never change.
    """

    INT = 1
    FLOAT64 = 2
    ARRAY_F64 = 3
    STR = 4
    CALLBACK = 5
    USER_DATA = 6
    CONFIG_DICT = 7


class OIFArrayF64(ct.Structure):
    """The boundary layout of an n-dimensional float64 array."""

    _fields_ = [
        ("nd", ct.c_ssize_t),
        ("dims", ct.POINTER(ct.c_ssize_t)),
        ("data", ct.POINTER(ct.c_double)),
    ]


#: Signature of the RHS trampoline handed to plugins:
#: status(t, y, ydot, user_data).
RHS_CFUNC = ct.CFUNCTYPE(
    ct.c_int, ct.c_double, ct.POINTER(OIFArrayF64), ct.POINTER(OIFArrayF64),
    ct.c_void_p,
)


class ArrayF64:
    """A non-owning view (or, for :func:`make_array_f64`, an owner) of
    contiguous float64 storage, plus the struct handed across the
    boundary."""

    __slots__ = ("struct", "_dims_buf", "_keepalive", "_owns")

    def __init__(self, struct: OIFArrayF64, dims_buf, keepalive, owns: bool):
        self.struct = struct
        self._dims_buf = dims_buf
        self._keepalive = keepalive
        self._owns = owns

    @property
    def nd(self) -> int:
        return self.struct.nd

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.struct.dims[i] for i in range(self.struct.nd))

    @property
    def size(self) -> int:
        n = 1
        for d in self.dims:
            n *= d
        return n

    @property
    def data_address(self) -> int:
        return ct.cast(self.struct.data, ct.c_void_p).value or 0

    def as_numpy(self) -> np.ndarray:
        """Zero-copy ndarray over the underlying storage."""
        if self._keepalive is None and self._owns:
            raise OifError(Status.INVALID_ARGUMENT, "array already released")
        if self.size == 0:
            return np.empty(self.dims, dtype=np.float64)
        flat = np.ctypeslib.as_array(self.struct.data, shape=(self.size,))
        return flat.reshape(self.dims)

    def __getitem__(self, idx):
        return self.as_numpy()[idx]

    def __setitem__(self, idx, value):
        self.as_numpy()[idx] = value

    def __len__(self) -> int:
        return self.struct.dims[0] if self.struct.nd >= 1 else 0


def _check_dims(nd: int, dims: Sequence[int]) -> list[int]:
    if nd < 1:
        raise OifError(Status.INVALID_ARGUMENT,
                       f"dimension count must be >= 1, got {nd}")
    dims = list(dims)
    if len(dims) != nd:
        raise OifError(Status.INVALID_ARGUMENT,
                       f"expected {nd} extents, got {len(dims)}")
    for d in dims:
        if d < 0:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"extents must be >= 0, got {d}")
    return dims


def make_array_f64(nd: int, dims: Sequence[int]) -> ArrayF64:
    """Allocate a zero-initialized array owning its storage.

    Release with :func:`free_array_f64` when done.
    """
    dims = _check_dims(nd, dims)
    try:
        storage = np.zeros(dims, dtype=np.float64)
    except MemoryError as exc:
        raise OifError(Status.ALLOC_FAILURE, str(exc)) from exc
    arr = array_view_from_numpy(storage.reshape(-1), dims=dims)
    arr._owns = True
    return arr


def view_array_f64(data_address: int, nd: int, dims: Sequence[int], *,
                   keepalive=None) -> ArrayF64:
    """Wrap existing contiguous float64 storage without copying.

    The caller guarantees the storage holds at least prod(dims) elements
    and outlives the view; pass the owner via ``keepalive`` to tie the
    lifetimes together.
    """
    dims = _check_dims(nd, dims)
    dims_buf = (ct.c_ssize_t * nd)(*dims)
    struct = OIFArrayF64(
        nd, dims_buf, ct.cast(ct.c_void_p(data_address),
                              ct.POINTER(ct.c_double)),
    )
    return ArrayF64(struct, dims_buf, keepalive, owns=False)


def array_view_from_numpy(a: np.ndarray, dims: Sequence[int] | None = None
                          ) -> ArrayF64:
    """Zero-copy view of a contiguous float64 ndarray."""
    if not isinstance(a, np.ndarray) or a.dtype != np.float64:
        raise OifError(Status.INVALID_ARGUMENT,
                       "expected a float64 ndarray")
    if not a.flags.c_contiguous:
        raise OifError(Status.INVALID_ARGUMENT,
                       "array must be C-contiguous")
    shape = list(a.shape) if dims is None else list(dims)
    view = view_array_f64(a.ctypes.data, len(shape), shape, keepalive=a)
    return view


def free_array_f64(arr: ArrayF64) -> int:
    """Release storage allocated by :func:`make_array_f64`."""
    if not isinstance(arr, ArrayF64) or not arr._owns:
        raise OifError(Status.INVALID_ARGUMENT,
                       "not an owning array")
    if arr._keepalive is None:
        raise OifError(Status.INVALID_ARGUMENT, "array already released")
    arr._keepalive = None
    arr.struct.data = ct.cast(ct.c_void_p(0), ct.POINTER(ct.c_double))
    return Status.OK


@dataclass
class Callback:
    """A user function plus the boundary-compatible trampoline for it.

    ``trampoline`` always holds a callable function pointer with the RHS
    signature; ``native_handle`` keeps the original function when the
    callback comes from Python.  ``context`` is an opaque address carried
    along unchanged (0 when unused).
    """

    source_tag: str                  # "native" | "scripting"
    trampoline: object               # RHS_CFUNC instance
    native_handle: object = None
    context: int = 0
    last_exception: BaseException | None = None

    @property
    def trampoline_address(self) -> int:
        return ct.cast(self.trampoline, ct.c_void_p).value or 0


def _ndarray_from_ptr(ptr, cache) -> np.ndarray:
    arr = ptr.contents
    n = arr.dims[0]
    addr = ct.cast(arr.data, ct.c_void_p).value
    key = (addr, n)
    view = cache.get(key)
    if view is None:
        view = np.ctypeslib.as_array(arr.data, shape=(n,))
        cache[key] = view
    return view


def callback_from_python(fn: PyCallable) -> Callback:
    """Wrap a Python function ``fn(t, y, ydot, user_data) -> int | None``
    in a boundary trampoline.

    ``y`` and ``ydot`` arrive as zero-copy ndarray views; writes to
    ``ydot`` land directly in the caller's buffer.  A raised exception is
    recorded on the callback and reported as a solver failure status.
    """
    if not callable(fn):
        raise OifError(Status.INVALID_ARGUMENT, "RHS must be callable")
    cache: dict = {}
    cb = None

    def trampoline(t, y_ptr, ydot_ptr, user_data):
        try:
            y = _ndarray_from_ptr(y_ptr, cache)
            ydot = _ndarray_from_ptr(ydot_ptr, cache)
            result = fn(t, y, ydot, user_data)
            return 0 if result is None else int(result)
        except Exception as exc:   # noqa: BLE001 - must not unwind into C
            cb.last_exception = exc
            return int(Status.SOLVER_FAILURE)

    cb = Callback(source_tag="scripting", trampoline=RHS_CFUNC(trampoline),
                  native_handle=fn)
    return cb


def callback_from_address(address: int, context: int = 0) -> Callback:
    """Wrap an already boundary-compatible function address."""
    if not address:
        raise OifError(Status.INVALID_ARGUMENT,
                       "callback address must not be null")
    return Callback(source_tag="native",
                    trampoline=ct.cast(address, RHS_CFUNC),
                    context=context)


class ConfigDict:
    """Ordered string-to-scalar options map with a fixed wire form.

    Values are 32-bit integers or 64-bit floats, each remembered with its
    tag so a round trip through the wire form is bit-exact.
    """

    def __init__(self, entries: dict | Iterable[tuple[str, object]] | None = None):
        self._entries: dict[str, tuple[TypeTag, object]] = {}
        if entries is None:
            return
        pairs = entries.items() if isinstance(entries, dict) else entries
        for key, value in pairs:
            if key in self._entries:
                raise OifError(Status.INVALID_ARGUMENT,
                               f"duplicate config key '{key}'")
            self._set(key, value)

    def _set(self, key: str, value) -> None:
        if not isinstance(key, str):
            raise OifError(Status.INVALID_ARGUMENT, "config keys are strings")
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, (int, np.integer)) and not isinstance(value, float):
            value = int(value)
            if not _INT32_MIN <= value <= _INT32_MAX:
                raise OifError(Status.INVALID_ARGUMENT,
                               f"config int '{key}' outside 32-bit range")
            self._entries[key] = (TypeTag.INT, value)
        elif isinstance(value, (float, np.floating)):
            self._entries[key] = (TypeTag.FLOAT64, float(value))
        else:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"config value for '{key}' must be int or float")

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def __getitem__(self, key: str):
        return self._entries[key][1]

    def get(self, key: str, default=None):
        entry = self._entries.get(key)
        return default if entry is None else entry[1]

    def tag_of(self, key: str) -> TypeTag:
        return self._entries[key][0]

    def items(self):
        return [(k, v) for k, (_, v) in self._entries.items()]

    def tagged_items(self):
        return [(k, tag, v) for k, (tag, v) in self._entries.items()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfigDict):
            return NotImplemented
        return self.tagged_items() == other.tagged_items()

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v!r}({t.name})"
                          for k, t, v in self.tagged_items())
        return f"ConfigDict({{{inner}}})"

    def to_wire(self) -> bytes:
        out = bytearray()
        for key, tag, value in self.tagged_items():
            kb = key.encode("utf-8")
            out += struct.pack("<I", len(kb))
            out += kb
            out += struct.pack("<I", int(tag))
            if tag == TypeTag.INT:
                out += struct.pack("<q", value)
            else:
                out += struct.pack("<d", value)
        return bytes(out)

    @classmethod
    def from_wire(cls, data: bytes) -> "ConfigDict":
        cd = cls()
        pos = 0
        n = len(data)
        while pos < n:
            if pos + 4 > n:
                raise OifError(Status.INVALID_ARGUMENT,
                               "truncated config record")
            (klen,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if pos + klen + 12 > n:
                raise OifError(Status.INVALID_ARGUMENT,
                               "truncated config record")
            key = data[pos:pos + klen].decode("utf-8")
            pos += klen
            (tag,) = struct.unpack_from("<I", data, pos)
            pos += 4
            if tag == TypeTag.INT:
                (value,) = struct.unpack_from("<q", data, pos)
                value = int(value)
            elif tag == TypeTag.FLOAT64:
                (value,) = struct.unpack_from("<d", data, pos)
            else:
                raise OifError(Status.INVALID_ARGUMENT,
                               f"unknown config tag {tag}")
            pos += 8
            if key in cd._entries:
                raise OifError(Status.INVALID_ARGUMENT,
                               f"duplicate config key '{key}'")
            cd._entries[key] = (TypeTag(tag), value)
        return cd


@dataclass
class PackedArg:
    """One type-tagged value in intermediate representation."""

    tag: TypeTag
    value: object          # the source-level value (view for arrays)
    payload: object        # ctypes-level payload kept alive by this arg
    address: int           # address of the payload


@dataclass
class PackedArgs:
    """An ordered list of packed arguments; the unit that crosses every
    component boundary."""

    args: list[PackedArg] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.args)

    @property
    def tags(self) -> list[TypeTag]:
        return [a.tag for a in self.args]

    @property
    def payload_addresses(self) -> list[int]:
        return [a.address for a in self.args]


def _pack_one(tag: TypeTag, value) -> PackedArg:
    if tag == TypeTag.INT:
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            raise OifError(Status.MISMATCH, f"INT payload got {type(value).__name__}")
        value = int(value)
        if not _INT32_MIN <= value <= _INT32_MAX:
            raise OifError(Status.MISMATCH,
                           "INT payload outside 32-bit range")
        payload = ct.c_int32(value)
        return PackedArg(tag, value, payload, ct.addressof(payload))
    if tag == TypeTag.FLOAT64:
        if not isinstance(value, (float, int, np.floating)):
            raise OifError(Status.MISMATCH,
                           f"FLOAT64 payload got {type(value).__name__}")
        payload = ct.c_double(float(value))
        return PackedArg(tag, float(value), payload, ct.addressof(payload))
    if tag == TypeTag.ARRAY_F64:
        if isinstance(value, np.ndarray):
            value = array_view_from_numpy(value)
        if not isinstance(value, ArrayF64):
            raise OifError(Status.MISMATCH,
                           f"ARRAY_F64 payload got {type(value).__name__}")
        return PackedArg(tag, value, value.struct,
                         ct.addressof(value.struct))
    if tag == TypeTag.STR:
        if not isinstance(value, str):
            raise OifError(Status.MISMATCH, f"STR payload got {type(value).__name__}")
        payload = ct.create_string_buffer(value.encode("utf-8"))
        return PackedArg(tag, value, payload, ct.addressof(payload))
    if tag == TypeTag.CALLBACK:
        if callable(value) and not isinstance(value, Callback):
            value = callback_from_python(value)
        if not isinstance(value, Callback):
            raise OifError(Status.MISMATCH,
                           f"CALLBACK payload got {type(value).__name__}")
        return PackedArg(tag, value, value.trampoline,
                         value.trampoline_address)
    if tag == TypeTag.USER_DATA:
        if value is None:
            value = 0
        if not isinstance(value, int):
            raise OifError(Status.MISMATCH,
                           f"USER_DATA payload got {type(value).__name__}")
        payload = ct.c_void_p(value)
        return PackedArg(tag, value, payload, ct.addressof(payload))
    if tag == TypeTag.CONFIG_DICT:
        if isinstance(value, dict):
            value = ConfigDict(value)
        if not isinstance(value, ConfigDict):
            raise OifError(Status.MISMATCH,
                           f"CONFIG_DICT payload got {type(value).__name__}")
        wire = value.to_wire()
        payload = ct.create_string_buffer(wire, len(wire)) if wire else None
        addr = ct.addressof(payload) if payload is not None else 0
        return PackedArg(tag, value, (payload, len(wire)), addr)
    raise OifError(Status.MISMATCH, f"unknown type tag {tag}")


def pack_args(tagged_values: Sequence[tuple[TypeTag, object]]) -> PackedArgs:
    """Pack (tag, value) pairs into the intermediate representation.

    Array payloads are referenced, never copied: the packed data address
    equals the source data address.
    """
    return PackedArgs([_pack_one(TypeTag(tag), value)
                       for tag, value in tagged_values])


def unpack_args(packed: PackedArgs, expected_tags: Sequence[TypeTag]) -> list:
    """Recover the values of ``packed``, checking tags positionally.

    Array values come back as views over the original storage.
    """
    expected = [TypeTag(t) for t in expected_tags]
    if len(expected) != packed.count:
        raise OifError(Status.MISMATCH,
                       f"expected {len(expected)} arguments, got {packed.count}")
    for i, (want, got) in enumerate(zip(expected, packed.tags)):
        if want != got:
            raise OifError(
                Status.MISMATCH,
                f"argument {i}: expected tag {want.name}, got {got.name}")
    out = []
    for arg in packed.args:
        if arg.tag == TypeTag.ARRAY_F64:
            src: ArrayF64 = arg.value
            keep = src._keepalive if src._keepalive is not None else src
            out.append(view_array_f64(src.data_address, src.nd,
                                      list(src.dims), keepalive=keep))
        elif arg.tag == TypeTag.CONFIG_DICT:
            _, length = arg.payload
            raw = ct.string_at(arg.address, length) \
                if arg.address and length else b""
            out.append(ConfigDict.from_wire(raw))
        else:
            out.append(arg.value)
    return out
