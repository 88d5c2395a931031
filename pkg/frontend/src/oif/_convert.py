"""Conversion of Python-native values to the core intermediate
representation.

Supported inputs: int (32-bit range), float, contiguous 1-d float64
ndarray (wrapped zero-copy), str, dict mapping str to int or float, and
callables (wrapped in a counting boundary trampoline).  Anything else
raises TypeError.
"""

from __future__ import annotations

import numpy as np

from oifcore.marshal import (
    Callback, ConfigDict, PackedArg, RHS_CFUNC, TypeTag, _ndarray_from_ptr,
    _pack_one, array_view_from_numpy,
)

__all__ = ["convert", "CallbackWrapper"]

_INT32_MIN = -(2**31)
_INT32_MAX = 2**31 - 1


class CallbackWrapper:
    """Boundary trampoline around a Python RHS callable.

    Converts the incoming array pointers to zero-copy ndarray views and
    the raw user-data address back to the registered Python object (via
    ``resolve_user_data``) before invoking the user function.  Counts
    entries so tests can observe when the boundary is actually crossed.
    The original callable stays on ``callback.native_handle`` so a
    same-context implementation could invoke it directly without a
    boundary crossing.
    """

    def __init__(self, fn, resolve_user_data=None):
        if not callable(fn):
            raise TypeError(f"expected a callable, got {type(fn).__name__}")
        self.fn = fn
        self.calls = 0
        self.last_exception: BaseException | None = None
        cache: dict = {}
        resolve = resolve_user_data

        def trampoline(t, y_ptr, ydot_ptr, user_data):
            self.calls += 1
            try:
                y = _ndarray_from_ptr(y_ptr, cache)
                ydot = _ndarray_from_ptr(ydot_ptr, cache)
                context = resolve(user_data) if resolve else user_data
                result = fn(t, y, ydot, context)
                return 0 if result is None else int(result)
            except Exception as exc:    # noqa: BLE001 - cannot unwind into C
                self.last_exception = exc
                return -6
        self.callback = Callback(source_tag="scripting",
                                 trampoline=RHS_CFUNC(trampoline),
                                 native_handle=fn)


def convert(value, *, resolve_user_data=None) -> PackedArg:
    """Map one Python-native value to a type-tagged packed argument."""
    if isinstance(value, bool):
        raise TypeError("bool is not a supported interface type")
    if isinstance(value, (int, np.integer)):
        if not _INT32_MIN <= int(value) <= _INT32_MAX:
            raise TypeError(f"integer {value} does not fit in 32 bits")
        return _pack_one(TypeTag.INT, int(value))
    if isinstance(value, (float, np.floating)):
        return _pack_one(TypeTag.FLOAT64, float(value))
    if isinstance(value, np.ndarray):
        if value.dtype != np.float64:
            raise TypeError(
                f"arrays must have dtype float64, got {value.dtype}; "
                f"convert with .astype(np.float64) first")
        if value.ndim != 1:
            raise TypeError(f"arrays must be 1-dimensional, got shape "
                            f"{value.shape}")
        if not value.flags.c_contiguous:
            raise TypeError(
                "array is not contiguous; pass np.ascontiguousarray(a) "
                "(note: this copies)")
        return _pack_one(TypeTag.ARRAY_F64, array_view_from_numpy(value))
    if isinstance(value, str):
        return _pack_one(TypeTag.STR, value)
    if isinstance(value, ConfigDict):
        return _pack_one(TypeTag.CONFIG_DICT, value)
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                raise TypeError("option dict keys must be strings")
            if isinstance(item, bool) or not isinstance(
                    item, (int, float, np.integer, np.floating)):
                raise TypeError(
                    f"option '{key}' must be an int or float, got "
                    f"{type(item).__name__}")
        return _pack_one(TypeTag.CONFIG_DICT, ConfigDict(value))
    if isinstance(value, CallbackWrapper):
        return _pack_one(TypeTag.CALLBACK, value.callback)
    if callable(value):
        wrapper = CallbackWrapper(value, resolve_user_data)
        arg = _pack_one(TypeTag.CALLBACK, wrapper.callback)
        arg.value = wrapper.callback
        return arg
    raise TypeError(f"no interface mapping for {type(value).__name__}")
