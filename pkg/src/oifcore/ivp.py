"""User-side gateway for the initial-value-problem interface.

An :class:`IvpSession` drives one implementation of

    y'(t) = f(t, y),    y(t0) = y0,

for a float64 state vector y.  Methods convert native values to packed
arguments and route them through the dispatch registry; nonzero statuses
come back as :class:`OifError` with the plugin's status code untouched.

This module is also the normative description of the interface contract
that plugins implement (see docs/interfaces/ivp.md): the method list
below defines the plugin symbol set ``<prefix>_set_initial_value``,
``<prefix>_set_rhs_fn``, ``<prefix>_set_tolerances``,
``<prefix>_set_user_data``, ``<prefix>_set_integrator``, and
``<prefix>_integrate``.
"""

from __future__ import annotations

import ctypes as ct
from typing import Callable as PyCallable

import numpy as np

from . import dispatch
from .errors import OifError, Status, raise_for_status, set_last_error
from .marshal import (
    ArrayF64, Callback, ConfigDict, TypeTag, array_view_from_numpy,
    callback_from_python, pack_args,
)

__all__ = ["IvpSession"]

_NO_ARGS = pack_args([])

#: Methods every IVP implementation must provide, with their in/out
#: argument tags.  Order and arity are fixed: a plugin method receives
#: the session pointer, then the in arguments, then the out arguments.
IVP_METHODS = {
    "set_initial_value": ((TypeTag.ARRAY_F64, TypeTag.FLOAT64), ()),
    "set_rhs_fn": ((TypeTag.CALLBACK,), ()),
    "set_tolerances": ((TypeTag.FLOAT64, TypeTag.FLOAT64), ()),
    "set_user_data": ((TypeTag.USER_DATA,), ()),
    "set_integrator": ((TypeTag.STR, TypeTag.CONFIG_DICT), ()),
    "integrate": ((TypeTag.FLOAT64,), (TypeTag.ARRAY_F64,)),
}


class IvpSession:
    """One solve of an initial-value problem through a loaded plugin.

    Construction loads the implementation; :meth:`close` (or use as a
    context manager) unloads it.  ``integrate`` may only be called after
    ``set_initial_value`` and ``set_rhs_fn`` have both succeeded.
    """

    def __init__(self, impl_name: str, interface_name: str = "ivp"):
        self.handle = dispatch.init_impl(interface_name, impl_name, 1, 0)
        self.impl_name = impl_name
        self.t0 = 0.0
        self.t = 0.0
        self.y0: ArrayF64 | None = None
        self.rhs: Callback | None = None
        self.reltol = 1e-6
        self.abstol = 1e-12
        self.user_data: int | None = None
        self.integrator_name: str | None = None
        self.integrator_params: ConfigDict | None = None
        self._integrated = False
        self._closed = False

    # -- lifecycle ----------------------------------------------------

    def close(self) -> int:
        """Unload the implementation; later calls fail with not-found."""
        if self._closed:
            raise OifError(Status.NOT_FOUND, "session already closed")
        self._closed = True
        return raise_for_status(dispatch.unload_impl(self.handle))

    def __enter__(self) -> "IvpSession":
        return self

    def __exit__(self, *exc) -> None:
        if not self._closed:
            self.close()

    def __del__(self):
        if getattr(self, "_closed", True):
            return
        try:
            self.close()
        except Exception:
            pass

    def _call(self, method: str, in_args, out_args=_NO_ARGS) -> int:
        status = dispatch.call_impl(self.handle, method, in_args, out_args)
        if status != 0 and self.rhs is not None \
                and self.rhs.last_exception is not None:
            exc = self.rhs.last_exception
            self.rhs.last_exception = None
            raise OifError(status,
                           f"RHS callback raised: {exc!r}") from exc
        return raise_for_status(status)

    # -- interface methods ---------------------------------------------

    def set_initial_value(self, y0, t0: float) -> int:
        """Record the state at time ``t0`` and reset any prior progress.

        ``y0`` must be a one-dimensional float64 array with at least one
        element; it is copied by the implementation, so the caller's
        buffer is not retained.
        """
        arr = self._as_state_vector(y0, "y0")
        packed = pack_args([(TypeTag.ARRAY_F64, arr),
                            (TypeTag.FLOAT64, float(t0))])
        status = self._call("set_initial_value", packed)
        self.y0 = arr
        self.t0 = self.t = float(t0)
        self._integrated = False
        return status

    def set_rhs_fn(self, rhs) -> int:
        """Install the callback evaluating f(t, y).

        Accepts a Python callable ``f(t, y, ydot, user_data)`` writing
        into the caller-provided ``ydot`` view, or a prepared
        :class:`Callback` (for example one wrapping a native function
        address)."""
        cb = rhs if isinstance(rhs, Callback) else callback_from_python(rhs)
        if cb.trampoline is None or not cb.trampoline_address:
            raise OifError(Status.INVALID_ARGUMENT,
                           "callback trampoline must not be null")
        status = self._call("set_rhs_fn",
                            pack_args([(TypeTag.CALLBACK, cb)]))
        self.rhs = cb
        return status

    def set_tolerances(self, reltol: float, abstol: float) -> int:
        """Set relative and absolute error tolerances (optional).

        Allowed before the first ``integrate`` call only; the stepping
        loop assumes tolerances are fixed for the whole solve."""
        if not reltol > 0:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"reltol must be > 0, got {reltol}")
        if not abstol >= 0:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"abstol must be >= 0, got {abstol}")
        if self._integrated:
            raise OifError(Status.INVALID_ARGUMENT,
                           "tolerances cannot change after integration "
                           "has started")
        status = self._call("set_tolerances",
                            pack_args([(TypeTag.FLOAT64, float(reltol)),
                                       (TypeTag.FLOAT64, float(abstol))]))
        self.reltol = float(reltol)
        self.abstol = float(abstol)
        return status

    def set_user_data(self, user_data) -> int:
        """Pass an opaque address to every RHS evaluation (optional).

        Accepts an integer address, a ctypes instance (its address is
        taken; keep it alive for the session), or None for no context.
        """
        if user_data is None:
            address = 0
        elif isinstance(user_data, int):
            address = user_data
        else:
            try:
                address = ct.addressof(user_data)
            except TypeError:
                raise OifError(
                    Status.INVALID_ARGUMENT,
                    "user_data must be an int address, a ctypes instance, "
                    "or None") from None
        status = self._call("set_user_data",
                            pack_args([(TypeTag.USER_DATA, address)]))
        self.user_data = address
        return status

    def set_integrator(self, name: str, params=None) -> int:
        """Select the implementation's integrator by name (optional).

        ``params`` is a dict or :class:`ConfigDict` of implementation
        options; unrecognized keys are rejected, not ignored."""
        if not isinstance(name, str) or not name:
            raise OifError(Status.INVALID_ARGUMENT,
                           "integrator name must be a non-empty string")
        cfg = params if isinstance(params, ConfigDict) else ConfigDict(params)
        status = self._call("set_integrator",
                            pack_args([(TypeTag.STR, name),
                                       (TypeTag.CONFIG_DICT, cfg)]))
        self.integrator_name = name
        self.integrator_params = cfg
        return status

    def integrate(self, t: float, y_out) -> int:
        """Advance the solution to time ``t`` and write it into ``y_out``.

        ``y_out`` is allocated by the caller with the same element count
        as y0.  ``t`` must not lie in the past; ``t`` equal to the
        current time is a no-op that still fills ``y_out``."""
        if self.y0 is None or self.rhs is None:
            raise OifError(Status.INVALID_ARGUMENT,
                           "integrate requires set_initial_value and "
                           "set_rhs_fn first")
        t = float(t)
        if t < self.t:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"target time {t} is before current time {self.t}")
        arr = self._as_state_vector(y_out, "y_out")
        if len(arr) != len(self.y0):
            raise OifError(Status.INVALID_ARGUMENT,
                           f"y_out has {len(arr)} elements, expected "
                           f"{len(self.y0)}")
        status = self._call("integrate",
                            pack_args([(TypeTag.FLOAT64, t)]),
                            pack_args([(TypeTag.ARRAY_F64, arr)]))
        self.t = t
        self._integrated = True
        return status

    # -- helpers --------------------------------------------------------

    @staticmethod
    def _as_state_vector(value, name: str) -> ArrayF64:
        if isinstance(value, ArrayF64):
            arr = value
        elif isinstance(value, np.ndarray):
            if value.dtype != np.float64 or not value.flags.c_contiguous:
                raise OifError(Status.INVALID_ARGUMENT,
                               f"{name} must be a contiguous float64 array")
            arr = array_view_from_numpy(value)
        else:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"{name} must be an ndarray or ArrayF64")
        if arr.nd != 1 or len(arr) < 1:
            raise OifError(Status.INVALID_ARGUMENT,
                           f"{name} must be 1-dimensional with >= 1 element")
        return arr
