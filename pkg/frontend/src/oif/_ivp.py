"""The IVP gateway class: loads an implementation on construction,
unloads it on close/destruction, and converts numpy-native arguments on
every call."""

from __future__ import annotations

import numpy as np

from oifcore import dispatch
from oifcore.errors import OifError as CoreOifError
from oifcore.errors import get_last_error
from oifcore.marshal import PackedArgs, TypeTag, _pack_one

from ._convert import CallbackWrapper, convert

__all__ = ["IVP", "OifError"]

_EMPTY = PackedArgs([])


class OifError(CoreOifError):
    """Interface failure surfaced to the scripting side.

    ``code`` carries the core status of the failing operation.
    """

    @property
    def code(self) -> int:
        return self.status


class IVP:
    """Initial-value-problem session on a named implementation.

    Construction discovers and loads the implementation; deleting the
    object (or calling :meth:`close`, or leaving a ``with`` block)
    unloads it.  Nonzero statuses raise :class:`OifError`.
    """

    def __init__(self, impl_name: str):
        self._handle = None
        self._rhs_wrapper: CallbackWrapper | None = None
        self._user_data = None
        self._user_data_addr: int | None = None
        try:
            self._handle = dispatch.init_impl("ivp", impl_name, 1, 0)
        except CoreOifError as exc:
            raise OifError(exc.status, str(exc)) from None
        self.impl_name = impl_name

    # -- lifecycle ------------------------------------------------------

    def close(self) -> None:
        """Unload the implementation now; safe to call more than once."""
        handle, self._handle = self._handle, None
        if handle is not None:
            dispatch.unload_impl(handle)
        self._rhs_wrapper = None
        self._user_data = None

    def __enter__(self) -> "IVP":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass

    # -- plumbing -------------------------------------------------------

    def _call(self, method: str, in_args, out_args=_EMPTY) -> None:
        if self._handle is None:
            raise OifError(-4, "session is closed")
        status = dispatch.call_impl(self._handle, method, in_args, out_args)
        if status != 0:
            wrapper = self._rhs_wrapper
            if wrapper is not None and wrapper.last_exception is not None:
                exc = wrapper.last_exception
                wrapper.last_exception = None
                raise OifError(status,
                               f"RHS callback raised: {exc!r}") from exc
            raise OifError(status, get_last_error()
                           or f"{method} failed with status {status}")

    def _resolve_user_data(self, address):
        if address is not None and address == self._user_data_addr:
            return self._user_data
        return address

    # -- the six interface methods ---------------------------------------

    def set_initial_value(self, y0: np.ndarray, t0: float) -> None:
        """Set the state ``y0`` (1-d float64 array) at time ``t0``."""
        arg_y0 = convert(np.asarray(y0))
        if arg_y0.tag != TypeTag.ARRAY_F64:
            raise TypeError("y0 must be a float64 array")
        self._call("set_initial_value",
                   PackedArgs([arg_y0, convert(float(t0))]))

    def set_rhs_fn(self, rhs_fn) -> None:
        """Install ``rhs_fn(t, y, ydot, user_data)``; it receives y and
        ydot as zero-copy views and must fill ydot."""
        wrapper = CallbackWrapper(rhs_fn, self._resolve_user_data)
        self._call("set_rhs_fn", PackedArgs([convert(wrapper)]))
        self._rhs_wrapper = wrapper

    def set_tolerances(self, reltol: float, abstol: float) -> None:
        """Set relative and absolute tolerances (optional)."""
        self._call("set_tolerances",
                   PackedArgs([convert(float(reltol)),
                               convert(float(abstol))]))

    def set_user_data(self, user_data) -> None:
        """Attach any Python object as the RHS context (optional).

        The object is kept alive by the session and handed back as the
        fourth argument of the RHS callback."""
        if user_data is None:
            self._user_data = None
            self._user_data_addr = None
            self._call("set_user_data",
                       PackedArgs([_pack_one(TypeTag.USER_DATA, 0)]))
            return
        address = id(user_data)
        self._user_data = user_data
        self._user_data_addr = address
        self._call("set_user_data",
                   PackedArgs([_pack_one(TypeTag.USER_DATA, address)]))

    def set_integrator(self, integrator: str, params: dict | None = None
                       ) -> None:
        """Select the implementation's integrator by name (optional)."""
        if not isinstance(integrator, str) or not integrator:
            raise TypeError("integrator must be a non-empty string")
        self._call("set_integrator",
                   PackedArgs([convert(integrator),
                               convert(params or {})]))

    def integrate(self, t: float, y: np.ndarray) -> None:
        """Advance to time ``t``, writing the solution into the
        caller-allocated array ``y``."""
        arg_y = convert(np.asarray(y))
        self._call("integrate", PackedArgs([convert(float(t))]),
                   PackedArgs([arg_y]))

    # -- introspection ---------------------------------------------------

    @property
    def rhs_boundary_crossings(self) -> int:
        """How many times the RHS trampoline has been entered."""
        return self._rhs_wrapper.calls if self._rhs_wrapper else 0
