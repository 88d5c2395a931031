"""numpy-native user binding for the oifcore solver-plugin mediator.

    from oif import IVP

    s = IVP("dopri5c")
    s.set_initial_value(y0, 0.0)
    s.set_rhs_fn(rhs)
    s.integrate(t, y)

Implementations are discovered through the core's OIF_IMPL_PATH search
path; failures raise :class:`OifError` carrying the core status code.
"""

from ._convert import CallbackWrapper, convert
from ._ivp import IVP, OifError
from .vdp import solve_vdp, vdp_rhs

__version__ = "0.1.0"

__all__ = ["IVP", "OifError", "CallbackWrapper", "convert", "solve_vdp",
           "vdp_rhs", "__version__"]
