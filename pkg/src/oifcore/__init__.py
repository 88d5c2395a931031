"""Mediator library decoupling user code from numerical-solver plugins.

User code programs against the IVP interface (:class:`IvpSession`);
implementations are discovered on disk from manifest files, loaded as
shared-library plugins, and driven through a type-tagged, zero-copy
marshalling layer.
"""

from .errors import OifError, Status
from .marshal import (
    ArrayF64, Callback, ConfigDict, PackedArg, PackedArgs, TypeTag,
    array_view_from_numpy, callback_from_address, callback_from_python,
    free_array_f64, make_array_f64, pack_args, unpack_args, view_array_f64,
)
from .dispatch import (
    ImplManifest, call_impl, discover, init_impl, unload_impl,
)
from .ivp import IvpSession

__version__ = "0.1.0"

__all__ = [
    "OifError", "Status", "TypeTag", "ArrayF64", "Callback", "ConfigDict",
    "PackedArg", "PackedArgs", "array_view_from_numpy",
    "callback_from_address", "callback_from_python", "free_array_f64",
    "make_array_f64", "pack_args", "unpack_args", "view_array_f64",
    "ImplManifest", "call_impl", "discover", "init_impl", "unload_impl",
    "IvpSession", "__version__",
]
