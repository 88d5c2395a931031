"""On-demand compilation of the bundled native plugins.

The package ships the plugin C sources; the shared libraries are built
lazily with the system C compiler the first time the default
implementation root is needed.  Build products land next to their
manifests so a manifest can name its library by file name alone.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import tempfile
from pathlib import Path

_PKG_DIR = Path(__file__).resolve().parent.parent
_SRC_DIR = Path(__file__).resolve().parent / "src"
INCLUDE_DIR = Path(__file__).resolve().parent / "include"

#: plugin name -> (C source, library file name)
BUNDLED_PLUGINS = {
    "dopri5c": ("dopri5c.c", "liboif_dopri5c.so"),
    "rk4": ("rk4.c", "liboif_rk4.so"),
}


class BuildError(RuntimeError):
    """Compilation of a native component failed."""


def find_compiler() -> str:
    for name in ("cc", "gcc", "clang"):
        path = shutil.which(name)
        if path:
            return path
    raise BuildError("no C compiler found (tried cc, gcc, clang)")


def compile_shared(sources, out_path: Path, extra_flags=()) -> Path:
    """Compile C sources into a shared library, atomically replacing
    ``out_path``.  Skips the build when the output is newer than all
    sources."""
    out_path = Path(out_path)
    sources = [Path(s) for s in sources]
    if out_path.exists():
        out_mtime = out_path.stat().st_mtime
        if all(s.stat().st_mtime <= out_mtime for s in sources):
            return out_path
    out_path.parent.mkdir(parents=True, exist_ok=True)
    cc = find_compiler()
    fd, tmp = tempfile.mkstemp(suffix=".so", dir=out_path.parent)
    os.close(fd)
    cmd = [
        cc, "-O2", "-fPIC", "-shared",
        "-I", str(INCLUDE_DIR),
        *map(str, sources),
        *extra_flags,
        "-o", tmp,
        "-lm",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        os.unlink(tmp)
        raise BuildError(
            f"compiling {', '.join(s.name for s in sources)} failed:\n"
            f"{proc.stderr}"
        )
    os.replace(tmp, out_path)
    return out_path


def compile_executable(sources, out_path: Path, extra_flags=()) -> Path:
    """Compile C sources into an executable (used by test harnesses)."""
    out_path = Path(out_path)
    sources = [Path(s) for s in sources]
    if out_path.exists():
        out_mtime = out_path.stat().st_mtime
        if all(s.stat().st_mtime <= out_mtime for s in sources):
            return out_path
    out_path.parent.mkdir(parents=True, exist_ok=True)
    cc = find_compiler()
    cmd = [
        cc, "-O2", "-g",
        "-I", str(INCLUDE_DIR),
        *map(str, sources),
        *extra_flags,
        "-o", str(out_path),
        "-ldl", "-lm",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise BuildError(
            f"compiling {', '.join(s.name for s in sources)} failed:\n"
            f"{proc.stderr}"
        )
    return out_path


def _impl_tree_writable() -> Path:
    """Directory holding the bundled manifests, copied to a per-user cache
    when the installed package is read-only."""
    tree = _PKG_DIR / "impl"
    if os.access(tree, os.W_OK):
        return tree
    cache = Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache"))
    mirror = cache / "oifcore" / "impl"
    for manifest in tree.glob("ivp/*/*.oifm"):
        dest = mirror / manifest.relative_to(tree)
        dest.parent.mkdir(parents=True, exist_ok=True)
        if not dest.exists() or dest.read_bytes() != manifest.read_bytes():
            dest.write_bytes(manifest.read_bytes())
    return mirror


def default_impl_root() -> Path:
    """Return the search root with the bundled plugins, building their
    shared libraries first if needed."""
    root = _impl_tree_writable()
    for name, (source, libname) in BUNDLED_PLUGINS.items():
        compile_shared([_SRC_DIR / source], root / "ivp" / name / libname)
    return root
