"""Backend selection for the trajectory integrator.

Two interchangeable backends exist: the compiled extension (_kernel) and a
pure-Python twin (_kernel_py). They are written to produce bit-identical
output. Selection order:

  1. ATOMBELT_KERNEL environment variable ("c" or "py"),
  2. the compiled extension when importable,
  3. the pure-Python fallback.
"""

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernel_py

try:
    from . import _kernel
    HAVE_C = True
except ImportError:            # built without the extension; still fully functional
    _kernel = None
    HAVE_C = False

STATUS_BOUND = _kernel_py.BOUND
STATUS_ESCAPED = _kernel_py.ESCAPED
STATUS_BACKGROUND = _kernel_py.BACKGROUND
STATUS_NONFINITE = _kernel_py.NONFINITE
STATUS_NOCONVERGE = _kernel_py.NOCONVERGE

_EMPTY = np.empty(0)


@dataclass
class KernelPlan:
    """Flat bundle of scalars, coefficient arrays and noise tapes for one run.

    Built by dynamics.integrate; both backends consume it unchanged. All
    arrays are float64 and C-contiguous.
    """
    # initial state
    x: float; y: float; z: float
    vx: float; vy: float; vz: float
    # stepping
    dt: float
    n_steps: int
    # trap
    depth: float
    w0: float
    rayleigh: float
    k: float
    contrast: float
    mass: float
    grav: float
    gx: float; gy: float; gz: float
    # detuning profile (per-segment quadratic phase coefficients)
    seg_t0: np.ndarray
    seg_t1: np.ndarray
    seg_nu0: np.ndarray
    seg_slope: np.ndarray
    seg_phi0: np.ndarray
    prof_end: float
    phi_end: float
    lam: float
    # AOM factor vs |detuning| and depth schedule vs t, piecewise linear
    aom_x: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    aom_y: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    aom_sl: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    sched_t: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    sched_f: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    sched_sl: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    # noise tapes
    bg_t: float = np.inf
    rc_t: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    rc_u: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    rc_sx: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    rc_nx: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    rc_ny: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    rc_nz: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    kick: float = 0.0
    ph_iv: float = 1.0
    ph_off: np.ndarray = field(default_factory=lambda: _EMPTY.copy())
    # cadence
    esc_every: int = 32
    rec_every: int = 0
    # output buffers (sized by the builder)
    out_t: np.ndarray = field(default_factory=lambda: np.empty(2))
    out_s: np.ndarray = field(default_factory=lambda: np.empty((2, 6)))


def available_backends():
    names = ["py"]
    if HAVE_C:
        names.insert(0, "c")
    return names


def get_backend(name=None):
    """Resolve a backend module by name, env var, or availability."""
    if name is None:
        name = os.environ.get("ATOMBELT_KERNEL", "").strip().lower() or None
    if name in (None, "auto"):
        return _kernel if HAVE_C else _kernel_py
    if name in ("c", "compiled", "cython"):
        if not HAVE_C:
            warnings.warn("compiled kernel unavailable, using the pure-Python backend")
            return _kernel_py
        return _kernel
    if name in ("py", "python", "pure"):
        return _kernel_py
    raise ValueError(f"unknown kernel backend {name!r} (use 'c' or 'py')")


def backend_name(mod) -> str:
    return "c" if (HAVE_C and mod is _kernel) else "py"
