"""Cell-mapping analysis and synthesis for quantized, finite-word-length control systems.

The submodules cover fixed-point quantizers, uniform cell spaces, plant
models, simple and generalized cell maps, controllability, robustness
sweeps, optimal lookup-table synthesis and artifact I/O.
"""
from .artifacts_io import *  # noqa: F401,F403
from .cellspace import *  # noqa: F401,F403
from .config import *  # noqa: F401,F403
from .doc import *  # noqa: F401,F403
from .errors import *  # noqa: F401,F403
from .gcm import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .quantization import *  # noqa: F401,F403
from .reach import *  # noqa: F401,F403
from .robust import *  # noqa: F401,F403
from .scm import *  # noqa: F401,F403

__version__ = "0.1.0"
