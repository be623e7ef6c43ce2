"""gaitlab: interpretable rhythm-network locomotion control and sample-efficient
policy-search learning on a deterministic kinematic hexapod surrogate.

The package provides:

* ``gaitlab.sme`` -- a three-layer rhythm network (saturating state ring,
  low-pass rectified basis layer, clipped linear output map) whose connection
  weights are derived from a small boundary-condition system.
* ``gaitlab.cpgrbf`` -- a two-neuron oscillator plus radial-basis output map
  baseline controller with the same learnable parameter count.
* ``gaitlab.learners`` -- six policy-search update rules (PG, PPO, PIBB,
  PGPE, AGL, AGOL) with parameter-space exploration and per-parameter
  adaptive exploration rates.
* ``gaitlab.surrogate`` -- a deterministic kinematic hexapod environment.
* ``gaitlab.experiment`` -- batch / online / continual learning protocols
  and the controller x learner comparison matrix.
* ``gaitlab.analysis`` -- interference metrics, reward-landscape scans and
  trace exports.
* ``gaitlab.cli`` -- the ``gaitlab`` command-line entry point.
"""

__version__ = "0.1.0"

from . import sme
from . import cpgrbf
from . import learners
from . import surrogate
from . import experiment
from . import analysis

__all__ = [
    "sme",
    "cpgrbf",
    "learners",
    "surrogate",
    "experiment",
    "analysis",
    "__version__",
]
