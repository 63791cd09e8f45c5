"""Grape leaf disease classification toolkit.

Submodules (imported on demand; ``leaflife.modeling`` and friends pull in
TensorFlow, which is deliberately not loaded here):

- ``leaflife.dataset``: corpus scanning, stratified splits, preprocessing
- ``leaflife.modeling``: classifier construction, training, artifacts
- ``leaflife.adversarial``: FGSM, adversarial training, the budget sweep
- ``leaflife.explain``: Grad-CAM, occlusion sensitivity, overlays
- ``leaflife.evaluation``: confusion matrices and classification reports
- ``leaflife.service``: the HTTP inference service
- ``leaflife.cli``: the ``leaflife`` command
- ``leaflife.synthetic``: seeded fixture corpus generator
"""

from . import errors
from .errors import LeafLifeError

__version__ = "0.1.0"

__all__ = ["errors", "LeafLifeError", "__version__"]
