"""Domain exception types shared across the package."""


class LeafLifeError(Exception):
    """Base class for every error this package raises on bad input or state."""


class NotFoundError(LeafLifeError):
    """A referenced path does not exist."""


class EmptyDatasetError(LeafLifeError):
    """A dataset root contains no class directories or no images."""


class InvalidRatiosError(LeafLifeError):
    """Split ratios are negative or do not sum to one."""


class DecodeError(LeafLifeError):
    """A file could not be decoded as an RGB image."""


class UnsupportedBackboneError(LeafLifeError):
    """Requested backbone architecture is not one of the supported two."""


class InvalidSplitError(LeafLifeError):
    """Split assignment is inconsistent with the manifest or has empty subsets."""


class ModeMismatchError(LeafLifeError):
    """Image preprocessing mode does not match what the consumer expects."""


class InvalidEpsilonError(LeafLifeError):
    """Perturbation budget is negative."""


class InvalidConfigError(LeafLifeError):
    """A configuration value violates its declared invariant."""


class InvalidLayerError(LeafLifeError):
    """Layer cannot be resolved to a spatial convolutional feature map."""


class InvalidClassError(LeafLifeError):
    """Target class index is outside the classifier's output range."""


class InvalidGeometryError(LeafLifeError):
    """Occlusion patch size or stride is out of range."""


class InvalidAlphaError(LeafLifeError):
    """Overlay blend factor is outside [0, 1]."""


class LengthMismatchError(LeafLifeError):
    """Paired label sequences have different lengths."""


class InvalidLabelError(LeafLifeError):
    """A label value is outside the valid class index range."""


class InvalidMatrixError(LeafLifeError):
    """A confusion matrix is non-square or contains invalid entries."""


class ClassOrderMismatchError(LeafLifeError):
    """Model class order disagrees with the manifest class order."""


class ArtifactLoadError(LeafLifeError):
    """A persisted model artifact is missing pieces or unreadable."""
