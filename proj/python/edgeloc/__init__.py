"""Season-robust aerial relocalization over edge maps."""

try:
    from ._core import (
        EdgelocError,
        Index,
        Model,
        Terrain,
        canny,
        generate_terrain,
        load_model,
        train_autoencoder,
        version,
    )
except ImportError:  # in-tree builds put _core next to the build directory
    from _core import (
        EdgelocError,
        Index,
        Model,
        Terrain,
        canny,
        generate_terrain,
        load_model,
        train_autoencoder,
        version,
    )

__version__ = version()

__all__ = [
    "EdgelocError",
    "Index",
    "Model",
    "Terrain",
    "canny",
    "generate_terrain",
    "load_model",
    "train_autoencoder",
    "version",
    "__version__",
]
