"""Fixed-width instruction set toolchain for gate-model and annealing QPUs."""

from importlib.resources import files

__version__ = "0.1.0"


def sample_path(name: str):
    """Path-like handle to a bundled sample file such as ``half_adder.qisa``."""
    return files(__name__) / "data" / name
