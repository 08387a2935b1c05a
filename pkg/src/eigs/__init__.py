"""Analysis of reducible edge iterated graph systems: fractal and degree
spectra from the mass and degree matrices, cross-checked against the
explicitly generated graphs."""

from importlib import resources

__version__ = "0.1.0"

EXAMPLES = ("splendor", "broken_dhl", "classical_dhl", "binary_tree", "binary_tree_two_edge")


def example_path(name: str):
    """Path-like handle of a bundled example rule file."""
    if name not in EXAMPLES:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    return resources.files(__name__) / "data" / f"{name}.json"


def example_text(name: str) -> str:
    return example_path(name).read_text(encoding="utf-8")


def load_example(name: str):
    from .model import parse_spec

    return parse_spec(example_text(name))
