"""Bundled network fixtures."""

from importlib import resources

from ..network import NetworkCase, parse_case

BUNDLED = ("ieee14", "ieee118")


def bundled_case_text(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled case named {name!r}; available: {', '.join(BUNDLED)}")
    return resources.files(__package__).joinpath(f"{name}.m").read_text()


def load_case(name: str) -> NetworkCase:
    """Parse a bundled case by short name ('ieee14' or 'ieee118')."""
    return parse_case(bundled_case_text(name), format="matpower-subset", name=name)
