"""Bundled example networks."""

from importlib import resources

from .netmodel import load_network

__all__ = ["FIXTURES", "fixture_path", "load_fixture"]

FIXTURES = ("example_block", "example_conjugate", "example_regional")


def fixture_path(name):
    """Filesystem path of a bundled network file."""
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return resources.files("obsblock") / "data" / f"{name}.json"


def load_fixture(name):
    with resources.as_file(fixture_path(name)) as p:
        return load_network(p)
