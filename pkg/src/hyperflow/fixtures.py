"""Bundled example triangulations."""

from importlib import resources

from .triangulation import Triangulation, parse_triangulation

FIXTURES = ("doubled_tet", "pentachoron", "torus_cusp")


def fixture_path(name: str):
    return resources.files("hyperflow") / "fixtures" / f"{name}.json"


def load_fixture(name: str) -> Triangulation:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return parse_triangulation(fixture_path(name).read_bytes())
