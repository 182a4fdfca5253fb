"""Shared hypothesis strategies."""

import itertools

from hypothesis import strategies as st

coefficients = st.floats(-2, 2, allow_nan=False).map(lambda c: round(c, 3))


def monomials(names, degree):
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(names, d):
            out.append("*".join(combo) or "1")
    return out


@st.composite
def polynomials(draw, names, degree=2):
    """Source text of a random polynomial in ``names``."""
    terms = monomials(names, degree)
    cs = draw(st.lists(coefficients, min_size=len(terms), max_size=len(terms)))
    return " + ".join(f"({c!r})*{m}" for c, m in zip(cs, terms))


def polynomial_lists(names, count, degree=2):
    return st.lists(polynomials(names, degree), min_size=count, max_size=count)


STRUCTURE_SCENES = ("darboux2", "expq2", "darboux4", "expqp2", "sheared2")


def scene_path(name: str) -> str:
    from importlib import resources

    return str(resources.files("bilag") / "data" / f"{name}.scene")


def shipped_structure(name: str):
    from bilag.scene import load_scene

    return load_scene(scene_path(name)).pick("structures", "structure")[1]
