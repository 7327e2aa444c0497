import numpy as np
import pytest

from prodtree.geometry import ComponentSpec, Kind, Signature, exp_map, origin


def random_points(comp: ComponentSpec, n: int, rng, spread: float = 1.5) -> np.ndarray:
    """Rows on ``comp`` via exp at the origin of Gaussian tangent vectors."""
    v = np.zeros((n, comp.ambient_dim))
    v[:, 1:] = rng.normal(size=(n, comp.dim)) * spread
    if comp.kind is not Kind.EUCLIDEAN:
        v /= comp.scale
    return exp_map(comp, origin(comp)[None, :], v)


def random_tangent(comp: ComponentSpec, base: np.ndarray, rng, scale: float = 1.0) -> np.ndarray:
    """Random tangent vectors at each row of ``base`` with norms ~ ``scale * chi``."""
    w = rng.normal(size=base.shape)
    if comp.kind is Kind.EUCLIDEAN:
        w[:, 0] = 0.0
        return w * scale
    if comp.kind is Kind.SPHERE:
        b = base / np.linalg.norm(base, axis=1, keepdims=True)
        t = w - np.sum(w * b, axis=1, keepdims=True) * b
        norm = np.linalg.norm(t, axis=1, keepdims=True)
    else:
        # project out the Minkowski normal, then measure in the Minkowski norm
        b = base * comp.scale
        mink = lambda x, y: -x[:, 0] * y[:, 0] + np.sum(x[:, 1:] * y[:, 1:], axis=1)
        t = w + mink(w, b)[:, None] * b
        norm = np.sqrt(mink(t, t))[:, None]
    length = np.linalg.norm(rng.normal(size=(base.shape[0], comp.dim)), axis=1, keepdims=True)
    return t / norm * length * scale / comp.scale


COMPONENTS = [
    ComponentSpec(Kind.SPHERE, 2, 1.0),
    ComponentSpec(Kind.SPHERE, 3, 2.0),
    ComponentSpec(Kind.HYPERBOLOID, 2, -1.0),
    ComponentSpec(Kind.HYPERBOLOID, 4, -0.5),
    ComponentSpec(Kind.EUCLIDEAN, 3, 0.0),
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=COMPONENTS, ids=str)
def comp(request):
    return request.param


@pytest.fixture
def mixed_sig():
    return Signature.parse("S2xE2xH2")


# PASS/FAIL lines recorded by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
