"""Shared fixtures-as-functions: random loop corpus and the named configurations."""

import numpy as np

from unitons.looppoly import Subspace, bp_product

SQRT2 = float(np.sqrt(2.0))
E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def random_subspace(rng, n, dim=None):
    dim = int(rng.integers(0, n)) if dim is None else dim
    if dim == 0:
        return Subspace.zero(n)
    v = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    return Subspace.span(v)


def random_alphas(rng, n=None, m=None):
    n = int(rng.integers(1, 5)) if n is None else n
    m = int(rng.integers(1, 5)) if m is None else m
    return [random_subspace(rng, n) for _ in range(m)]


def loop_corpus(count=100, seed=2024):
    """``count`` random products of at most four factors in C^n, n <= 4."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        alphas = random_alphas(rng)
        out.append((alphas, bp_product(alphas)))
    return out


def e5_alphas():
    return [Subspace.span(E1[:, None]), Subspace.span(np.array([[1.0], [1.0]]))]


def e5_loop():
    return bp_product(e5_alphas())


def veronese_frames():
    f = [lambda z: np.ones_like(z), lambda z: SQRT2 * z, lambda z: z * z]
    df = [lambda z: np.zeros_like(z), lambda z: SQRT2 * np.ones_like(z), lambda z: 2 * z]
    return [[f], [f, df]]


def one_uniton_frames(antiholomorphic=False):
    g = (lambda z: np.conj(z)) if antiholomorphic else (lambda z: z)
    return [[[lambda z: np.ones_like(z), g]]]


def const(c):
    return lambda z: np.full(np.shape(z), complex(c))


def e5z_frames():
    """A constant non-nested rotation followed by the z-dependent pair (1,z), {(1,z),(0,1)} in C^3."""
    v = [const(1), lambda z: z, const(0)]
    w = [const(0), const(1), const(0)]
    beta = [const(1), const(0), const(1)]
    return [[beta], [v], [v, w]]


def gamma_veronese_frames():
    ver, pair = veronese_frames()
    return [[[const(1), const(1), const(0)]], ver, pair]


E5_CONFIG = {
    "name": "E5",
    "n": 2,
    "unitons": [{"columns": [["1", "0"]]}, {"columns": [["1", "1"]]}],
    "grid": {"nx": 9, "ny": 9},
    "mu": {"list": [[0, 0], [0.5, 0], [1, 0]]},
}

VERONESE_CONFIG = {
    "name": "veronese",
    "n": 3,
    "unitons": [
        {"columns": [["1", "1.4142135623730951*z", "z^2"]]},
        {"columns": [["1", "1.4142135623730951*z", "z^2"], ["0", "1.4142135623730951", "2*z"]]},
    ],
    "grid": {"xmin": -0.5, "xmax": 0.5, "ymin": -0.5, "ymax": 0.5, "nx": 17, "ny": 17},
    "mu": {"list": [[0, 0], [1, 0]]},
}

ONE_UNITON_CONFIG = {
    "name": "one-uniton",
    "n": 2,
    "unitons": [{"columns": [["1", "z"]]}],
    "grid": {"nx": 9, "ny": 9},
    "mu": {"list": [[0, 0], [0.5, 0], [1, 0]]},
}
