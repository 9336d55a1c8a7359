"""
Random Fields - Seeded random double forms, curvature structures and smooth chart fields
"""

import zlib
from typing import Tuple

import numpy as np
import sympy as sp

from core.catalog import ChartSymbols
from core.double_forms import (
    DoubleForm, basis, metric_power, primitive_decompose, wedge,
)


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Independent stream per (seed, name), stable across runs and thread schedules."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode("utf-8"))])


def random_double_form(rng: np.random.Generator, n: int, p: int, q: int,
                       batch: Tuple[int, ...] = ()) -> DoubleForm:
    rows, cols = len(basis(n, p)), len(basis(n, q))
    return DoubleForm(n, p, q, rng.standard_normal(tuple(batch) + (rows, cols)))


def random_symmetric(rng: np.random.Generator, n: int, p: int, batch: Tuple[int, ...] = ()) -> DoubleForm:
    raw = random_double_form(rng, n, p, p, batch).coeffs
    return DoubleForm(n, p, p, 0.5 * (raw + np.swapaxes(raw, -1, -2)))


def random_bianchi(rng: np.random.Generator, n: int, p: int = 2, terms: int = 3,
                   batch: Tuple[int, ...] = ()) -> DoubleForm:
    """Sum of products of p symmetric (1,1) forms, plus a multiple of g^p; satisfies the first Bianchi identity."""
    total = metric_power(n, p) * float(rng.standard_normal())
    if batch:
        total = DoubleForm(n, p, p, np.broadcast_to(total.coeffs, tuple(batch) + total.coeffs.shape).copy())
    for _ in range(terms):
        term = random_symmetric(rng, n, 1, batch)
        for _ in range(p - 1):
            term = wedge(term, random_symmetric(rng, n, 1, batch))
        total = total + term
    return total


def random_einstein_bianchi(rng: np.random.Generator, n: int) -> DoubleForm:
    """Random algebraic curvature structure with no (1,1) primitive part, i.e. an Einstein one."""
    decomposition = primitive_decompose(random_bianchi(rng, n, 2))
    return decomposition.components[0] + wedge(metric_power(n, 2), decomposition.components[2])


def random_harmonic_expr(rng: np.random.Generator, symbols: ChartSymbols, scale: float = 1.0) -> sp.Expr:
    """Linear plus trace-free quadratic polynomial in the embedding; zero mean on round spheres and flat tori."""
    X = symbols.embedding
    m = len(X)
    linear = rng.standard_normal(m)
    quadratic = rng.standard_normal((m, m))
    quadratic = 0.5 * (quadratic + quadratic.T)
    quadratic -= np.trace(quadratic) / m * np.eye(m)
    expr = sum(sp.Float(scale * linear[a]) * X[a] for a in range(m))
    return expr + sum(sp.Float(scale * quadratic[a, b] / m) * X[a] * X[b] for a in range(m) for b in range(m))


def random_symmetric_expr(rng: np.random.Generator, symbols: ChartSymbols, scale: float = 1.0) -> sp.ImmutableMatrix:
    """H_ij = Σ S_ab(X) ∂_i X_a ∂_j X_b with S affine in the embedding X; smooth across every chart seam."""
    X = sp.Matrix(symbols.embedding)
    m = len(symbols.embedding)
    jacobian = X.jacobian(sp.Matrix(symbols.coords))
    S = sp.zeros(m, m)
    for c in range(-1, m):
        block = rng.standard_normal((m, m)) / m
        block = 0.5 * (block + block.T)
        weight = sp.Integer(1) if c < 0 else symbols.embedding[c]
        S += weight * sp.Matrix(m, m, lambda a, b: sp.Float(scale * block[a, b]))
    H = jacobian.T * S * jacobian
    return sp.ImmutableMatrix((H + H.T) / 2)
