"""
Copyright (C) 2024 Michael Piazza

This file is part of Nonholo.

Nonholo is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

Nonholo is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with Nonholo.  If not, see <https://www.gnu.org/licenses/>.
"""

import threading
from collections import OrderedDict
from collections.abc import Callable, Sequence
from functools import lru_cache
from itertools import combinations, permutations
from math import comb
from typing import Any, Optional

import numpy as np
from attrs import field, frozen

from .config import config
from .constants import MEMO_SIZE
from .dual import (
    ArrayLike,
    Dual,
    einsum,
    order_of,
    reshape,
    stack,
    take,
    total,
    value,
)
from .errors import ChartError, DegreeError, DerivativeError
from .logger import logger

Point = ArrayLike
FieldFn = Callable[[Any], Any]
Sampler = Callable[[np.random.Generator, int], np.ndarray]

_LETTERS = "abcdefghijklmnopqrstuvwx"


@frozen(eq=False)
class Chart:
    """A coordinate patch: named coordinates, a sampling box and periodicity flags."""

    name: str
    coord_names: tuple[str, ...]
    sample_box: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...] = field()
    sampler: Optional[Sampler] = None

    @periodic.default
    def _no_periodic(self) -> tuple[bool, ...]:
        return tuple(False for _ in self.coord_names)

    def __attrs_post_init__(self) -> None:
        n = len(self.coord_names)
        if len(self.sample_box) != n or len(self.periodic) != n:
            raise ChartError(f"chart {self.name}: box and periodicity must match {n} coordinates")
        if len(set(self.coord_names)) != n:
            raise ChartError(f"chart {self.name}: duplicate coordinate names")
        for name, (lo, hi), periodic in zip(self.coord_names, self.sample_box, self.periodic):
            if not hi > lo:
                raise ChartError(f"chart {self.name}: empty sampling box for {name}")
            if periodic and abs((hi - lo) - 2 * np.pi) > 1e-12:
                raise ChartError(f"chart {self.name}: periodic coordinate {name} must span 2pi")

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    @property
    def widths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.sample_box])

    def index(self, name: str) -> int:
        try:
            return self.coord_names.index(name)
        except ValueError:
            raise ChartError(f"chart {self.name} has no coordinate {name}") from None

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Deterministic for a given generator state."""
        if self.sampler is not None:
            points = np.asarray(self.sampler(rng, count), dtype=float)
        else:
            lo = np.array([b[0] for b in self.sample_box])
            points = lo + self.widths * rng.random((count, self.dim))
        if points.shape != (count, self.dim):
            raise ChartError(f"chart {self.name}: sampler returned shape {points.shape}")
        return points

    def check_point(self, x: Any) -> np.ndarray:
        xv = np.asarray(value(x), dtype=float)
        if xv.shape != (self.dim,):
            raise ChartError(
                f"chart {self.name} expects {self.dim} coordinates, got shape {xv.shape}"
            )
        if not np.all(np.isfinite(xv)):
            raise ChartError(f"non-finite point for chart {self.name}", xv)
        return xv


# Fields. Each wraps a closure from a chart point (ndarray or Dual) to component arrays.


@frozen(eq=False)
class ScalarField:
    chart: Chart
    fn: FieldFn

    def __call__(self, x: Point) -> Any:
        return self.fn(x)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.chart, lambda x: self.fn(x) - other.fn(x))

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.chart, lambda x: self.fn(x) * c)


@frozen(eq=False)
class VectorField:
    chart: Chart
    fn: FieldFn

    def __call__(self, x: Point) -> Any:
        return self.fn(x)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, lambda x: self.fn(x) + other.fn(x))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.chart, lambda x: self.fn(x) - other.fn(x))

    def __neg__(self) -> "VectorField":
        return VectorField(self.chart, lambda x: -self.fn(x))


@frozen(eq=False)
class Frame:
    """Pointwise rows spanning a distribution: ``fn(x)`` has shape (rank, dim)."""

    chart: Chart
    rank: int
    fn: FieldFn

    def __call__(self, x: Point) -> Any:
        return self.fn(x)

    def vector(self, i: int) -> VectorField:
        return VectorField(self.chart, lambda x: self.fn(x)[i])

    def select(self, rows: Sequence[int]) -> "Frame":
        idx = np.asarray(rows, dtype=int)
        return Frame(self.chart, len(idx), lambda x: take(self.fn(x), idx, axis=0))


@frozen(eq=False)
class MatrixField:
    chart: Chart
    fn: FieldFn

    def __call__(self, x: Point) -> Any:
        return self.fn(x)


@frozen(eq=False)
class KForm:
    """A differential k-form (optionally a batch of them, e.g. Lie algebra valued).

    ``fn(x)`` returns ``batch + (C(n, k),)`` components on increasing multi-indices.
    ``exact`` marks forms built as ``d`` of something, ``degenerate`` marks the zero
    form produced when the degree would exceed the dimension.
    """

    chart: Chart
    degree: int
    fn: FieldFn
    batch: tuple[int, ...] = ()
    exact: bool = False
    degenerate: bool = False
    dense_fn: Optional[FieldFn] = None

    def __call__(self, x: Point) -> Any:
        return self.fn(x)

    def dense(self, x: Point) -> Any:
        if self.dense_fn is not None:
            return self.dense_fn(x)
        return expand(self.fn(x), self.chart.dim, self.degree)

    def component(self, i: int) -> "KForm":
        if not self.batch:
            raise DegreeError("component() needs a batched form")
        return KForm(self.chart, self.degree, lambda x: self.fn(x)[i], self.batch[1:])

    def __add__(self, other: "KForm") -> "KForm":
        _same_degree(self, other)
        return KForm(self.chart, self.degree, lambda x: self.fn(x) + other.fn(x), self.batch)

    def __sub__(self, other: "KForm") -> "KForm":
        _same_degree(self, other)
        return KForm(self.chart, self.degree, lambda x: self.fn(x) - other.fn(x), self.batch)

    def __neg__(self) -> "KForm":
        return KForm(self.chart, self.degree, lambda x: -self.fn(x), self.batch, self.exact)

    def scaled(self, c: float) -> "KForm":
        return KForm(self.chart, self.degree, lambda x: self.fn(x) * c, self.batch, self.exact)


@frozen(eq=False)
class KVector:
    """A k-vector field, stored like KForm. Bivectors usually carry a dense closure."""

    chart: Chart
    degree: int
    fn: FieldFn
    dense_fn: Optional[FieldFn] = None

    def __call__(self, x: Point) -> Any:
        return self.fn(x)

    def dense(self, x: Point) -> Any:
        if self.dense_fn is not None:
            return self.dense_fn(x)
        return expand(self.fn(x), self.chart.dim, self.degree)

    def __add__(self, other: "KVector") -> "KVector":
        return kvector_from_dense(
            self.chart, self.degree, lambda x: self.dense(x) + other.dense(x)
        )

    def __sub__(self, other: "KVector") -> "KVector":
        return kvector_from_dense(
            self.chart, self.degree, lambda x: self.dense(x) - other.dense(x)
        )


@frozen(eq=False)
class SmoothMap:
    source: Chart
    target: Chart
    fn: FieldFn

    def __call__(self, x: Point) -> Any:
        return self.fn(x)


class PointMemo:
    """Bounded LRU of a field closure's values, keyed on the point and its derivative seeds.

    Shared by the suite worker threads. Cached outputs must not be mutated in place.
    """

    def __init__(self, fn: FieldFn, maxsize: int = MEMO_SIZE) -> None:
        self.fn = fn
        self.maxsize = maxsize
        self.hits = 0
        self.misses = 0
        self._store: OrderedDict[tuple[Any, ...], Any] = OrderedDict()
        self._lock = threading.Lock()

    def __call__(self, x: Point) -> Any:
        key = _point_key(x)
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self.hits += 1
                return self._store[key]
        out = self.fn(x)
        with self._lock:
            self.misses += 1
            self._store[key] = out
            if len(self._store) > self.maxsize:
                self._store.popitem(last=False)
        return out


def memoized(fn: FieldFn) -> FieldFn:
    return fn if isinstance(fn, PointMemo) else PointMemo(fn)


def _point_key(x: Point) -> tuple[Any, ...]:
    # derivative settings change what fields built on jacobian() return
    settings = (config.derivative_mode, config.fd_step)
    if isinstance(x, Dual):
        hess = b"" if x.hess is None else x.hess.tobytes()
        return (*settings, x.order, x.grad.shape, x.val.tobytes(), x.grad.tobytes(), hess)
    xv = np.asarray(x, dtype=float)
    return (*settings, 0, xv.shape, xv.tobytes())


def _same_degree(a: KForm, b: KForm) -> None:
    if a.degree != b.degree:
        raise DegreeError(f"cannot add forms of degree {a.degree} and {b.degree}")


# Multi-index tables


@lru_cache(maxsize=None)
def index_combos(n: int, k: int) -> np.ndarray:
    combos = list(combinations(range(n), k))
    return np.array(combos, dtype=int).reshape(len(combos), k)


@lru_cache(maxsize=None)
def _combo_lookup(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {tuple(int(i) for i in c): pos for pos, c in enumerate(index_combos(n, k))}


def _permutation_sign(seq: Sequence[int]) -> int:
    sign = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@lru_cache(maxsize=None)
def _expansion_tensor(n: int, k: int) -> np.ndarray:
    """E[c, i1..ik] = sign when (i1..ik) permutes combo c."""
    combos = index_combos(n, k)
    tensor = np.zeros((len(combos),) + (n,) * k)
    for pos, c in enumerate(combos):
        for perm in _permutations(k):
            idx = tuple(int(c[p]) for p in perm)
            tensor[(pos,) + idx] = _permutation_sign(perm)
    return tensor


@lru_cache(maxsize=None)
def _permutations(k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(permutations(range(k)))


@lru_cache(maxsize=None)
def _flat_positions(n: int, k: int) -> np.ndarray:
    """Positions of the increasing multi-indices inside a flattened (n,)*k tensor."""
    combos = index_combos(n, k)
    if k == 0:
        return np.zeros(1, dtype=int)
    return np.ravel_multi_index(tuple(combos.T), (n,) * k)


@lru_cache(maxsize=None)
def _d_table(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """For d of a k-form: flattened (component, direction) picks and signs per (k+1)-combo."""
    lookup = _combo_lookup(n, k)
    out = index_combos(n, k + 1)
    picks = np.zeros((len(out), k + 1), dtype=int)
    signs = np.zeros((len(out), k + 1))
    for pos, c in enumerate(out):
        for j in range(k + 1):
            rest = tuple(int(i) for i in c[:j]) + tuple(int(i) for i in c[j + 1 :])
            picks[pos, j] = lookup[rest] * n + int(c[j])
            signs[pos, j] = (-1.0) ** j
    return picks, signs


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lookup_p = _combo_lookup(n, p)
    lookup_q = _combo_lookup(n, q)
    out = index_combos(n, p + q)
    splits = list(combinations(range(p + q), p))
    a_idx = np.zeros((len(out), len(splits)), dtype=int)
    b_idx = np.zeros((len(out), len(splits)), dtype=int)
    signs = np.zeros((len(out), len(splits)))
    for pos, c in enumerate(out):
        for s, chosen in enumerate(splits):
            rest = [j for j in range(p + q) if j not in chosen]
            a_idx[pos, s] = lookup_p[tuple(int(c[j]) for j in chosen)]
            b_idx[pos, s] = lookup_q[tuple(int(c[j]) for j in rest)]
            signs[pos, s] = _permutation_sign(list(chosen) + rest)
    return a_idx, b_idx, signs


def expand(components: Any, n: int, k: int) -> Any:
    """Components on increasing multi-indices -> dense antisymmetric tensor (leading batch kept)."""
    if k == 0:
        return total(components, axis=-1)
    letters = _LETTERS[:k]
    return einsum(f"...z,z{letters}->...{letters}", components, _expansion_tensor(n, k))


def compress(tensor: Any, n: int, k: int) -> Any:
    """Dense antisymmetric tensor -> components on increasing multi-indices."""
    shape = value(tensor).shape
    batch = shape[: len(shape) - k]
    flat = reshape(tensor, batch + (n**k,))
    return take(flat, _flat_positions(n, k), axis=len(batch))


def kvector_from_dense(chart: Chart, degree: int, dense_fn: FieldFn) -> KVector:
    n = chart.dim
    return KVector(chart, degree, lambda x: compress(dense_fn(x), n, degree), dense_fn)


def kform_from_dense(
    chart: Chart, degree: int, dense_fn: FieldFn, batch: tuple[int, ...] = ()
) -> KForm:
    n = chart.dim
    return KForm(
        chart, degree, lambda x: compress(dense_fn(x), n, degree), batch, dense_fn=dense_fn
    )


def zero_form(chart: Chart, degree: int, batch: tuple[int, ...] = ()) -> KForm:
    size = comb(chart.dim, degree)
    return KForm(
        chart, degree, lambda x: np.zeros(batch + (size,)), batch, degenerate=degree > chart.dim
    )


# Derivatives


def jacobian(fn: FieldFn, x: Point, chart: Chart) -> Any:
    """Derivative of ``fn`` at ``x``: result has shape ``fn(x).shape + (dim,)``.

    Forward-mode at one order above the point, so a Dual point of order 1 yields a
    Dual Jacobian that still carries first derivatives. Falls back to central
    differences for second-order points or when the derivative mode is "fd".
    """
    order = order_of(x)
    if config.derivative_mode == "dual" and order < 2:
        seed = Dual.variable(value(x), order=order + 1)
        raw = fn(seed)
        out = _seeded_output(raw, x)
        if out is None:
            return np.zeros(np.shape(raw) + (chart.dim,))
        if order == 0:
            return out.grad
        if out.order < 2:
            return central_difference(fn, x, chart)
        return Dual(out.grad, einsum("...m,mY->...Y", out.hess, x.grad))
    return central_difference(fn, x, chart)


def _seeded_output(out: Any, x: Point) -> Optional[Dual]:
    """Dual output of a seeded field, ``None`` for a constant field.

    Object arrays (numpy constructors fed with Duals) are lifted through ``stack``.
    """
    if isinstance(out, Dual):
        return out
    if isinstance(out, (list, tuple)):
        lifted = stack(out)
        return lifted if isinstance(lifted, Dual) else None
    arr = out if isinstance(out, np.ndarray) else np.asarray(out, dtype=object)
    if arr.dtype != object:
        return None
    items = list(arr.ravel())
    if any(isinstance(item, Dual) for item in items):
        return stack(items).reshape(arr.shape)
    if all(np.isscalar(item) for item in items):
        return None
    raise DerivativeError(
        "field output carries no derivative of the seeded point; "
        "build arrays with dual.stack rather than numpy constructors",
        x,
    )


def central_difference(fn: FieldFn, x: Point, chart: Chart) -> Any:
    steps = config.fd_step * chart.widths
    columns = []
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = steps[i]
        columns.append((fn(x + e) - fn(x - e)) * (0.5 / steps[i]))
    return stack(columns, axis=-1)


def derivative_agreement(fn: FieldFn, chart: Chart, points: np.ndarray) -> float:
    """Relative gap between forward-mode and finite-difference first derivatives."""
    worst = 0.0
    for x in points:
        with config.override(derivative_mode="dual"):
            ad = value(jacobian(fn, x, chart))
        with config.override(derivative_mode="fd"):
            fd = value(jacobian(fn, x, chart))
        worst = max(worst, float(np.max(np.abs(ad - fd)) / max(1.0, np.max(np.abs(ad)))))
    return worst


def coordinate_form(chart: Chart, i: int) -> KForm:
    e = np.zeros(chart.dim)
    e[i] = 1.0
    return KForm(chart, 1, lambda x: e)


def differential(f: ScalarField) -> KForm:
    chart = f.chart
    return KForm(chart, 1, lambda x: jacobian(f.fn, x, chart), exact=True)


def exterior_derivative(form: KForm) -> KForm:
    chart = form.chart
    n, k = chart.dim, form.degree
    if k + 1 > n:
        logger.debug(f"d of a {k}-form on a {n}-dimensional chart is zero")
        return zero_form(chart, k + 1, form.batch)
    picks, signs = _d_table(n, k)
    size = comb(n, k)
    axis = len(form.batch)

    def fn(x: Point) -> Any:
        jac = jacobian(form.fn, x, chart)
        flat = reshape(jac, form.batch + (size * n,))
        return total(take(flat, picks, axis=axis) * signs, axis=-1)

    return KForm(chart, k + 1, fn, form.batch, exact=True)


def wedge(a: KForm, b: KForm) -> KForm:
    chart = a.chart
    n, p, q = chart.dim, a.degree, b.degree
    if p + q > n:
        return zero_form(chart, p + q, _batch_of(a, b))
    a_idx, b_idx, signs = _wedge_table(n, p, q)

    def fn(x: Point) -> Any:
        left = take(a.fn(x), a_idx, axis=len(a.batch))
        right = take(b.fn(x), b_idx, axis=len(b.batch))
        return total(left * right * signs, axis=-1)

    return KForm(chart, p + q, fn, _batch_of(a, b))


def _batch_of(a: KForm, b: KForm) -> tuple[int, ...]:
    return tuple(np.broadcast_shapes(a.batch, b.batch))


def sum_batch(form: KForm) -> KForm:
    """Sum a Lie algebra valued form over its first batch axis (the pairing with a dual basis)."""
    return KForm(
        form.chart, form.degree, lambda x: total(form.fn(x), axis=0), form.batch[1:], form.exact
    )


def pair(weights: KForm, form: KForm) -> KForm:
    """Pointwise contraction <weights, form> over the Lie algebra index (weights of degree 0)."""
    return sum_batch(wedge(weights, form))


def interior(X: VectorField, form: KForm) -> KForm:
    chart = form.chart
    n, k = chart.dim, form.degree
    if k < 1:
        raise DegreeError("interior product of a 0-form")
    rest = _LETTERS[1:k]

    def fn(x: Point) -> Any:
        contracted = einsum(f"...a{rest},a->...{rest}", form.dense(x), X.fn(x))
        if k == 1:
            return stack([contracted], axis=-1)
        return compress(contracted, n, k - 1)

    return KForm(chart, k - 1, fn, form.batch)


def evaluate_form(form: KForm, vectors: Sequence[Any], x: Point) -> Any:
    """ω(v1, ..., vk) at x for component vectors given at x."""
    k = form.degree
    if len(vectors) != k:
        raise DegreeError(f"{k}-form evaluated on {len(vectors)} vectors")
    letters = _LETTERS[:k]
    subs = ",".join(letters)
    return einsum(f"...{letters},{subs}->...", form.dense(x), *vectors)


def pullback(F: SmoothMap, form: KForm) -> KForm:
    source = F.source
    n, k = source.dim, form.degree
    if k == 0:
        return KForm(source, 0, lambda x: form.fn(F.fn(x)), form.batch)
    targets = _LETTERS[:k]
    sources = _LETTERS[12 : 12 + k]
    jac_subs = ",".join(f"{t}{s}" for t, s in zip(targets, sources))
    subscripts = f"...{targets},{jac_subs}->...{sources}"

    def fn(x: Point) -> Any:
        jac = jacobian(F.fn, x, source)
        dense = einsum(subscripts, form.dense(F.fn(x)), *([jac] * k))
        return compress(dense, n, k)

    return KForm(source, k, fn, form.batch)


def compose(F: SmoothMap, G: SmoothMap) -> SmoothMap:
    """G after F."""
    return SmoothMap(F.source, G.target, lambda x: G.fn(F.fn(x)))


def transported_bivector(F: SmoothMap, pi: KVector) -> Callable[[Point], Any]:
    """x -> (TF π)(F(x)) as a dense matrix, i.e. JF P(x) JF^T."""

    def dense(x: Point) -> Any:
        jac = jacobian(F.fn, x, F.source)
        return einsum("ai,ij,bj->ab", jac, pi.dense(x), jac)

    return dense


def pushed_vector(F: SmoothMap, X: VectorField) -> Callable[[Point], Any]:
    def vec(x: Point) -> Any:
        return einsum("ai,i->a", jacobian(F.fn, x, F.source), X.fn(x))

    return vec


# Brackets and Lie derivatives


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    chart = X.chart

    def fn(x: Point) -> Any:
        dX = jacobian(X.fn, x, chart)
        dY = jacobian(Y.fn, x, chart)
        return einsum("l,cl->c", X.fn(x), dY) - einsum("l,cl->c", Y.fn(x), dX)

    return VectorField(chart, fn)


def frame_brackets(frame: Frame) -> Callable[[Point], Any]:
    """x -> B[a, b, c], the c-component of [F_a, F_b] for every pair of frame rows."""
    chart = frame.chart

    def fn(x: Point) -> Any:
        F = frame.fn(x)
        dF = jacobian(frame.fn, x, chart)
        flow = einsum("al,bcl->abc", F, dF)
        return flow - einsum("abc->bac", flow)

    return fn


def lie_derivative_form(X: VectorField, form: KForm) -> KForm:
    """Cartan: L_X ω = i_X dω + d i_X ω."""
    if form.degree == 0:
        chart = form.chart

        def along(x: Point) -> Any:
            return einsum("...ci,i->...c", jacobian(form.fn, x, chart), X.fn(x))

        return KForm(chart, 0, along, form.batch)
    first = interior(X, exterior_derivative(form))
    second = exterior_derivative(interior(X, form))
    return first + second


def lie_derivative_bivector(X: VectorField, pi: KVector) -> Callable[[Point], Any]:
    """x -> dense (L_X π)^{ij} = X^l ∂_l π^{ij} - π^{lj} ∂_l X^i - π^{il} ∂_l X^j."""
    chart = pi.chart

    def fn(x: Point) -> Any:
        P = pi.dense(x)
        dP = jacobian(pi.dense, x, chart)
        dX = jacobian(X.fn, x, chart)
        return (
            einsum("ijl,l->ij", dP, X.fn(x))
            - einsum("lj,il->ij", P, dX)
            - einsum("il,jl->ij", P, dX)
        )

    return fn


# Bivectors


def sharp(pi: KVector, alpha: KForm) -> VectorField:
    """(π♯α)^j = α_i π^{ij}, so that β(π♯α) = π(α, β)."""
    return VectorField(pi.chart, lambda x: einsum("i,ij->j", alpha.fn(x), pi.dense(x)))


def sharp_three_form(pi: KVector, phi: KForm) -> KVector:
    """π♯φ(α, β, γ) = -φ(π♯α, π♯β, π♯γ)."""
    n = pi.chart.dim

    def dense(x: Point) -> Any:
        P = pi.dense(x)
        return -einsum("ijk,ai,bj,ck->abc", phi.dense(x), P, P, P)

    return KVector(pi.chart, 3, lambda x: compress(dense(x), n, 3), dense)


def _cyclic(t: Any) -> Any:
    return t + einsum("bca->abc", t) + einsum("cab->abc", t)


def jacobiator(pi: KVector) -> KVector:
    """½[π, π] as a 3-vector: cyclic sum of π^{il} ∂_l π^{jk}."""
    chart = pi.chart
    n = chart.dim

    def dense(x: Point) -> Any:
        P = pi.dense(x)
        dP = jacobian(pi.dense, x, chart)
        flow = einsum("il,jkl->ijk", P, dP)
        return flow + einsum("kij->ijk", flow) + einsum("jki->ijk", flow)

    return KVector(chart, 3, lambda x: compress(dense(x), n, 3), dense)


def jacobiator_cyclic(pi: KVector) -> KVector:
    """Jacobiator on coordinate functions through brackets of Hamiltonian fields.

    On (x^a, x^b, x^c) sums, cyclically, dx^c(π♯ d{x^a, x^b}) + dx^c([π♯dx^a, π♯dx^b]).
    Independent of :func:`jacobiator`, it is used as a cross-check.
    """
    chart = pi.chart
    n = chart.dim
    hamiltonian_frame = Frame(chart, n, pi.dense)
    brackets = frame_brackets(hamiltonian_frame)

    def dense(x: Point) -> Any:
        P = pi.dense(x)
        d_bracket = jacobian(pi.dense, x, chart)
        along = einsum("abl,lc->abc", d_bracket, P)
        return _cyclic(along + brackets(x))

    return KVector(chart, 3, lambda x: compress(dense(x), n, 3), dense)


def antisymmetry_defect(pi: KVector, x: Point) -> float:
    P = value(pi.dense(x))
    return float(np.max(np.abs(P + P.T))) if P.size else 0.0


def canonical_bivector(chart: Chart, pairs: Sequence[tuple[int, int]]) -> KVector:
    """Sum of ∂_i ∧ ∂_j over the given index pairs."""
    P = np.zeros((chart.dim, chart.dim))
    for i, j in pairs:
        P[i, j] += 1.0
        P[j, i] -= 1.0
    return kvector_from_dense(chart, 2, lambda x: P)
