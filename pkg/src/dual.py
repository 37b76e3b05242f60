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

from collections.abc import Iterator, Sequence
from typing import Any, Optional, Union

import numpy as np

_DERIV_LETTERS = ("Y", "Z")


class Dual:
    """Array of values carrying first (and optionally second) derivatives.

    Derivatives are taken w.r.t. ``n`` seed variables: ``grad`` has shape
    ``val.shape + (n,)`` and ``hess`` has shape ``val.shape + (n, n)``. Only the
    leading (value) axes may be indexed; the derivative axes always trail.
    """

    __slots__ = ("val", "grad", "hess")

    # Make numpy defer to our reflected operators instead of building object arrays
    __array_ufunc__ = None

    def __init__(self, val: Any, grad: Any, hess: Any = None) -> None:
        self.val = np.asarray(val, dtype=float)
        self.grad = np.asarray(grad, dtype=float)
        self.hess = None if hess is None else np.asarray(hess, dtype=float)

    @classmethod
    def variable(cls, x: Any, order: int = 1) -> "Dual":
        """Seed a coordinate vector: d x_i / d x_j = delta_ij."""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        hess = np.zeros((n, n, n)) if order >= 2 else None
        return cls(x, np.eye(n), hess)

    @classmethod
    def constant(cls, c: Any, nvars: int, order: int) -> "Dual":
        c = np.asarray(c, dtype=float)
        hess = np.zeros(c.shape + (nvars, nvars)) if order >= 2 else None
        return cls(c, np.zeros(c.shape + (nvars,)), hess)

    @property
    def order(self) -> int:
        return 1 if self.hess is None else 2

    @property
    def nvars(self) -> int:
        return int(self.grad.shape[-1])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.val.shape)

    @property
    def ndim(self) -> int:
        return self.val.ndim

    def __len__(self) -> int:
        return int(self.val.shape[0])

    def __iter__(self) -> Iterator["Dual"]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, key: Any) -> "Dual":
        hess = None if self.hess is None else self.hess[key]
        return Dual(self.val[key], self.grad[key], hess)

    def __repr__(self) -> str:
        return f"Dual(val={self.val!r}, order={self.order})"

    def lowered(self) -> "Dual":
        """Reinterpret as the Dual of the gradient (drops one derivative order)."""
        if self.hess is None:
            raise ValueError("Error: cannot lower a first-order Dual")
        return Dual(self.grad, self.hess)

    def truncated(self, order: int) -> "Dual":
        if order >= self.order:
            return self
        return Dual(self.val, self.grad)

    # Arithmetic

    def __neg__(self) -> "Dual":
        hess = None if self.hess is None else -self.hess
        return Dual(-self.val, -self.grad, hess)

    def __pos__(self) -> "Dual":
        return self

    def __add__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            a, b = _match_order(self, other)
            hess = None if a.hess is None else a.hess + b.hess
            return Dual(a.val + b.val, a.grad + b.grad, hess)
        c = np.asarray(other, dtype=float)
        val = self.val + c
        grad = np.broadcast_to(self.grad, val.shape + (self.nvars,))
        hess = (
            None
            if self.hess is None
            else np.broadcast_to(self.hess, val.shape + (self.nvars, self.nvars))
        )
        return Dual(val, grad, hess)

    def __radd__(self, other: Any) -> "Dual":
        return self.__add__(other)

    def __sub__(self, other: Any) -> "Dual":
        return self.__add__(-other)

    def __rsub__(self, other: Any) -> "Dual":
        return (-self).__add__(other)

    def __mul__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            a, b = _match_order(self, other)
            av, bv = a.val[..., None], b.val[..., None]
            grad = a.grad * bv + av * b.grad
            hess = None
            if a.hess is not None and b.hess is not None:
                hess = (
                    a.hess * bv[..., None]
                    + av[..., None] * b.hess
                    + a.grad[..., :, None] * b.grad[..., None, :]
                    + b.grad[..., :, None] * a.grad[..., None, :]
                )
            return Dual(a.val * b.val, grad, hess)
        c = np.asarray(other, dtype=float)
        hess = None if self.hess is None else self.hess * c[..., None, None]
        return Dual(self.val * c, self.grad * c[..., None], hess)

    def __rmul__(self, other: Any) -> "Dual":
        return self.__mul__(other)

    def __truediv__(self, other: Any) -> "Dual":
        if isinstance(other, Dual):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other: Any) -> "Dual":
        return reciprocal(self) * other

    def __pow__(self, power: float) -> "Dual":
        v = self.val
        p = float(power)
        if p == 2.0:
            return self * self
        return _unary(
            self, v**p, p * v ** (p - 1.0), p * (p - 1.0) * v ** (p - 2.0)
        )

    # Shape plumbing

    def sum(self, axis: Optional[int] = None) -> "Dual":
        if axis is None:
            axes = tuple(range(self.ndim))
        else:
            axes = (axis % self.ndim,)
        hess = None if self.hess is None else self.hess.sum(axis=axes)
        return Dual(self.val.sum(axis=axes), self.grad.sum(axis=axes), hess)

    def reshape(self, shape: tuple[int, ...]) -> "Dual":
        n = self.nvars
        hess = None if self.hess is None else self.hess.reshape(shape + (n, n))
        return Dual(self.val.reshape(shape), self.grad.reshape(shape + (n,)), hess)

    def take(self, indices: Any, axis: int) -> "Dual":
        axis = axis % self.ndim
        hess = None if self.hess is None else np.take(self.hess, indices, axis=axis)
        return Dual(
            np.take(self.val, indices, axis=axis),
            np.take(self.grad, indices, axis=axis),
            hess,
        )

    @property
    def T(self) -> "Dual":
        return einsum("ij->ji", self)


Scalar = Union[float, np.ndarray, Dual]
ArrayLike = Union[np.ndarray, Dual]


def _match_order(a: Dual, b: Dual) -> tuple[Dual, Dual]:
    if a.order == b.order:
        return a, b
    order = min(a.order, b.order)
    return a.truncated(order), b.truncated(order)


def _unary(a: Dual, f: Any, f1: Any, f2: Any) -> Dual:
    f1 = np.asarray(f1, dtype=float)
    grad = f1[..., None] * a.grad
    hess = None
    if a.hess is not None:
        f2 = np.asarray(f2, dtype=float)
        hess = f1[..., None, None] * a.hess + f2[..., None, None] * (
            a.grad[..., :, None] * a.grad[..., None, :]
        )
    return Dual(f, grad, hess)


def is_dual(x: Any) -> bool:
    return isinstance(x, Dual)


def value(x: Any) -> np.ndarray:
    """Strip derivative information."""
    if isinstance(x, Dual):
        return x.val
    return np.asarray(x, dtype=float)


def order_of(x: Any) -> int:
    return x.order if isinstance(x, Dual) else 0


# Elementary functions


def reciprocal(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        return _unary(x, 1.0 / v, -1.0 / v**2, 2.0 / v**3)
    return 1.0 / np.asarray(x, dtype=float)


def sin(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        return _unary(x, np.sin(v), np.cos(v), -np.sin(v))
    return np.sin(x)


def cos(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        return _unary(x, np.cos(v), -np.sin(v), -np.cos(v))
    return np.cos(x)


def tan(x: Any) -> Any:
    if isinstance(x, Dual):
        t = np.tan(x.val)
        sec2 = 1.0 + t**2
        return _unary(x, t, sec2, 2.0 * t * sec2)
    return np.tan(x)


def sqrt(x: Any) -> Any:
    if isinstance(x, Dual):
        s = np.sqrt(x.val)
        return _unary(x, s, 0.5 / s, -0.25 / (s * x.val))
    return np.sqrt(x)


def exp(x: Any) -> Any:
    if isinstance(x, Dual):
        e = np.exp(x.val)
        return _unary(x, e, e, e)
    return np.exp(x)


def log(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        return _unary(x, np.log(v), 1.0 / v, -1.0 / v**2)
    return np.log(x)


def arctan(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        d = 1.0 / (1.0 + v**2)
        return _unary(x, np.arctan(v), d, -2.0 * v * d**2)
    return np.arctan(x)


def arccos(x: Any) -> Any:
    if isinstance(x, Dual):
        v = x.val
        w = 1.0 - v**2
        return _unary(x, np.arccos(v), -1.0 / np.sqrt(w), -v / w**1.5)
    return np.arccos(x)


def arctan2(y: Any, x: Any) -> Any:
    """Two-argument arctangent, rotated so the derivative is an ordinary arctan."""
    if not (isinstance(y, Dual) or isinstance(x, Dual)):
        return np.arctan2(y, x)
    theta0 = np.arctan2(value(y), value(x))
    c, s = np.cos(theta0), np.sin(theta0)
    along = x * c + y * s
    across = y * c - x * s
    return arctan(across / along) + theta0


# Array constructors


def _as_dual(item: Any, nvars: int, order: int) -> Dual:
    if isinstance(item, Dual):
        return item.truncated(order)
    return Dual.constant(item, nvars, order)


def _dual_params(items: Sequence[Any]) -> Optional[tuple[int, int]]:
    duals = [it for it in items if isinstance(it, Dual)]
    if not duals:
        return None
    return duals[0].nvars, min(d.order for d in duals)


def stack(items: Sequence[Any], axis: int = 0) -> Any:
    params = _dual_params(items)
    if params is None:
        return np.stack([np.asarray(it, dtype=float) for it in items], axis=axis)
    nvars, order = params
    duals = [_as_dual(it, nvars, order) for it in items]
    shape = np.broadcast_shapes(*[d.shape for d in duals])
    axis = axis % (len(shape) + 1)
    vals = [np.broadcast_to(d.val, shape) for d in duals]
    grads = [np.broadcast_to(d.grad, shape + (nvars,)) for d in duals]
    hess = None
    if order >= 2:
        hess = np.stack(
            [np.broadcast_to(d.hess, shape + (nvars, nvars)) for d in duals],  # type: ignore
            axis=axis,
        )
    return Dual(np.stack(vals, axis=axis), np.stack(grads, axis=axis), hess)


def concatenate(items: Sequence[Any], axis: int = 0) -> Any:
    params = _dual_params(items)
    if params is None:
        return np.concatenate([np.asarray(it, dtype=float) for it in items], axis=axis)
    nvars, order = params
    duals = [_as_dual(it, nvars, order) for it in items]
    axis = axis % duals[0].ndim
    hess = None
    if order >= 2:
        hess = np.concatenate([d.hess for d in duals], axis=axis)  # type: ignore
    return Dual(
        np.concatenate([d.val for d in duals], axis=axis),
        np.concatenate([d.grad for d in duals], axis=axis),
        hess,
    )


def reshape(x: Any, shape: tuple[int, ...]) -> Any:
    if isinstance(x, Dual):
        return x.reshape(shape)
    return np.reshape(x, shape)


def take(x: Any, indices: Any, axis: int) -> Any:
    if isinstance(x, Dual):
        return x.take(indices, axis)
    return np.take(x, indices, axis=axis)


def total(x: Any, axis: Optional[int] = None) -> Any:
    if isinstance(x, Dual):
        return x.sum(axis)
    return np.sum(x, axis=axis)


# einsum with product-rule propagation


def _tokens(sub: str) -> list[str]:
    sub = sub.replace("...", "#")
    return list(sub)


def _join(tokens: list[str]) -> str:
    return "".join(tokens).replace("#", "...")


def _einsum2(sa: str, sb: str, out: str, a: Any, b: Any) -> Any:
    y, z = _DERIV_LETTERS
    a_dual, b_dual = isinstance(a, Dual), isinstance(b, Dual)
    if not a_dual and not b_dual:
        return np.einsum(f"{sa},{sb}->{out}", a, b)
    if a_dual and b_dual:
        a, b = _match_order(a, b)
    if a_dual and not b_dual:
        val = np.einsum(f"{sa},{sb}->{out}", a.val, b)
        grad = np.einsum(f"{sa}{y},{sb}->{out}{y}", a.grad, b)
        hess = None
        if a.hess is not None:
            hess = np.einsum(f"{sa}{y}{z},{sb}->{out}{y}{z}", a.hess, b)
        return Dual(val, grad, hess)
    if b_dual and not a_dual:
        val = np.einsum(f"{sa},{sb}->{out}", a, b.val)
        grad = np.einsum(f"{sa},{sb}{y}->{out}{y}", a, b.grad)
        hess = None
        if b.hess is not None:
            hess = np.einsum(f"{sa},{sb}{y}{z}->{out}{y}{z}", a, b.hess)
        return Dual(val, grad, hess)
    val = np.einsum(f"{sa},{sb}->{out}", a.val, b.val)
    grad = np.einsum(f"{sa}{y},{sb}->{out}{y}", a.grad, b.val) + np.einsum(
        f"{sa},{sb}{y}->{out}{y}", a.val, b.grad
    )
    hess = None
    if a.hess is not None and b.hess is not None:
        hess = (
            np.einsum(f"{sa}{y}{z},{sb}->{out}{y}{z}", a.hess, b.val)
            + np.einsum(f"{sa},{sb}{y}{z}->{out}{y}{z}", a.val, b.hess)
            + np.einsum(f"{sa}{y},{sb}{z}->{out}{y}{z}", a.grad, b.grad)
            + np.einsum(f"{sa}{z},{sb}{y}->{out}{y}{z}", a.grad, b.grad)
        )
    return Dual(val, grad, hess)


def _einsum1(sa: str, out: str, a: Any) -> Any:
    if not isinstance(a, Dual):
        return np.einsum(f"{sa}->{out}", a)
    y, z = _DERIV_LETTERS
    hess = None
    if a.hess is not None:
        hess = np.einsum(f"{sa}{y}{z}->{out}{y}{z}", a.hess)
    return Dual(
        np.einsum(f"{sa}->{out}", a.val),
        np.einsum(f"{sa}{y}->{out}{y}", a.grad),
        hess,
    )


def einsum(subscripts: str, *operands: Any) -> Any:
    """``numpy.einsum`` for mixtures of arrays and Duals (lowercase letters only).

    Multi-operand contractions are folded left to right, keeping only the indices
    still needed by later operands or the output.
    """
    inputs, out = subscripts.replace(" ", "").split("->")
    subs = [_tokens(s) for s in inputs.split(",")]
    out_tokens = _tokens(out)
    if len(subs) != len(operands):
        raise ValueError(f"Error: einsum expects {len(subs)} operands")
    if len(subs) == 1:
        return _einsum1(_join(subs[0]), _join(out_tokens), operands[0])

    current, current_tokens = operands[0], subs[0]
    for pos in range(1, len(subs)):
        nxt, nxt_tokens = operands[pos], subs[pos]
        if pos == len(subs) - 1:
            keep = out_tokens
        else:
            later = set(out_tokens)
            for s in subs[pos + 1 :]:
                later.update(s)
            keep = []
            for t in current_tokens + nxt_tokens:
                if t in keep:
                    continue
                if t == "#" or t in later:
                    keep.append(t)
            if "#" in keep:
                keep.remove("#")
                keep.insert(0, "#")
        current = _einsum2(
            _join(current_tokens), _join(nxt_tokens), _join(keep), current, nxt
        )
        current_tokens = keep
    return current
