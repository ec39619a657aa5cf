"""A small reverse-mode autodiff tensor on top of numpy.

Only what the networks in this package need: affine maps, valid 1-D
convolution, tanh, reshape, gathers along an axis, sum/product reductions and
a few elementwise ops for losses. Shapes must match exactly except for the
leading batch dimensions of ``affine`` and scalar operands.
"""
from __future__ import annotations

import contextlib
import struct
from typing import Callable, Iterable, Sequence

import numpy as np

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: str = ""):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            arr = np.asarray(data)
            dtype = arr.dtype if np.issubdtype(arr.dtype, np.floating) else DEFAULT_DTYPE
        self.data = np.array(data, dtype=dtype, copy=True) if not isinstance(data, np.ndarray) \
            else np.asarray(data, dtype=dtype, order="C")
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def _accumulate(self, g: np.ndarray):
        g = np.asarray(g, dtype=self.data.dtype)
        if g.shape != self.data.shape:
            raise ShapeError(f"gradient shape {g.shape} != tensor shape {self.data.shape}")
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self, grad=None):
        """Backpropagate from this tensor; scalar tensors default to a unit seed."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)

        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))

        # gradients of interior nodes live only for the duration of the sweep
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=self.dtype)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            for parent, pg in node._backward(g):
                if parent is None or not parent.requires_grad or pg is None:
                    continue
                if parent._backward is None:
                    parent._accumulate(pg)
                elif id(parent) in grads:
                    grads[id(parent)] = grads[id(parent)] + pg
                else:
                    grads[id(parent)] = pg

    # elementwise arithmetic ------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_as_tensor(other, self.dtype)))

    def __rsub__(self, other):
        return add(_as_tensor(other, self.dtype), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__


def _as_tensor(x, dtype=None) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x, dtype=dtype)


def _node(data: np.ndarray, parents: Sequence[Tensor], backward) -> Tensor:
    out = Tensor(data, dtype=data.dtype)
    if any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _check_same(a: Tensor, b: Tensor):
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def _unscalar(g: np.ndarray, t: Tensor) -> np.ndarray:
    return g if g.shape == t.shape else np.asarray(g.sum()).reshape(t.shape)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b, a.dtype if isinstance(a, Tensor) else None)
    _check_same(a, b)
    return _node(a.data + b.data, (a, b), lambda g: ((a, _unscalar(g, a)), (b, _unscalar(g, b))))


def neg(a: Tensor) -> Tensor:
    return _node(-a.data, (a,), lambda g: ((a, -g),))


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b, a.dtype if isinstance(a, Tensor) else None)
    _check_same(a, b)
    return _node(
        a.data * b.data,
        (a, b),
        lambda g: ((a, _unscalar(g * b.data, a)), (b, _unscalar(g * a.data, b))),
    )


def abs_(a: Tensor) -> Tensor:
    return _node(np.abs(a.data), (a,), lambda g: ((a, g * np.sign(a.data)),))


def square_sum(a: Tensor) -> Tensor:
    return _node(np.asarray(np.sum(a.data * a.data)), (a,), lambda g: ((a, 2.0 * g * a.data),))


def tanh_act(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    return _node(y, (x,), lambda g: ((x, g * (1.0 - y * y)),))


def affine(x: Tensor, W: Tensor, b: Tensor | None = None) -> Tensor:
    """``x @ W + b`` over the last axis of ``x``; leading axes are batch axes."""
    if W.ndim != 2 or x.shape[-1] != W.shape[0]:
        raise ShapeError(f"affine: x {x.shape} incompatible with W {W.shape}")
    if b is not None and b.shape != (W.shape[1],):
        raise ShapeError(f"affine: bias {b.shape} != ({W.shape[1]},)")
    # one 2-D GEMM; numpy's batched matmul path is far slower for small rows
    x2 = x.data.reshape(-1, W.shape[0])
    y = x2 @ W.data
    if b is not None:
        y += b.data
    y = y.reshape(x.shape[:-1] + (W.shape[1],))

    def backward(g):
        g2 = g.reshape(-1, W.shape[1])
        out = [(x, (g2 @ W.data.T).reshape(x.shape)), (W, x2.T @ g2)]
        if b is not None:
            out.append((b, g2.sum(axis=0)))
        return out

    return _node(y, (x, W) + ((b,) if b is not None else ()), backward)


def conv1d_valid(x: Tensor, kernels: Tensor, b: Tensor | None = None) -> Tensor:
    """Valid cross-correlation along axis -2.

    x: ``(..., L, c_in)``, kernels: ``(k, c_in, c_out)``, result ``(..., L-k+1, c_out)``.
    """
    k, c_in, c_out = kernels.shape
    L = x.shape[-2]
    if x.shape[-1] != c_in:
        raise ShapeError(f"conv1d: input channels {x.shape[-1]} != {c_in}")
    if L < k:
        raise ShapeError(f"conv1d: length {L} shorter than kernel {k}")
    Lo = L - k + 1
    # windows[..., t, s, :] = x[..., t + s, :]
    windows = np.stack([x.data[..., s:s + Lo, :] for s in range(k)], axis=-2)
    kmat = kernels.data.reshape(k * c_in, c_out)
    flat = windows.reshape(windows.shape[:-2] + (k * c_in,))
    flat2 = flat.reshape(-1, k * c_in)
    y = flat2 @ kmat
    if b is not None:
        y += b.data
    y = y.reshape(flat.shape[:-1] + (c_out,))

    def backward(g):
        g2 = g.reshape(-1, c_out)
        gk = (flat2.T @ g2).reshape(k, c_in, c_out)
        gw = (g2 @ kmat.T).reshape(g.shape[:-1] + (k, c_in))
        gx = np.zeros_like(x.data)
        for s in range(k):
            gx[..., s:s + Lo, :] += gw[..., s, :]
        out = [(x, gx), (kernels, gk)]
        if b is not None:
            out.append((b, g2.sum(axis=0)))
        return out

    return _node(y, (x, kernels) + ((b,) if b is not None else ()), backward)


def _axis(x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise ShapeError(f"invalid axis {axis} for shape {x.shape}")
    return axis % x.ndim


def reduce_sum(x: Tensor, axis: int | None = None) -> Tensor:
    if axis is None:
        return _node(np.asarray(x.data.sum()), (x,), lambda g: ((x, np.broadcast_to(g, x.shape)),))
    ax = _axis(x, axis)
    y = x.data.sum(axis=ax)
    return _node(y, (x,), lambda g: ((x, np.broadcast_to(np.expand_dims(g, ax), x.shape)),))


def mean(x: Tensor, axis: int | None = None) -> Tensor:
    n = x.size if axis is None else x.shape[_axis(x, axis)]
    return mul(reduce_sum(x, axis), np.asarray(1.0 / n, dtype=x.dtype))


class MultiplicationCounter:
    """Tally of scalar multiplications performed by ``reduce_prod`` forwards."""

    def __init__(self):
        self.count = 0


_active_counters: list[MultiplicationCounter] = []


@contextlib.contextmanager
def count_multiplications():
    c = MultiplicationCounter()
    _active_counters.append(c)
    try:
        yield c
    finally:
        _active_counters.remove(c)


def reduce_prod(x: Tensor, axis: int) -> Tensor:
    """Product along ``axis``.

    The gradient uses leave-one-out products from prefix/suffix scans so that
    zero entries are handled exactly.
    """
    ax = _axis(x, axis)
    n = x.shape[ax]
    xm = np.moveaxis(x.data, ax, 0)
    acc = xm[0].copy()
    for j in range(1, n):
        acc = acc * xm[j]
        for c in _active_counters:
            c.count += acc.size

    def backward(g):
        ones = np.ones((1,) + xm.shape[1:], dtype=xm.dtype)
        prefix = np.concatenate([ones, np.cumprod(xm[:-1], axis=0)], axis=0)
        suffix = np.concatenate([np.cumprod(xm[:0:-1], axis=0)[::-1], ones], axis=0)
        gx = prefix * suffix * g[None]
        return ((x, np.moveaxis(gx, 0, ax)),)

    return _node(acc, (x,), backward)


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        y = x.data.reshape(shape)
    except ValueError as e:
        raise ShapeError(f"cannot reshape {x.shape} to {shape}") from e
    return _node(y, (x,), lambda g: ((x, g.reshape(x.shape)),))


def take(x: Tensor, index, axis: int = 0) -> Tensor:
    """Gather along ``axis`` with an integer index array of any shape.

    The index dimensions replace ``axis``; the backward pass scatter-adds, so
    repeated indices accumulate.
    """
    ax = _axis(x, axis)
    idx = np.asarray(index, dtype=np.intp)
    n = x.shape[ax]
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ShapeError(f"index out of range for axis of length {n}")
    y = np.take(x.data, idx, axis=ax)

    def backward(g):
        gx = np.zeros_like(x.data)
        gm = np.moveaxis(gx, ax, 0)
        # g axes: x[:ax] + idx.shape + x[ax+1:]; bring idx axes to the front
        src = np.moveaxis(g, list(range(ax, ax + idx.ndim)), list(range(idx.ndim)))
        np.add.at(gm, idx, src)
        return ((x, gx),)

    return _node(y, (x,), backward)


def gather_rows(x: Tensor, index) -> Tensor:
    return take(x, index, axis=0)


def parameters_grad_check(f: Callable, params: Sequence[Tensor], eps: float = 1e-6) -> float:
    """``grad_check`` over several tensors at once; ``f`` takes no arguments."""
    return grad_check(lambda _: f(), list(params), eps)


def grad_check(f: Callable, x, eps: float = 1e-6) -> float:
    """Worst relative error between reverse-mode and central-difference gradients.

    ``x`` is a tensor or a list of tensors; ``f(x)`` must return a scalar
    tensor. Relative error uses ``max(|a|, |b|, 1e-8)`` as denominator.
    """
    xs = [x] if isinstance(x, Tensor) else list(x)
    for t in xs:
        if t.dtype != np.float64:
            raise TypeError("grad_check requires float64 tensors")
        t.requires_grad = True
        t.grad = None
    f(x).backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in xs]

    worst = 0.0
    for t, a in zip(xs, analytic):
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            hi, lo = orig + eps, orig - eps
            flat[i] = hi
            fp = f(x).item()
            flat[i] = lo
            fm = f(x).item()
            flat[i] = orig
            num = (fp - fm) / (hi - lo)  # realised step, not the nominal one
            ai = a.reshape(-1)[i]
            err = abs(ai - num) / max(abs(ai), abs(num), 1e-8)
            worst = max(worst, err)
    for t in xs:
        t.grad = None
    return worst


# checkpoint files -------------------------------------------------------------
_MAGIC = b"GINVCKPT"
_VERSION = 1
_DTYPES = {np.dtype("<f4"): b"f", np.dtype("<f8"): b"d"}
_CODES = {v: k for k, v in _DTYPES.items()}


def save_checkpoint(path, arrays: dict) -> None:
    """Write named arrays as ``(name, shape, little-endian values)`` records."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<II", _VERSION, len(arrays)))
        for name, arr in arrays.items():
            arr = arr.data if isinstance(arr, Tensor) else np.asarray(arr)
            dt = arr.dtype.newbyteorder("<")
            if dt not in _DTYPES:
                raise TypeError(f"unsupported dtype {arr.dtype} for {name}")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)) + raw + _DTYPES[dt])
            fh.write(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype=dt).tobytes())


def load_checkpoint(path) -> dict[str, np.ndarray]:
    out = {}
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        for _ in range(count):
            (ln,) = struct.unpack("<H", fh.read(2))
            name = fh.read(ln).decode("utf-8")
            dt = _CODES[fh.read(1)]
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            nbytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
            out[name] = np.frombuffer(fh.read(nbytes), dtype=dt).reshape(shape).copy()
    return out


def iter_leaves(tensors: Iterable[Tensor]):
    for t in tensors:
        if t.requires_grad and t._backward is None:
            yield t
