"""Numeric evaluation of indexed expressions at random points of jet space.

Field values and their partial derivatives are independent coordinates.
Even coordinates are real numbers; every odd coordinate is a real number
times its own Grassmann generator, so products of ghosts are faithful
up to the degree cap.

Evaluation is batched over trials.  Each monomial is contracted with
``numpy.einsum``; the index axes of odd factors are kept open so the
generator attached to every entry is known, and the entries are then
sorted into Grassmann basis elements with the shuffle sign.
"""
from __future__ import annotations

import itertools
import string
import zlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

from .symbolic.core import ADJOINT, LORENTZ, Expression, Factor, L, total_derivative
from .symbolic.reduce import NO_CONSTRAINTS, ConstraintSet

MAX_ORDER = 3
DEGREE_CAP = 6
ETA = np.diag([1.0, -1.0, -1.0, -1.0])
_LETTERS = string.ascii_letters[1:]    # "a" is the batch axis
_GEN_STRIDE = 10 ** 6


class JetError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Lie algebra data

@dataclass(frozen=True)
class GroupData:
    name: str
    dim: int
    f: np.ndarray

    @classmethod
    def su2(cls) -> "GroupData":
        f = np.zeros((3, 3, 3))
        for (a, b, c), s in _levi_civita3():
            f[a, b, c] = s
        return cls._checked("su2", f)

    @classmethod
    def su3(cls) -> "GroupData":
        f = np.zeros((8, 8, 8))
        h = np.sqrt(3.0) / 2
        table = {(1, 2, 3): 1.0, (1, 4, 7): 0.5, (2, 4, 6): 0.5, (2, 5, 7): 0.5,
                 (3, 4, 5): 0.5, (1, 5, 6): -0.5, (3, 6, 7): -0.5, (4, 5, 8): h, (6, 7, 8): h}
        for (a, b, c), v in table.items():
            for perm, s in _levi_civita3():
                idx = (a, b, c)
                f[tuple(idx[k] - 1 for k in perm)] = s * v
        return cls._checked("su3", f)

    @classmethod
    def by_name(cls, name: str) -> "GroupData":
        return _group_cache(name)

    @classmethod
    def _checked(cls, name, f):
        if not np.array_equal(f, -np.swapaxes(f, 0, 1)) or not np.array_equal(f, -np.swapaxes(f, 1, 2)):
            raise JetError(f"{name}: structure constants are not antisymmetric")
        if jacobi_defect(f) > 1e-15:
            raise JetError(f"{name}: Jacobi identity violated")
        return cls(name, f.shape[0], f)


def _levi_civita3():
    for perm in itertools.permutations(range(3)):
        inv = sum(perm[i] > perm[j] for i in range(3) for j in range(i + 1, 3))
        yield perm, (-1.0) ** inv


def jacobi_defect(f: np.ndarray) -> float:
    """max |f_bcd f_dae + f_cad f_dbe + f_abd f_dce| over all index values."""
    t = np.einsum("bcd,dae->abce", f, f)
    s = t + np.einsum("abce->bcae", t) + np.einsum("abce->cabe", t)
    return float(np.max(np.abs(s)))


@lru_cache(maxsize=None)
def _group_cache(name):
    if name == "su2":
        return GroupData.su2()
    if name == "su3":
        return GroupData.su3()
    raise JetError(f"unknown group {name!r}")


# ---------------------------------------------------------------------------
# Grassmann values

def _merge_sign(a, b):
    """Sign of sorting the concatenation of two sorted disjoint tuples."""
    inv = 0
    for x in a:
        for y in b:
            if x > y:
                inv += 1
    return -1 if inv % 2 else 1


class GrassmannValue:
    """Sparse map from sorted generator tuples to complex coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {tuple(k): complex(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def scalar(cls, x) -> "GrassmannValue":
        return cls({(): x})

    @classmethod
    def generator(cls, gen: int, coeff=1.0) -> "GrassmannValue":
        return cls({(gen,): coeff})

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return GrassmannValue(out)

    def __sub__(self, other):
        return self + other * -1.0

    def __mul__(self, other):
        if not isinstance(other, GrassmannValue):
            return GrassmannValue({k: v * other for k, v in self.terms.items()})
        out = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                if set(ka) & set(kb):
                    continue
                if len(ka) + len(kb) > DEGREE_CAP:
                    raise JetError("Grassmann degree cap exceeded")
                key = tuple(sorted(ka + kb))
                out[key] = out.get(key, 0) + _merge_sign(ka, kb) * va * vb
        return GrassmannValue(out)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return max((abs(v) for v in self.terms.values()), default=0.0)

    def close(self, other, tol=1e-12) -> bool:
        return (self - other).max_abs() <= tol

    def __repr__(self):
        return f"GrassmannValue({self.terms!r})"


# ---------------------------------------------------------------------------
# jet points

def _sorted_tuples(order):
    return list(itertools.combinations_with_replacement(range(4), order))


@lru_cache(maxsize=None)
def _deriv_code(order):
    """Map from full derivative multi-index to the position of its sorted tuple."""
    pos = {t: n for n, t in enumerate(_sorted_tuples(order))}
    full = np.zeros((4,) * order, dtype=np.int64) if order else np.zeros((), dtype=np.int64)
    for idx in itertools.product(range(4), repeat=order):
        full[idx] = pos[tuple(sorted(idx))]
    return full


_DERIV_OFFSET = [sum(len(_sorted_tuples(k)) for k in range(o)) for o in range(MAX_ORDER + 2)]


def _draw(rng, shape):
    """Uniform on [-1, 1] with |x| >= 0.05."""
    u = rng.uniform(0.05, 1.0, size=shape)
    s = rng.integers(0, 2, size=shape) * 2 - 1
    return u * s


def _crc(text: str) -> int:
    return zlib.crc32(text.encode())


class JetPoint:
    """A batch of jet-space points (one per trial), sampled lazily.

    Coordinates for ``(symbol, n_lorentz, n_adjoint, order)`` are stored as
    arrays of shape ``(trials, 4.., dim.., n_sorted_derivative_tuples)``.
    """

    def __init__(self, seed: int, group: GroupData, trials=(0,),
                 constraints: ConstraintSet = NO_CONSTRAINTS):
        self.seed = int(seed)
        self.group = group
        self.trials = tuple(int(t) for t in trials)
        self.constraints = constraints
        self._raw = {}
        self._full = {}
        self._couplings = {}
        if constraints:
            self._solve_constraints()

    @property
    def size(self):
        return len(self.trials)

    def coupling(self, name: str) -> np.ndarray:
        if name not in self._couplings:
            vals = [_draw(np.random.default_rng([self.seed, t, _crc("coupling:" + name)]), ())
                    for t in self.trials]
            self._couplings[name] = np.array(vals, dtype=float)
        return self._couplings[name]

    def raw(self, symbol, nl, na, order) -> np.ndarray:
        if order > MAX_ORDER:
            raise JetError(f"derivative order {order} exceeds the jet cap {MAX_ORDER}")
        key = (symbol, nl, na, order)
        if key not in self._raw:
            shape = (4,) * nl + (self.group.dim,) * na + (len(_sorted_tuples(order)),)
            tag = _crc(f"{symbol}/{nl},{na}")
            vals = [_draw(np.random.default_rng([self.seed, t, tag, order]), shape)
                    for t in self.trials]
            self._raw[key] = np.stack(vals)
        return self._raw[key]

    def full(self, symbol, nl, na, order) -> np.ndarray:
        """Coordinates with explicit (symmetric) derivative axes."""
        key = (symbol, nl, na, order)
        if key not in self._full:
            self._full[key] = np.take(self.raw(*key), _deriv_code(order), axis=-1)
        return self._full[key]

    def _set(self, key, value_index, values):
        arr = self.raw(*key).copy()
        arr[value_index] = values
        self._raw[key] = arr
        self._full = {k: v for k, v in self._full.items() if k != key}

    def generator_offset(self, symbol, nl, na) -> int:
        """Base id of the generators of an odd field; ids are disjoint across fields."""
        n_slot = 4 ** nl * self.group.dim ** na
        if n_slot * _DERIV_OFFSET[MAX_ORDER + 1] >= _GEN_STRIDE:
            raise JetError(f"too many jet coordinates for odd field {symbol}")
        return (_crc(f"{symbol}/{nl},{na}") % 100003) * _GEN_STRIDE

    # constraints ------------------------------------------------------
    def _solve_constraints(self):
        for con in self.constraints.constraints:
            arity = _designated_arity(con)
            self._solve_one(con.expr, con.designated, arity, (), order=1)
            for k in range(1, self.constraints.closure_order + 1):
                if k > 1:
                    raise JetError("constraint closure beyond first derivatives is not supported")
                for lam in range(4):
                    d = total_derivative(con.expr, L(str(lam)))
                    self._solve_one(d, con.designated, arity, (lam,), order=2)
        for con in self.constraints.constraints:
            r = evaluate_batch(con.expr, self)
            if r.max_abs() > 1e-12:
                raise JetError(f"constraint {con.name} not satisfied after solving")

    def _solve_one(self, expr, symbol, arity, extra, order):
        nl, na = arity
        key = (symbol, nl, na, order)
        tup = tuple(sorted((0,) + extra))
        code = _sorted_tuples(order).index(tup)
        lorentz0 = (0,) * nl
        idx = (slice(None),) + lorentz0 + (slice(None),) * na + (code,)
        zero = np.zeros((self.size,) + (self.group.dim,) * na)
        self._set(key, idx, zero)
        b = evaluate_batch(expr, self).scalar_part()
        self._set(key, idx, zero + 1.0)
        a = evaluate_batch(expr, self).scalar_part() - b
        if np.min(np.abs(a)) < 1e-9:
            raise JetError("constraint is not linear in its designated coordinate")
        x = -b / a
        if np.max(np.abs(x.imag)) > 1e-12:
            raise JetError("complex solution for a real jet coordinate")
        self._set(key, idx, x.real.reshape((self.size,) + (self.group.dim,) * na))


def _designated_arity(con):
    for (_, _, fs) in con.expr.terms:
        for f in fs:
            if f.symbol == con.designated:
                nl = sum(ix.kind == LORENTZ for ix in f.slots)
                return nl, len(f.slots) - nl
    raise JetError(f"designated field {con.designated} absent from constraint {con.name}")


def sample_jet_point(seed: int, group: GroupData, constraints: ConstraintSet = NO_CONSTRAINTS,
                     trials=(0,)) -> JetPoint:
    return JetPoint(seed, group, trials, constraints)


# ---------------------------------------------------------------------------
# evaluation

class BatchValue:
    """Grassmann-valued arrays: basis key -> array of shape (trials, free axes...)."""

    def __init__(self, parts: dict, free_names: tuple, size: int):
        self.parts = parts
        self.free_names = free_names
        self.size = size

    def scalar_part(self) -> np.ndarray:
        v = self.parts.get(())
        if v is None:
            return np.zeros(self.size, dtype=complex)
        return v

    def max_abs(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.parts.values()), default=0.0)

    def per_trial_max(self) -> np.ndarray:
        out = np.zeros(self.size)
        for v in self.parts.values():
            out = np.maximum(out, np.abs(v).reshape(self.size, -1).max(axis=1))
        return out

    def at(self, trial: int = 0, free=()) -> GrassmannValue:
        idx = (trial,) + tuple(free)
        return GrassmannValue({k: v[idx] for k, v in self.parts.items()})


def _free_order(expr: Expression):
    return tuple(sorted((ix.kind, ix.name, ix.up) for ix in expr.free))


def _tensor_value(fac: Factor, group: GroupData):
    if fac.symbol == "f":
        return group.f
    if fac.symbol == "delta":
        return np.eye(group.dim)
    p, q = fac.slots
    return np.eye(4) if p.up != q.up else ETA


def _component(ix):
    return int(ix.name) - (1 if ix.kind == ADJOINT else 0)


def _coefficient(key, coeff, point: JetPoint) -> np.ndarray:
    ip, cp, _ = key
    c = np.full(point.size, complex(float(coeff), 0.0))
    if ip:
        c = c * 1j
    for sym, p in cp:
        base = point.coupling(sym).astype(complex)
        c = c * base ** float(p)
    return c


def _monomial(key, coeff, point: JetPoint, free_order):
    """Evaluate one monomial; returns a list of (generator array (N,k), values (B,F..,N))."""
    _, _, fs = key
    group = point.group
    letters = {}

    def letter(ix):
        k = (ix.kind, ix.name)
        if k not in letters:
            if len(letters) >= len(_LETTERS):
                raise JetError("too many distinct indices in one monomial")
            letters[k] = _LETTERS[len(letters)]
        return letters[k]

    operands, subs = [], []
    odd_facs = []
    for fac in fs:
        if fac.is_tensor:
            arr = _tensor_value(fac, group)
            axes = list(fac.slots)
            batch = False
        else:
            nl = sum(ix.kind == LORENTZ for ix in fac.slots)
            na = len(fac.slots) - nl
            arr = point.full(fac.symbol, nl, na, len(fac.derivs))
            axes = list(fac.slots) + list(fac.derivs)
            batch = True
        # slice explicit components (from the last axis so positions stay valid)
        sl = [slice(None)] * arr.ndim
        off = 1 if batch else 0
        keep = []
        for k, ix in enumerate(axes):
            if ix.explicit:
                sl[k + off] = _component(ix)
            else:
                keep.append(ix)
        arr = arr[tuple(sl)]
        sub = ("a" if batch else "") + "".join(letter(ix) for ix in keep)
        operands.append(arr)
        subs.append(sub)
        if fac.odd:
            odd_facs.append((fac, keep, nl, na))
    if len(odd_facs) > DEGREE_CAP:
        raise JetError(f"monomial of Grassmann degree {len(odd_facs)} exceeds the cap")
    free_letters = "".join(letters[(k, n)] for (k, n, _) in free_order)
    odd_letters = []
    for fac, keep, _, _ in odd_facs:
        for ix in keep:
            l = letters[(ix.kind, ix.name)]
            if l not in odd_letters and l not in free_letters:
                odd_letters.append(l)
    out = "a" + free_letters + "".join(odd_letters)
    coeff_arr = _coefficient(key, coeff, point)
    operands.append(coeff_arr)
    subs.append("a")
    val = _contract(",".join(subs) + "->" + out, operands)
    if not odd_facs:
        return [(np.zeros((1, 0), dtype=np.int64), val[..., None])]
    # generator id of every odd factor on the grid of open axes
    dims = {}
    for l, s in zip(out, val.shape):
        dims[l] = s
    grid_letters = free_letters + "".join(odd_letters)
    grid_shape = tuple(dims[l] for l in grid_letters)
    gens = []
    for fac, keep, nl, na in odd_facs:
        base = point.generator_offset(fac.symbol, nl, na)
        order = len(fac.derivs)
        slots_all = list(fac.slots)
        # slot code: mixed radix over the factor's own slots
        code = np.zeros(grid_shape, dtype=np.int64)
        radix = 1
        for ix in reversed(slots_all):
            n = 4 if ix.kind == LORENTZ else group.dim
            comp = _axis_values(ix, letters, grid_letters, grid_shape)
            code = code + comp * radix
            radix *= n
        dcode = np.zeros(grid_shape, dtype=np.int64)
        if order:
            comps = [_axis_values(ix, letters, grid_letters, grid_shape) for ix in fac.derivs]
            dcode = _deriv_code(order)[tuple(comps)]
        dcode = dcode + _DERIV_OFFSET[order]
        gens.append(base + code * _DERIV_OFFSET[MAX_ORDER + 1] + dcode)
    nf = len(free_letters)
    free_shape = val.shape[1:1 + nf]
    n_open = int(np.prod(val.shape[1 + nf:], dtype=np.int64))
    G = np.stack([g.reshape(free_shape + (n_open,)) for g in gens], axis=-1)
    vals = val.reshape(val.shape[0], *free_shape, n_open)
    # the generators do not depend on free axes except through odd factors
    # carrying free indices; handle each free component separately if needed
    if nf and any(l in free_letters for fac, keep, _, _ in odd_facs
                  for l in (letters[(ix.kind, ix.name)] for ix in keep)):
        return _split_free(G, vals, free_shape)
    G0 = G.reshape(-1, n_open, len(gens))[0]
    return [_grassmann_sort(G0, vals)]


_PATHS = {}


def _contract(spec, operands):
    """einsum with a cached greedy path; intermediates may exceed the inputs."""
    key = (spec, tuple(o.shape for o in operands))
    path = _PATHS.get(key)
    if path is None:
        path = np.einsum_path(spec, *operands, optimize=("greedy", 2 ** 24))[0]
        _PATHS[key] = path
    return np.einsum(spec, *operands, optimize=path)


def _split_free(G, vals, free_shape):
    out = []
    B = vals.shape[0]
    for fidx in itertools.product(*(range(s) for s in free_shape)):
        g = G[fidx]
        v = np.zeros_like(vals)
        v[(slice(None),) + fidx] = vals[(slice(None),) + fidx]
        out.append(_grassmann_sort(g, v))
    del B
    return out


def _axis_values(ix, letters, grid_letters, grid_shape):
    if ix.explicit:
        return np.full(grid_shape, _component(ix), dtype=np.int64)
    l = letters[(ix.kind, ix.name)]
    pos = grid_letters.index(l)
    shape = [1] * len(grid_shape)
    shape[pos] = grid_shape[pos]
    return np.broadcast_to(np.arange(grid_shape[pos]).reshape(shape), grid_shape)


def _grassmann_sort(G, vals):
    """Sort generator rows, fold signs, drop repeated generators."""
    order = np.argsort(G, axis=1, kind="stable")
    Gs = np.take_along_axis(G, order, axis=1)
    k = G.shape[1]
    inv = np.zeros(G.shape[0], dtype=np.int64)
    for x in range(k):
        for y in range(x + 1, k):
            inv += order[:, x] > order[:, y]
    sign = np.where(inv % 2, -1.0, 1.0)
    if k > 1:
        dup = np.any(Gs[:, 1:] == Gs[:, :-1], axis=1)
        sign[dup] = 0.0
    return Gs, vals * sign


def evaluate_batch(expr: Expression, point: JetPoint, with_scale: bool = False):
    """Evaluate at every trial of ``point``; free indices become trailing axes."""
    free_order = _free_order(expr)
    pieces = {}
    scale = np.zeros(point.size)
    for key, coeff in expr.terms.items():
        for G, vals in _monomial(key, coeff, point, free_order):
            k = G.shape[1]
            pieces.setdefault(k, []).append((G, vals))
            if with_scale:
                scale = np.maximum(scale, np.abs(vals).reshape(point.size, -1).max(axis=1))
    parts = {}
    for k, plist in pieces.items():
        Gall = np.concatenate([g for g, _ in plist], axis=0)
        Vall = np.concatenate([v for _, v in plist], axis=-1)
        if k == 0:
            parts[()] = Vall.sum(axis=-1)
            continue
        keys, inverse = np.unique(Gall, axis=0, return_inverse=True)
        inverse = np.asarray(inverse).reshape(-1)
        S = sparse.csr_matrix((np.ones(len(inverse)), (np.arange(len(inverse)), inverse)),
                              shape=(len(inverse), len(keys)))
        flat = Vall.reshape(-1, Vall.shape[-1])
        summed = np.asarray((S.T @ flat.T).T)
        summed = summed.reshape(Vall.shape[:-1] + (len(keys),))
        for n, row in enumerate(keys):
            parts[tuple(int(x) for x in row)] = summed[..., n]
    names = tuple(n for (_, n, _) in free_order)
    bv = BatchValue(parts, names, point.size)
    return (bv, scale) if with_scale else bv


def evaluate(expr: Expression, point: JetPoint, free=()) -> GrassmannValue:
    """Value at the first trial of ``point`` for explicit free-index components.

    ``free`` lists components in the order of the sorted free indices
    (adjoint components are 1-based like in the expression language).
    """
    bv = evaluate_batch(expr, point)
    order = _free_order(expr)
    comps = tuple(int(c) - (1 if k == ADJOINT else 0) for (k, _, _), c in zip(order, free))
    return bv.at(0, comps)


# ---------------------------------------------------------------------------
# identity checks

@dataclass
class ResidualReport:
    group: str
    trials: int
    seed: int
    tol: float
    max_residual: float
    mean_residual: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol

    def to_dict(self):
        return {"group": self.group, "trials": self.trials, "seed": self.seed,
                "max_residual": float(f"{self.max_residual:.6e}"),
                "mean_residual": float(f"{self.mean_residual:.6e}"),
                "tol": self.tol, "passed": self.passed}


def numeric_identity_check(expr: Expression, group: GroupData, trials: int = 100, seed: int = 0,
                           tol: float = 1e-10, constraints: ConstraintSet = NO_CONSTRAINTS,
                           chunk: int = 25) -> ResidualReport:
    """Normalized residual max|expr| / max|monomial| over random jet points."""
    res = []
    for start in range(0, trials, chunk):
        pt = JetPoint(seed, group, range(start, min(trials, start + chunk)), constraints)
        bv, scale = evaluate_batch(expr, pt, with_scale=True)
        num = bv.per_trial_max()
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(scale > 0, num / np.where(scale > 0, scale, 1.0), 0.0)
        res.append(r)
    r = np.concatenate(res) if res else np.zeros(0)
    return ResidualReport(group.name, trials, seed, tol,
                          float(r.max()) if r.size else 0.0, float(r.mean()) if r.size else 0.0)
