"""Node weight functions, impact vectors and capped path lengths."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

FAMILIES = ("linear", "convex", "concave", "step", "table")
DEFAULT_X_MAX = 1e9
TAU_CMP = 1e-9


@dataclass(frozen=True)
class WeightFunction:
    """Monotone non-decreasing map from impact amount to node weight.

    ``linear``  f0 + c*x
    ``convex``  f0 + c*x**2
    ``concave`` f0 + c*log(1 + x)
    ``step``    f0 + c*floor(x)
    ``table``   breakpoints ``xs``/``ys`` (``xs[0] == 0``), interpolated
                linearly or held piecewise-constant (``mode="step"``) and
                flat after the last breakpoint.
    """

    family: str
    c: float = 1.0
    f0: float = 0.0
    xs: tuple[float, ...] = ()
    ys: tuple[float, ...] = ()
    mode: str = "linear"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown weight family {self.family!r}")
        if self.family == "table":
            if len(self.xs) != len(self.ys) or not self.xs:
                raise ValueError("table needs equally long, nonempty xs and ys")
            if self.xs[0] != 0:
                raise ValueError("table breakpoints must start at x=0")
            if any(b <= a for a, b in zip(self.xs, self.xs[1:])):
                raise ValueError("table xs must be strictly increasing")
            if any(b < a for a, b in zip(self.ys, self.ys[1:])):
                raise ValueError("table ys must be non-decreasing")
            if self.ys[0] < 0:
                raise ValueError("table values must be nonnegative")
            if self.mode not in ("linear", "step"):
                raise ValueError("table mode must be 'linear' or 'step'")
            object.__setattr__(self, "f0", float(self.ys[0]))
        else:
            if not self.c > 0:
                raise ValueError("coefficient c must be positive")
            if self.f0 < 0:
                raise ValueError("offset f0 must be nonnegative")

    # -- evaluation -------------------------------------------------------

    def __call__(self, x: float) -> float:
        if x < 0:
            raise ValueError(f"impact must be nonnegative, got {x}")
        fam = self.family
        if fam == "linear":
            return self.f0 + self.c * x
        if fam == "convex":
            return self.f0 + self.c * x * x
        if fam == "concave":
            return self.f0 + self.c * math.log1p(x)
        if fam == "step":
            return self.f0 + self.c * math.floor(x)
        xs, ys = self.xs, self.ys
        i = bisect_right(xs, x) - 1
        if self.mode == "step" or i == len(xs) - 1:
            return ys[i]
        t = (x - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + t * (ys[i + 1] - ys[i])

    def values(self, x: np.ndarray) -> np.ndarray:
        """Vectorised evaluation (no sign check)."""
        fam = self.family
        if fam == "linear":
            return self.f0 + self.c * x
        if fam == "convex":
            return self.f0 + self.c * x * x
        if fam == "concave":
            return self.f0 + self.c * np.log1p(x)
        if fam == "step":
            return self.f0 + self.c * np.floor(x)
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        if self.mode == "linear":
            return np.interp(x, xs, ys)
        return ys[np.searchsorted(xs, x, side="right") - 1]

    def reach(self, y: float) -> float:
        """Smallest ``x >= 0`` with ``f(x) >= y``; ``inf`` if never reached."""
        if y <= self.f0:
            return 0.0
        fam = self.family
        z = y - self.f0
        if fam == "linear":
            x = z / self.c
        elif fam == "convex":
            x = math.sqrt(z / self.c)
        elif fam == "concave":
            try:
                x = math.expm1(z / self.c)
            except OverflowError:
                return math.inf
        elif fam == "step":
            k = math.ceil(z / self.c)
            if k > 0 and self(k - 1) >= y:
                k -= 1
            return float(k)
        else:
            xs, ys = self.xs, self.ys
            j = bisect_left(ys, y)
            if j == len(ys):
                return math.inf
            if self.mode == "step" or j == 0:
                return float(xs[j])
            t = (y - ys[j - 1]) / (ys[j] - ys[j - 1])
            x = xs[j - 1] + t * (xs[j] - xs[j - 1])
        if math.isinf(x):
            return x
        # closed forms can land one ulp short of the target
        for _ in range(8):
            if self(x) >= y:
                break
            x = math.nextafter(x, math.inf)
        return x

    def slope(self, x: float) -> float:
        """Right derivative at ``x`` (zero on flat or step pieces)."""
        fam = self.family
        if fam == "linear":
            return self.c
        if fam == "convex":
            return 2.0 * self.c * x
        if fam == "concave":
            return self.c / (1.0 + x)
        if fam == "step" or self.mode == "step":
            return 0.0
        xs, ys = self.xs, self.ys
        i = bisect_right(xs, x) - 1
        if i >= len(xs) - 1:
            return 0.0
        return (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])

    def kinks(self, lo: float, hi: float) -> list[float]:
        """Points in ``(lo, hi]`` where f is not smooth."""
        if self.family == "step":
            first = math.floor(lo) + 1
            last = math.floor(hi)
            if last - first > 10_000_000:
                raise ValueError("step search range too large")
            return [float(k) for k in range(first, last + 1)]
        if self.family == "table":
            i = bisect_right(self.xs, lo)
            j = bisect_right(self.xs, hi)
            return [float(v) for v in self.xs[i:j]]
        return []

    def max_slope(self, T: float, x_max: float = DEFAULT_X_MAX) -> float | None:
        """Largest derivative over ``{x : f(x) <= T}``; None if not differentiable."""
        if self.family == "linear":
            return self.c
        if self.family == "convex":
            return 2.0 * self.c * self.x_cap(T, x_max)
        if self.family == "concave":
            return self.c
        return None

    @property
    def differentiable(self) -> bool:
        return self.family in ("linear", "convex", "concave")

    @property
    def shape(self) -> str:
        """``concave`` (incl. linear), ``convex`` or ``piecewise``."""
        if self.family in ("linear", "concave"):
            return "concave"
        if self.family == "convex":
            return "convex"
        return "piecewise"

    @property
    def integral_levels(self) -> bool:
        """True for staircase functions whose jumps sit on integers."""
        if self.family == "step":
            return True
        return (self.family == "table" and self.mode == "step"
                and all(float(v).is_integer() for v in self.xs))

    def x_cap(self, T: float, x_max: float = DEFAULT_X_MAX) -> float:
        return min(self.reach(T), x_max)

    def __str__(self):
        if self.family == "table":
            return f"table[{len(self.xs)}:{self.mode}]"
        return f"{self.family}:{self.c:g}:{self.f0:g}"


def evaluate(f: WeightFunction, x: float) -> float:
    return f(x)


def x_cap(f: WeightFunction, T: float, x_max_cfg: float = DEFAULT_X_MAX) -> float:
    """Smallest impact at which ``f`` reaches ``T``, bounded by ``x_max_cfg``."""
    if T <= 0:
        raise ValueError("T must be positive")
    return f.x_cap(T, x_max_cfg)


def from_lattice(b: Sequence[float]) -> WeightFunction:
    """Continuous extension ``f(x) = b[floor(x)]`` of an integer-lattice weight.

    Values beyond the last entry stay at ``b[-1]``.
    """
    return WeightFunction("table", xs=tuple(float(i) for i in range(len(b))),
                          ys=tuple(float(v) for v in b), mode="step")


def parse_function_spec(text: str) -> WeightFunction:
    """Parse ``family:c[:f0]`` or ``table:FILE[:linear|step]``."""
    parts = text.strip().split(":")
    family = parts[0].lower()
    if family == "table":
        if len(parts) < 2:
            raise ValueError("table spec needs a file: table:FILE[:mode]")
        mode = parts[2] if len(parts) > 2 else "linear"
        return read_table(parts[1], mode)
    if family not in FAMILIES or not 2 <= len(parts) <= 3:
        raise ValueError(f"bad function spec {text!r}; expected family:c[:f0]")
    c = float(parts[1])
    f0 = float(parts[2]) if len(parts) == 3 else 0.0
    return WeightFunction(family, c, f0)


def read_table(path: str, mode: str = "linear") -> WeightFunction:
    xs, ys = [], []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.replace(",", " ").split()[:2]
            xs.append(float(a))
            ys.append(float(b))
    return WeightFunction("table", xs=tuple(xs), ys=tuple(ys), mode=mode)


def as_function_list(fs, n: int) -> list[WeightFunction]:
    """Accept one shared function or a per-node sequence."""
    if isinstance(fs, WeightFunction):
        return [fs] * n
    fs = list(fs)
    if len(fs) != n:
        raise ValueError(f"expected {n} weight functions, got {len(fs)}")
    return fs


def node_weights(fs: Sequence[WeightFunction], x: Sequence[float]) -> list[float]:
    """Per-node weight ``f_v(x_v)``."""
    first = fs[0]
    if all(f is first for f in fs):
        return first.values(np.asarray(x, dtype=float)).tolist()
    return [f(v) for f, v in zip(fs, x)]


# ---------------------------------------------------------------------------
# impact vectors


class ImpactVector:
    """Dense nonnegative impact per node; ``norm`` is the entry sum.

    ``<=``/``>=``/``<``/``>`` are the entrywise partial order.
    """

    __slots__ = ("_v",)

    def __init__(self, values: Iterable[float]):
        arr = np.array(values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("impact vector must be one-dimensional")
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise ValueError("impact entries must be nonnegative")
        arr.setflags(write=False)
        self._v = arr

    @classmethod
    def zeros(cls, n: int) -> "ImpactVector":
        return cls(np.zeros(n))

    @classmethod
    def point(cls, n: int, v: int, amount: float) -> "ImpactVector":
        arr = np.zeros(n)
        arr[v] = amount
        return cls(arr)

    @classmethod
    def uniform(cls, n: int, sigma: float) -> "ImpactVector":
        return cls(np.full(n, float(sigma)))

    @property
    def values(self) -> np.ndarray:
        return self._v

    def norm(self) -> float:
        return math.fsum(self._v.tolist())

    def tolist(self) -> list[float]:
        return self._v.tolist()

    def __len__(self):
        return len(self._v)

    def __getitem__(self, i):
        return float(self._v[i])

    def __iter__(self):
        return iter(self._v.tolist())

    def _check(self, other: "ImpactVector") -> np.ndarray:
        o = other._v if isinstance(other, ImpactVector) else np.asarray(other, dtype=float)
        if o.shape != self._v.shape:
            raise ValueError(f"length mismatch: {len(self._v)} vs {len(o)}")
        return o

    def __add__(self, other) -> "ImpactVector":
        return ImpactVector(self._v + self._check(other))

    def minus(self, other) -> "ImpactVector":
        """Entrywise ``max(x - y, 0)``."""
        return ImpactVector(np.maximum(self._v - self._check(other), 0.0))

    def __le__(self, other):
        return bool(np.all(self._v <= self._check(other)))

    def __ge__(self, other):
        return bool(np.all(self._v >= self._check(other)))

    def __lt__(self, other):
        return bool(np.all(self._v < self._check(other)))

    def __gt__(self, other):
        return bool(np.all(self._v > self._check(other)))

    def __eq__(self, other):
        if not isinstance(other, ImpactVector):
            return NotImplemented
        return self._v.shape == other._v.shape and bool(np.all(self._v == other._v))

    __hash__ = None

    def __repr__(self):
        return f"ImpactVector({self._v.tolist()!r})"


def vec_add(x: ImpactVector, y: ImpactVector) -> ImpactVector:
    return x + y


def vec_minus(x: ImpactVector, y: ImpactVector) -> ImpactVector:
    return x.minus(y)


def _entries(x) -> Sequence[float]:
    return x.values if isinstance(x, ImpactVector) else x


def _per_node(fs, n: int):
    return [fs] * n if isinstance(fs, WeightFunction) else fs


def path_length(p: Sequence[int], x, fs, T: float) -> float:
    """Capped length ``min(sum of f_v(x_v) over p, T)``; ``fs`` may be one
    shared function or one per node."""
    xv = _entries(x)
    fs = _per_node(fs, len(xv))
    return min(math.fsum(fs[v](float(xv[v])) for v in p), T)


def marginal_gain(P: Sequence[Sequence[int]], w, v: int, x: float,
                  fs, T: float) -> float:
    """Total capped-length increase over ``P`` from adding ``x`` at node ``v``."""
    if x < 0:
        raise ValueError("amount must be nonnegative")
    wv = _entries(w)
    fs = _per_node(fs, len(wv))
    f = fs[v]
    base = float(wv[v])
    delta = f(base + x) - f(base)
    total = 0.0
    for p in P:
        if v not in p:
            continue
        before = math.fsum(fs[u](float(wv[u])) for u in p)
        total += min(before + delta, T) - min(before, T)
    return total


def reaches(length: float, target: float, tau: float = TAU_CMP) -> bool:
    """``length >= target`` up to relative tolerance ``tau``."""
    return length >= target * (1.0 - tau)
