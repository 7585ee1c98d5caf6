"""Hidden-weight priors and the frozen feature bank.

Two prior families are provided:

``CompactPrior(M, d)``
    W uniform on the l1 ball {||w||_1 <= M}, B uniform on [-2M, 2M].
``HeavyTailPrior(alpha, beta, d)``
    W with density C_alpha / (1 + ||w||_2)^alpha, B with density
    C_beta / (1 + |b|)^beta.

Both are sampled exactly (no rejection, no truncation).  Randomness is drawn
in fixed-size blocks of features, each block with its own Philox stream keyed
by ``(seed, block_index)``, so a bank is bit-identical however the blocks are
scheduled, and the first m rows of a larger bank equal the m-feature bank.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

BLOCK = 4096
# Beta draws of exactly 1.0 would map to an infinite radius.
_BELOW_ONE = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class CompactPrior:
    M: float
    d: int

    def __post_init__(self):
        if not self.M >= 2:
            raise ValueError(f"compact prior needs M >= 2, got {self.M}")
        _check_dim(self.d)

    name = "compact"

    def params(self):
        return {"prior": self.name, "M": float(self.M), "d": int(self.d)}


@dataclass(frozen=True)
class HeavyTailPrior:
    """Heavy-tailed prior.

    The densities only need ``alpha > d`` and ``beta > 1`` to be
    normalizable; :meth:`check_barron_condition` enforces the stricter
    ``alpha > d + 4, 1 < beta < 5`` under which the Monte-Carlo
    approximation has bounded H^2 variance.
    """

    alpha: float
    beta: float
    d: int

    name = "heavytail"

    def __post_init__(self):
        _check_dim(self.d)
        if not self.alpha > self.d:
            raise ValueError(
                f"alpha must exceed d={self.d} for a normalizable density, got {self.alpha}"
            )
        if not self.beta > 1:
            raise ValueError(f"beta must exceed 1 for a normalizable density, got {self.beta}")

    def satisfies_barron_condition(self):
        return self.alpha > self.d + 4 and 1 < self.beta < 5

    def check_barron_condition(self):
        if not self.satisfies_barron_condition():
            raise ValueError(
                f"heavy-tail prior needs alpha > d + 4 and 1 < beta < 5; got "
                f"alpha={self.alpha}, beta={self.beta}, d={self.d}"
            )

    def params(self):
        return {
            "prior": self.name,
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "d": int(self.d),
        }


def _check_dim(d):
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")


def prior_from_params(params):
    kind = params["prior"]
    if kind == CompactPrior.name:
        return CompactPrior(M=float(params["M"]), d=int(params["d"]))
    if kind == HeavyTailPrior.name:
        return HeavyTailPrior(
            alpha=float(params["alpha"]), beta=float(params["beta"]), d=int(params["d"])
        )
    raise ValueError(f"unknown prior {kind!r}")


@dataclass(frozen=True, eq=False)
class FeatureBank:
    """Frozen first layer: rows ``W[i]`` and offsets ``B[i]``."""

    W: np.ndarray
    B: np.ndarray
    prior: CompactPrior | HeavyTailPrior
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        W = np.array(self.W, dtype=float, ndmin=2)
        B = np.array(self.B, dtype=float).ravel()
        if W.shape[0] != B.shape[0]:
            raise ValueError(f"W has {W.shape[0]} rows but B has {B.shape[0]} entries")
        if W.shape[1] != self.prior.d:
            raise ValueError(f"W has {W.shape[1]} columns, prior has d={self.prior.d}")
        W.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "B", B)

    @property
    def m(self):
        return self.W.shape[0]

    @property
    def d(self):
        return self.W.shape[1]

    def subset(self, idx):
        return FeatureBank(self.W[idx], self.B[idx], self.prior, self.seed)

    def __eq__(self, other):
        if not isinstance(other, FeatureBank):
            return NotImplemented
        return (
            self.prior == other.prior
            and self.seed == other.seed
            and np.array_equal(self.W, other.W)
            and np.array_equal(self.B, other.B)
        )

    __hash__ = None


def _block_rng(seed, block):
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), int(block)])
    return np.random.Generator(np.random.Philox(ss))


def _sample_compact_block(prior, count, rng):
    d = prior.d
    # uniform point on the simplex face sum|w_k| = 1, random signs,
    # radius with density ~ r^(d-1) on [0, M]
    e = rng.standard_exponential((count, d))
    mags = e / e.sum(axis=1, keepdims=True)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(count, d))
    radius = prior.M * rng.random(count) ** (1.0 / d)
    W = mags * signs * radius[:, None]
    B = rng.uniform(-2.0 * prior.M, 2.0 * prior.M, count)
    return W, B


def _sample_heavytail_block(prior, count, rng):
    d = prior.d
    g = rng.standard_normal((count, d))
    direction = g / np.linalg.norm(g, axis=1, keepdims=True)
    s = np.minimum(rng.beta(d, prior.alpha - d, count), _BELOW_ONE)
    W = direction * (s / (1.0 - s))[:, None]
    sb = np.minimum(rng.beta(1.0, prior.beta - 1.0, count), _BELOW_ONE)
    sign = rng.choice(np.array([-1.0, 1.0]), size=count)
    B = sign * sb / (1.0 - sb)
    return W, B


def sample(prior, m, seed, threads=1):
    """Draw ``m`` hidden features from ``prior``.

    Output depends only on ``(prior, m, seed)``; ``threads`` only changes how
    the fixed blocks are scheduled.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"need at least one feature, got m={m}")
    draw = _sample_compact_block if isinstance(prior, CompactPrior) else _sample_heavytail_block
    n_blocks = -(-m // BLOCK)

    def one(block):
        # always draw a full block, so feature i depends only on (seed, i)
        count = min(BLOCK, m - block * BLOCK)
        W, B = draw(prior, BLOCK, _block_rng(seed, block))
        return W[:count], B[:count]

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, range(n_blocks)))
    else:
        parts = [one(b) for b in range(n_blocks)]
    W = np.concatenate([p[0] for p in parts], axis=0)
    B = np.concatenate([p[1] for p in parts])
    return FeatureBank(W, B, prior, int(seed))


def l1_ball_volume(d):
    """Lebesgue measure of the unit l1 ball in R^d, 2^d / d!."""
    return 2.0**d / math.factorial(d)


def sphere_area(d):
    """Surface measure of the unit sphere S^{d-1} in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2) / special.gamma(d / 2)


def normalizers(prior):
    """Density normalizers.

    Returns ``(C_alpha, C_beta)`` for a heavy-tail prior and ``C_d`` (the
    unit l1-ball volume) for a compact prior.
    """
    if isinstance(prior, CompactPrior):
        return l1_ball_volume(prior.d)
    d, alpha = prior.d, prior.alpha
    if alpha <= d:
        raise ValueError(f"alpha must exceed d, got alpha={alpha}, d={d}")
    c_alpha = 1.0 / (sphere_area(d) * special.beta(d, alpha - d))
    c_beta = (prior.beta - 1.0) / 2.0
    return c_alpha, c_beta


def prior_density(prior, omega, b):
    """Density values ``(p1(omega), p2(b))``; vectorized over leading axes."""
    omega = np.asarray(omega, dtype=float)
    b = np.asarray(b, dtype=float)
    if omega.ndim == 0:
        omega = omega.reshape(1)
    if isinstance(prior, CompactPrior):
        M, d = prior.M, prior.d
        inside_w = np.abs(omega).sum(axis=-1) <= M
        inside_b = np.abs(b) <= 2.0 * M
        p1 = np.where(inside_w, 1.0 / (l1_ball_volume(d) * M**d), 0.0)
        p2 = np.where(inside_b, 1.0 / (4.0 * M), 0.0)
    else:
        c_alpha, c_beta = normalizers(prior)
        p1 = c_alpha / (1.0 + np.linalg.norm(omega, axis=-1)) ** prior.alpha
        p2 = c_beta / (1.0 + np.abs(b)) ** prior.beta
    return _scalar(p1), _scalar(p2)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def heavytail_radius_cdf(prior, r):
    """CDF of ||W||_2 under a heavy-tail prior: I_{r/(1+r)}(d, alpha - d)."""
    r = np.asarray(r, dtype=float)
    return stats.beta.cdf(r / (1.0 + r), prior.d, prior.alpha - prior.d)


def heavytail_offset_cdf(prior, x):
    """CDF of |B| under a heavy-tail prior: 1 - (1 + x)^(1 - beta)."""
    x = np.asarray(x, dtype=float)
    return 1.0 - (1.0 + x) ** (1.0 - prior.beta)


# serialization ---------------------------------------------------------------


def _header(bank):
    fields = {"m": bank.m, "d": bank.d, "seed": bank.seed, **bank.prior.params()}
    return "# " + ",".join(f"{k}={v}" for k, v in fields.items())


def dumps_bank(bank):
    """CSV text: a ``#`` header line with m, d, seed and prior parameters,
    a column line, then one row ``w_0..w_{d-1}, b`` per feature."""
    buf = io.StringIO()
    buf.write(_header(bank) + "\n")
    cols = [f"w{k}" for k in range(bank.d)] + ["b"]
    buf.write(",".join(cols) + "\n")
    rows = np.column_stack([bank.W, bank.B])
    for row in rows:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def save_bank(bank, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_bank(bank))


def _parse_header(line):
    if not line.startswith("#"):
        raise ValueError("feature bank file must start with a '#' header line")
    out = {}
    for item in line[1:].strip().split(","):
        key, _, val = item.partition("=")
        out[key.strip()] = val.strip()
    return out


def loads_bank(text):
    lines = text.splitlines()
    meta = _parse_header(lines[0])
    d = int(meta["d"])
    prior = prior_from_params(meta)
    data = np.loadtxt(lines[2:], delimiter=",", ndmin=2)
    if data.shape[1] != d + 1 or data.shape[0] != int(meta["m"]):
        raise ValueError(f"expected {meta['m']} rows of {d + 1} columns, got {data.shape}")
    return FeatureBank(data[:, :d], data[:, d], prior, int(meta["seed"]))


def load_bank(path):
    with open(path) as fh:
        return loads_bank(fh.read())
