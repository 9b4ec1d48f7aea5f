"""Convex loss functions and scripted adversaries producing loss sequences."""
from dataclasses import dataclass, field

import numpy as np

from .errors import LengthMismatch, NotPSD

PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class LossFunction:
    """Linear ``c'x`` or quadratic ``x'Qx/2 + c'x`` loss.

    ``grad_bound`` is a certified upper bound on the gradient norm over the
    domain the loss was built for.
    """

    kind: str
    c: np.ndarray
    Q: np.ndarray = None
    grad_bound: float = 0.0

    def value(self, x):
        """Loss at ``x``; ``x`` may be a stack of points along the first axis."""
        x = np.asarray(x, dtype=float)
        out = x @ self.c
        if self.Q is not None:
            out = out + 0.5 * np.einsum("...i,ij,...j->...", x, self.Q, x)
        return out

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        if self.Q is None:
            return np.broadcast_to(self.c, x.shape).copy()
        return x @ self.Q + self.c


def make_linear_loss(c):
    c = np.array(c, dtype=float, ndmin=1)
    if not np.isfinite(c).all():
        raise ValueError("coefficients must be finite")
    return LossFunction("linear", c, None, float(np.linalg.norm(c)))


def _enclosing_ball(domain):
    if domain.kind == "ball":
        return domain.center, domain.radius
    lo, hi = domain.bounding_box()
    return 0.5 * (lo + hi), 0.5 * float(np.linalg.norm(hi - lo))


def make_quadratic_loss(Q, c, domain, rng=None, samples=1000):
    """Quadratic loss with a certified gradient bound over ``domain``.

    The gradient ``Qx + c`` is affine, so over a set enclosed by the ball
    ``B(m, rho)`` its norm is at most ``||Qm + c|| + ||Q|| rho``. The bound
    is cross-checked against ``samples`` interior points.
    """
    Q = np.array(Q, dtype=float, ndmin=2)
    c = np.array(c, dtype=float, ndmin=1)
    if Q.shape != (c.size, c.size):
        raise ValueError(f"Q must be {c.size}x{c.size}, got {Q.shape}")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise NotPSD("Q is not symmetric")
    Q = 0.5 * (Q + Q.T)
    lam_min = np.linalg.eigvalsh(Q)[0]
    if lam_min < -PSD_TOL:
        raise NotPSD(f"Q has eigenvalue {lam_min:.3g} < 0")
    if not Q.any():
        return make_linear_loss(c)
    center, rho = _enclosing_ball(domain)
    bound = np.linalg.norm(Q @ center + c) + np.linalg.norm(Q, 2) * rho
    rng = np.random.default_rng(0) if rng is None else rng
    X = domain.sample_interior(rng, samples)
    sampled = np.linalg.norm(X @ Q + c, axis=1).max()
    return LossFunction("quadratic", c, Q, float(max(bound, sampled)))


def total_loss(losses):
    """Sum of a loss sequence as a single :class:`LossFunction`."""
    c = np.sum([f.c for f in losses], axis=0)
    quad = [f.Q for f in losses if f.Q is not None]
    if not quad:
        return LossFunction("linear", c, None, float(np.linalg.norm(c)))
    return LossFunction("quadratic", c, np.sum(quad, axis=0), float(sum(f.grad_bound for f in losses)))


@dataclass(frozen=True)
class AdversaryScript:
    """Deterministic recipe for a loss sequence of length ``T``.

    Kinds and their ``params``:

    * ``iid_linear`` -- ``dim``, ``radius``: coefficients uniform on the sphere
      of that radius.
    * ``alternating`` -- ``first_scale``: ``first_scale * x, -x, x, -x, ...``
      on a one-dimensional domain.
    * ``piecewise_linear`` -- ``segments``: list of ``(length, c)``.
    * ``fixed_quadratic`` -- ``Q``, ``c``: the same quadratic every round.
    """

    kind: str
    T: int
    seed: int = 0
    params: dict = field(default_factory=dict)

    KINDS = ("iid_linear", "alternating", "piecewise_linear", "fixed_quadratic")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown adversary kind {self.kind!r}")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    def losses(self, domain):
        """The ``T`` losses, built for ``domain``."""
        p = self.params
        if self.kind == "iid_linear":
            rng = np.random.default_rng(self.seed)
            C = rng.standard_normal((self.T, int(p.get("dim", domain.dim))))
            C *= float(p.get("radius", 1.0)) / np.linalg.norm(C, axis=1, keepdims=True)
            return [make_linear_loss(c) for c in C]
        if self.kind == "alternating":
            if domain.dim != 1:
                raise ValueError("the alternating adversary is defined on a one-dimensional domain")
            plus, minus = make_linear_loss([1.0]), make_linear_loss([-1.0])
            out = [plus if t % 2 == 0 else minus for t in range(self.T)]
            scale = float(p.get("first_scale", 1.0))
            if scale != 1.0:
                out[0] = make_linear_loss([scale])
            return out
        if self.kind == "piecewise_linear":
            out = []
            for length, c in _segment_lengths(p["segments"], self.T):
                out.extend([make_linear_loss(c)] * length)
            return out
        f = make_quadratic_loss(p["Q"], p["c"], domain)
        return [f] * self.T

    def to_dict(self):
        def plain(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (list, tuple)):
                return [plain(w) for w in v]
            return v

        return {"kind": self.kind, "params": {k: plain(v) for k, v in self.params.items()}}


def _segment_lengths(segments, T):
    """Resolve ``[length, c]`` pairs and ``{fraction, c}`` mappings to integer lengths.

    Fractional segments are rounded; the last one absorbs the remainder.
    """
    out = []
    for seg in segments:
        if isinstance(seg, dict):
            if "fraction" in seg:
                out.append((int(round(float(seg["fraction"]) * T)), seg["c"]))
            else:
                out.append((int(seg["length"]), seg["c"]))
        else:
            length, c = seg
            out.append((int(length), c))
    if any(isinstance(seg, dict) and "fraction" in seg for seg in segments) and out:
        length, c = out[-1]
        out[-1] = (T - sum(n for n, _ in out[:-1]), c)
    total = sum(n for n, _ in out)
    if total != T or any(n < 0 for n, _ in out):
        raise LengthMismatch(f"segment lengths sum to {total}, expected {T}")
    return out


def iid_linear_adversary(T, dim, radius=1.0, seed=0):
    return AdversaryScript("iid_linear", T, seed, {"dim": dim, "radius": radius})


def alternating_adversary(T, first_scale=1.0):
    """``x, -x, x, ...`` on ``[-1, 1]``.

    With ``first_scale=0.5`` the running sums never vanish, so Follow-The-Leader
    switches between -1 and +1 every round without relying on tie-breaking.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    return AdversaryScript("alternating", T, 0, {"first_scale": first_scale})


def piecewise_linear_adversary(T, segments):
    segments = [[int(n), [float(v) for v in np.atleast_1d(c)]] for n, c in segments]
    _segment_lengths(segments, T)
    return AdversaryScript("piecewise_linear", T, 0, {"segments": segments})


def fixed_quadratic_adversary(T, Q, c):
    return AdversaryScript("fixed_quadratic", T, 0, {"Q": np.asarray(Q, float).tolist(), "c": list(map(float, c))})


def grad_bound(script, domain, losses=None):
    """Largest certified gradient bound over the script's losses (the ``G`` for tuning)."""
    losses = script.losses(domain) if losses is None else losses
    return max(f.grad_bound for f in losses)
