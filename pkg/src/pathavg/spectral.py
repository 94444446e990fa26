"""Expected averaging matrices E[W], their second eigenvalue, and the
closed-form entry sums and time bounds that go with them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh

from .errors import DisconnectedError, NumericError, TooLargeError
from .gossip import Protocol, UniformSource, make_rng, make_sampler, node_count
from .routing import hv_routes_batch
from .topology import CompleteGraph, GridTopology

EXACT_MAX_NODES = 4096
DENSE_MAX_NODES = 1024


@dataclass(frozen=True)
class ExpectedMatrix:
    entries: np.ndarray
    provenance: str
    samples: int | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def stochastic_residual(self) -> float:
        """Largest deviation of a row or column sum from 1."""
        e = self.entries
        return float(max(np.abs(e.sum(0) - 1).max(), np.abs(e.sum(1) - 1).max()))

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            for row in self.entries:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _accumulate_routes(acc, nodes, lengths, n):
    """Add sum over routes of (1/l) 1_r 1_r^T - diag(1_r) into the flat n*n ``acc``."""
    valid = nodes >= 0
    w = 1.0 / lengths
    rows = np.broadcast_to(nodes[:, :, None], nodes.shape + (nodes.shape[1],))
    cols = np.broadcast_to(nodes[:, None, :], rows.shape)
    mask = valid[:, :, None] & valid[:, None, :]
    ww = np.broadcast_to(w[:, None, None], rows.shape)
    acc += np.bincount(
        (rows[mask] * n + cols[mask]), weights=ww[mask], minlength=n * n
    )
    diag = np.bincount(nodes[valid], minlength=n)
    acc[:: n + 1] -= diag


def exact_ew_grid(side: int, both_directions: bool = False) -> ExpectedMatrix:
    """E[W] of (horizontal, vertical)-path averaging by enumerating all n^2
    ordered (I, J) pairs.

    Only horizontal-first routes are needed: the route I->J horizontal first
    covers the same nodes as J->I vertical first, so conditioning on the coin
    does not change the expectation. ``both_directions=True`` averages the two
    explicitly instead.
    """
    if side < 2:
        raise ValueError(f"grid side must be >= 2, got {side}")
    n = side * side
    if n > EXACT_MAX_NODES:
        raise TooLargeError(f"n={n} exceeds exact enumeration limit {EXACT_MAX_NODES}")
    acc = np.zeros(n * n)
    ids = np.arange(n)
    chunk = max(1, 65536 // n)
    dirs = (True, False) if both_directions else (True,)
    for hf in dirs:
        for s0 in range(0, n, chunk):
            src = np.repeat(ids[s0:s0 + chunk], n)
            dst = np.tile(ids, len(src) // n)
            nodes, lengths = hv_routes_batch(side, src, dst, hf)
            _accumulate_routes(acc, nodes, lengths, n)
    E = acc.reshape(n, n) / (n * n * len(dirs))
    E[np.diag_indices(n)] += 1.0
    return ExpectedMatrix(entries=E, provenance="exact-enumeration")


def exact_ew_standard(topology) -> ExpectedMatrix:
    """Closed-form E[W] of standard (nearest-neighbour) gossip.

    Node i wakes with probability 1/n and picks a neighbour uniformly; on the
    complete graph the partner is uniform over all n nodes, self included.
    """
    if isinstance(topology, CompleteGraph):
        n = topology.n
        E = np.full((n, n), 1.0 / n**2)
        np.fill_diagonal(E, 1.0 - (n - 1) / n**2)
        return ExpectedMatrix(entries=E, provenance="exact-closed-form")
    n = topology.n
    if n > EXACT_MAX_NODES:
        raise TooLargeError(f"n={n} exceeds dense limit {EXACT_MAX_NODES}")
    E = np.zeros((n, n))
    for i in range(n):
        nb = np.asarray(topology.neighbors[i])
        if len(nb) == 0:
            continue
        p = 1.0 / (2 * n * len(nb))
        E[i, nb] += p
        E[nb, i] += p
    np.fill_diagonal(E, 1.0 - E.sum(1))
    return ExpectedMatrix(entries=E, provenance="exact-closed-form")


def _sampled_ew_hv(side, samples, rng, batch=100_000):
    n = side * side
    acc = np.zeros(n * n)
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        src = rng.integers(n, size=b)
        dst = rng.integers(n, size=b)
        hf = rng.random(b) < 0.5
        nodes, lengths = hv_routes_batch(side, src, dst, hf)
        _accumulate_routes(acc, nodes, lengths, n)
        done += b
    return acc


def _sampled_ew_generic(sampler, n, samples, rng, batch=50_000):
    acc = np.zeros(n * n)
    src = UniformSource(rng)
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        by_len = {}
        for _ in range(b):
            S = sampler(src)[0]
            by_len.setdefault(len(S), []).append(S)
        for routes in by_len.values():
            nodes = np.asarray(routes, dtype=np.int64)
            lengths = np.full(len(nodes), nodes.shape[1], dtype=float)
            _accumulate_routes(acc, nodes, lengths, n)
        done += b
    return acc


def mc_ew(protocol, topology, samples: int, seed=0, sampler=None) -> ExpectedMatrix:
    """Monte Carlo E[W]: the mean of ``samples`` independently drawn W(t).

    ``sampler`` overrides the protocol's round sampler; it must return
    ``(S, R)`` like :func:`pathavg.gossip.make_sampler`.
    """
    if samples < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {samples}")
    n = node_count(topology)
    rng = make_rng(seed)
    if sampler is None and Protocol(protocol) is Protocol.PATH_HV and isinstance(topology, GridTopology):
        acc = _sampled_ew_hv(topology.side, samples, rng)
    else:
        sampler = sampler or make_sampler(protocol, topology)
        acc = _sampled_ew_generic(sampler, n, samples, rng)
    E = acc.reshape(n, n) / samples
    E[np.diag_indices(n)] += 1.0
    E = 0.5 * (E + E.T)
    return ExpectedMatrix(entries=E, provenance=f"monte-carlo({samples})", samples=samples)


@dataclass(frozen=True)
class SpectralResult:
    lambda2: float
    min_eigenvalue: float

    @property
    def spectral_gap(self) -> float:
        return 1.0 - self.lambda2

    def as_text(self) -> str:
        return (
            f"lambda2 = {self.lambda2:.17g}\n"
            f"min_eigenvalue = {self.min_eigenvalue:.17g}\n"
            f"spectral_gap = {self.spectral_gap:.17g}\n"
        )


def _check_input(M, sym_tol=1e-8, stoch_tol=1e-6):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    asym = float(np.abs(M - M.T).max()) if M.size else 0.0
    if asym > sym_tol:
        raise ValueError(f"matrix not symmetric: max |M - M^T| = {asym:.3g}")
    resid = float(np.abs(M.sum(1) - 1).max()) if M.size else 0.0
    if resid > stoch_tol:
        raise ValueError(f"matrix not stochastic: max |row sum - 1| = {resid:.3g}")


def _deflated_top(M, v0_seed, tol):
    n = M.shape[0]
    ones = np.full(n, 1.0 / n)

    def mv(x):
        x = np.ravel(x)
        return M @ x - ones * x.sum()

    op = LinearOperator((n, n), matvec=mv, dtype=float)
    v0 = np.random.default_rng(v0_seed).standard_normal(n)
    try:
        vals, vecs = eigsh(op, k=2, which="LM", tol=tol, v0=v0, maxiter=100 * n)
    except ArpackNoConvergence as exc:
        res = None
        if len(exc.eigenvalues):
            v = exc.eigenvectors[:, -1]
            res = float(np.linalg.norm(mv(v) - exc.eigenvalues[-1] * v))
        raise NumericError("eigen-iteration did not converge", residual=res) from exc
    order = np.argsort(-np.abs(vals))
    vals, vecs = vals[order], vecs[:, order]
    res = float(np.linalg.norm(mv(vecs[:, 0]) - vals[0] * vecs[:, 0]))
    return vals, res


def _dense_result(M) -> SpectralResult:
    w = np.linalg.eigvalsh(M)
    rest = np.delete(w, np.argmin(np.abs(w - 1.0)))
    lam = float(np.abs(rest).max()) if len(rest) else 0.0
    return SpectralResult(lambda2=lam, min_eigenvalue=float(w[0]))


def lambda2(m, tol: float = 1e-10) -> SpectralResult:
    """Second largest eigenvalue in magnitude of a symmetric doubly stochastic matrix.

    The known pair (1, all-ones) is deflated and Lanczos finds the largest
    magnitude of what remains; a second start vector is tried when the top
    two deflated eigenvalues are within 1e-8 of each other. Up to
    ``DENSE_MAX_NODES`` the full spectrum is also computed, for the minimum
    eigenvalue and as a cross-check.
    """
    M = np.asarray(m.entries if isinstance(m, ExpectedMatrix) else m, dtype=float)
    _check_input(M)
    n = M.shape[0]
    if n <= 3:
        return _dense_result(M)

    try:
        vals, res = _deflated_top(M, 0, tol)
        lam = abs(vals[0])
        if abs(abs(vals[0]) - abs(vals[1])) < 1e-8:
            vals2, _ = _deflated_top(M, 1, tol)
            lam = max(lam, abs(vals2[0]))
    except ArpackError:
        # e.g. a deflated operator that is exactly zero (M = J/n)
        if n <= DENSE_MAX_NODES:
            return _dense_result(M)
        raise NumericError("eigen-iteration failed on the deflated operator") from None
    if res > 1e-6 * max(1.0, lam):
        raise NumericError(f"eigen-residual {res:.3g} too large", residual=res)

    if n <= DENSE_MAX_NODES:
        w = np.linalg.eigvalsh(M)
        min_eig = float(w[0])
        # drop the single eigenvalue closest to 1 (the all-ones vector)
        rest = np.delete(w, np.argmin(np.abs(w - 1.0)))
        dense_lam = float(np.abs(rest).max())
        if abs(dense_lam - lam) > 1e-8 * max(1.0, lam):
            raise NumericError(
                f"iterative lambda2 {lam:.12g} disagrees with dense {dense_lam:.12g}",
                residual=abs(dense_lam - lam),
            )
    else:
        sa = eigsh(M, k=1, which="SA", tol=tol, return_eigenvectors=False)
        min_eig = float(sa[0])
    return SpectralResult(lambda2=float(lam), min_eigenvalue=min_eig)


def lemma1_bounds(ell: int, side: int):
    """Closed-form route-count sum for a grid pair at L1 distance ``ell`` and its
    integral sandwich.

    Returns ``(exact_sum, lower, upper)`` with
    ``exact_sum = (2/n^2) * sum_{l=ell+1}^{2*floor(side/2)+1} (l - ell)/l``,
    ``lower = (2/n^2) (side - ell - ell ln(side/ell))`` and
    ``upper = (2/n^2) (side - ell + 1 - ell ln((side+2)/(ell+1)))``.
    """
    max_d = 2 * (side // 2)
    if not 1 <= ell <= max_d:
        raise ValueError(f"ell must be in [1, {max_d}], got {ell}")
    n = side * side
    top = 2 * (side // 2) + 1
    # largest terms first
    s = 0.0
    for l in range(top, ell, -1):
        s += (l - ell) / l
    exact = 2.0 / n**2 * s
    lower = 2.0 / n**2 * (side - ell - ell * math.log(side / ell))
    upper = 2.0 / n**2 * (side - ell + 1 - ell * math.log((side + 2) / (ell + 1)))
    return exact, lower, upper


def lemma1_plateau(side: int) -> float:
    """Smallest ``lower * n**1.5`` over flights of L1 length at most side/2 + 1."""
    n = side * side
    top = min(side // 2 + 1, 2 * (side // 2))
    return min(lemma1_bounds(l, side)[1] * n**1.5 for l in range(1, top + 1))


def lemma3_lower_bound(ell_box: int, n: int, k: int, a: float, b: float):
    """Box-path entry lower bound ``(4a/b^2)(2/n^2) sqrt(k) (1 - d + d ln d)``
    with ``d = ell_box / sqrt(k)``.

    Returns ``(value, in_regime)``; ``in_regime`` is False (and value 0) when
    ``d >= 1``.
    """
    if a > b:
        raise ValueError(f"need a <= b, got a={a}, b={b}")
    rk = math.sqrt(k)
    if ell_box < 1:
        raise ValueError(f"ell_box must be >= 1, got {ell_box}")
    d = ell_box / rk
    if d >= 1:
        return 0.0, False
    return (4 * a / b**2) * (2.0 / n**2) * rk * (1 - d + d * math.log(d)), True


@dataclass(frozen=True)
class TimeBounds:
    tc_upper: float
    tc_upper_loose: float
    tave_upper: float
    tave_upper_loose: float


def time_bounds(lambda2: float, epsilon: float) -> TimeBounds:
    """Upper bounds on consensus time and epsilon-averaging time from lambda2."""
    if lambda2 >= 1:
        raise DisconnectedError(f"lambda2 = {lambda2:g} >= 1: no convergence guarantee")
    if lambda2 < 0:
        raise ValueError(f"lambda2 must be in [0, 1), got {lambda2}")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must be in (0, 1), got {epsilon}")
    if lambda2 == 0:
        return TimeBounds(0.0, 2.0, 0.0, 3 * math.log(1 / epsilon))
    gap = 1 - lambda2
    # log1p keeps log(1/lambda2) >= gap when lambda2 is close to 1
    rate = -math.log1p(-gap)
    le = math.log(1 / epsilon)
    return TimeBounds(
        tc_upper=2 / rate,
        tc_upper_loose=2 / gap,
        tave_upper=3 * le / rate,
        tave_upper_loose=3 * le / gap,
    )
