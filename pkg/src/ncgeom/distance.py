"""Connes' distance function on finite sets from weighted digraph triples.

The distance between point states p and q is the supremum of f(q) - f(p)
over functions whose commutator with the (doubled) operator has norm at
most one.  Constants drop out of the commutator and the objective is
homogeneous of degree zero in f, so the solver climbs the scale-invariant
ratio R(f) = (f(q) - f(p)) / ||[D, f]|| with a multi-start subgradient
method.  A brute-force refined-grid oracle provides independent values on
small instances.

For real f the doubled and undoubled commutator norms agree, so all real
optimization happens on the base matrix.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .matrix_rep import AdjacencyMatrix, DoubledOperator

DEFAULT_SEED = 0x5EED
DEFAULT_STARTS = 32
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
TIE_TOL = 1e-9
ORACLE_MAX_POINTS = 6


def _base_matrix(operator) -> np.ndarray:
    if isinstance(operator, DoubledOperator):
        n = operator.n_points
        return np.asarray(operator.block[n:, :n])
    if isinstance(operator, AdjacencyMatrix):
        return operator.entries
    m = np.asarray(operator, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("operator must be a square matrix")
    return m


@dataclass(frozen=True)
class DistanceProblem:
    operator: object
    p: int
    q: int
    use_real_functions: bool = True

    def __post_init__(self):
        n = self.base.shape[0]
        if not (0 <= self.p < n and 0 <= self.q < n):
            raise ValidationError("point indices out of range")
        if self.p == self.q:
            raise ValidationError("the two points must differ")

    @property
    def base(self) -> np.ndarray:
        return _base_matrix(self.operator)

    @property
    def doubled(self) -> bool:
        """Whether the constraint norm lives on the doubled operator."""
        if isinstance(self.operator, DoubledOperator):
            return True
        d = self.base
        return not np.allclose(d, d.conj().T, atol=0, rtol=0)


@dataclass(frozen=True)
class DistanceSolution:
    value: float
    optimizer: np.ndarray
    constraint_norm: float
    oracle_value: float | None = None
    upper_bound: float | None = None


def _commutator(d: np.ndarray, f: np.ndarray) -> np.ndarray:
    return d * (f[None, :] - f[:, None])


def commutator_norm(operator, f, tol: float = 1e-10, max_iter: int = 20_000) -> float:
    """Operator norm of [D, f] by power iteration on the Gram matrix."""
    f = np.asarray(f)
    if isinstance(operator, DoubledOperator):
        c = operator.block @ operator.represent(f) - operator.represent(f) @ operator.block
    else:
        d = _base_matrix(operator)
        if f.shape != (d.shape[0],):
            raise ValidationError("function length must match the operator size")
        c = _commutator(d, f)
    gram = c.conj().T @ c
    m = gram.shape[0]
    v = np.ones(m) + np.linspace(0.0, 0.1, m)  # deterministic, generic start
    v /= np.linalg.norm(v)
    prev = -1.0
    rq = 0.0
    for _ in range(max_iter):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        rq = float(np.real(np.conj(v) @ gram @ v))
        if abs(rq - prev) <= tol * max(rq, 1e-30):
            break
        prev = rq
    return math.sqrt(max(rq, 0.0))


def _undirected_components(d: np.ndarray) -> np.ndarray:
    """Component label per vertex of the symmetrized nonzero pattern."""
    n = d.shape[0]
    coupled = (d != 0) | (d.T != 0)
    labels = np.full(n, -1)
    for start in range(n):
        if labels[start] >= 0:
            continue
        labels[start] = start
        stack = [start]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(coupled[u]):
                if labels[v] < 0:
                    labels[v] = start
                    stack.append(int(v))
    return labels


def _shortest_path_warm_start(d: np.ndarray, src: int) -> np.ndarray:
    """Undirected weighted hop distances; a feasible-shape starting function."""
    w = np.maximum(d, d.T)
    n = d.shape[0]
    dist = np.full(n, np.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for v in np.flatnonzero(w[u]):
            cand = du + 1.0 / w[u, v]
            if cand < dist[v]:
                dist[v] = cand
                heapq.heappush(heap, (cand, int(v)))
    dist[np.isinf(dist)] = 0.0
    return dist


def _batched_top_subgradients(d: np.ndarray, c: np.ndarray):
    """Top singular values and tie-averaged subgradients of f -> ||[D, f]||.

    c is the stack of commutator matrices, one per start.  The subgradient
    of a simple top singular value sigma = u^T C v is
    grad_k = v_k (D^T u)_k - u_k (D v)_k; degenerate tops within TIE_TOL are
    averaged.
    """
    u, s, vt = np.linalg.svd(c)
    dtu = np.einsum("ik,sij->skj", d, u)  # (S, k, j) = (D^T u_j)_k
    dv = np.einsum("ki,sji->sjk", d, vt)  # (S, j, k) = (D v_j)_k
    grads = vt * dtu.transpose(0, 2, 1) - u.transpose(0, 2, 1) * dv
    tie = s >= (s[:, :1] - TIE_TOL)
    weights = tie / tie.sum(axis=1, keepdims=True)
    grad = np.einsum("sj,sjk->sk", weights, grads)
    return s[:, 0], grad


def _cutting_plane_refine(d, p, q, seeds, tol=1e-9, max_rounds=150):
    """Refine the convex program  max f(q) s.t. ||[D, f]|| <= 1, f(p) = 0.

    The spectral-norm ball is an intersection of half-spaces
    u^T [D, f] v <= 1 over unit pairs (u, v), each linear in f.  Kelley's
    method alternates a small LP over the accumulated cuts (an outer
    approximation, hence an upper bound) with adding the cuts active at the
    LP optimum; rescaled LP optima stay feasible, hence lower bounds.
    Returns (best_f, lower, upper).
    """
    from scipy.optimize import linprog

    n = d.shape[0]
    box = 2.0 * n * float((1.0 / d[d != 0]).max())
    bounds = [(-box, box)] * n
    bounds[p] = (0.0, 0.0)
    lp_options = {
        "primal_feasibility_tolerance": 1e-10,
        "dual_feasibility_tolerance": 1e-10,
    }
    cuts: list[np.ndarray] = []
    lower = -math.inf
    best_f = None

    def visit(f):
        nonlocal lower, best_f
        u, s, vt = np.linalg.svd(_commutator(d, f))
        if s[0] > 1e-30:
            val = (f[q] - f[p]) / s[0]
            if val > lower:
                lower, best_f = val, f / s[0]
        added = 0
        for j in range(n):
            if s[j] >= s[0] - TIE_TOL and s[j] > 1e-30:
                g = vt[j] * (d.T @ u[:, j]) - u[:, j] * (d @ vt[j])
                if all(np.max(np.abs(g - e)) > 1e-12 for e in cuts):
                    cuts.append(g)
                    added += 1
        return added

    for f in seeds:
        visit(np.asarray(f, dtype=float))
    upper = math.inf
    objective = np.zeros(n)
    objective[q] = -1.0
    for _ in range(max_rounds):
        res = linprog(
            objective,
            A_ub=np.array(cuts),
            b_ub=np.ones(len(cuts)),
            bounds=bounds,
            method="highs",
            options=lp_options,
        )
        if not res.success:
            break
        upper = float(res.x[q])
        added = visit(res.x)
        if upper - lower <= tol * (1.0 + abs(upper)) or added == 0:
            break
    return best_f, lower, upper


def distance(
    prob: DistanceProblem,
    seed: int = DEFAULT_SEED,
    starts: int = DEFAULT_STARTS,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    patience: int = 40,
) -> DistanceSolution:
    """Multi-start subgradient ascent plus cutting-plane certification.

    The ascent phase climbs the scale-invariant ratio from the shortest
    path warm start and random starts; it only has to land in the right
    basin, because the refinement phase exploits the convexity of the
    constrained form to certify the value with matching lower and upper
    bounds far below `tol`.
    """
    d = prob.base
    n = d.shape[0]
    p, q = prob.p, prob.q
    labels = _undirected_components(d)
    if labels[p] != labels[q]:
        indicator = (labels == labels[q]).astype(float)
        norm = commutator_norm(d, indicator)
        # no function constraint couples the components, so R is unbounded
        return DistanceSolution(
            value=math.inf, optimizer=indicator, constraint_norm=norm
        )
    rng = np.random.default_rng(seed)
    warm = _shortest_path_warm_start(d, p)
    scale = max(warm[q], 1.0 / d[d != 0].max())
    fs = rng.normal(size=(starts, n)) * scale
    fs[0] = warm
    fs[:, p] = 0.0

    best_val = -math.inf
    best_f = fs[0].copy()
    stagnant = 0
    stall_tol = max(tol, 1e-4)
    for t in range(min(max_iter, 400)):
        c = d[None, :, :] * (fs[:, None, :] - fs[:, :, None])
        h = np.linalg.norm(c.reshape(starts, -1), axis=1)  # cheap zero screen
        dead = h < 1e-14
        if np.any(dead):
            fs[dead] = rng.normal(size=(int(dead.sum()), n)) * scale
            fs[:, p] = 0.0
            c = d[None, :, :] * (fs[:, None, :] - fs[:, :, None])
        sigma, grad_h = _batched_top_subgradients(d, c)
        # normalize onto the shell h = 1, where R is just f(q); the
        # subgradient of the 1-homogeneous h is unchanged by the rescale
        fs /= sigma[:, None]
        sign = np.where(fs[:, q] >= 0, 1.0, -1.0)
        fs *= sign[:, None]
        ratios = fs[:, q]
        top = float(ratios.max())
        if top > best_val + stall_tol * (1.0 + abs(best_val)):
            stagnant = 0
        else:
            stagnant += 1
        if top > best_val:
            best_val = top
            best_f = fs[int(ratios.argmax())].copy()
        if stagnant > patience:
            break
        # gradient of R at the normalized point: e_q - R * grad(h)
        grad = -ratios[:, None] * (grad_h * sign[:, None])
        grad[:, q] += 1.0
        grad[:, p] = 0.0
        norms = np.linalg.norm(grad, axis=1)
        norms[norms == 0] = 1.0
        step = 0.4 * (1.0 + best_val) / math.sqrt(t + 1.0)
        fs += step * grad / norms[:, None]
        fs[:, p] = 0.0

    # subgradient steps crawl near nonsmooth optima (tied singular values);
    # the convex refinement certifies the value with a two-sided bound
    order = np.argsort(fs[:, q])[::-1]
    seeds = [best_f, warm] + [fs[s] for s in order[:4]]
    refined, lower, upper = _cutting_plane_refine(d, p, q, seeds)
    optimizer = refined if refined is not None else best_f
    value = float(optimizer[q] - optimizer[p])
    norm = float(
        np.linalg.svd(_commutator(d, optimizer), compute_uv=False)[0]
    )
    return DistanceSolution(
        value=value,
        optimizer=optimizer,
        constraint_norm=norm,
        upper_bound=upper if math.isfinite(upper) else None,
    )


def distance_matrix(operator, points=None, **solver_options) -> np.ndarray:
    """All-pairs symmetric distance matrix with zero diagonal."""
    d = _base_matrix(operator)
    points = list(range(d.shape[0])) if points is None else list(points)
    m = np.zeros((len(points), len(points)))
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            sol = distance(
                DistanceProblem(operator, points[a], points[b]), **solver_options
            )
            m[a, b] = m[b, a] = sol.value
    return m


# -- brute-force oracle ------------------------------------------------------

_GRID_SIZES = {1: 4001, 2: 61, 3: 25, 4: 13, 5: 9}


def _oracle_ratio_batch(d, p, q, fs, doubled_complex=False):
    c = d[None, :, :] * (fs[:, None, :] - fs[:, :, None])
    s = np.linalg.svd(c, compute_uv=False)[:, 0]
    if doubled_complex:
        c2 = d.conj().T[None, :, :] * (fs[:, None, :] - fs[:, :, None])
        s = np.maximum(s, np.linalg.svd(c2, compute_uv=False)[:, 0])
    num = fs[:, q] - fs[:, p]
    num = np.abs(num) if np.iscomplexobj(fs) else num
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s > 1e-30, num / s, -np.inf)
    return np.real(r)


def _polish_directions(dims: int) -> np.ndarray:
    """Signed direction stencil for the pattern search.

    The ratio is a maximum of smooth pieces, so its optima sit on ridges
    where several singular values tie; crossing such a ridge can require
    a coordinated move of many coordinates, which axis steps alone never
    find.  Up to five dimensions the full {-1, 0, 1} stencil is cheap;
    beyond that the supports are capped at three coordinates.
    """
    from itertools import combinations, product

    eye = np.eye(dims)
    dirs = []
    sizes = range(1, dims + 1) if dims <= 5 else (1, 2, 3)
    for size in sizes:
        for support in combinations(range(dims), size):
            for signs in product((1.0, -1.0), repeat=size):
                v = sum(s * eye[i] for s, i in zip(signs, support))
                dirs.append(v / math.sqrt(size))
    return np.array(dirs)


def _compass_polish(batch_fun, x0, step, min_step=1e-8, max_sweeps=2000):
    """Pattern search: evaluate the direction stencil in one batch per
    sweep, ray-expand along the best improving direction, halve the step
    when nothing improves."""
    x = np.array(x0, dtype=float)
    dirs = _polish_directions(x.size)
    ray = np.array([1.0, 2.0, 4.0, 8.0, 16.0])
    best = float(batch_fun(x[None, :])[0])
    sweeps = 0
    while step > min_step and sweeps < max_sweeps:
        sweeps += 1
        vals = batch_fun(x[None, :] + step * dirs)
        k = int(np.argmax(vals))
        if vals[k] > best:
            cands = x[None, :] + (step * ray)[:, None] * dirs[k][None, :]
            rvals = batch_fun(cands)
            r = int(np.argmax(rvals))
            best = float(rvals[r])
            x = cands[r]
        else:
            step *= 0.5
    return x, best


def _grid_axes(center, half_width, m):
    return [np.linspace(c - hw, c + hw, m) for c, hw in zip(center, half_width)]


def oracle_distance(prob: DistanceProblem, passes: int = 3) -> float:
    """Brute-force maximization of the ratio over a refined coordinate grid.

    One coordinate is pinned to zero at p; the first pass covers the box
    [0, B]^(N-1) with B = N times the longest edge, later passes zoom onto
    the incumbent, and a deterministic compass search squeezes the final
    cell.  Real functions by default; the complex mode embeds the free
    phases for small N as a cross-check of the real-sufficiency reduction.
    """
    d = prob.base
    n = d.shape[0]
    if n > ORACLE_MAX_POINTS:
        raise ValidationError(f"oracle limited to {ORACLE_MAX_POINTS} points, got {n}")
    p, q = prob.p, prob.q
    labels = _undirected_components(d)
    if labels[p] != labels[q]:
        return math.inf
    if not prob.use_real_functions and n > 4:
        raise ValidationError("complex oracle limited to 4 points")
    weights = np.abs(d[d != 0])
    box = n * float((1.0 / weights).max())

    free = [k for k in range(n) if k != p]
    if prob.use_real_functions:
        dims = len(free)

        def assemble(coords):
            fs = np.zeros((coords.shape[0], n))
            fs[:, free] = coords
            return fs

        norm_doubled = False
    else:
        # f(q) may be taken real and nonnegative (global phase); every other
        # free coordinate contributes a real and an imaginary part
        others = [k for k in free if k != q]
        dims = 1 + 2 * len(others)

        def assemble(coords):
            fs = np.zeros((coords.shape[0], n), dtype=complex)
            fs[:, q] = coords[:, 0]
            for idx, k in enumerate(others):
                fs[:, k] = coords[:, 1 + 2 * idx] + 1j * coords[:, 2 + 2 * idx]
            return fs

        norm_doubled = prob.doubled

    m = _GRID_SIZES.get(dims, 7)
    center = np.full(dims, box / 2.0)
    half_width = np.full(dims, box / 2.0)
    if not prob.use_real_functions:
        center[1:] = 0.0
        half_width[1:] = box / 2.0

    best_x = center.copy()
    best_val = -math.inf
    seeds = []
    for pass_index in range(passes):
        axes = _grid_axes(center, half_width, m)
        mesh = np.meshgrid(*axes, indexing="ij")
        coords = np.stack([g.ravel() for g in mesh], axis=1)
        vals = np.empty(coords.shape[0])
        chunk = 20_000
        for lo in range(0, coords.shape[0], chunk):
            batch = coords[lo : lo + chunk]
            vals[lo : lo + chunk] = _oracle_ratio_batch(
                d, p, q, assemble(batch), doubled_complex=norm_doubled
            )
        top = int(np.argmax(vals))
        if pass_index == 0:
            # keep a few diverse first-pass candidates for the final polish
            for s in np.argsort(vals)[::-1][:3]:
                seeds.append(coords[s].copy())
        if vals[top] > best_val:
            best_val = float(vals[top])
            best_x = coords[top].copy()
        cell = 2.0 * half_width / (m - 1)
        center = best_x
        half_width = 2.0 * cell

    def batch_fun(xs):
        return _oracle_ratio_batch(
            d, p, q, assemble(xs), doubled_complex=norm_doubled
        )

    step0 = max(float(half_width.max()), box / (m - 1))
    result = best_val
    for seed in [best_x] + seeds:
        _, polished = _compass_polish(batch_fun, seed, step=step0)
        result = max(result, polished)
    return result
