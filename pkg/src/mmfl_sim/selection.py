"""Client-to-model assignment.

The selection problem: choose binary ``x[i, j]`` maximizing the summed
scores of chosen pairs, such that every client finishes its assigned models
within the deadline, exactly ``S`` clients take part, and no client trains a
model it holds no data for. Never-selected pairs carry an infinite score;
they are ranked by a lexicographic two-phase objective (count of such pairs
first, then the finite score sum) instead of a large constant.

Ties between optimal assignments go to the lexicographically smallest ``x``
read client-major. Objectives are summed with ``math.fsum`` so that every
solver reports bit-identical values for the same assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import AssignmentMatrix

MAX_BRUTE_FORCE_VARIABLES = 20


@dataclass
class SelectionInstance:
    scores: np.ndarray
    times: np.ndarray
    eligible: np.ndarray
    deadline: float
    required: int
    max_models_per_client: Optional[int] = None
    client_ids: Optional[Sequence[str]] = None
    model_ids: Optional[Sequence[str]] = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        self.times = np.asarray(self.times, dtype=float)
        self.eligible = np.asarray(self.eligible, dtype=bool)
        if self.scores.ndim != 2:
            raise ValueError("score matrix must be 2-d (clients x models)")
        if self.times.shape != self.scores.shape or self.eligible.shape != self.scores.shape:
            raise ValueError("score, time and eligibility matrices are not conformable")
        if not self.deadline > 0:
            raise ValueError(f"deadline must be positive, got {self.deadline}")
        if self.required < 0:
            raise ValueError("required client count must be nonnegative")
        if np.any(np.isnan(self.scores)) or np.any(self.scores < 0):
            raise ValueError("scores must be nonnegative (use inf for never-selected)")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.scores.shape

    @property
    def feasible_pairs(self) -> np.ndarray:
        return self.eligible & (self.times <= self.deadline)

    @property
    def model_cap(self) -> int:
        m = self.shape[1]
        return m if self.max_models_per_client is None else min(m, self.max_models_per_client)


def objective_of(x: np.ndarray, scores: np.ndarray) -> Tuple[int, float]:
    """(number of sentinel pairs chosen, exactly rounded finite score sum)."""
    chosen = scores[np.asarray(x, dtype=bool)]
    sentinel = np.isinf(chosen)
    return int(sentinel.sum()), math.fsum(chosen[~sentinel].tolist())


def _result(instance: SelectionInstance, x: np.ndarray, relaxed: bool) -> AssignmentMatrix:
    n_sent, finite = objective_of(x, instance.scores)
    return AssignmentMatrix(x=x, t=instance.times.copy(), deadline=instance.deadline,
                            objective_value=finite, sentinel_pairs=n_sent, relaxed=relaxed)


# --- exact solver ---------------------------------------------------------

def _client_rows(scores, times, feasible, deadline, cap):
    """All nonempty rows one client can run within the deadline.

    Depth-first over models in index order; a branch is cut as soon as its
    accumulated time passes the deadline or it reaches the model cap.
    Yields (row tuple, value) with value = (sentinel count, fsum of finite).
    """
    m = len(scores)
    out = []

    def visit(j, row, busy, count):
        if j == m:
            if count:
                chosen = [scores[q] for q in range(m) if row[q]]
                n_sent = sum(1 for s in chosen if math.isinf(s))
                out.append((tuple(row), (n_sent, math.fsum(s for s in chosen
                                                            if not math.isinf(s)))))
            return
        row.append(0)
        visit(j + 1, row, busy, count)
        row.pop()
        if feasible[j] and count < cap:
            nb = busy + times[j]
            if nb <= deadline:
                row.append(1)
                visit(j + 1, row, nb, count + 1)
                row.pop()

    visit(0, [], 0.0, 0)
    return out


def best_rows(instance: SelectionInstance):
    """Per client: (best value, lexicographically smallest row attaining it), or None."""
    feasible = instance.feasible_pairs
    cap = instance.model_cap
    best = []
    for i in range(instance.shape[0]):
        if not feasible[i].any() or cap == 0:
            best.append(None)
            continue
        rows = _client_rows(instance.scores[i].tolist(), instance.times[i].tolist(),
                            feasible[i].tolist(), instance.deadline, cap)
        if not rows:
            best.append(None)
            continue
        top = max(v for _, v in rows)
        best.append((top, min(r for r, v in rows if v == top)))
    return best


def solve_exact(instance: SelectionInstance) -> AssignmentMatrix:
    """Exact optimum of the assignment problem.

    Deadline, eligibility and model-cap constraints bind each client's row
    separately; only the participant count couples clients. So the optimum
    gives each participant its best feasible row and takes the ``S`` clients
    whose best rows are worth the most. If fewer than ``S`` clients can run
    anything, all of them participate and the result is flagged ``relaxed``.
    """
    n, m = instance.shape
    best = best_rows(instance)
    runnable = [i for i in range(n) if best[i] is not None]
    k = min(instance.required, len(runnable))
    relaxed = instance.required > len(runnable)
    x = np.zeros((n, m), dtype=bool)
    if k == 0:
        return _result(instance, x, relaxed)

    values = sorted((best[i][0] for i in runnable), reverse=True)
    cutoff = values[k - 1]
    forced = [i for i in runnable if best[i][0] > cutoff]
    tied = [i for i in runnable if best[i][0] == cutoff]
    # among equally valued clients, leaving the earliest ones out keeps x smallest
    chosen = forced + tied[len(tied) - (k - len(forced)):]
    for i in chosen:
        x[i] = best[i][1]
    return _result(instance, x, relaxed)


# --- brute-force oracle ---------------------------------------------------

def solve_brute_force(instance: SelectionInstance) -> AssignmentMatrix:
    """Enumerate every binary assignment (oracle for small instances)."""
    n, m = instance.shape
    nvar = n * m
    if nvar > MAX_BRUTE_FORCE_VARIABLES:
        raise ValueError(f"brute force refuses {nvar} variables "
                         f"(limit {MAX_BRUTE_FORCE_VARIABLES})")
    if nvar == 0:
        return _result(instance, np.zeros((n, m), dtype=bool), instance.required > 0)

    # code order == lexicographic order of x flattened client-major
    codes = np.arange(2 ** nvar, dtype=np.int64)
    shifts = np.arange(nvar - 1, -1, -1, dtype=np.int64)
    bits = ((codes[:, None] >> shifts) & 1).astype(bool)
    cube = bits.reshape(-1, n, m)

    ok = ~np.any(bits & ~instance.eligible.reshape(-1), axis=1)
    busy = np.zeros((len(codes), n))
    for j in range(m):
        busy = busy + np.where(cube[:, :, j], instance.times[:, j], 0.0)
    ok &= np.all(busy <= instance.deadline, axis=1)
    if instance.max_models_per_client is not None:
        ok &= np.all(cube.sum(axis=2) <= instance.max_models_per_client, axis=1)

    part = cube.any(axis=2).sum(axis=1)
    most = int(part[ok].max())
    k = min(instance.required, most)
    ok &= part == k

    flat = instance.scores.reshape(-1)
    sent = np.isinf(flat)
    n_sent = bits[:, sent].sum(axis=1)
    approx = bits[:, ~sent].astype(float) @ flat[~sent]
    top_sent = n_sent[ok].max()
    ok &= n_sent == top_sent
    top_approx = approx[ok].max()
    near = np.flatnonzero(ok & (approx >= top_approx - 1e-9 * (1.0 + abs(top_approx))))
    exact = [math.fsum(flat[~sent][bits[c, ~sent]].tolist()) for c in near]
    best = max(exact)
    code = min(c for c, v in zip(near, exact) if v == best)
    return _result(instance, cube[code].copy(), instance.required > most)


# --- ILP formulation with auxiliary participation variables --------------

@dataclass
class ILPModel:
    """Data for ``scipy.optimize.milp`` (minimization form).

    Variables: ``x`` (n*m, client-major), then load ``l_i`` (n), then the
    participation indicator ``z_i`` (n), with ``l_i = sum_j x_ij``,
    ``z_i <= l_i`` and ``cap * z_i >= l_i``.
    """

    n: int
    m: int
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    sentinel_weights: np.ndarray
    finite_weights: np.ndarray = field(repr=False)


def build_ilp(instance: SelectionInstance, participants: int) -> ILPModel:
    n, m = instance.shape
    nx, nv = n * m, n * m + 2 * n
    cap = instance.model_cap
    li = lambda i: nx + i  # noqa: E731
    zi = lambda i: nx + n + i  # noqa: E731

    ub_rows, ub_rhs = [], []
    for i in range(n):
        row = np.zeros(nv)
        row[i * m:(i + 1) * m] = instance.times[i]
        ub_rows.append(row)
        ub_rhs.append(instance.deadline)
        row = np.zeros(nv)
        row[zi(i)], row[li(i)] = 1.0, -1.0
        ub_rows.append(row)
        ub_rhs.append(0.0)
        row = np.zeros(nv)
        row[li(i)], row[zi(i)] = 1.0, -float(max(cap, 1))
        ub_rows.append(row)
        ub_rhs.append(0.0)

    eq_rows, eq_rhs = [], []
    for i in range(n):
        row = np.zeros(nv)
        row[i * m:(i + 1) * m] = -1.0
        row[li(i)] = 1.0
        eq_rows.append(row)
        eq_rhs.append(0.0)
    row = np.zeros(nv)
    row[nx + n:] = 1.0
    eq_rows.append(row)
    eq_rhs.append(float(participants))

    upper = np.concatenate([instance.feasible_pairs.reshape(-1).astype(float),
                            np.full(n, float(cap)), np.ones(n)])
    flat = instance.scores.reshape(-1)
    sent = np.isinf(flat)
    return ILPModel(
        n=n, m=m,
        a_ub=np.array(ub_rows), b_ub=np.array(ub_rhs),
        a_eq=np.array(eq_rows), b_eq=np.array(eq_rhs),
        lower=np.zeros(nv), upper=upper,
        sentinel_weights=np.concatenate([sent.astype(float), np.zeros(2 * n)]),
        finite_weights=np.concatenate([np.where(sent, 0.0, flat), np.zeros(2 * n)]),
    )


def solve_ilp(instance: SelectionInstance) -> AssignmentMatrix:
    """Solve the ILP form with HiGHS (two lexicographic phases).

    Independent of :func:`solve_exact`; objectives agree up to solver
    tolerance, tie-breaking between optima is not controlled.
    """
    from scipy.optimize import Bounds, LinearConstraint, milp

    n, m = instance.shape
    runnable = int(instance.feasible_pairs.any(axis=1).sum()) if instance.model_cap else 0
    k = min(instance.required, runnable)
    model = build_ilp(instance, k)
    integrality = np.ones(len(model.lower))
    cons = [LinearConstraint(model.a_ub, -np.inf, model.b_ub),
            LinearConstraint(model.a_eq, model.b_eq, model.b_eq)]
    bounds = Bounds(model.lower, model.upper)

    first = milp(-model.sentinel_weights, constraints=cons, bounds=bounds,
                 integrality=integrality)
    if not first.success:
        raise RuntimeError(f"ILP phase 1 failed: {first.message}")
    n_sent = round(-first.fun)
    cons.append(LinearConstraint(model.sentinel_weights[None, :], n_sent, n_sent))
    second = milp(-model.finite_weights, constraints=cons, bounds=bounds,
                  integrality=integrality)
    if not second.success:
        raise RuntimeError(f"ILP phase 2 failed: {second.message}")
    x = np.round(second.x[:n * m]).astype(bool).reshape(n, m)
    return _result(instance, x, instance.required > runnable)


# --- baselines ------------------------------------------------------------

def _runnable_clients(instance: SelectionInstance) -> np.ndarray:
    return np.flatnonzero(instance.feasible_pairs.any(axis=1))


def select_random(instance: SelectionInstance, rng: np.random.Generator) -> AssignmentMatrix:
    """Uniformly random clients, each on one uniformly random runnable model."""
    feasible = instance.feasible_pairs
    cands = _runnable_clients(instance)
    k = min(instance.required, len(cands))
    x = np.zeros(instance.shape, dtype=bool)
    chosen = np.sort(rng.choice(cands, size=k, replace=False)) if k else []
    for i in chosen:
        x[i, rng.choice(np.flatnonzero(feasible[i]))] = True
    return _result(instance, x, instance.required > len(cands))


def select_round_robin(instance: SelectionInstance, rng: np.random.Generator) -> AssignmentMatrix:
    """Shuffle clients, split the first ``S`` into one contiguous group per model.

    A client that cannot run its group's model falls back to its first
    runnable model.
    """
    feasible = instance.feasible_pairs
    cands = _runnable_clients(instance)
    k = min(instance.required, len(cands))
    order = rng.permutation(cands)[:k]
    x = np.zeros(instance.shape, dtype=bool)
    for g, group in enumerate(np.array_split(order, instance.shape[1])):
        for i in group:
            j = g if feasible[i, g] else int(np.flatnonzero(feasible[i])[0])
            x[i, j] = True
    return _result(instance, x, instance.required > len(cands))


def select_greedy_per_model(instance: SelectionInstance) -> AssignmentMatrix:
    """Single-model greedy: models take turns claiming their best free client."""
    feasible = instance.feasible_pairs
    n, m = instance.shape
    cands = _runnable_clients(instance)
    k = min(instance.required, len(cands))
    x = np.zeros((n, m), dtype=bool)
    taken = np.zeros(n, dtype=bool)
    # per model, clients by descending score then ascending index
    queues: List[List[int]] = []
    for j in range(m):
        idx = np.flatnonzero(feasible[:, j])
        queues.append(sorted(idx.tolist(), key=lambda i: (-instance.scores[i, j], i)))
    heads = [0] * m
    used = 0
    while used < k:
        progressed = False
        for j in range(m):
            if used >= k:
                break
            q = queues[j]
            while heads[j] < len(q) and taken[q[heads[j]]]:
                heads[j] += 1
            if heads[j] < len(q):
                i = q[heads[j]]
                x[i, j] = taken[i] = True
                used += 1
                progressed = True
        if not progressed:
            break
    return _result(instance, x, instance.required > len(cands))


def random_instance(rng: np.random.Generator, n: int, m: int,
                    sentinel_prob: float = 0.15, ineligible_prob: float = 0.2,
                    max_models_per_client: Optional[int] = None) -> SelectionInstance:
    """Random instance for solver validation."""
    scores = rng.uniform(0.0, 10.0, (n, m))
    scores[rng.random((n, m)) < sentinel_prob] = math.inf
    times = rng.uniform(0.5, 10.0, (n, m))
    eligible = rng.random((n, m)) >= ineligible_prob
    deadline = float(rng.uniform(1.0, 20.0))
    required = int(rng.integers(1, n + 2))
    return SelectionInstance(scores=scores, times=times, eligible=eligible,
                             deadline=deadline, required=required,
                             max_models_per_client=max_models_per_client)
