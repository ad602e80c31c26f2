"""Independent reference implementations used to check the library.

Everything here is written with plain Python loops over the raw time-point
rows; nothing is shared with the vectorised code under test.
"""

import math
import statistics
from fractions import Fraction
from itertools import combinations


def scale_of(values, kind):
    if kind == "MAD":
        med = statistics.median(values)
        return statistics.median([abs(v - med) for v in values])
    if kind == "AAD":
        return sum(abs(v) for v in values) / len(values)
    raise ValueError(kind)


def longitudinal_scales(A, B, categorical, kind="MAD"):
    n, d = len(A), len(A[0])
    out = []
    for j in range(d):
        if categorical[j]:
            out.append(sum(1 for i in range(n) if A[i][j] != B[i][j]) / n)
        else:
            out.append(scale_of([B[i][j] - A[i][j] for i in range(n)], kind))
    return out


def row_cost(x, e, a, b, categorical, scales, tol, norm="l1"):
    """Distance between the proposed change x -> e and the observed change a -> b."""
    parts = []
    for j in range(len(x)):
        div = scales[j] + tol
        if categorical[j]:
            proposed_moves, observed_moves = x[j] != e[j], a[j] != b[j]
            if not proposed_moves and not observed_moves:
                agree = True
            elif proposed_moves and observed_moves:
                agree = e[j] == b[j]
            else:
                agree = False
            num = 0.0 if agree else 1.0
        else:
            num = abs((e[j] - x[j]) - (b[j] - a[j]))
        if num == 0:
            parts.append(0.0)
        else:
            parts.append(num / div if div > 0 else math.inf)
    if norm == "l1":
        total = 0.0
        for p in parts:
            total += p
        return total
    return math.sqrt(sum(p * p for p in parts))


def brute_force_distance(x, e, A, B, categorical, scales, tol, s, norm="l1"):
    """Minimum over every size-s index set of the mean row cost."""
    costs = [row_cost(x, e, A[i], B[i], categorical, scales, tol, norm) for i in range(len(A))]
    best = math.inf
    for idx in combinations(range(len(A)), s):
        picked = [costs[i] for i in idx]
        if all(math.isfinite(c) for c in picked):
            mean = float(sum(Fraction(c) for c in picked) / s)
        else:
            mean = math.inf
        best = min(best, mean)
    return best


def brute_force_curve(score_lists, t):
    n = len(score_lists)
    any_ = sum(1 for v in score_lists if any(c <= t for c in v)) / n
    mean = sum((sum(1 for c in v if c <= t) / len(v)) if v else 0.0 for v in score_lists) / n
    return any_, mean


def oracle_value(schema, pair, kind, tol, s, x, e, norm):
    """Brute-force distance for a problem from ``conftest.random_instance``."""
    A, B = pair.time1.tolist(), pair.time2.tolist()
    cat = [bool(c) for c in schema.categorical_mask]
    scales = longitudinal_scales(A, B, cat, kind)
    return brute_force_distance(list(x), list(e), A, B, cat, scales, tol, s, norm)


def simulator_violations(data, pair, donors, config):
    """Count broken invariants the long way, row by row."""
    schema = data.schema
    swap = [schema.index(n) for n in config.swap_features]
    edu, age = schema.index(config.education_feature), schema.index(config.age_feature)
    untouched = [j for j in range(len(schema)) if j not in swap + [edu, age]]
    lo, hi = config.age_increment
    bad = 0
    A, B = pair.time1, pair.time2
    for i in range(len(A)):
        bad += any(A[i, j] != B[i, j] for j in untouched)
        bad += not lo <= B[i, age] - A[i, age] <= hi
        bad += not 0 <= B[i, edu] - A[i, edu] <= 1
        d = donors[i]
        if d >= 0:
            bad += d == i
            bad += A[d, edu] != B[i, edu]
            bad += any(B[i, j] != A[d, j] for j in swap)
        else:
            bad += any(B[i, j] != A[i, j] for j in swap)
    return bad
