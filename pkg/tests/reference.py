"""Independent reference implementations used to derive expected test values.

Everything here is deliberately written from first principles — power
series, bisection, fsum accumulation, hand matrix arithmetic — and never
imports the package under test, so that agreement between the two code
paths is meaningful evidence rather than a tautology.
"""

import math

import numpy as np

SQRT2 = math.sqrt(2.0)


def ref_erf(x):
    """Error function via its Maclaurin series.

    erf(x) = (2/sqrt(pi)) * sum_{n>=0} (-1)^n x^(2n+1) / (n! (2n+1))

    Accurate to ~1e-13 absolute for |x| <= 3.5, which covers every value
    the tests evaluate (probability grids stay within +-4 sigma).
    """
    x = np.asarray(x, dtype=np.float64)
    total = np.zeros_like(x)
    term = np.array(x, dtype=np.float64)  # n = 0 term before the 1/(2n+1)
    for n in range(0, 120):
        total = total + term / (2 * n + 1)
        term = term * (-(x * x)) / (n + 1)
    return total * (2.0 / math.sqrt(math.pi))


def ref_normal_cdf(z):
    """Standard normal CDF built on the series erf above."""
    z = np.asarray(z, dtype=np.float64)
    return 0.5 * (1.0 + ref_erf(z / SQRT2))


def ref_inverse_normal_cdf(p):
    """Standard normal quantile by plain bisection against ref_normal_cdf.

    Accepts a scalar or an array; bisection runs elementwise to interval
    width 18 / 2^80, far below double precision.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.size and ((arr <= 0.0) | (arr >= 1.0)).any():
        raise ValueError("p must lie strictly inside (0, 1)")
    lo = np.full(arr.shape, -9.0)
    hi = np.full(arr.shape, 9.0)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = ref_normal_cdf(mid) < arr
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    return float(out) if arr.ndim == 0 else out


def ref_ks_statistic(values) -> float:
    """Two-sided Kolmogorov-Smirnov distance to the standard normal."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.size
    cdf = ref_normal_cdf(v)
    i = np.arange(n, dtype=np.float64)
    above = np.max((i + 1.0) / n - cdf)
    below = np.max(cdf - i / n)
    return float(max(above, below))


def ref_distance(x, y) -> float:
    """Euclidean distance with fsum accumulation (independent of np.linalg)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return math.sqrt(math.fsum(float(a - b) ** 2 for a, b in zip(x, y)))


def ref_crossing_alpha(normal, offset, x_adv, x_star) -> float:
    """Blend weight at which the segment toward x_star crosses a plane.

    The blend point(alpha) = alpha * x_star + (1 - alpha) * x_adv has
    signed value (1 - alpha) * s0 + alpha * s1 where s0, s1 are the plane
    values at the endpoints; the crossing solves that linear form for zero:
    alpha* = s0 / (s0 - s1).  Requires s0 > 0 > s1.
    """
    w = np.asarray(normal, dtype=np.float64)
    s0 = math.fsum(float(a * b) for a, b in zip(w, np.asarray(x_adv))) + offset
    s1 = math.fsum(float(a * b) for a, b in zip(w, np.asarray(x_star))) + offset
    if not (s0 > 0.0 > s1):
        raise ValueError("segment endpoints must straddle the plane")
    return s0 / (s0 - s1)


# Hand-evaluated two-layer network: weights chosen small enough to multiply
# out by hand; the expected scores below were worked out with pencil
# arithmetic, shown step by step.
#
#   hidden pre-activation for x = (0.25, 0.75):
#     row 1: 1.0*0.25 + 2.0*0.75 + 0.1  =  0.25 + 1.50 + 0.1  =  1.85
#     row 2: 3.0*0.25 + 4.0*0.75 - 0.2  =  0.75 + 3.00 - 0.2  =  3.55
#     row 3: 0.5*0.25 - 1.0*0.75 + 0.3  =  0.125 - 0.75 + 0.3 = -0.325
#   ReLU: (1.85, 3.55, 0.0)
#   output (identity):
#     score 0: 1.0*1.85 - 1.0*3.55 + 2.0*0.0 + 0.0   = -1.70
#     score 1: 0.5*1.85 + 1.0*3.55 - 0.5*0.0 + 0.25  =  4.725
HAND_NET_W1 = [[1.0, 2.0], [3.0, 4.0], [0.5, -1.0]]
HAND_NET_B1 = [0.1, -0.2, 0.3]
HAND_NET_W2 = [[1.0, -1.0, 2.0], [0.5, 1.0, -0.5]]
HAND_NET_B2 = [0.0, 0.25]
HAND_NET_INPUT = [0.25, 0.75]
HAND_NET_SCORES = [-1.70, 4.725]


TRACE_HEADER_LITERAL = (
    "t,M_t,delta_t,epsilon_t,queries,distortion,"
    "agree_count,step_retries,binsearch_steps"
)


def parse_trace_csv(path):
    """Independent parser for trace CSVs.

    Returns (rows, status) where each row is a dict with typed fields.
    Raises AssertionError on any structural deviation so round-trip tests
    fail loudly rather than silently coercing.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines, "empty trace file"
    assert lines[0] == TRACE_HEADER_LITERAL, f"bad header: {lines[0]!r}"
    assert lines[-1].startswith("# status="), f"missing status: {lines[-1]!r}"
    status = lines[-1][len("# status="):]
    rows = []
    for line in lines[1:-1]:
        parts = line.split(",")
        assert len(parts) == 9, f"bad column count in {line!r}"
        rows.append({
            "t": int(parts[0]),
            "n_samples": int(parts[1]),
            "probe_step": float(parts[2]),
            "step_size": float(parts[3]),
            "queries": int(parts[4]),
            "distortion": float(parts[5]),
            "agree_count": int(parts[6]),
            "step_retries": int(parts[7]),
            "bisect_steps": int(parts[8]),
        })
    return rows, status


def parse_summary_csv(path):
    """Independent parser for summary CSVs -> (rows, failure_comments)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines and lines[0] == "oracle,sampler,budget,statistic,distortion,repetitions"
    rows, comments = [], []
    for line in lines[1:]:
        if line.startswith("#"):
            comments.append(line)
            continue
        parts = line.split(",")
        assert len(parts) == 6, f"bad column count in {line!r}"
        rows.append({
            "oracle": parts[0],
            "sampler": parts[1],
            "budget": int(parts[2]),
            "statistic": parts[3],
            "distortion": float(parts[4]),
            "repetitions": int(parts[5]),
        })
    return rows, comments
