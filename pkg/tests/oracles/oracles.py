"""Independent pure-Python reference values.

Nothing here imports the package.  Run as a script to regenerate
``frozen.json``; the tests compare the package against the frozen numbers.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

FROZEN = Path(__file__).with_name("frozen.json")


def grid(eta, t_max, gamma=1.05, rho=4.0, h_min=1e-3, include=()):
    x1 = min(h_min, t_max)
    while x1 > eta(x1) / rho:
        x1 /= 2.0
    pts = [0.0, x1]
    x = x1
    while x < t_max:
        x = x + min((gamma - 1.0) * x, eta(x) / rho)
        pts.append(x)
    pts[-1] = t_max
    pts.extend(p for p in include if 0 < p < t_max)
    return sorted(set(pts))


def shortest_path(nodes, eta, omega):
    """Plain double loop over predecessor nodes."""
    v = [0.0]
    for k in range(1, len(nodes)):
        xk, ek = nodes[k], eta(nodes[k])
        best = math.inf
        for j in range(k):
            d = xk - nodes[j]
            c = v[j] + max(1.0, d / ek) * omega(d)
            if c < best:
                best = c
        v.append(best)
    return v


def unit_pieces_cost(h, omega):
    """Cost of cutting [0, h] into floor(h) unit pieces plus a remainder, for width 1."""
    n = int(h)
    rest = h - n
    return n * omega(1.0) + (omega(rest) if rest > 0 else 0.0)


def power_log_chord(alpha, beta):
    """Concavity start and minimal chord constant for h^a log^b h."""
    qa, qb, qc = alpha * (alpha - 1), beta * (2 * alpha - 1), beta * (beta - 1)
    disc = qb * qb - 4 * qa * qc
    u = max(((-qb + math.sqrt(disc)) / (2 * qa), (-qb - math.sqrt(disc)) / (2 * qa)))
    h0 = math.exp(max(u, 1.0))
    lu = math.log(h0)
    f = h0 ** alpha * lu ** beta
    df = h0 ** (alpha - 1) * (alpha * lu ** beta + beta * lu ** (beta - 1))
    return h0, max(0.0, h0 * df - f)


def generate() -> dict:
    sq = math.sqrt
    one = lambda x: 1.0  # noqa: E731
    ps = lambda x: (1.0 + x) ** 0.4  # noqa: E731

    g1 = grid(one, 100.0, include=(100.0,))
    v1 = shortest_path(g1, one, sq)
    g2 = grid(ps, 1000.0, include=(1.0,))
    v2 = shortest_path(g2, ps, sq)
    snap = lambda g, h: max(x for x in g if x <= h)  # noqa: E731
    probes = [snap(g2, h) for h in (1.0, 10.0, 100.0, 1000.0)]
    h0, C = power_log_chord(0.5, 1.0)
    q = max(1.0, ps(1.0) / 1.0)
    return {
        "constant_width_sqrt": {
            "t_max": 100.0, "nodes": len(g1), "value_at_100": v1[-1],
            "unit_pieces_cost": unit_pieces_cost(100.0, sq),
        },
        "power_shift_sqrt": {
            "t_max": 1000.0, "nodes": len(g2), "h": probes,
            "values": [v2[g2.index(h)] for h in probes],
        },
        "power_log_0.5_1": {"h0": h0, "C": C},
        "standard_construction": {"a": 1.0, "q": q, "b": 1280.0 * q * q},
    }


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(generate(), indent=2) + "\n", encoding="utf-8")
