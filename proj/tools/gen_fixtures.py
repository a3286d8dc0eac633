#!/usr/bin/env python3
"""Markov partition fixtures for the torus map [[2,1],[1,1]].

Works in eigen-coordinates, where the map is (x, y) -> (lam*x, y/lam) and every
coordinate lies in Q(sqrt5). Rectangles are axis-parallel boxes in the plane;
the surface is the plane modulo a map-invariant lattice.
"""

import argparse
import functools
import itertools
import json
import os
from fractions import Fraction


class Q5:
    """a + b*sqrt(5) with rational a, b."""

    __slots__ = ("a", "b")

    def __init__(self, a=0, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    def __add__(self, o):
        o = lift(o)
        return Q5(self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Q5(-self.a, -self.b)

    def __sub__(self, o):
        return self + (-lift(o))

    def __rsub__(self, o):
        return lift(o) - self

    def __mul__(self, o):
        o = lift(o)
        return Q5(self.a * o.a + 5 * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def __rtruediv__(self, o):
        return lift(o) / self

    def __truediv__(self, o):
        o = lift(o)
        n = o.a * o.a - 5 * o.b * o.b
        return self * Q5(o.a / n, -o.b / n)

    def sign(self):
        # sign of a + b*sqrt5 without floating point
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sb == 0:
            return sa
        if sa == 0:
            return sb
        d = self.a * self.a - 5 * self.b * self.b
        return sa if d > 0 else (sb if d < 0 else 0)

    def __lt__(self, o):
        return (self - o).sign() < 0

    def __le__(self, o):
        return (self - o).sign() <= 0

    def __gt__(self, o):
        return (self - o).sign() > 0

    def __ge__(self, o):
        return (self - o).sign() >= 0

    def __eq__(self, o):
        o = lift(o)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * 5 ** 0.5

    def __repr__(self):
        return f"{float(self):.6f}"


def lift(x):
    return x if isinstance(x, Q5) else Q5(x)


SQ5 = Q5(0, 1)
PHI = (1 + SQ5) / 2
LAM = PHI * PHI
A = Q5(1)
B = 1 / PHI
BASIS = ((A, -B), (B, A))


@functools.lru_cache(maxsize=None)
def lattice(scale, reach):
    out = []
    for m in range(-reach, reach + 1):
        for n in range(-reach, reach + 1):
            out.append((m, n, scale * (m * BASIS[0][0] + n * BASIS[1][0]),
                        scale * (m * BASIS[0][1] + n * BASIS[1][1])))
    return out


def in_lattice(x, y, scale):
    # solve x = s*(m*a + n*b), y = s*(-m*b + n*a) for integers m, n
    det = scale * (A * A + B * B)
    m = (x * A - y * B) / det
    n = (x * B + y * A) / det
    ok = all(v.b == 0 and v.a.denominator == 1 for v in (m, n))
    return ok


def overlap(a0, a1, b0, b1):
    lo, hi = max(a0, b0), min(a1, b1)
    return (lo, hi) if lo < hi else None


EPS = 1e-9


class Partition:
    def __init__(self, rects, scale=1, reach=4):
        self.rects = rects  # list of (x0, x1, y0, y1)
        self.scale = scale
        self.reach = reach
        self.vecs = lattice(scale, reach)
        self.frects = [tuple(map(float, r)) for r in rects]
        self.fvecs = [(float(v[2]), float(v[3])) for v in self.vecs]
        self._dyn = None

    # ------------------------------------------------------------------
    def gluing(self):
        """Cut every side into segments matched with a neighbouring side."""
        n = len(self.rects)
        pieces = {}  # (rect, side) -> list of (lo, hi, (rect', side'), shift)
        for i in range(n):
            for side in ("bottom", "top", "left", "right"):
                pieces[(i, side)] = []
        for i, ri in enumerate(self.rects):
            x0, x1, y0, y1 = ri
            fx0, fx1, fy0, fy1 = self.frects[i]
            for j, rj in enumerate(self.rects):
                g = self.frects[j]
                for (_, _, vx, vy), (fvx, fvy) in zip(self.vecs, self.fvecs):
                    if j == i and vx == 0 and vy == 0:
                        continue
                    right = abs(g[0] + fvx - fx1) < EPS and g[2] + fvy < fy1 - EPS and g[3] + fvy > fy0 + EPS
                    top = abs(g[2] + fvy - fy1) < EPS and g[0] + fvx < fx1 - EPS and g[1] + fvx > fx0 + EPS
                    if not (right or top):
                        continue
                    u0, u1, w0, w1 = rj[0] + vx, rj[1] + vx, rj[2] + vy, rj[3] + vy
                    if u0 == x1:
                        ov = overlap(y0, y1, w0, w1)
                        if ov:
                            pieces[(i, "right")].append((ov[0], ov[1], (j, "left"), vy))
                    if w0 == y1:
                        ov = overlap(x0, x1, u0, u1)
                        if ov:
                            pieces[(i, "top")].append((ov[0], ov[1], (j, "bottom"), vx))
        # mirror right->left and top->bottom
        for (i, side), lst in list(pieces.items()):
            if side not in ("right", "top"):
                continue
            for lo, hi, (j, oside), shift in lst:
                pieces[(j, oside)].append((lo - shift, hi - shift, (i, side), -shift))
        seg_id = {}
        sides = {}
        next_id = 1
        for i in range(n):
            for side in ("bottom", "top", "left", "right"):
                lst = sorted(pieces[(i, side)], key=lambda t: float(t[0]))
                x0, x1, y0, y1 = self.rects[i]
                span = (x0, x1) if side in ("bottom", "top") else (y0, y1)
                total = Q5(0)
                for lo, hi, _, _ in lst:
                    total = total + (hi - lo)
                if total != span[1] - span[0]:
                    raise ValueError(f"side {side} of rectangle {i} not covered")
                ids = []
                for lo, hi, other, shift in lst:
                    seg_id[(i, side, lo)] = next_id
                    ids.append((next_id, lo, hi, other, shift))
                    next_id += 1
                sides[(i, side)] = ids
        segments = []
        for (i, side), lst in sides.items():
            for sid, lo, hi, (j, oside), shift in lst:
                partner = seg_id[(j, oside, lo - shift)]
                segments.append({"id": sid, "partner": partner, "reversed": False})
        segments.sort(key=lambda s: s["id"])
        return sides, segments

    # ------------------------------------------------------------------
    def dynamics(self):
        if self._dyn is None:
            self._dyn = self._dynamics()
        return self._dyn

    def _dynamics(self):
        n = len(self.rects)
        lam = float(LAM)
        passes = {i: [] for i in range(n)}
        for i, (x0, x1, y0, y1) in enumerate(self.rects):
            fx0, fx1, fy0, fy1 = LAM * x0, LAM * x1, y0 / LAM, y1 / LAM
            f = self.frects[i]
            gx0, gx1, gy0, gy1 = lam * f[0], lam * f[1], f[2] / lam, f[3] / lam
            for j, rj in enumerate(self.rects):
                g = self.frects[j]
                for (_, _, vx, vy), (fvx, fvy) in zip(self.vecs, self.fvecs):
                    if not (g[0] + fvx < gx1 - EPS and g[1] + fvx > gx0 + EPS and
                            g[2] + fvy < gy1 - EPS and g[3] + fvy > gy0 + EPS):
                        continue
                    u0, u1, w0, w1 = rj[0] + vx, rj[1] + vx, rj[2] + vy, rj[3] + vy
                    ox = overlap(fx0, fx1, u0, u1)
                    oy = overlap(fy0, fy1, w0, w1)
                    if not (ox and oy):
                        continue
                    if ox != (u0, u1) or oy != (fy0, fy1):
                        raise ValueError(f"not Markov: image of {i} meets {j} partially")
                    passes[i].append((u0, j, oy[0] - vy))
            passes[i].sort(key=lambda t: float(t[0]))
            total = sum((self.rects[j][1] - self.rects[j][0] for _, j, _ in passes[i]), Q5(0))
            if total != LAM * (x1 - x0):
                raise ValueError(f"image of {i} not covered by passes")
        stacks = {j: [] for j in range(n)}
        for i in range(n):
            for k, (_, j, ybot) in enumerate(passes[i]):
                stacks[j].append((ybot, i, k))
        for j in range(n):
            stacks[j].sort(key=lambda t: float(t[0]))
            h = sum(((self.rects[i][3] - self.rects[i][2]) / LAM for _, i, _ in stacks[j]), Q5(0))
            if h != self.rects[j][3] - self.rects[j][2]:
                raise ValueError(f"stack of {j} does not fill it")
        return passes, stacks

    def matrix(self, passes):
        n = len(self.rects)
        m = [[0] * n for _ in range(n)]
        for i in range(n):
            for _, j, _ in passes[i]:
                m[i][j] += 1
        return m

    # ------------------------------------------------------------------
    def cuts(self):
        """Vertical cuts along pass transitions, horizontal cuts along strip boundaries."""
        passes, stacks = self.dynamics()
        out = []
        for i, (x0, x1, y0, y1) in enumerate(self.rects):
            x = LAM * x0
            for _, j, _ in passes[i][:-1]:
                x = x + (self.rects[j][1] - self.rects[j][0])
                out.append(("v", i, x / LAM))
        for j, (x0, x1, y0, y1) in enumerate(self.rects):
            for ybot, _, _ in stacks[j][1:]:
                out.append(("h", j, ybot))
        return out

    def cut(self, c):
        kind, i, t = c
        x0, x1, y0, y1 = self.rects[i]
        rs = list(self.rects)
        if kind == "v":
            rs[i:i + 1] = [(x0, t, y0, y1), (t, x1, y0, y1)]
        else:
            rs[i:i + 1] = [(x0, x1, y0, t), (x0, x1, t, y1)]
        return Partition(rs, self.scale, self.reach)

    # ------------------------------------------------------------------
    def marked(self):
        """Lattice points of the base torus on rectangle corners."""
        pts = []
        for x0, x1, y0, y1 in self.rects:
            for x, y in ((x0, y0), (x1, y0), (x0, y1), (x1, y1)):
                if in_lattice(x, y, Q5(1)):
                    pts.append((x, y))
        return pts

    def to_json(self, marked_classes, genus, name):
        sides, segments = self.gluing()
        passes, stacks = self.dynamics()
        rects = []
        for i in range(len(self.rects)):
            rects.append({"id": i + 1, **{s: [t[0] for t in sides[(i, s)]] for s in ("top", "bottom", "left", "right")}})
        points = []
        for cls in marked_classes:
            x, y = cls
            at = self.locate(sides, x, y)
            points.append({"kind": "marked", "prongs": 2, "at": at})
        out = {
            "name": name,
            "surface": {"genus": genus, "marked_points": len(points)},
            "rectangles": rects,
            "segments": segments,
            "points": points,
            "map": {
                "passes": {str(i + 1): [{"target": j + 1, "reversed": False} for _, j, _ in passes[i]]
                           for i in range(len(self.rects))},
                "stacks": {str(j + 1): [{"source": i + 1, "pass_index": k} for _, i, k in stacks[j]]
                           for j in range(len(self.rects))},
            },
        }
        return out

    def locate(self, sides, x, y):
        """A segment endpoint sitting at (x, y) modulo the lattice."""
        for i, (x0, x1, y0, y1) in enumerate(self.rects):
            for _, _, vx, vy in self.vecs:
                px, py = x - vx, y - vy
                for side, yy in (("bottom", y0), ("top", y1)):
                    if py != yy:
                        continue
                    for sid, lo, hi, _, _ in sides[(i, side)]:
                        if px == lo:
                            return {"segment": sid, "end": 0}
                        if px == hi:
                            return {"segment": sid, "end": 1}
        raise ValueError("point not on any segment endpoint")


def e2():
    return Partition([(Q5(0), A, Q5(0), A), (A, A + B, A - B, A)])


def unmixed_chains(m):
    n = len(m)
    deg = [sum(r) for r in m]
    codeg = [sum(m[i][j] for i in range(n)) for j in range(n)]
    nxt = {}
    for i in range(n):
        if deg[i] == 1:
            j = m[i].index(1)
            if codeg[j] == 1:
                nxt[i] = j
    prev = {j: i for i, j in nxt.items()}
    chains = []
    for i in range(n):
        if i in prev:
            continue
        c = [i]
        while c[-1] in nxt:
            c.append(nxt[c[-1]])
        chains.append(c)
    return chains


def float_marked(x, y):
    a, b = 1.0, float(B)
    det = a * a + b * b
    m = (x * a - y * b) / det
    n = (x * b + y * a) / det
    return abs(m - round(m)) < 1e-7 and abs(n - round(n)) < 1e-7


def neighbours(p):
    """N_1 by geometry: rectangles whose closures share a point that is not marked."""
    n = len(p.rects)
    out = [{i} for i in range(n)]
    for i in range(n):
        x0, x1, y0, y1 = p.frects[i]
        for j in range(n):
            g = p.frects[j]
            for fvx, fvy in p.fvecs:
                lo_x, hi_x = max(x0, g[0] + fvx), min(x1, g[1] + fvx)
                lo_y, hi_y = max(y0, g[2] + fvy), min(y1, g[3] + fvy)
                if lo_x > hi_x + EPS or lo_y > hi_y + EPS:
                    continue
                if hi_x - lo_x > EPS or hi_y - lo_y > EPS or not float_marked(lo_x, lo_y):
                    out[i].add(j)
    return out


def n_chains(p):
    passes, _ = p.dynamics()
    m = p.matrix(passes)
    n = len(m)
    deg = [sum(r) for r in m]
    codeg = [sum(m[i][j] for i in range(n)) for j in range(n)]
    mixed = [not (deg[i] == 1 and codeg[m[i].index(1)] == 1) for i in range(n)]
    nb = neighbours(p)
    classes = []
    for ch in unmixed_chains(m):
        cur = [ch[0]]
        for a, b in zip(ch, ch[1:]):
            if any(mixed[r] for r in nb[a]):
                classes.append(cur)
                cur = [b]
            else:
                cur.append(b)
        classes.append(cur)
    return classes


def score(p):
    passes, _ = p.dynamics()
    m = p.matrix(passes)
    h = max(len(c) for c in unmixed_chains(m))
    nc = max(len(c) for c in n_chains(p))
    unmixed = sum(1 for c in unmixed_chains(m) for _ in c[:-1])
    return (nc, h, unmixed, -len(p.rects))


def beam(start, limit, width):
    key = lambda p: tuple(sorted(p.frects))
    level = [start]
    seen = {key(start)}
    best = []
    while level:
        cand = []
        for p in level:
            if len(p.rects) >= limit:
                continue
            for c in p.cuts():
                q = p.cut(c)
                k = key(q)
                if k in seen:
                    continue
                seen.add(k)
                try:
                    cand.append((score(q), q))
                except ValueError:
                    continue
        cand.sort(key=lambda t: t[0], reverse=True)
        level = [q for _, q in cand[:width]]
        best.extend(cand[:width])
    best.sort(key=lambda t: t[0], reverse=True)
    return best


def cover():
    """E2 lifted to the plane modulo twice the lattice: 8 rectangles, 4 marked points."""
    base = e2().rects
    rs = []
    for m, n in itertools.product((0, 1), repeat=2):
        vx = m * BASIS[0][0] + n * BASIS[1][0]
        vy = m * BASIS[0][1] + n * BASIS[1][1]
        for x0, x1, y0, y1 in base:
            rs.append((x0 + vx, x1 + vx, y0 + vy, y1 + vy))
    p = Partition(rs, scale=2)
    pts = []
    for m, n in itertools.product((0, 1), repeat=2):
        pts.append((m * BASIS[0][0] + n * BASIS[1][0], m * BASIS[0][1] + n * BASIS[1][1]))
    return p, pts


class Symbolic:
    """Cylinder tilings of a base partition: a tile is (node, past edges, future edges)."""

    def __init__(self, base):
        self.base = base
        self.passes, self.stacks = base.dynamics()
        self.out = {i: [(i, k) for k in range(len(ps))] for i, ps in self.passes.items()}
        self.into = {j: [(i, k) for _, i, k in st] for j, st in self.stacks.items()}

    def target(self, e):
        return self.passes[e[0]][e[1]][1]

    def x_range(self, i, fw):
        x0, x1, _, _ = self.base.rects[i]
        if not fw:
            return x0, x1
        _, k = fw[0]
        j = self.target(fw[0])
        off = sum((self.base.rects[t][1] - self.base.rects[t][0] for _, t, _ in self.passes[i][:k]), Q5(0))
        a, b = self.x_range(j, fw[1:])
        xj = self.base.rects[j][0]
        return x0 + (off + a - xj) / LAM, x0 + (off + b - xj) / LAM

    def y_range(self, j, pw):
        _, _, y0, y1 = self.base.rects[j]
        if not pw:
            return y0, y1
        i, k = pw[-1]
        a, b = self.y_range(i, pw[:-1])
        ybot = self.passes[i][k][2]
        yi = self.base.rects[i][2]
        return ybot + (a - yi) / LAM, ybot + (b - yi) / LAM

    def rect(self, t):
        node, pw, fw = t
        return self.x_range(node, fw) + self.y_range(node, pw)

    def split_future(self, t):
        node, pw, fw = t
        last = self.target(fw[-1]) if fw else node
        return [(node, pw, fw + (e,)) for e in self.out[last]]

    def split_past(self, t):
        node, pw, fw = t
        first = pw[0][0] if pw else node
        return [(node, (e,) + pw, fw) for e in self.into[first]]

    @staticmethod
    def compatible(t, u):
        if t[0] != u[0]:
            return False
        n = min(len(t[2]), len(u[2]))
        m = min(len(t[1]), len(u[1]))
        return t[2][:n] == u[2][:n] and (m == 0 or t[1][-m:] == u[1][-m:])

    def image(self, t):
        node, pw, fw = t
        if fw:
            return [(self.target(fw[0]), pw + (fw[0],), fw[1:])]
        return [(self.target(e), pw + (e,), ()) for e in self.out[node]]

    def carve(self, tiles, goal):
        while True:
            for t in tiles:
                if not self.compatible(t, goal) or (len(t[1]) >= len(goal[1]) and len(t[2]) >= len(goal[2])):
                    continue
                tiles.remove(t)
                tiles.extend(self.split_future(t) if len(t[2]) < len(goal[2]) else self.split_past(t))
                break
            else:
                return tiles

    def close(self, tiles, protected, rounds=10000):
        """Refine until every image piece crosses the tiles it meets, or fail on a protected tile."""
        for _ in range(rounds):
            bad = None
            for t in tiles:
                for piece in self.image(t):
                    for u in tiles:
                        if not self.compatible(piece, u):
                            continue
                        if len(u[2]) < len(piece[2]):
                            bad = (u, "f")
                        elif len(u[1]) > len(piece[1]):
                            bad = (t, "p")
                        if bad:
                            break
                    if bad:
                        break
                if bad:
                    break
            if not bad:
                return tiles
            t, how = bad
            if t in protected:
                raise ValueError(f"closure must split protected tile {t}")
            tiles.remove(t)
            tiles.extend(self.split_future(t) if how == "f" else self.split_past(t))
        raise ValueError("closure did not converge")


def tower(base=None):
    """A refinement of E2 with a block B, phi(B), phi^2(B) tiled compatibly.

    B is a 3x3 grid of cylinders; the centre tile and its next three images are unmixed, so
    the centre starts an unmixed chain of four rectangles whose first three share unmixed
    neighbourhoods.
    """
    base = base or e2()
    s = Symbolic(base)
    a = [(i, k) for i in s.out for k in range(len(s.out[i]))]
    a0 = next(e for e in a if e[0] == 0 and s.target(e) == 1)
    a1 = next(e for e in a if e[0] == 1 and s.target(e) == 1)
    a2 = next(e for e in a if e[0] == 1 and s.target(e) == 0)
    word = (a0, a1, a2)
    preds = sorted(s.into[0], key=lambda e: float(s.y_range(0, (e,))[0]))
    succs = sorted(s.out[0], key=lambda e: float(s.x_range(0, (e,))[0]))
    block = [(0, (p,), word + (q,)) for p in preds for q in succs]
    centre = (0, (preds[1],), word + (succs[1],))
    orbit = [block]
    for _ in range(2):
        orbit.append([s.image(t)[0] for t in orbit[-1]])
    chain = [centre]
    for _ in range(3):
        chain.append(s.image(chain[-1])[0])
    goals = [t for level in orbit for t in level] + [chain[3]]
    tiles = [(i, (), ()) for i in range(len(base.rects))]
    for g in goals:
        tiles = s.carve(tiles, g)
    protected = set(goals)
    tiles = s.close(tiles, protected)
    tiles.sort(key=lambda t: (t[0], [float(v) for v in s.rect(t)]))
    p = Partition([s.rect(t) for t in tiles], base.scale, base.reach)
    return p, [tiles.index(t) for t in chain]


def e3():
    """Hand-built 3-rectangle partition for B = [[0,1,0],[0,0,2],[1,0,1]].

    Horizontal sides form an interval exchange, each vertical side is glued to the
    opposite side of the same rectangle. One 10-prong singular vertex, genus 3.
    """
    tops = {1: [1], 2: [2, 3, 4], 3: [5]}
    bottoms = {3: [6, 7], 1: [8], 2: [9, 10]}
    pairs = [(1, 6), (2, 7), (3, 8), (4, 9), (5, 10), (11, 14), (12, 15), (13, 16)]
    rects = []
    for i in (1, 2, 3):
        rects.append({"id": i, "top": tops[i], "bottom": bottoms[i], "left": [10 + i], "right": [13 + i]})
    segs = []
    for x, y in pairs:
        segs.append({"id": x, "partner": y, "reversed": False})
        segs.append({"id": y, "partner": x, "reversed": False})
    segs.sort(key=lambda s: s["id"])

    def passes(*ts):
        return [{"target": t, "reversed": False} for t in ts]

    def stack(*es):
        return [{"source": s, "pass_index": k} for s, k in es]

    return {
        "name": "e3",
        "surface": {"genus": 3, "marked_points": 0},
        "rectangles": rects,
        "segments": segs,
        "points": [{"kind": "singular", "prongs": 10, "at": {"segment": 1, "end": 0}}],
        "map": {
            "passes": {"1": passes(2), "2": passes(3, 3), "3": passes(1, 3)},
            "stacks": {"1": stack((3, 0)), "2": stack((1, 0)), "3": stack((2, 0), (2, 1), (3, 1))},
        },
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    ap.add_argument("--limit", type=int, default=6)
    ap.add_argument("--count", type=int, default=6)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    def dump(name, obj):
        with open(os.path.join(args.out, name + ".json"), "w") as f:
            json.dump(obj, f, indent=1)
            f.write("\n")

    base = e2()
    origin = [(Q5(0), Q5(0))]
    dump("e2", base.to_json(origin, 1, "e2"))
    broken = base.to_json(origin, 1, "e2_broken")
    broken["segments"][0]["partner"] = broken["segments"][2]["id"]
    dump("e2_broken", broken)

    dump("e3", e3())

    c, pts = cover()
    dump("cover4", c.to_json(pts, 1, "cover4"))

    p, chain = tower()
    doc = p.to_json(origin, 1, "chain4")
    doc["notes"] = {"chain": [i + 1 for i in chain]}
    dump("chain4", doc)

    picked = []
    for sc, q in beam(base, args.limit, 8):
        if len(q.rects) <= args.limit and all(q.rects != r.rects for r in picked):
            picked.append(q)
        if len(picked) == args.count:
            break
    for k, q in enumerate(picked):
        dump(f"refine{k:02d}", q.to_json(origin, 1, f"refine{k:02d}"))
    print(f"{len(picked)} refinements written")


if __name__ == "__main__":
    main()
