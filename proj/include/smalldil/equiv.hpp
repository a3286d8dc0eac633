#pragma once

#include "surface_cells.hpp"

#include <limits>
#include <numeric>
#include <set>

namespace smalldil {

inline long clamp_long(const Rat& v) {
    if (v >= Rat(std::numeric_limits<long>::max())) return std::numeric_limits<long>::max();
    return static_cast<long>(floor_rat(v));
}

// ---------------------------------------------------------------------------
// rectangle relations

struct Neighborhoods {
    std::vector<std::set<size_t>> n1;
    long max_size = 0;
    Rat D3;
    bool within = true;
};

/// Rectangles meeting R in a point that is neither singular nor marked, R included.
inline Neighborhoods neighborhoods(const MarkovPartition& mp, std::optional<Rat> P = std::nullopt) {
    const auto& vc = mp.vertices;
    Neighborhoods nb;
    nb.n1.assign(mp.n(), {});
    std::vector<std::set<size_t>> at_vertex(vc.count);
    for (size_t s = 0; s < mp.segments.size(); ++s)
        for (int e : {0, 1}) at_vertex[vc.at(s, e)].insert(mp.segments[s].rect);
    for (size_t r = 0; r < mp.n(); ++r) nb.n1[r].insert(r);
    for (const auto& seg : mp.segments) nb.n1[seg.rect].insert(mp.segments[seg.partner].rect);
    for (size_t v = 0; v < vc.count; ++v) {
        if (vc.special(v)) continue;
        for (size_t a : at_vertex[v]) nb.n1[a].insert(at_vertex[v].begin(), at_vertex[v].end());
    }
    for (const auto& s : nb.n1) nb.max_size = std::max(nb.max_size, static_cast<long>(s.size()));
    if (P) {
        nb.D3 = constants(*P).D3;
        nb.within = Rat(nb.max_size) <= nb.D3;
    }
    return nb;
}

/// Rectangle classes as chains R, phi(R), phi^2(R), ...
struct EquivalenceTable {
    std::vector<size_t> order;
    std::vector<std::vector<size_t>> h, N, Y;
    std::vector<size_t> h_of, N_of, Y_of, pos;  // pos: index inside the h-chain
    std::vector<bool> mixed;
    std::vector<long> next;                     // unmixed target or -1

    std::optional<long> beta(size_t a, size_t b) const {
        if (h_of[a] != h_of[b]) return std::nullopt;
        return static_cast<long>(pos[b]) - static_cast<long>(pos[a]);
    }
    bool filled(size_t r) const { return Y[Y_of[r]].back() != r; }
    bool initial_in_Y(size_t r) const { return Y[Y_of[r]].front() == r; }
    size_t filled_count() const {
        size_t c = 0;
        for (const auto& cl : Y) c += cl.size() - 1;
        return c;
    }
};

inline std::vector<long> unmixed_targets(const MarkovPartition& mp, const std::vector<bool>& mixed) {
    std::vector<long> next(mp.n(), -1);
    for (size_t i = 0; i < mp.n(); ++i)
        if (!mixed[i]) next[i] = static_cast<long>(mp.map.passes[i][0].target);
    return next;
}

inline std::vector<std::vector<size_t>> h_classes(const MarkovPartition& mp) {
    auto mixed = mixed_flags(mp, 1);
    auto next = unmixed_targets(mp, mixed);
    std::vector<char> has_prev(mp.n(), 0);
    for (long t : next)
        if (t >= 0) has_prev[static_cast<size_t>(t)] = 1;
    std::vector<std::vector<size_t>> out;
    std::vector<char> seen(mp.n(), 0);
    for (size_t i = 0; i < mp.n(); ++i) {
        if (has_prev[i]) continue;
        std::vector<size_t> ch{i};
        seen[i] = 1;
        while (next[ch.back()] >= 0) {
            size_t t = static_cast<size_t>(next[ch.back()]);
            ch.push_back(t);
            seen[t] = 1;
        }
        out.push_back(std::move(ch));
    }
    for (size_t i = 0; i < mp.n(); ++i)
        if (!seen[i]) throw invariant_error(mp.rect_name(i) + " lies on a cycle of unmixed rectangles");
    return out;
}

inline std::vector<std::vector<size_t>> N_classes(const MarkovPartition& mp, const std::vector<std::vector<size_t>>& h,
                                                  const Neighborhoods& nb) {
    auto mixed = mixed_flags(mp, 1);
    std::vector<std::vector<size_t>> out;
    for (const auto& ch : h) {
        std::vector<size_t> cur{ch[0]};
        for (size_t k = 0; k + 1 < ch.size(); ++k) {
            bool split = false;
            for (size_t r : nb.n1[ch[k]]) split = split || mixed[r];
            if (split) {
                out.push_back(cur);
                cur = {ch[k + 1]};
            } else {
                cur.push_back(ch[k + 1]);
            }
        }
        out.push_back(cur);
    }
    return out;
}

inline std::vector<std::vector<size_t>> Y_classes(const std::vector<std::vector<size_t>>& N) {
    std::vector<std::vector<size_t>> out;
    for (const auto& c : N) {
        out.push_back({c[0]});
        if (c.size() > 1) out.emplace_back(c.begin() + 1, c.end());
    }
    return out;
}

inline EquivalenceTable equivalence_table(const MarkovPartition& mp, const Neighborhoods& nb) {
    EquivalenceTable t;
    t.mixed = mixed_flags(mp, 1);
    t.next = unmixed_targets(mp, t.mixed);
    t.h = h_classes(mp);
    t.N = N_classes(mp, t.h, nb);
    t.Y = Y_classes(t.N);
    auto index = [&](const std::vector<std::vector<size_t>>& cls, std::vector<size_t>& of) {
        of.assign(mp.n(), 0);
        for (size_t c = 0; c < cls.size(); ++c)
            for (size_t r : cls[c]) of[r] = c;
    };
    index(t.h, t.h_of);
    index(t.N, t.N_of);
    index(t.Y, t.Y_of);
    t.pos.assign(mp.n(), 0);
    for (const auto& ch : t.h)
        for (size_t k = 0; k < ch.size(); ++k) {
            t.pos[ch[k]] = k;
            t.order.push_back(ch[k]);
        }
    return t;
}

struct ClassBounds {
    size_t h = 0, N = 0, Y = 0;
    Rat E_h, E_N, E_Y;
    bool holds() const { return Rat(h) <= E_h && Rat(N) <= E_N && Rat(Y) <= E_Y; }
};

inline ClassBounds class_bounds(const EquivalenceTable& t, const Rat& P) {
    auto c = constants(P);
    return {t.h.size(), t.N.size(), t.Y.size(), c.E_h, c.E_N, c.E_Y};
}

// ---------------------------------------------------------------------------
// cell maps on filled rectangles

/// A signed cell map between Y cells.
using CellMap = std::map<int, Incidence>;

/// phi restricted to the closed rectangles with filled boxes, as a map of Y cells. Also
/// records every reason the restriction fails to be cellular.
struct StepMaps {
    CellMap forward, backward;
    std::vector<std::string> problems;
    std::vector<std::set<int>> rect_cells;  // closure of each rectangle in Y
};

namespace detail {

inline std::set<int> rect_closure(const YStructure& y, size_t r) {
    std::set<int> out;
    for (int s : y.strips[r]) {
        auto c = closure(y.sc.cx, s);
        out.insert(c.begin(), c.end());
    }
    return out;
}

/// phi on the closure of R, when X and Y agree on R and on phi(R).
inline std::optional<CellMap> rect_step(const MarkovPartition& mp, const YStructure& y,
                                        const PhiMap& phi, const std::vector<int>& vimg, size_t r,
                                        const std::set<int>& cells, std::vector<std::string>& problems) {
    size_t t = mp.map.passes[r][0].target;
    std::string who = mp.rect_name(r);
    if (y.strips[r].size() != 1 || y.strips[t].size() != 1) {
        problems.push_back(who + ": Y subdivides the rectangle or its image into strips");
        return std::nullopt;
    }
    CellMap m;
    bool ok = true;
    for (int c : cells) {
        const auto& cell = y.sc.cx.cells[static_cast<size_t>(c)];
        auto role = y.sc.role[static_cast<size_t>(c)];
        if (cell.dim == 0) {
            if (role == CellRole::Subdivision) {
                problems.push_back(who + ": Y vertex " + std::to_string(c) + " subdivides an X 1-cell");
                ok = false;
                continue;
            }
            int v = vimg[static_cast<size_t>(y.sc.parent[static_cast<size_t>(c)])];
            if (v < 0) {
                ok = false;
                continue;
            }
            m[c] = {v, 1};
        } else if (cell.dim == 1) {
            int xc = y.sc.parent[static_cast<size_t>(c)];
            if (y.pieces.at(xc).size() != 1) {
                problems.push_back(who + ": X 1-cell " + std::to_string(xc) + " is subdivided in Y");
                ok = false;
                continue;
            }
            auto ch = phi.edge_image(xc);
            if (!ch || ch->size() != 1) {
                problems.push_back(who + ": image of X 1-cell " + std::to_string(xc) + " is not a single Y 1-cell");
                ok = false;
                continue;
            }
            m[c] = ch->front();
        } else {
            m[c] = {y.strips[t][0], 1};
        }
    }
    if (!ok) return std::nullopt;
    return m;
}

}  // namespace detail

inline StepMaps step_maps(const MarkovPartition& mp, const XStructure& x, const YStructure& y, const EquivalenceTable& t) {
    StepMaps sm;
    sm.rect_cells.resize(mp.n());
    for (size_t r = 0; r < mp.n(); ++r) sm.rect_cells[r] = detail::rect_closure(y, r);
    if (t.filled_count() == 0) return sm;
    PhiMap phi(mp, x, y);
    ContinuityReport rep;
    auto vimg = phi.vertex_images(rep);
    for (auto& p : rep.problems) sm.problems.push_back("phi: " + p);
    for (size_t r = 0; r < mp.n(); ++r) {
        if (!t.filled(r)) continue;
        auto m = detail::rect_step(mp, y, phi, vimg, r, sm.rect_cells[r], sm.problems);
        if (!m) continue;
        for (const auto& [c, img] : *m) {
            auto [it, fresh] = sm.forward.emplace(c, img);
            if (!fresh && !(it->second == img))
                sm.problems.push_back("cell " + std::to_string(c) + " has different images from two rectangles");
        }
    }
    for (const auto& [c, img] : sm.forward) {
        auto [it, fresh] = sm.backward.emplace(img.cell, Incidence{c, img.orient});
        if (!fresh && it->second.cell != c) sm.problems.push_back("cell " + std::to_string(img.cell) + " has two preimages");
    }
    return sm;
}

/// Composite of single steps: phi^k on a cell, or nothing when some step leaves the domain.
inline std::optional<Incidence> iterate(const StepMaps& sm, Incidence e, long k) {
    const auto& m = k >= 0 ? sm.forward : sm.backward;
    for (long i = 0; i < std::labs(k); ++i) {
        auto it = m.find(e.cell);
        if (it == m.end()) return std::nullopt;
        e = {it->second.cell, e.orient * it->second.orient};
    }
    return e;
}

struct CellularityReport {
    size_t pairs_checked = 0;
    size_t cells_checked = 0;
    std::vector<std::string> violations;
    bool holds() const { return violations.empty(); }
};

/// For R ~Y R' in multi-element classes: X = Y on both and phi^beta is a cell bijection
/// respecting dimension and boundary incidences.
inline CellularityReport check_Y_cellularity(const MarkovPartition& mp, const YStructure& y, const EquivalenceTable& t,
                                             const StepMaps& sm) {
    CellularityReport rep;
    rep.violations = sm.problems;
    const auto& cx = y.sc.cx;
    for (const auto& cl : t.Y) {
        if (cl.size() < 2) continue;
        for (size_t a = 0; a < cl.size(); ++a)
            for (size_t b = a + 1; b < cl.size(); ++b) {
                size_t R = cl[a], R2 = cl[b];
                long beta = *t.beta(R, R2);
                ++rep.pairs_checked;
                std::string who = mp.rect_name(R) + " -> " + mp.rect_name(R2);
                std::set<int> hit;
                CellMap m;
                for (int c : sm.rect_cells[R]) {
                    auto img = iterate(sm, {c, 1}, beta);
                    if (!img) {
                        rep.violations.push_back(who + ": cell " + std::to_string(c) + " has no image");
                        continue;
                    }
                    ++rep.cells_checked;
                    m[c] = *img;
                    if (!hit.insert(img->cell).second) rep.violations.push_back(who + ": not injective");
                    if (cx.cells[static_cast<size_t>(img->cell)].dim != cx.cells[static_cast<size_t>(c)].dim)
                        rep.violations.push_back(who + ": dimension changes on cell " + std::to_string(c));
                }
                if (hit != sm.rect_cells[R2]) rep.violations.push_back(who + ": image is not the closed rectangle");
                for (const auto& [c, img] : m) {
                    std::multiset<std::pair<int, int>> want, got;
                    for (const auto& bd : cx.cells[static_cast<size_t>(c)].boundary) {
                        auto it = m.find(bd.cell);
                        if (it == m.end()) continue;
                        want.insert({it->second.cell, bd.orient * it->second.orient * img.orient});
                    }
                    for (const auto& bd : cx.cells[static_cast<size_t>(img.cell)].boundary) got.insert({bd.cell, bd.orient});
                    if (want != got) rep.violations.push_back(who + ": boundary of cell " + std::to_string(c) + " not preserved");
                }
            }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// cell ranges and the quotient surface

struct CellRange {
    long k_minus = 0, k_plus = 0;
    bool periodic = false;
    long period = 0;
};

struct RangeTable {
    std::vector<CellRange> ranges;  // per Y cell
    std::vector<std::string> violations;
    long max_span = 0;              // over nonsingular unmarked cells
};

inline bool touches_special(const YStructure& y, int c) {
    for (int v : closure(y.sc.cx, c)) {
        auto r = y.sc.role[static_cast<size_t>(v)];
        if (r == CellRole::Singular || r == CellRole::Marked) return true;
    }
    return false;
}

inline RangeTable cell_ranges(const YStructure& y, const StepMaps& sm) {
    RangeTable rt;
    size_t n = y.sc.cx.size();
    rt.ranges.resize(n);
    for (size_t c = 0; c < n; ++c) {
        auto& cr = rt.ranges[c];
        int cur = static_cast<int>(c);
        for (long k = 1;; ++k) {
            auto it = sm.forward.find(cur);
            if (it == sm.forward.end()) break;
            cur = it->second.cell;
            if (cur == static_cast<int>(c)) {
                cr.periodic = true;
                cr.period = k;
                break;
            }
            cr.k_plus = k;
            if (k > static_cast<long>(n)) throw invariant_error("forward steps do not terminate");
        }
        cur = static_cast<int>(c);
        for (long k = 1; !cr.periodic; ++k) {
            auto it = sm.backward.find(cur);
            if (it == sm.backward.end()) break;
            cur = it->second.cell;
            cr.k_minus = -k;
            if (k > static_cast<long>(n)) throw invariant_error("backward steps do not terminate");
        }
        bool special = touches_special(y, static_cast<int>(c));
        if (cr.periodic && !special) rt.violations.push_back("periodic class at non-singular cell " + std::to_string(c));
        if (!cr.periodic && !special) rt.max_span = std::max(rt.max_span, cr.k_plus - cr.k_minus);
    }
    return rt;
}

/// Cells e' in the boundary of e have k_minus(e') <= k_minus(e) <= k_plus(e) <= k_plus(e').
inline std::vector<std::string> face_monotonicity(const YStructure& y, const RangeTable& rt) {
    std::vector<std::string> out;
    for (size_t c = 0; c < rt.ranges.size(); ++c) {
        const auto& r = rt.ranges[c];
        if (r.periodic) continue;
        for (const auto& b : y.sc.cx.cells[c].boundary) {
            const auto& f = rt.ranges[static_cast<size_t>(b.cell)];
            if (f.periodic) continue;
            if (f.k_minus > r.k_minus || f.k_plus < r.k_plus)
                out.push_back("face " + std::to_string(b.cell) + " of cell " + std::to_string(c) + " has a narrower range");
        }
    }
    return out;
}

/// Union-find with an orientation sign relative to the root.
class SignedUnionFind {
public:
    explicit SignedUnionFind(size_t n) : parent_(n), sign_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::pair<size_t, int> find(size_t a) {
        if (parent_[a] == a) return {a, 1};
        auto [r, s] = find(parent_[a]);
        parent_[a] = r;
        sign_[a] *= s;
        return {r, sign_[a]};
    }
    /// Declares a = s * b. Returns false when this contradicts an earlier relation.
    bool unite(size_t a, size_t b, int s) {
        auto [ra, sa] = find(a);
        auto [rb, sb] = find(b);
        if (ra == rb) return sa == s * sb;
        if (ra < rb) {
            parent_[rb] = ra;
            sign_[rb] = sa * s * sb;
        } else {
            parent_[ra] = rb;
            sign_[ra] = sa * s * sb;
        }
        return true;
    }

private:
    std::vector<size_t> parent_;
    std::vector<int> sign_;
};

struct QuotientSurface {
    CellComplex W;
    std::vector<Incidence> pi;                 // Y cell -> signed W cell
    std::vector<std::vector<int>> fibers;      // W cell -> Y cells
    std::vector<CellRole> role;
    long D = 0;
    ComplexityReport complexity;
};

/// Identifies each Y cell with its images phi^alpha(e), alpha in [k_minus, k_plus].
inline QuotientSurface quotient_surface(const YStructure& y, const StepMaps& sm, const RangeTable& rt,
                                        std::optional<Rat> P = std::nullopt) {
    if (!rt.violations.empty()) throw invariant_error("quotient: " + rt.violations.front());
    const auto& cx = y.sc.cx;
    size_t n = cx.size();
    SignedUnionFind uf(n);
    for (const auto& [c, img] : sm.forward) {
        if (cx.cells[static_cast<size_t>(c)].dim != cx.cells[static_cast<size_t>(img.cell)].dim)
            throw invariant_error("quotient: class merges cells of unequal dimension");
        bool periodic = rt.ranges[static_cast<size_t>(c)].periodic;
        if (!uf.unite(static_cast<size_t>(c), static_cast<size_t>(img.cell), img.orient) && !periodic)
            throw invariant_error("quotient: class of cell " + std::to_string(c) + " identifies a cell with its reverse");
    }
    QuotientSurface q;
    q.pi.assign(n, {-1, 1});
    std::map<size_t, int> made;
    std::vector<size_t> by_dim(n);
    std::iota(by_dim.begin(), by_dim.end(), 0);
    std::stable_sort(by_dim.begin(), by_dim.end(), [&](size_t a, size_t b) { return cx.cells[a].dim < cx.cells[b].dim; });
    for (size_t c : by_dim) {
        auto [root, s] = uf.find(c);
        auto it = made.find(root);
        if (it == made.end()) {
            std::vector<Incidence> b;
            for (const auto& bd : cx.cells[root].boundary) {
                const auto& p = q.pi[static_cast<size_t>(bd.cell)];
                b.push_back({p.cell, bd.orient * p.orient});
            }
            int w = q.W.add(cx.cells[root].dim, b);
            q.role.push_back(y.sc.role[root]);
            q.fibers.emplace_back();
            it = made.emplace(root, w).first;
            if (root != c) throw std::logic_error("class root must be its smallest cell");
        }
        q.pi[c] = {it->second, s};
        q.fibers[static_cast<size_t>(it->second)].push_back(static_cast<int>(c));
    }
    validate_complex(q.W);
    if (P) {
        auto k = constants(*P);
        q.D = clamp_long(k.D);
        q.complexity = verify_bounded(q.W, q.D);
    }
    return q;
}

}  // namespace smalldil
