#pragma once

#include "complex.hpp"
#include "field.hpp"
#include "markov.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smalldil {

enum class CellRole { Corner, Singular, Marked, Subdivision, Horizontal, Vertical, Rectangle, Strip };

inline const char* role_name(CellRole r) {
    static const char* names[] = {"corner", "singular", "marked", "subdivision", "horizontal", "vertical", "rectangle", "strip"};
    return names[static_cast<int>(r)];
}

/// A cell complex on the surface with per-cell roles. For Y, parent points into X.
struct SurfaceComplex {
    CellComplex cx;
    std::vector<CellRole> role;
    std::vector<long> rect;    // rectangle index for 2-cells, -1 otherwise
    std::vector<long> strip;   // strip index for Y 2-cells, -1 otherwise
    std::vector<int> parent;   // X-parent cell

    int add(CellRole r, int dim, std::vector<Incidence> boundary, long rectangle = -1, long strip_index = -1, int par = -1) {
        int idx = cx.add(dim, std::move(boundary));
        role.push_back(r);
        rect.push_back(rectangle);
        strip.push_back(strip_index);
        parent.push_back(par < 0 ? idx : par);
        return idx;
    }
    /// Euler characteristic of the punctured surface: marked vertices are removed.
    long punctured_euler() const {
        long m = std::count(role.begin(), role.end(), CellRole::Marked);
        return cx.euler() - m;
    }
};

struct XStructure {
    SurfaceComplex sc;
    std::vector<int> seg_cell;     // segment -> 1-cell
    std::vector<char> seg_aligned; // segment runs in its 1-cell's direction
    std::vector<int> rect_cell;
    std::vector<int> rep;          // 1-cell -> representative segment (or -1)
};

/// Counter-clockwise boundary of a rectangle as (segment, +1 when traversed in side order).
inline std::vector<std::pair<size_t, int>> ccw_boundary(const MarkovPartition& mp, size_t r) {
    std::vector<std::pair<size_t, int>> out;
    const auto& R = mp.rects[r];
    for (size_t s : R.side(Side::Bottom)) out.push_back({s, 1});
    for (size_t s : R.side(Side::Right)) out.push_back({s, 1});
    const auto& t = R.side(Side::Top);
    for (auto it = t.rbegin(); it != t.rend(); ++it) out.push_back({*it, -1});
    const auto& l = R.side(Side::Left);
    for (auto it = l.rbegin(); it != l.rend(); ++it) out.push_back({*it, -1});
    return out;
}

inline XStructure build_X(const MarkovPartition& mp) {
    XStructure x;
    const auto& vc = mp.vertices;
    if (vc.of_node.size() != 2 * mp.segments.size()) throw validation_error("partition has not been validated");
    for (size_t v = 0; v < vc.count; ++v) {
        CellRole r = vc.marked[v] ? CellRole::Marked : vc.singular[v] ? CellRole::Singular : CellRole::Corner;
        x.sc.add(r, 0, {});
    }
    x.seg_cell.assign(mp.segments.size(), -1);
    x.seg_aligned.assign(mp.segments.size(), 1);
    for (size_t s = 0; s < mp.segments.size(); ++s) {
        const auto& seg = mp.segments[s];
        if (x.seg_cell[s] >= 0) continue;
        int a = static_cast<int>(vc.at(s, 0)), b = static_cast<int>(vc.at(s, 1));
        int c = x.sc.add(is_horizontal(seg.side) ? CellRole::Horizontal : CellRole::Vertical, 1, {{a, -1}, {b, 1}});
        x.seg_cell[s] = c;
        x.seg_cell[seg.partner] = c;
        x.seg_aligned[seg.partner] = seg.reversed ? 0 : 1;
    }
    x.rep.assign(x.sc.cx.size(), -1);
    for (size_t s = mp.segments.size(); s-- > 0;) x.rep[static_cast<size_t>(x.seg_cell[s])] = static_cast<int>(s);
    for (size_t r = 0; r < mp.n(); ++r) {
        std::vector<Incidence> b;
        for (auto [s, dir] : ccw_boundary(mp, r)) b.push_back({x.seg_cell[s], dir * (x.seg_aligned[s] ? 1 : -1)});
        x.rect_cell.push_back(x.sc.add(CellRole::Rectangle, 2, b, static_cast<long>(r)));
    }
    try {
        validate_complex(x.sc.cx);
    } catch (const validation_error& e) {
        throw validation_error(std::string("vertex closure inconsistent: ") + e.what());
    }
    if (x.sc.punctured_euler() != mp.chi())
        throw validation_error("X has euler characteristic " + std::to_string(x.sc.punctured_euler()) +
                               " but the surface has " + std::to_string(mp.chi()));
    return x;
}

struct D1Report {
    Rat bound;           // D1
    Rat type_i_bound;    // P^9
    long max_boundary = 0;
    long max_type_i = 0;
    long worst_rect = -1;
    std::vector<std::string> violations;
    bool holds() const { return violations.empty(); }
};

inline D1Report check_D1(const MarkovPartition& mp, const XStructure& x, const Rat& P) {
    D1Report rep;
    auto c = constants(P);
    rep.bound = c.D1;
    rep.type_i_bound = pow_rat(P, 9);
    const auto& vc = mp.vertices;
    for (size_t r = 0; r < mp.n(); ++r) {
        long count = 0;
        std::set<size_t> corners(vc.corners[r].begin(), vc.corners[r].end());
        for (Side sd : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            const auto& side = mp.rects[r].side(sd);
            long type_i = 0;
            for (size_t k = 0; k < side.size(); ++k) {
                size_t s = side[k];
                const auto& p = mp.segments[mp.segments[s].partner];
                bool i = mp.rects[p.rect].side(p.side).size() == 1 || side.size() == 1;
                bool ii = k == 0 || k + 1 == side.size();
                bool iii = vc.special(vc.at(s, 0)) || vc.special(vc.at(s, 1));
                if (!(i || ii || iii))
                    rep.violations.push_back(mp.rect_name(r) + " " + side_name(sd) + ": segment " +
                                             std::to_string(mp.segments[s].id) + " is of none of the three types");
                if (i) ++type_i;
            }
            count += static_cast<long>(side.size());
            rep.max_type_i = std::max(rep.max_type_i, type_i);
            if (Rat(type_i) > rep.type_i_bound)
                rep.violations.push_back(mp.rect_name(r) + " " + side_name(sd) + ": " + std::to_string(type_i) +
                                         " cells of type (i) exceed P^9");
        }
        if (count > rep.max_boundary) {
            rep.max_boundary = count;
            rep.worst_rect = static_cast<long>(r);
        }
        if (Rat(count) > rep.bound)
            rep.violations.push_back(mp.rect_name(r) + ": " + std::to_string(count) + " boundary 1-cells exceed D1");
    }
    (void)x;
    return rep;
}

/// Exact sizes: segment lengths/heights, strip heights, pass offsets.
struct Geometry {
    EigenGeometry eigen;
    FieldNum lambda;
    std::vector<FieldNum> seg_size, seg_offset;      // per segment, in side coordinates
    std::vector<std::vector<FieldNum>> stack_height; // per rectangle, H_0 = 0 .. H_c = width
    std::vector<std::vector<FieldNum>> pass_offset;  // per rectangle, L_0 = 0 .. L_deg = lambda * length

    const FieldNum& length(size_t r) const { return eigen.length[r]; }
    const FieldNum& width(size_t r) const { return eigen.width[r]; }
    FieldNum side_size(size_t r, Side s) const { return is_horizontal(s) ? length(r) : width(r); }
};

/// Solves for segment sizes: each side sums to the rectangle's length or width and glued
/// segments agree. Rejects inconsistent, underdetermined or non-positive systems.
inline Geometry solve_geometry(const MarkovPartition& mp) {
    Geometry g;
    g.eigen = eigen_geometry(mp);
    auto f = g.eigen.field;
    g.lambda = FieldNum::generator(f);
    size_t ns = mp.segments.size();
    std::vector<int> unknown(ns, -1);
    int nu = 0;
    for (size_t s = 0; s < ns; ++s)
        if (unknown[s] < 0) unknown[s] = unknown[mp.segments[s].partner] = nu++;
    std::vector<std::vector<Rat>> rows;
    std::vector<FieldNum> rhs;
    std::vector<std::string> what;
    for (size_t r = 0; r < mp.n(); ++r)
        for (Side sd : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            std::vector<Rat> row(static_cast<size_t>(nu), Rat(0));
            for (size_t s : mp.rects[r].side(sd)) row[static_cast<size_t>(unknown[s])] += 1;
            rows.push_back(row);
            rhs.push_back(g.side_size(r, sd));
            what.push_back(mp.rect_name(r) + " " + side_name(sd));
        }
    size_t m = rows.size();
    std::vector<int> pivot_col;
    size_t rank = 0;
    for (int col = 0; col < nu && rank < m; ++col) {
        size_t p = rank;
        while (p < m && rows[p][static_cast<size_t>(col)] == 0) ++p;
        if (p == m) continue;
        std::swap(rows[p], rows[rank]);
        std::swap(rhs[p], rhs[rank]);
        std::swap(what[p], what[rank]);
        Rat inv = Rat(1) / rows[rank][static_cast<size_t>(col)];
        for (auto& v : rows[rank]) v *= inv;
        rhs[rank] = rhs[rank] * FieldNum::constant(f, inv);
        for (size_t q = 0; q < m; ++q) {
            if (q == rank || rows[q][static_cast<size_t>(col)] == 0) continue;
            Rat k = rows[q][static_cast<size_t>(col)];
            for (size_t c = 0; c < static_cast<size_t>(nu); ++c) rows[q][c] -= k * rows[rank][c];
            rhs[q] = rhs[q] - FieldNum::constant(f, k) * rhs[rank];
        }
        pivot_col.push_back(col);
        ++rank;
    }
    for (size_t q = rank; q < m; ++q)
        if (rhs[q].sign() != 0)
            throw validation_error("geometry conflict: side sums cannot all hold (first inconsistent equation from " + what[q] + ")");
    if (static_cast<int>(rank) < nu)
        throw validation_error("geometry conflict: segment sizes are underdetermined (" + std::to_string(nu - static_cast<int>(rank)) +
                               " free parameters)");
    std::vector<FieldNum> value(static_cast<size_t>(nu));
    for (size_t k = 0; k < rank; ++k) value[static_cast<size_t>(pivot_col[k])] = rhs[k];
    g.seg_size.resize(ns);
    g.seg_offset.resize(ns);
    for (size_t s = 0; s < ns; ++s) {
        g.seg_size[s] = value[static_cast<size_t>(unknown[s])];
        if (g.seg_size[s].sign() <= 0)
            throw validation_error("geometry conflict: segment " + std::to_string(mp.segments[s].id) + " gets non-positive size");
    }
    for (const auto& R : mp.rects)
        for (const auto& side : R.sides) {
            FieldNum o = FieldNum::constant(f, Rat(0));
            for (size_t s : side) {
                g.seg_offset[s] = o;
                o = o + g.seg_size[s];
            }
        }
    FieldNum inv_l = FieldNum::constant(f, Rat(1)) / g.lambda;
    for (size_t j = 0; j < mp.n(); ++j) {
        std::vector<FieldNum> h{FieldNum::constant(f, Rat(0))};
        for (const auto& e : mp.map.stacks[j]) h.push_back(h.back() + g.width(e.source) * inv_l);
        if (!(h.back() == g.width(j))) throw invariant_error("strip heights of " + mp.rect_name(j) + " do not add up to its width");
        g.stack_height.push_back(std::move(h));
        std::vector<FieldNum> l{FieldNum::constant(f, Rat(0))};
        for (const auto& p : mp.map.passes[j]) l.push_back(l.back() + g.length(p.target));
        if (!(l.back() == g.lambda * g.length(j)))
            throw invariant_error("pass lengths of " + mp.rect_name(j) + " do not add up to lambda times its length");
        g.pass_offset.push_back(std::move(l));
    }
    return g;
}

/// A Y 1-cell piece along a rectangle side, in side coordinates.
struct SidePiece {
    FieldNum from, to;
    Incidence edge;  // oriented in side direction
};

struct SideTable {
    std::vector<FieldNum> breaks;  // sorted positions of Y vertices along the side
    std::vector<int> vertex;       // Y vertex at each break
    std::vector<SidePiece> pieces;
};

struct ContinuityReport {
    std::vector<std::string> problems;
    bool continuous() const { return problems.empty(); }
};

struct YStructure {
    SurfaceComplex sc;
    Geometry geo;
    std::vector<int> x_to_y_vertex;            // identity on X vertices
    std::map<int, std::vector<int>> pieces;     // X 1-cell -> Y 1-cells in cell direction
    std::map<int, std::vector<FieldNum>> params;// X 1-cell -> break parameters (0 .. size)
    std::vector<std::vector<int>> arcs;         // per rectangle, internal arc k at index k (1..c-1)
    std::vector<std::vector<int>> strips;       // per rectangle, strip cells bottom to top
    std::vector<std::array<SideTable, 4>> sides;
    long exact_decisions = 0;

    std::optional<int> locate_side(size_t r, Side s, const FieldNum& u) const {
        const auto& t = sides[r][static_cast<int>(s)];
        auto it = std::lower_bound(t.breaks.begin(), t.breaks.end(), u);
        if (it != t.breaks.end() && *it == u) return t.vertex[static_cast<size_t>(it - t.breaks.begin())];
        return std::nullopt;
    }

    /// Y 1-cells from position a to position b along a side (either direction).
    std::optional<std::vector<Incidence>> side_chain(size_t r, Side s, const FieldNum& a, const FieldNum& b) const {
        const auto& t = sides[r][static_cast<int>(s)];
        bool forward = a < b;
        const FieldNum& lo = forward ? a : b;
        const FieldNum& hi = forward ? b : a;
        if (!locate_side(r, s, lo) || !locate_side(r, s, hi)) return std::nullopt;
        std::vector<Incidence> out;
        for (const auto& p : t.pieces)
            if (p.from >= lo && p.to <= hi) out.push_back(p.edge);
        if (!forward) {
            std::reverse(out.begin(), out.end());
            for (auto& e : out) e.orient = -e.orient;
        }
        return out;
    }

    size_t rows(size_t r) const { return geo.stack_height[r].size() - 1; }

    /// Row k of a rectangle: 0 is the bottom side, rows(r) is the top side, else an internal arc.
    std::optional<int> locate_row(size_t r, size_t k, const FieldNum& x) const {
        const auto& H = geo.stack_height[r];
        if (x.sign() == 0) return locate_side(r, Side::Left, H[k]);
        if (x == geo.length(r)) return locate_side(r, Side::Right, H[k]);
        if (k == 0) return locate_side(r, Side::Bottom, x);
        if (k == rows(r)) return locate_side(r, Side::Top, x);
        return std::nullopt;
    }

    std::optional<std::vector<Incidence>> row_chain(size_t r, size_t k, const FieldNum& a, const FieldNum& b) const {
        if (k == 0) return side_chain(r, Side::Bottom, a, b);
        if (k == rows(r)) return side_chain(r, Side::Top, a, b);
        bool forward = a < b;
        const FieldNum& lo = forward ? a : b;
        const FieldNum& hi = forward ? b : a;
        if (lo.sign() != 0 || !(hi == geo.length(r))) return std::nullopt;
        return std::vector<Incidence>{{arcs[r][k], forward ? 1 : -1}};
    }
};

namespace detail {

inline void sort_unique(std::vector<FieldNum>& v) {
    std::sort(v.begin(), v.end(), [](const FieldNum& a, const FieldNum& b) { return a < b; });
    std::vector<FieldNum> out;
    for (auto& x : v)
        if (out.empty() || !(out.back() == x)) out.push_back(x);
    v = std::move(out);
}

}  // namespace detail

inline YStructure build_Y(const MarkovPartition& mp, const XStructure& x) {
    YStructure y;
    y.geo = solve_geometry(mp);
    const auto& g = y.geo;
    auto f = g.eigen.field;
    long exact_before = f->exact_decisions();
    const auto& X = x.sc.cx;
    auto vertices = X.cells_of_dim(0);
    for (int v : vertices) y.x_to_y_vertex.push_back(y.sc.add(x.sc.role[static_cast<size_t>(v)], 0, {}, -1, -1, v));

    // subdivision points of vertical cells, in cell parameters
    for (int c : X.cells_of_dim(1)) {
        size_t s = static_cast<size_t>(x.rep[static_cast<size_t>(c)]);
        const FieldNum& h = g.seg_size[s];
        std::vector<FieldNum> pts;
        if (x.sc.role[static_cast<size_t>(c)] == CellRole::Vertical) {
            for (size_t occ : {s, mp.segments[s].partner}) {
                const auto& seg = mp.segments[occ];
                const auto& H = g.stack_height[seg.rect];
                const FieldNum& o = g.seg_offset[occ];
                for (size_t k = 1; k + 1 < H.size(); ++k) {
                    FieldNum u = H[k] - o;
                    if (u.sign() <= 0 || u >= h) continue;
                    pts.push_back(x.seg_aligned[occ] ? u : h - u);
                }
            }
            detail::sort_unique(pts);
        }
        std::vector<FieldNum> par{FieldNum::constant(f, Rat(0))};
        std::vector<int> vs{y.x_to_y_vertex[static_cast<size_t>(X.start(c))]};
        for (auto& p : pts) {
            par.push_back(p);
            vs.push_back(y.sc.add(CellRole::Subdivision, 0, {}, -1, -1, c));
        }
        par.push_back(h);
        vs.push_back(y.x_to_y_vertex[static_cast<size_t>(X.end(c))]);
        std::vector<int> es;
        for (size_t k = 0; k + 1 < vs.size(); ++k)
            es.push_back(y.sc.add(x.sc.role[static_cast<size_t>(c)], 1, {{vs[k], -1}, {vs[k + 1], 1}}, -1, -1, c));
        y.pieces[c] = es;
        y.params[c] = par;
    }

    // side tables
    y.sides.resize(mp.n());
    for (size_t r = 0; r < mp.n(); ++r)
        for (Side sd : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            auto& t = y.sides[r][static_cast<int>(sd)];
            for (size_t s : mp.rects[r].side(sd)) {
                int c = x.seg_cell[s];
                const auto& par = y.params[c];
                const auto& es = y.pieces[c];
                const FieldNum& o = g.seg_offset[s];
                const FieldNum& h = g.seg_size[s];
                bool al = x.seg_aligned[s];
                size_t m = es.size();
                auto vert = [&](size_t k) {
                    int e = es[k < m ? k : m - 1];
                    return k < m ? y.sc.cx.start(e) : y.sc.cx.end(e);
                };
                for (size_t q = 0; q < m; ++q) {
                    // q-th piece in side direction
                    size_t k = al ? q : m - 1 - q;
                    FieldNum a = al ? o + par[k] : o + h - par[k + 1];
                    FieldNum b = al ? o + par[k + 1] : o + h - par[k];
                    t.pieces.push_back({a, b, {es[k], al ? 1 : -1}});
                    if (t.breaks.empty()) {
                        t.breaks.push_back(a);
                        t.vertex.push_back(al ? vert(k) : vert(k + 1));
                    }
                    t.breaks.push_back(b);
                    t.vertex.push_back(al ? vert(k + 1) : vert(k));
                }
            }
        }

    // internal arcs and strips
    y.arcs.resize(mp.n());
    y.strips.resize(mp.n());
    for (size_t r = 0; r < mp.n(); ++r) {
        const auto& H = g.stack_height[r];
        size_t c = H.size() - 1;
        y.arcs[r].assign(c + 1, -1);
        for (size_t k = 1; k < c; ++k) {
            auto a = y.locate_side(r, Side::Left, H[k]), b = y.locate_side(r, Side::Right, H[k]);
            if (!a || !b) throw invariant_error("strip boundary of " + mp.rect_name(r) + " missing from its vertical sides");
            y.arcs[r][k] = y.sc.add(CellRole::Horizontal, 1, {{*a, -1}, {*b, 1}}, -1, -1, x.rect_cell[r]);
        }
        for (size_t k = 0; k < c; ++k) {
            std::vector<Incidence> b;
            auto bottom = y.row_chain(r, k, FieldNum::constant(f, Rat(0)), g.length(r));
            auto right = y.side_chain(r, Side::Right, H[k], H[k + 1]);
            auto top = y.row_chain(r, k + 1, g.length(r), FieldNum::constant(f, Rat(0)));
            auto left = y.side_chain(r, Side::Left, H[k + 1], H[k]);
            if (!bottom || !right || !top || !left) throw invariant_error("strip of " + mp.rect_name(r) + " has no closed boundary");
            for (auto* part : {&*bottom, &*right, &*top, &*left}) b.insert(b.end(), part->begin(), part->end());
            y.strips[r].push_back(y.sc.add(CellRole::Strip, 2, b, static_cast<long>(r), static_cast<long>(k), x.rect_cell[r]));
        }
    }
    validate_complex(y.sc.cx);
    y.exact_decisions = f->exact_decisions() - exact_before;
    return y;
}

/// Where a point of a rectangle boundary lands under phi: a vertical side of some rectangle at a
/// height, or a row of some rectangle at a horizontal position.
struct Locus {
    size_t rect = 0;
    bool on_side = false;
    Side side = Side::Left;
    size_t row = 0;
    FieldNum pos;
};

class PhiMap {
public:
    PhiMap(const MarkovPartition& mp, const XStructure& x, const YStructure& y) : mp_(mp), x_(x), y_(y) {}

    /// Images of the point at side coordinate u on a side of rectangle i. Two loci when the
    /// point sits on a pass boundary.
    std::vector<Locus> image(size_t i, Side s, const FieldNum& u) const {
        const auto& g = y_.geo;
        std::vector<Locus> out;
        const auto& passes = mp_.map.passes[i];
        if (!is_horizontal(s)) {
            size_t p = s == Side::Left ? 0 : passes.size() - 1;
            auto [j, k] = strip_of(i, p);
            const FieldNum& H = g.stack_height[j][k];
            FieldNum inv = one() / g.lambda;
            if (!passes[p].reversed) out.push_back(side_locus(j, s, H + u * inv));
            else out.push_back(side_locus(j, s == Side::Left ? Side::Right : Side::Left, H + (g.width(i) - u) * inv));
            return out;
        }
        FieldNum X = g.lambda * u;
        const auto& L = g.pass_offset[i];
        for (size_t p = 0; p < passes.size(); ++p) {
            if (X < L[p] || X > L[p + 1]) continue;
            auto [j, k] = strip_of(i, p);
            FieldNum local = X - L[p];
            bool bottom = s == Side::Bottom;
            Locus l;
            l.rect = j;
            if (!passes[p].reversed) {
                l.row = bottom ? k : k + 1;
                l.pos = local;
            } else {
                l.row = bottom ? k + 1 : k;
                l.pos = g.length(j) - local;
            }
            out.push_back(l);
        }
        return out;
    }

    std::optional<int> resolve(const Locus& l) const {
        if (l.on_side) return y_.locate_side(l.rect, l.side, l.pos);
        return y_.locate_row(l.rect, l.row, l.pos);
    }

    /// phi on X vertices, checked over every occurrence of each vertex on rectangle boundaries.
    std::vector<int> vertex_images(ContinuityReport& rep) const {
        const auto& vc = mp_.vertices;
        const auto& g = y_.geo;
        std::vector<int> img(vc.count, -1);
        for (size_t s = 0; s < mp_.segments.size(); ++s) {
            const auto& seg = mp_.segments[s];
            for (int e : {0, 1}) {
                size_t v = vc.at(s, e);
                FieldNum u = g.seg_offset[s] + (e ? g.seg_size[s] : FieldNum::constant(field(), Rat(0)));
                for (const auto& l : image(seg.rect, seg.side, u)) {
                    auto r = resolve(l);
                    std::string where = "vertex at segment " + std::to_string(seg.id) + " end " + std::to_string(e);
                    if (!r) {
                        rep.problems.push_back(where + ": image is not a vertex of Y");
                    } else if (img[v] < 0) {
                        img[v] = *r;
                    } else if (img[v] != *r) {
                        rep.problems.push_back(where + ": images disagree between occurrences");
                    }
                }
            }
        }
        return img;
    }

    /// Y 1-cells covering phi of the part [a, b] of a rectangle side, listed from phi(a) to phi(b).
    std::optional<std::vector<Incidence>> side_image(size_t i, Side s, const FieldNum& a, const FieldNum& b) const {
        const auto& g = y_.geo;
        const auto& passes = mp_.map.passes[i];
        if (!is_horizontal(s)) {
            auto la = image(i, s, a), lb = image(i, s, b);
            return y_.side_chain(la[0].rect, la[0].side, la[0].pos, lb[0].pos);
        }
        bool forward = a < b;
        FieldNum lo = g.lambda * (forward ? a : b), hi = g.lambda * (forward ? b : a);
        const auto& L = g.pass_offset[i];
        std::vector<Incidence> out;
        for (size_t p = 0; p < passes.size(); ++p) {
            if (!(L[p] < hi) || !(L[p + 1] > lo)) continue;
            auto [j, k] = strip_of(i, p);
            FieldNum x0 = (lo > L[p] ? lo : L[p]) - L[p];
            FieldNum x1 = (hi < L[p + 1] ? hi : L[p + 1]) - L[p];
            bool bottom = s == Side::Bottom;
            std::optional<std::vector<Incidence>> part;
            if (!passes[p].reversed) part = y_.row_chain(j, bottom ? k : k + 1, x0, x1);
            else part = y_.row_chain(j, bottom ? k + 1 : k, g.length(j) - x0, g.length(j) - x1);
            if (!part) return std::nullopt;
            out.insert(out.end(), part->begin(), part->end());
        }
        if (!forward) {
            std::reverse(out.begin(), out.end());
            for (auto& e : out) e.orient = -e.orient;
        }
        return out;
    }

    /// phi of an X 1-cell as a Y chain in the cell's direction, checked against the glued partner.
    std::optional<std::vector<Incidence>> edge_image(int c, ContinuityReport* rep = nullptr) const {
        std::optional<std::vector<Incidence>> first;
        size_t s = static_cast<size_t>(x_.rep[static_cast<size_t>(c)]);
        for (size_t occ : {s, mp_.segments[s].partner}) {
            const auto& seg = mp_.segments[occ];
            const auto& g = y_.geo;
            FieldNum a = g.seg_offset[occ], b = g.seg_offset[occ] + g.seg_size[occ];
            auto ch = x_.seg_aligned[occ] ? side_image(seg.rect, seg.side, a, b) : side_image(seg.rect, seg.side, b, a);
            std::string where = "image of segment " + std::to_string(seg.id);
            if (!ch) {
                if (rep) rep->problems.push_back(where + " is not a union of Y 1-cells");
                return std::nullopt;
            }
            if (!first) first = ch;
            else if (*first != *ch) {
                if (rep) rep->problems.push_back(where + " disagrees with the image of its partner");
                return std::nullopt;
            }
        }
        return first;
    }

    /// Strip (rectangle, index) receiving pass p of rectangle i.
    std::pair<size_t, size_t> strip_of(size_t i, size_t p) const {
        size_t j = mp_.map.passes[i][p].target;
        const auto& st = mp_.map.stacks[j];
        for (size_t k = 0; k < st.size(); ++k)
            if (st[k].source == i && st[k].pass_index == p) return {j, k};
        throw invariant_error("pass without a stack entry");
    }

private:
    std::shared_ptr<RealField> field() const { return y_.geo.eigen.field; }
    FieldNum one() const { return FieldNum::constant(field(), Rat(1)); }
    Locus side_locus(size_t j, Side s, FieldNum h) const {
        Locus l;
        l.rect = j;
        l.on_side = true;
        l.side = s;
        l.pos = std::move(h);
        return l;
    }

    const MarkovPartition& mp_;
    const XStructure& x_;
    const YStructure& y_;
};

struct D2Report {
    Rat bound;
    std::array<long, 5> observed{};  // worst case per part
    std::array<bool, 5> holds{};
    std::vector<std::string> violations;
    bool all() const { return holds[0] && holds[1] && holds[2] && holds[3] && holds[4]; }
};

inline D2Report check_D2(const MarkovPartition& mp, const XStructure& x, const YStructure& y, const Rat& P) {
    D2Report rep;
    rep.bound = constants(P).D2;
    PhiMap phi(mp, x, y);
    for (const auto& [c, es] : y.pieces) rep.observed[0] = std::max(rep.observed[0], static_cast<long>(es.size()));
    for (const auto& st : y.strips) rep.observed[1] = std::max(rep.observed[1], static_cast<long>(st.size()));
    for (const auto& ps : mp.map.passes) rep.observed[2] = std::max(rep.observed[2], static_cast<long>(ps.size()));
    bool cellular = true;
    ContinuityReport cont;
    for (int c : x.sc.cx.cells_of_dim(1)) {
        auto ch = phi.edge_image(c, &cont);
        if (!ch) {
            cellular = false;
            continue;
        }
        rep.observed[3] = std::max(rep.observed[3], static_cast<long>(ch->size()));
    }
    long k5 = 2;
    for (size_t i = 0; i < y.sc.cx.size(); ++i) k5 = std::max(k5, cell_k_min(y.sc.cx, static_cast<int>(i)));
    rep.observed[4] = k5;
    for (size_t p = 0; p < 5; ++p) rep.holds[p] = Rat(rep.observed[p]) <= rep.bound;
    if (!cellular) {
        rep.holds[3] = false;
        for (auto& s : cont.problems) rep.violations.push_back("part 4: " + s);
    }
    // each vertical X 1-cell splits into at most codeg(R) + codeg(R') pieces
    auto codeg = degrees(mp, 1).codeg;
    for (const auto& [c, es] : y.pieces) {
        size_t s = static_cast<size_t>(x.rep[static_cast<size_t>(c)]);
        Int cap = codeg[mp.segments[s].rect] + codeg[mp.segments[mp.segments[s].partner].rect];
        if (Int(es.size()) > cap) {
            rep.holds[0] = false;
            rep.violations.push_back("part 1: segment " + std::to_string(mp.segments[s].id) + " splits into more than codeg(R)+codeg(R') cells");
        }
    }
    for (size_t p = 0; p < 5; ++p)
        if (Rat(rep.observed[p]) > rep.bound) rep.violations.push_back("part " + std::to_string(p + 1) + ": observed exceeds D2");
    return rep;
}

}  // namespace smalldil
