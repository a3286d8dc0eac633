#pragma once

#include "equiv.hpp"

namespace smalldil {

enum class HatKind { Surface, SuspensionEdge, SuspensionFace, Box };

inline const char* hat_kind_name(HatKind k) {
    static const char* names[] = {"surface", "suspension", "suspension", "box"};
    return names[static_cast<int>(k)];
}

struct BoxTable {
    size_t rect = 0;
    int cell = -1;
    std::vector<int> bottom, top;   // surface 2-cells
    std::vector<int> sides;         // suspension 2-cells, counter-clockwise
    std::vector<int> side_edges;    // suspension 1-cell at the tail of each side, same order
};

/// Mapping torus cell structure. Cells of Y come first with their Y indices.
struct SuspensionComplex {
    CellComplex cx;
    size_t surface_cells = 0;
    std::vector<HatKind> kind;
    std::vector<int> over;                      // X cell under a suspension cell or box, else -1
    std::map<int, int> lift_vertex, lift_edge;  // X cell -> suspension cell
    std::vector<BoxTable> boxes;
    std::vector<int> vertex_image;              // X vertex -> Y vertex under phi
    std::vector<int> singular, marked;          // closed 1-subcomplexes, sorted

    bool is_surface(int c) const { return static_cast<size_t>(c) < surface_cells; }
};

namespace detail {

using LocalKey = std::array<int, 3>;

/// Assembles the boundary sphere of a 3-cell from faces given as lists of local edges.
/// Local vertices come from identifying consecutive corners of every face.
class SphereBuilder {
public:
    SphereBuilder(const CellComplex& c, std::string who) : c_(c), who_(std::move(who)) {}

    int edge(const LocalKey& k, int cell) {
        auto [it, fresh] = index_.emplace(k, static_cast<int>(cells_.size()));
        if (fresh) cells_.push_back(cell);
        else if (cells_[static_cast<size_t>(it->second)] != cell)
            throw invariant_error(who_ + ": local edge lies over two different 1-cells");
        return it->second;
    }

    void face(int cell, int orient, std::vector<int> edges) {
        const auto& b = c_.cells[static_cast<size_t>(cell)].boundary;
        if (edges.size() != b.size()) throw invariant_error(who_ + ": local face has the wrong length");
        for (size_t j = 0; j < b.size(); ++j)
            if (cells_[static_cast<size_t>(edges[j])] != b[j].cell)
                throw invariant_error(who_ + ": local face disagrees with its 2-cell at position " + std::to_string(j));
        faces_.push_back(SphereFace{cell, orient, std::move(edges)});
    }

    Sphere finish() const {
        size_t ne = cells_.size();
        std::vector<size_t> parent(2 * ne);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<size_t(size_t)> find = [&](size_t a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
        for (const auto& f : faces_) {
            const auto& b = c_.cells[static_cast<size_t>(f.cell)].boundary;
            size_t k = b.size();
            for (size_t j = 0; j < k; ++j) {
                size_t n = (j + 1) % k;
                size_t head = 2 * static_cast<size_t>(f.edges[j]) + (b[j].orient > 0 ? 1 : 0);
                size_t tail = 2 * static_cast<size_t>(f.edges[n]) + (b[n].orient > 0 ? 0 : 1);
                parent[find(head)] = find(tail);
            }
        }
        Sphere s;
        std::map<size_t, int> lv;
        auto vertex = [&](size_t slot, int global) {
            auto [it, fresh] = lv.emplace(find(slot), static_cast<int>(s.vertices.size()));
            if (fresh) s.vertices.push_back(global);
            else if (s.vertices[static_cast<size_t>(it->second)] != global)
                throw invariant_error(who_ + ": local vertex lies over two different 0-cells");
            return it->second;
        };
        for (size_t e = 0; e < ne; ++e) {
            int a = vertex(2 * e, c_.start(cells_[e]));
            int b = vertex(2 * e + 1, c_.end(cells_[e]));
            s.edges.push_back(SphereEdge{cells_[e], a, b});
        }
        s.faces = faces_;
        return s;
    }

private:
    const CellComplex& c_;
    std::string who_;
    std::map<LocalKey, int> index_;
    std::vector<int> cells_;
    std::vector<SphereFace> faces_;
};

inline std::vector<int> side_range(const YStructure& y, size_t r, Side sd, const FieldNum& lo, const FieldNum& hi) {
    std::vector<int> out;
    const auto& t = y.sides[r][static_cast<int>(sd)];
    for (size_t k = 0; k < t.pieces.size(); ++k)
        if (t.pieces[k].from >= lo && t.pieces[k].to <= hi) out.push_back(static_cast<int>(k));
    return out;
}

enum KeyKind { BottomSide, BottomArc, TopImage, TopCut, Lift };

}  // namespace detail

/// Y, the suspensions of X's vertices and 1-cells, and one box per rectangle.
inline SuspensionComplex build_hat_Y(const MarkovPartition& mp, const XStructure& x, const YStructure& y) {
    using detail::LocalKey;
    PhiMap phi(mp, x, y);
    ContinuityReport rep;
    SuspensionComplex h;
    h.vertex_image = phi.vertex_images(rep);
    const auto& X = x.sc.cx;
    std::map<int, std::vector<Incidence>> image;
    for (int c : X.cells_of_dim(1)) {
        auto ch = phi.edge_image(c, &rep);
        if (ch) image[c] = *ch;
    }
    if (!rep.continuous()) throw invariant_error("phi is not cellular from X to Y: " + rep.problems.front());

    h.cx.cells = y.sc.cx.cells;
    h.surface_cells = y.sc.cx.size();
    h.kind.assign(h.surface_cells, HatKind::Surface);
    h.over.assign(h.surface_cells, -1);
    auto add = [&](HatKind k, int over, int dim, std::vector<Incidence> b, std::optional<Sphere> s = {}) {
        int idx = h.cx.add(dim, std::move(b), std::move(s));
        h.kind.push_back(k);
        h.over.push_back(over);
        return idx;
    };
    for (int v : X.cells_of_dim(0)) {
        int from = y.x_to_y_vertex[static_cast<size_t>(v)], to = h.vertex_image[static_cast<size_t>(v)];
        h.lift_vertex[v] = add(HatKind::SuspensionEdge, v, 1, {{from, -1}, {to, 1}});
    }
    for (int c : X.cells_of_dim(1)) {
        std::vector<Incidence> b;
        for (int e : y.pieces.at(c)) b.push_back({e, 1});
        b.push_back({h.lift_vertex.at(X.end(c)), 1});
        const auto& im = image.at(c);
        for (auto it = im.rbegin(); it != im.rend(); ++it) b.push_back({it->cell, -it->orient});
        b.push_back({h.lift_vertex.at(X.start(c)), -1});
        h.lift_edge[c] = add(HatKind::SuspensionFace, c, 2, b);
    }

    const auto& g = y.geo;
    FieldNum zero = FieldNum::constant(g.eigen.field, Rat(0));
    const auto& vc = mp.vertices;
    for (size_t i = 0; i < mp.n(); ++i) {
        BoxTable box;
        box.rect = i;
        std::string who = "box over " + mp.rect_name(i);
        detail::SphereBuilder sb(h.cx, who);
        auto side_piece = [&](size_t r, Side sd, int q) { return y.sides[r][static_cast<int>(sd)].pieces[static_cast<size_t>(q)].edge.cell; };

        // bottom: the strips of R
        const auto& H = g.stack_height[i];
        size_t rows = y.rows(i);
        for (size_t k = 0; k < rows; ++k) {
            std::vector<int> le;
            auto piece = [&](Side sd, int q) { le.push_back(sb.edge({detail::BottomSide, static_cast<int>(sd), q}, side_piece(i, sd, q))); };
            auto arc = [&](size_t row) { le.push_back(sb.edge({detail::BottomArc, static_cast<int>(row), 0}, y.arcs[i][row])); };
            if (k == 0)
                for (int q : detail::side_range(y, i, Side::Bottom, zero, g.length(i))) piece(Side::Bottom, q);
            else
                arc(k);
            for (int q : detail::side_range(y, i, Side::Right, H[k], H[k + 1])) piece(Side::Right, q);
            if (k + 1 == rows) {
                auto qs = detail::side_range(y, i, Side::Top, zero, g.length(i));
                for (auto it = qs.rbegin(); it != qs.rend(); ++it) piece(Side::Top, *it);
            } else {
                arc(k + 1);
            }
            auto ql = detail::side_range(y, i, Side::Left, H[k], H[k + 1]);
            for (auto it = ql.rbegin(); it != ql.rend(); ++it) piece(Side::Left, *it);
            int cell = y.strips[i][k];
            sb.face(cell, -1, le);
            box.bottom.push_back(cell);
        }

        // top: one strip per pass, read in the frame of R
        const auto& passes = mp.map.passes[i];
        int offB = 0, offT = 0;
        for (size_t p = 0; p < passes.size(); ++p) {
            auto [j, k] = phi.strip_of(i, p);
            const auto& Hj = g.stack_height[j];
            FieldNum len = g.length(j);
            size_t nb = y.row_chain(j, k, zero, len)->size();
            size_t nr = y.side_chain(j, Side::Right, Hj[k], Hj[k + 1])->size();
            size_t nt = y.row_chain(j, k + 1, len, zero)->size();
            size_t nl = y.side_chain(j, Side::Left, Hj[k + 1], Hj[k])->size();
            int cell = y.strips[j][k];
            const auto& gl = h.cx.cells[static_cast<size_t>(cell)].boundary;
            if (gl.size() != nb + nr + nt + nl) throw invariant_error(who + ": strip boundary does not split into four sides");
            bool last = p + 1 == passes.size();
            auto key_B = [&](int t) { return LocalKey{detail::TopImage, static_cast<int>(Side::Bottom), offB + t}; };
            auto key_T = [&](int t) { return LocalKey{detail::TopImage, static_cast<int>(Side::Top), offT + t}; };
            auto key_R = [&](int t) { return last ? LocalKey{detail::TopImage, static_cast<int>(Side::Right), t} : LocalKey{detail::TopCut, static_cast<int>(p), t}; };
            auto key_L = [&](int t) { return p == 0 ? LocalKey{detail::TopImage, static_cast<int>(Side::Left), t} : LocalKey{detail::TopCut, static_cast<int>(p) - 1, t}; };
            std::array<size_t, 4> part{nb, nr, nt, nl};
            // frame side at each part of the strip boundary, and whether it runs backwards
            std::array<std::function<LocalKey(int)>, 4> key;
            std::array<bool, 4> back{};
            if (!passes[p].reversed) {
                key = {key_B, key_R, key_T, key_L};
                back = {false, false, true, true};
            } else {
                key = {key_T, key_L, key_B, key_R};
                back = {true, true, false, false};
            }
            std::vector<int> le;
            size_t pos = 0;
            for (int q = 0; q < 4; ++q) {
                int n = static_cast<int>(part[static_cast<size_t>(q)]);
                for (int t = 0; t < n; ++t, ++pos)
                    le.push_back(sb.edge(key[static_cast<size_t>(q)](back[static_cast<size_t>(q)] ? n - 1 - t : t), gl[pos].cell));
            }
            offB += static_cast<int>(passes[p].reversed ? nt : nb);
            offT += static_cast<int>(passes[p].reversed ? nb : nt);
            sb.face(cell, 1, le);
            box.top.push_back(cell);
        }

        // sides: suspensions of the X 1-cells around R
        auto cc = ccw_boundary(mp, i);
        size_t m = cc.size();
        std::map<size_t, int> first_piece;
        for (Side sd : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            int run = 0;
            for (size_t s : mp.rects[i].side(sd)) {
                first_piece[s] = run;
                run += static_cast<int>(y.pieces.at(x.seg_cell[s]).size());
            }
        }
        for (size_t q = 0; q < m; ++q) {
            auto [s, dir] = cc[q];
            size_t tail_v = vc.at(s, dir > 0 ? 0 : 1);
            box.side_edges.push_back(h.lift_vertex.at(static_cast<int>(tail_v)));
        }
        for (size_t q = 0; q < m; ++q) {
            auto [s, dir] = cc[q];
            const auto& seg = mp.segments[s];
            int c = x.seg_cell[s];
            bool al = x.seg_aligned[s];
            FieldNum a = g.seg_offset[s], b = g.seg_offset[s] + g.seg_size[s];
            int prefix = a.sign() == 0 ? 0 : static_cast<int>(phi.side_image(i, seg.side, zero, a)->size());
            auto im = *phi.side_image(i, seg.side, a, b);
            std::vector<int> bottom, top;
            int m_s = static_cast<int>(y.pieces.at(c).size());
            for (int t = 0; t < m_s; ++t) {
                int qq = first_piece[s] + t;
                bottom.push_back(sb.edge({detail::BottomSide, static_cast<int>(seg.side), qq}, side_piece(i, seg.side, qq)));
            }
            for (int t = 0; t < static_cast<int>(im.size()); ++t)
                top.push_back(sb.edge({detail::TopImage, static_cast<int>(seg.side), prefix + t}, im[static_cast<size_t>(t)].cell));
            size_t js = dir > 0 ? q : (q + 1) % m, je = dir > 0 ? (q + 1) % m : q;
            if (!al) {
                std::reverse(bottom.begin(), bottom.end());
                std::reverse(top.begin(), top.end());
                std::swap(js, je);
            }
            auto lift = [&](size_t jn) { return sb.edge({detail::Lift, static_cast<int>(jn), 0}, box.side_edges[jn]); };
            std::vector<int> le = bottom;
            le.push_back(lift(je));
            le.insert(le.end(), top.rbegin(), top.rend());
            le.push_back(lift(js));
            int cell = h.lift_edge.at(c);
            sb.face(cell, 1, le);
            box.sides.push_back(cell);
        }

        Sphere sphere = sb.finish();
        if (!orient_sphere(h.cx, sphere)) throw invariant_error(who + ": boundary cannot be oriented");
        size_t nbot = box.bottom.size(), ntop = box.top.size();
        for (size_t f = 0; f < nbot + ntop; ++f)
            if (sphere.faces[f].orient != (f < nbot ? -1 : 1)) throw invariant_error(who + ": phi reverses orientation");
        std::vector<Incidence> bd;
        for (const auto& f : sphere.faces) bd.push_back({f.cell, f.orient});
        box.cell = add(HatKind::Box, x.rect_cell[i], 3, bd, sphere);
        h.boxes.push_back(std::move(box));
    }

    std::set<int> sing, mark;
    for (int v : X.cells_of_dim(0)) {
        auto r = x.sc.role[static_cast<size_t>(v)];
        if (r != CellRole::Singular && r != CellRole::Marked) continue;
        auto& target = r == CellRole::Singular ? sing : mark;
        int e = h.lift_vertex.at(v);
        target.insert({e, h.cx.start(e), h.cx.end(e)});
    }
    h.singular.assign(sing.begin(), sing.end());
    h.marked.assign(mark.begin(), mark.end());

    validate_complex(h.cx);
    if (h.cx.euler() != 0) throw invariant_error("suspension complex has euler characteristic " + std::to_string(h.cx.euler()));
    return h;
}

struct K1Report {
    long K1 = 0;
    long worst = 0;                  // largest per-cell bound
    long sphere_vertices = 0;        // most vertices on a box boundary
    long sphere_faces = 0;
    long side_surface_edges = 0;     // most surface 1-cells on a suspension 2-cell
    Rat vertex_budget, face_budget, side_budget;
    std::vector<std::string> violations;
    bool holds() const { return violations.empty(); }
};

/// Each cell K1-bounded, with the box and side budgets K1 is assembled from.
inline K1Report check_K1(const SuspensionComplex& h, const Rat& P) {
    auto k = constants(P);
    K1Report r;
    r.K1 = clamp_long(k.K1);
    r.vertex_budget = 2 * k.D2 * k.D2;
    r.face_budget = k.D1 + 2 * k.D2;
    r.side_budget = 2 * k.D2;
    for (size_t c = 0; c < h.cx.size(); ++c) {
        long b = cell_k_min(h.cx, static_cast<int>(c));
        r.worst = std::max(r.worst, b);
        if (b > r.K1) r.violations.push_back(h.cx.name(static_cast<int>(c)) + " needs " + std::to_string(b) + " > K1");
        if (h.kind[c] == HatKind::SuspensionFace) {
            long lifts = 0, surface = 0;
            for (const auto& e : h.cx.cells[c].boundary) (h.is_surface(e.cell) ? surface : lifts)++;
            r.side_surface_edges = std::max(r.side_surface_edges, surface);
            if (lifts != 2) r.violations.push_back(h.cx.name(static_cast<int>(c)) + ": expected 2 suspension 1-cells");
            if (Rat(surface) > r.side_budget) r.violations.push_back(h.cx.name(static_cast<int>(c)) + ": more than 2*D2 surface 1-cells");
        }
    }
    for (const auto& b : h.boxes) {
        Sphere s = sphere_of(h.cx, b.cell);
        long nv = static_cast<long>(s.vertices.size()), nf = static_cast<long>(s.faces.size());
        r.sphere_vertices = std::max(r.sphere_vertices, nv);
        r.sphere_faces = std::max(r.sphere_faces, nf);
        if (Rat(nv) > r.vertex_budget) r.violations.push_back("box " + std::to_string(b.rect + 1) + ": more than 2*D2^2 vertices");
        if (Rat(nf) > r.face_budget) r.violations.push_back("box " + std::to_string(b.rect + 1) + ": more than D1+2*D2 faces");
    }
    return r;
}

// ---------------------------------------------------------------------------
// prisms

struct PrismDecomposition {
    std::vector<char> filled;                 // per box
    std::vector<std::vector<size_t>> prisms;  // per Y-class: its filled boxes, bottom first
    std::vector<char> in_L;                   // per cell of the suspension complex

    size_t filled_count() const { return static_cast<size_t>(std::count(filled.begin(), filled.end(), 1)); }
    size_t unfilled_count() const { return filled.size() - filled_count(); }
};

inline PrismDecomposition prism_decomposition(const SuspensionComplex& h, const EquivalenceTable& t) {
    PrismDecomposition d;
    size_t n = h.boxes.size();
    d.filled.assign(n, 0);
    for (size_t i = 0; i < n; ++i) d.filled[i] = t.filled(i) ? 1 : 0;
    for (const auto& cl : t.Y) {
        d.prisms.emplace_back(cl.begin(), cl.end() - 1);
        for (size_t r : d.prisms.back())
            if (!d.filled[r]) throw invariant_error("prism contains an unfilled box");
    }
    d.in_L.assign(h.cx.size(), 0);
    for (size_t c = 0; c < h.surface_cells; ++c) d.in_L[c] = 1;
    for (size_t i = 0; i < n; ++i) {
        if (!d.filled[i]) continue;
        const auto& b = h.boxes[i];
        d.in_L[static_cast<size_t>(b.cell)] = 1;
        for (int c : b.sides) d.in_L[static_cast<size_t>(c)] = 1;
        for (int c : b.side_edges) d.in_L[static_cast<size_t>(c)] = 1;
    }
    return d;
}

struct ProductReport {
    size_t boxes_checked = 0;
    size_t cells_checked = 0;
    std::vector<std::string> violations;
    bool holds() const { return violations.empty(); }
};

/// Every cell of a filled box is a suspension of a cell of Y|R, a cell of Y|R, or its phi-image.
inline ProductReport check_product_structure(const MarkovPartition& mp, const YStructure& y, const SuspensionComplex& h,
                                             const PrismDecomposition& d, const StepMaps& sm) {
    ProductReport rep;
    for (size_t i = 0; i < h.boxes.size(); ++i) {
        if (!d.filled[i]) continue;
        ++rep.boxes_checked;
        const auto& box = h.boxes[i];
        std::string who = "box over " + mp.rect_name(i);
        auto bad = [&](const std::string& what) { rep.violations.push_back(who + ": " + what); };
        auto fwd = [&](int c) -> std::optional<Incidence> {
            auto it = sm.forward.find(c);
            if (it == sm.forward.end()) return std::nullopt;
            return it->second;
        };
        // X and Y agree on R
        if (y.strips[i].size() != 1) bad("Y splits the rectangle into strips");
        for (int c : sm.rect_cells[i]) {
            const auto& cell = y.sc.cx.cells[static_cast<size_t>(c)];
            if (cell.dim == 0 && y.sc.role[static_cast<size_t>(c)] == CellRole::Subdivision) bad("Y vertex " + std::to_string(c) + " is not an X vertex");
            if (cell.dim == 1) {
                auto it = y.pieces.find(y.sc.parent[static_cast<size_t>(c)]);
                if (it == y.pieces.end() || it->second.size() != 1) bad("Y 1-cell " + std::to_string(c) + " is not an X 1-cell");
            }
        }
        if (!rep.violations.empty()) continue;
        // (2) bottom and (3) top
        if (box.bottom.size() != 1 || box.top.size() != 1) {
            bad("bottom or top is not a single 2-cell");
            continue;
        }
        auto ft = fwd(box.bottom[0]);
        if (!ft || ft->cell != box.top[0] || ft->orient != 1) bad("top is not the image of the bottom");
        // (1) sides: suspension of a bottom 1-cell, with the image 1-cell on top
        for (int s : box.sides) {
            const auto& b = h.cx.cells[static_cast<size_t>(s)].boundary;
            if (b.size() != 4) {
                bad("side " + h.cx.name(s) + " is not a square");
                continue;
            }
            auto fe = fwd(b[0].cell);
            if (!fe || fe->cell != b[2].cell || fe->orient != -b[2].orient) bad("side " + h.cx.name(s) + " does not join a 1-cell to its image");
            for (int j : {1, 3}) {
                int lift = b[static_cast<size_t>(j)].cell;
                int bottom_v = h.cx.start(lift);
                auto fv = fwd(bottom_v);
                if (!fv || fv->cell != h.cx.end(lift)) bad("suspension 1-cell " + h.cx.name(lift) + " does not end at the image of its start");
            }
        }
        // product counts: vertices, edges and faces of R times an interval
        Sphere sp = sphere_of(h.cx, box.cell);
        size_t v0 = box.side_edges.size(), e0 = box.sides.size();
        if (sp.vertices.size() != 2 * v0 || sp.edges.size() != 2 * e0 + v0 || sp.faces.size() != 2 + e0)
            bad("boundary counts differ from the product structure");
        rep.cells_checked += sp.vertices.size() + sp.edges.size() + sp.faces.size() + 1;
    }
    return rep;
}

struct FlowBound {
    long Q = 1;
    long longest = 0;    // Q' = longest flow arc inside L through nonsingular unmarked cells
    long witness = -1;   // a Y cell attaining it
};

/// Q = 1 + max (k_plus - k_minus) over cells that are not singular or marked points.
inline FlowBound flow_escape_bound(const YStructure& y, const RangeTable& rt) {
    FlowBound fb;
    for (size_t c = 0; c < rt.ranges.size(); ++c) {
        auto role = y.sc.role[c];
        if (y.sc.cx.cells[c].dim == 0 && (role == CellRole::Singular || role == CellRole::Marked)) continue;
        const auto& r = rt.ranges[c];
        if (r.periodic) throw invariant_error("periodic class at nonsingular cell " + std::to_string(c));
        long span = r.k_plus - r.k_minus;
        if (fb.witness < 0 || span > fb.longest) {
            fb.longest = span;
            fb.witness = static_cast<long>(c);
        }
    }
    fb.Q = fb.longest + 1;
    return fb;
}

// ---------------------------------------------------------------------------
// quotient

/// Where p sends a cell: the image cell, its dimension and the orientation sign.
struct CellImage {
    int cell = -1;
    int dim = 0;
    int orient = 1;
    bool operator==(const CellImage&) const = default;
};

struct CollapseCounts {
    size_t rect = 0;
    std::array<size_t, 3> before{}, after{};  // boundary vertices, edges, faces
    bool monotone() const {
        for (int k = 0; k < 3; ++k)
            if (after[static_cast<size_t>(k)] > before[static_cast<size_t>(k)]) return false;
        return true;
    }
};

/// Cell structure on the quotient of the mapping torus by flow arcs in L. Cells of W come
/// first with their W indices.
struct QuotientComplex {
    CellComplex cx;
    size_t surface_cells = 0;
    std::vector<CellImage> p;             // per cell of the suspension complex
    std::vector<std::string> role;        // per cell: "surface" or "suspension"
    std::map<int, size_t> box_of;         // 3-cell -> rectangle of its unfilled box
    std::vector<CollapseCounts> collapse;
    std::vector<int> singular, marked;    // images of the singular and marked subcomplexes
    std::vector<std::string> notes;
    long K = 0;
    ComplexityReport complexity;
};

inline QuotientComplex build_quotient(const SuspensionComplex& h, const PrismDecomposition& d, const EquivalenceTable& t,
                                      const QuotientSurface& w, std::optional<Rat> P = std::nullopt) {
    QuotientComplex q;
    q.cx = w.W;
    q.surface_cells = w.W.size();
    q.role.assign(q.surface_cells, "surface");
    q.p.assign(h.cx.size(), CellImage{});
    for (size_t c = 0; c < h.surface_cells; ++c) q.p[c] = {w.pi[c].cell, h.cx.cells[c].dim, w.pi[c].orient};
    auto add = [&](int dim, std::vector<Incidence> b, std::optional<Sphere> s = {}) {
        q.role.push_back("suspension");
        return q.cx.add(dim, std::move(b), std::move(s));
    };

    for (const auto& [v, e] : h.lift_vertex) {
        CellImage a = q.p[static_cast<size_t>(h.cx.start(e))], b = q.p[static_cast<size_t>(h.cx.end(e))];
        if (d.in_L[static_cast<size_t>(e)]) {
            if (a.cell != b.cell) throw invariant_error("suspension 1-cell in L joins inequivalent vertices");
            q.p[static_cast<size_t>(e)] = {a.cell, 0, 1};
        } else {
            q.p[static_cast<size_t>(e)] = {add(1, {{a.cell, -1}, {b.cell, 1}}), 1, 1};
        }
    }
    for (const auto& [c, f] : h.lift_edge) {
        const auto& hb = h.cx.cells[static_cast<size_t>(f)].boundary;
        if (d.in_L[static_cast<size_t>(f)]) {
            const CellImage& a = q.p[static_cast<size_t>(hb[0].cell)];
            if (hb.size() != 4 || a.dim != 1) throw invariant_error("suspension 2-cell in L is not a product square");
            q.p[static_cast<size_t>(f)] = {a.cell, 1, a.orient};
            continue;
        }
        std::vector<Incidence> b;
        for (const auto& e : hb) {
            const CellImage& im = q.p[static_cast<size_t>(e.cell)];
            if (im.dim == 1) b.push_back({im.cell, e.orient * im.orient});
        }
        q.p[static_cast<size_t>(f)] = {add(2, b), 2, 1};
    }

    for (const auto& box : h.boxes) {
        if (d.filled[box.rect]) {
            q.p[static_cast<size_t>(box.cell)] = {q.p[static_cast<size_t>(box.bottom[0])].cell, 2, 1};
            continue;
        }
        std::string who = "box over rectangle " + std::to_string(box.rect + 1);
        Sphere s = sphere_of(h.cx, box.cell);
        size_t ne = s.edges.size();
        std::vector<size_t> cls(ne);
        std::iota(cls.begin(), cls.end(), 0);
        std::function<size_t(size_t)> find = [&](size_t a) { return cls[a] == a ? a : cls[a] = find(cls[a]); };
        auto edge_img = [&](int le) { return q.p[static_cast<size_t>(s.edges[static_cast<size_t>(le)].cell)]; };
        // faces in L collapse onto their bottom arc
        for (const auto& f : s.faces) {
            if (q.p[static_cast<size_t>(f.cell)].dim == 2) continue;
            int keep = -1;
            for (int le : f.edges) {
                if (edge_img(le).dim != 1) continue;
                if (keep < 0) keep = le;
                else if (edge_img(le).cell != edge_img(keep).cell) throw invariant_error(who + ": collapsed face identifies different 1-cells");
                else cls[find(static_cast<size_t>(le))] = find(static_cast<size_t>(keep));
            }
        }
        detail::SphereBuilder sb(q.cx, who);
        for (const auto& f : s.faces) {
            CellImage fi = q.p[static_cast<size_t>(f.cell)];
            if (fi.dim != 2) continue;
            const auto& hb = h.cx.cells[static_cast<size_t>(f.cell)].boundary;
            std::vector<std::pair<Incidence, int>> seq;
            for (size_t j = 0; j < hb.size(); ++j) {
                CellImage ei = edge_img(f.edges[j]);
                if (ei.dim == 1) seq.push_back({{ei.cell, hb[j].orient * ei.orient}, static_cast<int>(find(static_cast<size_t>(f.edges[j])))});
            }
            if (fi.orient < 0) {
                std::reverse(seq.begin(), seq.end());
                for (auto& [inc, le] : seq) inc.orient = -inc.orient;
            }
            const auto& target = q.cx.cells[static_cast<size_t>(fi.cell)].boundary;
            size_t k = target.size();
            if (seq.size() != k) throw invariant_error(who + ": face image has the wrong length");
            std::optional<size_t> shift;
            for (size_t r = 0; r < k && !shift; ++r) {
                bool ok = true;
                for (size_t j = 0; j < k && ok; ++j) ok = seq[(j + r) % k].first == target[j];
                if (ok) shift = r;
            }
            if (!shift) throw invariant_error(who + ": face image does not match its 2-cell");
            std::vector<int> le;
            for (size_t j = 0; j < k; ++j) le.push_back(sb.edge({seq[(j + *shift) % k].second, 0, 0}, target[j].cell));
            sb.face(fi.cell, f.orient * fi.orient, le);
        }
        Sphere ns = sb.finish();
        if (!sphere_coherent(q.cx, ns)) {
            q.notes.push_back(who + ": face orientations re-chosen after collapse");
            if (!orient_sphere(q.cx, ns)) throw invariant_error(who + ": collapsed boundary cannot be oriented");
        }
        CollapseCounts cc;
        cc.rect = box.rect;
        cc.before = {s.vertices.size(), s.edges.size(), s.faces.size()};
        cc.after = {ns.vertices.size(), ns.edges.size(), ns.faces.size()};
        q.collapse.push_back(cc);
        std::vector<Incidence> bd;
        for (const auto& f : ns.faces) bd.push_back({f.cell, f.orient});
        int c3 = add(3, bd, ns);
        q.box_of[c3] = box.rect;
        q.p[static_cast<size_t>(box.cell)] = {c3, 3, 1};
    }

    try {
        validate_complex(q.cx);
    } catch (const validation_error& e) {
        throw invariant_error(std::string("collapse produced an invalid complex: ") + e.what());
    }
    if (q.box_of.size() != t.Y.size()) throw invariant_error("3-cells do not match the Y-classes");
    for (const auto& [c3, r] : q.box_of)
        if (t.filled(r)) throw invariant_error("3-cell from a filled box");

    for (auto [src, dst] : {std::pair{&h.singular, &q.singular}, std::pair{&h.marked, &q.marked}}) {
        std::set<int> img;
        for (int c : *src) img.insert(q.p[static_cast<size_t>(c)].cell);
        dst->assign(img.begin(), img.end());
    }
    for (int c : h.singular)
        if (h.kind[static_cast<size_t>(c)] == HatKind::SuspensionEdge && q.p[static_cast<size_t>(c)].dim == 0)
            q.notes.push_back("singular orbit through " + h.cx.name(c) + " collapses to a vertex");

    if (P) {
        auto k = constants(*P);
        q.K = clamp_long(k.K);
        q.complexity = verify_bounded(q.cx, q.K);
    }
    return q;
}

/// Cellularity of p: images exist, never raise dimension, and boundaries map into closures.
inline std::vector<std::string> check_cellular(const SuspensionComplex& h, const QuotientComplex& q) {
    std::vector<std::string> out;
    for (size_t c = 0; c < h.cx.size(); ++c) {
        const auto& im = q.p[c];
        if (im.cell < 0 || static_cast<size_t>(im.cell) >= q.cx.size()) {
            out.push_back(h.cx.name(static_cast<int>(c)) + " has no image");
            continue;
        }
        if (q.cx.cells[static_cast<size_t>(im.cell)].dim != im.dim || im.dim > h.cx.cells[c].dim)
            out.push_back(h.cx.name(static_cast<int>(c)) + " maps to a cell of the wrong dimension");
        auto cl = closure(q.cx, im.cell);
        for (const auto& b : h.cx.cells[c].boundary)
            if (!cl.count(q.p[static_cast<size_t>(b.cell)].cell))
                out.push_back(h.cx.name(static_cast<int>(c)) + ": boundary image leaves the closure of its image");
    }
    return out;
}

/// The quotient with its distinguished 1-subcomplex (singular and marked images).
struct AnnotatedPair {
    CellComplex N;
    std::vector<int> tag;      // per cell: 0 ordinary, 1 singular, 2 marked
    std::vector<int> sub;      // cells of the subcomplex, sorted
    size_t circles = 0;        // components that are circles
    size_t points = 0;         // components that collapsed to a vertex
    size_t other = 0;
    CanonicalForm form;        // of N alone
    CanonicalForm pair_form;   // of N with tags
};

inline AnnotatedPair extract_N_circ(const QuotientComplex& q) {
    AnnotatedPair a;
    a.N = q.cx;
    a.tag.assign(q.cx.size(), 0);
    for (int c : q.singular) a.tag[static_cast<size_t>(c)] = 1;
    for (int c : q.marked) a.tag[static_cast<size_t>(c)] = 2;
    for (size_t c = 0; c < q.cx.size(); ++c)
        if (a.tag[c]) a.sub.push_back(static_cast<int>(c));
    std::map<int, int> parent, degree;
    std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
    for (int c : a.sub)
        if (q.cx.cells[static_cast<size_t>(c)].dim == 0) parent[c] = c, degree[c] = 0;
    for (int c : a.sub) {
        if (q.cx.cells[static_cast<size_t>(c)].dim != 1) continue;
        int u = q.cx.start(c), v = q.cx.end(c);
        degree[u]++, degree[v]++;
        parent[find(u)] = find(v);
    }
    std::map<int, std::pair<bool, bool>> comp;  // root -> (has edge, all degree 2)
    for (auto [v, p] : parent) {
        auto& s = comp.try_emplace(find(v), false, true).first->second;
        if (degree[v] > 0) s.first = true;
        if (degree[v] != 2) s.second = false;
    }
    for (const auto& [r, s] : comp) {
        if (!s.first) ++a.points;
        else if (s.second) ++a.circles;
        else ++a.other;
    }
    a.form = canonical_form(a.N);
    a.pair_form = canonical_form(a.N, &a.tag);
    return a;
}

}  // namespace smalldil
