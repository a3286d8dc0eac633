#pragma once

#include "numeric.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace smalldil {

struct Incidence {
    int cell = 0;  // index into CellComplex::cells
    int orient = 1;
    bool operator==(const Incidence&) const = default;
};

/// Local cell structure on the boundary sphere of a 3-cell. Local edges and faces map onto
/// cells of the complex; face edge lists are aligned position by position with the boundary
/// list of the 2-cell they map to.
struct SphereEdge {
    int cell = 0;
    int from = 0, to = 0;  // local vertices over the 1-cell's start and end
};
struct SphereFace {
    int cell = 0;
    int orient = 1;
    std::vector<int> edges;
};
struct Sphere {
    std::vector<int> vertices;  // local vertex -> 0-cell index
    std::vector<SphereEdge> edges;
    std::vector<SphereFace> faces;
};

struct Cell {
    long id = 0;
    int dim = 0;
    std::vector<Incidence> boundary;
    std::optional<Sphere> sphere;
};

class CellComplex {
public:
    std::vector<Cell> cells;

    int add(int dim, std::vector<Incidence> boundary = {}, std::optional<Sphere> sphere = {},
            long id = 0) {
        int idx = static_cast<int>(cells.size());
        cells.push_back(Cell{id ? id : idx + 1, dim, std::move(boundary), std::move(sphere)});
        return idx;
    }
    int add_vertex() { return add(0); }
    int add_edge(int v0, int v1) { return add(1, {{v0, -1}, {v1, 1}}); }

    size_t size() const { return cells.size(); }
    const Cell& operator[](size_t i) const { return cells[i]; }

    int start(int edge) const { return cells[static_cast<size_t>(edge)].boundary[0].cell; }
    int end(int edge) const { return cells[static_cast<size_t>(edge)].boundary[1].cell; }
    /// Tail and head of a 1-cell traversed with the given orientation.
    int tail(const Incidence& e) const { return e.orient > 0 ? start(e.cell) : end(e.cell); }
    int head(const Incidence& e) const { return e.orient > 0 ? end(e.cell) : start(e.cell); }

    std::array<size_t, 4> counts() const {
        std::array<size_t, 4> c{};
        for (const auto& x : cells) c[static_cast<size_t>(x.dim)]++;
        return c;
    }
    long euler() const {
        auto c = counts();
        return static_cast<long>(c[0]) - static_cast<long>(c[1]) + static_cast<long>(c[2]) -
               static_cast<long>(c[3]);
    }
    int dimension() const {
        int d = -1;
        for (const auto& x : cells) d = std::max(d, x.dim);
        return d;
    }
    std::vector<int> cells_of_dim(int d) const {
        std::vector<int> r;
        for (size_t i = 0; i < cells.size(); ++i)
            if (cells[i].dim == d) r.push_back(static_cast<int>(i));
        return r;
    }
    std::string name(int idx) const { return "cell " + std::to_string(cells[static_cast<size_t>(idx)].id); }
};

/// Sphere data for a 3-cell whose boundary 2-cells, edges and vertices are all distinct.
inline Sphere injective_sphere(const CellComplex& c, const std::vector<Incidence>& faces) {
    Sphere s;
    std::map<int, int> lv, le;
    auto local_vertex = [&](int v) {
        auto [it, fresh] = lv.emplace(v, static_cast<int>(s.vertices.size()));
        if (fresh) s.vertices.push_back(v);
        return it->second;
    };
    for (const auto& f : faces) {
        SphereFace sf{f.cell, f.orient, {}};
        for (const auto& e : c[static_cast<size_t>(f.cell)].boundary) {
            auto it = le.find(e.cell);
            if (it == le.end()) {
                int a = local_vertex(c.start(e.cell)), b = local_vertex(c.end(e.cell));
                it = le.emplace(e.cell, static_cast<int>(s.edges.size())).first;
                s.edges.push_back(SphereEdge{e.cell, a, b});
            }
            sf.edges.push_back(it->second);
        }
        s.faces.push_back(std::move(sf));
    }
    return s;
}

/// Structural validation; throws validation_error naming the first offending cell.
inline void validate_complex(const CellComplex& c) {
    auto fail = [&](size_t i, const std::string& what) {
        throw validation_error(c.name(static_cast<int>(i)) + ": " + what);
    };
    std::set<long> ids;
    for (size_t i = 0; i < c.size(); ++i) {
        const Cell& x = c.cells[i];
        if (!ids.insert(x.id).second) fail(i, "duplicate id");
        if (x.dim < 0 || x.dim > 3) fail(i, "dimension must be 0..3");
        for (const auto& b : x.boundary) {
            if (b.cell < 0 || static_cast<size_t>(b.cell) >= c.size()) fail(i, "unknown boundary cell");
            if (c.cells[static_cast<size_t>(b.cell)].dim != x.dim - 1)
                fail(i, "boundary cell of wrong dimension");
            if (b.orient != 1 && b.orient != -1) fail(i, "orientation must be +1 or -1");
        }
        if (x.dim == 0 && !x.boundary.empty()) fail(i, "0-cell with boundary");
        if (x.dim == 1 && (x.boundary.size() != 2 || x.boundary[0].orient != -1 ||
                           x.boundary[1].orient != 1))
            fail(i, "1-cell boundary must be [start -1, end +1]");
        if (x.dim == 2) {
            if (x.boundary.empty()) fail(i, "2-cell with empty boundary");
            size_t k = x.boundary.size();
            for (size_t j = 0; j < k; ++j)
                if (c.head(x.boundary[j]) != c.tail(x.boundary[(j + 1) % k]))
                    fail(i, "boundary arcs do not form a cycle at position " + std::to_string(j));
        }
        if (x.dim == 3) {
            if (x.boundary.empty()) fail(i, "3-cell with empty boundary");
            Sphere s = x.sphere ? *x.sphere : injective_sphere(c, x.boundary);
            for (int v : s.vertices)
                if (v < 0 || static_cast<size_t>(v) >= c.size() || c.cells[static_cast<size_t>(v)].dim != 0)
                    fail(i, "sphere vertex is not a 0-cell");
            int nv = static_cast<int>(s.vertices.size()), ne = static_cast<int>(s.edges.size());
            for (const auto& e : s.edges) {
                if (e.cell < 0 || static_cast<size_t>(e.cell) >= c.size() ||
                    c.cells[static_cast<size_t>(e.cell)].dim != 1)
                    fail(i, "sphere edge is not a 1-cell");
                if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv) fail(i, "sphere edge endpoint");
                if (s.vertices[static_cast<size_t>(e.from)] != c.start(e.cell) ||
                    s.vertices[static_cast<size_t>(e.to)] != c.end(e.cell))
                    fail(i, "sphere edge endpoints disagree with the 1-cell");
            }
            std::vector<int> uses(static_cast<size_t>(ne), 0);
            std::multiset<std::pair<int, int>> listed, from_sphere;
            for (const auto& b : x.boundary) listed.insert({b.cell, b.orient});
            for (const auto& f : s.faces) {
                from_sphere.insert({f.cell, f.orient});
                if (f.cell < 0 || static_cast<size_t>(f.cell) >= c.size() ||
                    c.cells[static_cast<size_t>(f.cell)].dim != 2)
                    fail(i, "sphere face is not a 2-cell");
                const auto& fb = c.cells[static_cast<size_t>(f.cell)].boundary;
                if (f.edges.size() != fb.size()) fail(i, "sphere face length mismatch");
                size_t k = fb.size();
                auto ltail = [&](size_t j) {
                    const auto& le = s.edges[static_cast<size_t>(f.edges[j])];
                    return fb[j].orient > 0 ? le.from : le.to;
                };
                auto lhead = [&](size_t j) {
                    const auto& le = s.edges[static_cast<size_t>(f.edges[j])];
                    return fb[j].orient > 0 ? le.to : le.from;
                };
                for (size_t j = 0; j < k; ++j) {
                    int le = f.edges[j];
                    if (le < 0 || le >= ne) fail(i, "sphere face edge index");
                    if (s.edges[static_cast<size_t>(le)].cell != fb[j].cell)
                        fail(i, "sphere face edge does not map to the 2-cell's arc");
                    uses[static_cast<size_t>(le)]++;
                }
                for (size_t j = 0; j < k; ++j)
                    if (lhead(j) != ltail((j + 1) % k)) fail(i, "sphere face arcs do not close up");
            }
            if (listed != from_sphere) fail(i, "boundary list disagrees with sphere faces");
            for (int u : uses)
                if (u != 2) fail(i, "sphere edge not used by exactly two face sides");
            long chi = nv - ne + static_cast<long>(s.faces.size());
            if (chi != 2) fail(i, "boundary is not a sphere (Euler characteristic " + std::to_string(chi) + ")");
            // connectivity through edges
            std::vector<int> parent(static_cast<size_t>(nv));
            std::iota(parent.begin(), parent.end(), 0);
            std::function<int(int)> find = [&](int a) {
                return parent[static_cast<size_t>(a)] == a ? a : parent[static_cast<size_t>(a)] = find(parent[static_cast<size_t>(a)]);
            };
            for (const auto& e : s.edges) parent[static_cast<size_t>(find(e.from))] = find(e.to);
            for (int v = 0; v < nv; ++v)
                if (find(v) != find(0)) fail(i, "boundary sphere is disconnected");
        }
    }
}

inline Sphere sphere_of(const CellComplex& c, int cell) {
    const Cell& x = c.cells[static_cast<size_t>(cell)];
    return x.sphere ? *x.sphere : injective_sphere(c, x.boundary);
}

/// Each local edge is crossed in opposite directions by its two face sides.
inline bool sphere_coherent(const CellComplex& c, const Sphere& s) {
    std::vector<int> sum(s.edges.size(), 0), uses(s.edges.size(), 0);
    for (const auto& f : s.faces) {
        const auto& fb = c.cells[static_cast<size_t>(f.cell)].boundary;
        for (size_t j = 0; j < f.edges.size(); ++j) {
            sum[static_cast<size_t>(f.edges[j])] += f.orient * fb[j].orient;
            uses[static_cast<size_t>(f.edges[j])]++;
        }
    }
    for (size_t e = 0; e < sum.size(); ++e)
        if (sum[e] != 0 || uses[e] != 2) return false;
    return true;
}

/// Chooses face orientations so the sphere is coherent, keeping the first face's orientation.
/// False when the faces cannot be oriented coherently.
inline bool orient_sphere(const CellComplex& c, Sphere& s) {
    if (s.faces.empty()) return true;
    std::vector<std::vector<std::pair<size_t, int>>> sides(s.edges.size());
    for (size_t f = 0; f < s.faces.size(); ++f) {
        const auto& fb = c.cells[static_cast<size_t>(s.faces[f].cell)].boundary;
        for (size_t j = 0; j < s.faces[f].edges.size(); ++j)
            sides[static_cast<size_t>(s.faces[f].edges[j])].push_back({f, fb[j].orient});
    }
    std::vector<int> set(s.faces.size(), 0);
    std::deque<size_t> queue;
    for (size_t start = 0; start < s.faces.size(); ++start) {
        if (set[start]) continue;
        set[start] = s.faces[start].orient;
        queue.push_back(start);
        while (!queue.empty()) {
            size_t f = queue.front();
            queue.pop_front();
            const auto& fb = c.cells[static_cast<size_t>(s.faces[f].cell)].boundary;
            for (size_t j = 0; j < s.faces[f].edges.size(); ++j) {
                int dir = set[f] * fb[j].orient;
                for (auto [g, o] : sides[static_cast<size_t>(s.faces[f].edges[j])]) {
                    if (g == f && o == fb[j].orient) continue;
                    int want = -dir * o;
                    if (!set[g]) {
                        set[g] = want;
                        queue.push_back(g);
                    } else if (set[g] != want) {
                        return false;
                    }
                }
            }
        }
    }
    for (size_t f = 0; f < s.faces.size(); ++f) s.faces[f].orient = set[f];
    return true;
}

struct ComplexityReport {
    std::array<size_t, 4> counts{};
    std::vector<long> cell_k_min;  // per cell
    long k_min = 2;
    long worst_cell = -1;          // index of a cell attaining the largest per-cell bound
    long K = 0;
    bool bounded = false;
};

/// Least K for which one cell has K-bounded complexity.
inline long cell_k_min(const CellComplex& c, int idx) {
    const Cell& x = c.cells[static_cast<size_t>(idx)];
    switch (x.dim) {
        case 0: return 0;
        case 1: return 2;
        case 2: return std::max<long>(2, static_cast<long>(x.boundary.size()));
        default: {
            Sphere s = sphere_of(c, idx);
            long k = std::max({2L, static_cast<long>(s.vertices.size()), static_cast<long>(s.edges.size()),
                               static_cast<long>(s.faces.size())});
            for (const auto& f : s.faces) k = std::max(k, static_cast<long>(f.edges.size()));
            return k;
        }
    }
}

/// Inductive K-bounded complexity; K_min is at least 2 by convention.
inline ComplexityReport verify_bounded(const CellComplex& c, long K) {
    validate_complex(c);
    ComplexityReport r;
    r.counts = c.counts();
    r.K = K;
    long cell_max = 0;
    for (size_t i = 0; i < c.size(); ++i) {
        long k = cell_k_min(c, static_cast<int>(i));
        r.cell_k_min.push_back(k);
        if (k > cell_max) {
            cell_max = k;
            r.worst_cell = static_cast<long>(i);
        }
    }
    r.k_min = std::max(2L, cell_max);
    for (size_t n : r.counts) r.k_min = std::max(r.k_min, static_cast<long>(n));
    r.bounded = K >= r.k_min;
    return r;
}

/// Cells in the closure of a cell (including itself).
inline std::set<int> closure(const CellComplex& c, int idx) {
    std::set<int> out;
    std::vector<int> stack{idx};
    while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        if (!out.insert(x).second) continue;
        for (const auto& b : c.cells[static_cast<size_t>(x)].boundary) stack.push_back(b.cell);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Delta complexes

/// faces[d][s] lists the d+1 faces of simplex s of dimension d; face i omits vertex i.
struct DeltaComplex {
    std::vector<std::vector<std::vector<int>>> faces;
    std::vector<std::vector<int>> origin;  // dimension of the original open cell containing the simplex

    int dimension() const { return static_cast<int>(faces.size()) - 1; }
    size_t count(int d) const {
        return d >= 0 && d < static_cast<int>(faces.size()) ? faces[static_cast<size_t>(d)].size() : 0;
    }
    int add(int d, std::vector<int> f, int org) {
        while (static_cast<int>(faces.size()) <= d) {
            faces.emplace_back();
            origin.emplace_back();
        }
        faces[static_cast<size_t>(d)].push_back(std::move(f));
        origin[static_cast<size_t>(d)].push_back(org);
        return static_cast<int>(faces[static_cast<size_t>(d)].size()) - 1;
    }
    const std::vector<int>& face_list(int d, int s) const {
        return faces[static_cast<size_t>(d)][static_cast<size_t>(s)];
    }
    /// Vertex j of simplex s of dimension d.
    int vertex(int d, int s, int j) const {
        while (d > 0) {
            int i = j == 0 ? 1 : 0;  // omit some vertex other than j
            s = face_list(d, s)[static_cast<size_t>(i)];
            if (j > i) --j;
            --d;
        }
        return s;
    }
    std::vector<int> vertices(int d, int s) const {
        std::vector<int> v;
        for (int j = 0; j <= d; ++j) v.push_back(vertex(d, s, j));
        return v;
    }
    long euler() const {
        long chi = 0;
        for (int d = 0; d <= dimension(); ++d) chi += (d % 2 ? -1 : 1) * static_cast<long>(count(d));
        return chi;
    }
};

/// Checks the simplicial identities d_i d_j = d_{j-1} d_i for i < j.
inline void validate_delta(const DeltaComplex& x) {
    for (int d = 1; d <= x.dimension(); ++d)
        for (int s = 0; s < static_cast<int>(x.count(d)); ++s) {
            const auto& f = x.face_list(d, s);
            if (static_cast<int>(f.size()) != d + 1)
                throw validation_error("delta simplex with wrong number of faces");
            for (int v : f)
                if (v < 0 || v >= static_cast<int>(x.count(d - 1)))
                    throw validation_error("delta face index out of range");
            if (d < 2) continue;
            for (int j = 0; j <= d; ++j)
                for (int i = 0; i < j; ++i) {
                    int a = x.face_list(d - 1, f[static_cast<size_t>(j)])[static_cast<size_t>(i)];
                    int b = x.face_list(d - 1, f[static_cast<size_t>(i)])[static_cast<size_t>(j - 1)];
                    if (a != b)
                        throw validation_error("delta face identities fail in dimension " + std::to_string(d) +
                                               " simplex " + std::to_string(s));
                }
        }
}

struct ConeReport {
    std::array<size_t, 4> before{}, after{};
    long euler_before = 0, euler_after = 0;
};

/// Cones off every 2-cell and then every 3-cell, giving a Delta complex with the same space.
/// With tags, a simplex's origin is dim + 4 * tag of the cell containing it.
inline DeltaComplex cone_subdivide(const CellComplex& c, ConeReport* report = nullptr,
                                   const std::vector<int>* tags = nullptr) {
    validate_complex(c);
    if (c.dimension() > 3) throw validation_error("cone subdivision supports dimension <= 3");
    if (tags && tags->size() != c.size()) throw validation_error("one tag per cell expected");
    auto org = [&](int cell) { return c.cells[static_cast<size_t>(cell)].dim + (tags ? 4 * (*tags)[static_cast<size_t>(cell)] : 0); };
    DeltaComplex x;
    std::vector<int> at(c.size(), -1);
    for (int v : c.cells_of_dim(0)) at[static_cast<size_t>(v)] = x.add(0, {}, org(v));
    for (int e : c.cells_of_dim(1))
        at[static_cast<size_t>(e)] = x.add(1, {at[static_cast<size_t>(c.end(e))], at[static_cast<size_t>(c.start(e))]}, org(e));
    // per 2-cell: centre, spokes per boundary position, triangles per boundary arc
    struct Coned {
        int centre;
        std::vector<int> spokes, triangles;
    };
    std::map<int, Coned> coned;
    for (int f : c.cells_of_dim(2)) {
        const auto& b = c.cells[static_cast<size_t>(f)].boundary;
        size_t k = b.size();
        Coned cn;
        int o = org(f);
        cn.centre = x.add(0, {}, o);
        for (size_t j = 0; j < k; ++j) {
            int p = at[static_cast<size_t>(c.tail(b[j]))];
            cn.spokes.push_back(x.add(1, {cn.centre, p}, o));
        }
        for (size_t j = 0; j < k; ++j) {
            size_t s_pos = b[j].orient > 0 ? j : (j + 1) % k;
            size_t e_pos = b[j].orient > 0 ? (j + 1) % k : j;
            cn.triangles.push_back(x.add(2, {cn.spokes[e_pos], cn.spokes[s_pos], at[static_cast<size_t>(b[j].cell)]}, o));
        }
        at[static_cast<size_t>(f)] = cn.centre;
        coned[f] = std::move(cn);
    }
    for (int t : c.cells_of_dim(3)) {
        Sphere s = sphere_of(c, t);
        int o = org(t);
        int apex = x.add(0, {}, o);
        // cone edges over local vertices and face centres
        std::vector<int> over_vertex, over_centre;
        for (int v : s.vertices) over_vertex.push_back(x.add(1, {apex, at[static_cast<size_t>(v)]}, o));
        for (const auto& f : s.faces) over_centre.push_back(x.add(1, {apex, coned[f.cell].centre}, o));
        // cone triangles over local edges and local spokes
        std::vector<int> over_edge;
        for (const auto& e : s.edges)
            over_edge.push_back(x.add(2, {over_vertex[static_cast<size_t>(e.to)], over_vertex[static_cast<size_t>(e.from)], at[static_cast<size_t>(e.cell)]}, o));
        for (size_t fi = 0; fi < s.faces.size(); ++fi) {
            const auto& f = s.faces[fi];
            const auto& b = c.cells[static_cast<size_t>(f.cell)].boundary;
            const Coned& cn = coned[f.cell];
            size_t k = b.size();
            auto local_tail = [&](size_t j) {
                const auto& le = s.edges[static_cast<size_t>(f.edges[j])];
                return b[j].orient > 0 ? le.from : le.to;
            };
            std::vector<int> over_spoke;
            for (size_t j = 0; j < k; ++j)
                over_spoke.push_back(x.add(2, {over_centre[fi], over_vertex[static_cast<size_t>(local_tail(j))], cn.spokes[j]}, o));
            for (size_t j = 0; j < k; ++j) {
                size_t s_pos = b[j].orient > 0 ? j : (j + 1) % k;
                size_t e_pos = b[j].orient > 0 ? (j + 1) % k : j;
                x.add(3, {over_spoke[e_pos], over_spoke[s_pos], over_edge[static_cast<size_t>(f.edges[j])], cn.triangles[j]}, 3);
            }
        }
    }
    if (report) {
        report->before = c.counts();
        for (int d = 0; d < 4; ++d) report->after[static_cast<size_t>(d)] = x.count(d);
        report->euler_before = c.euler();
        report->euler_after = x.euler();
    }
    return x;
}

/// Barycentric subdivision of a Delta complex. A k-simplex of the result is a simplex tau of
/// the input together with a chain S_0 < ... < S_k = all vertices of tau.
inline DeltaComplex barycentric_once(const DeltaComplex& x) {
    validate_delta(x);
    int top = x.dimension();
    DeltaComplex y;
    // sub-face of tau spanned by a vertex subset (bitmask)
    auto face_of = [&](int d, int s, unsigned mask) {
        for (int i = d; i >= 0; --i)
            if (!(mask & (1u << i))) {
                s = x.face_list(d, s)[static_cast<size_t>(i)];
                --d;
            }
        return std::pair<int, int>{d, s};
    };
    auto compress = [](unsigned sub, unsigned within) {
        unsigned r = 0, bit = 0;
        for (unsigned i = 0; i < 32; ++i)
            if (within & (1u << i)) {
                if (sub & (1u << i)) r |= 1u << bit;
                ++bit;
            }
        return r;
    };
    std::vector<std::vector<int>> vertex_of(static_cast<size_t>(top + 1));
    for (int d = 0; d <= top; ++d)
        for (int s = 0; s < static_cast<int>(x.count(d)); ++s)
            vertex_of[static_cast<size_t>(d)].push_back(y.add(0, {}, x.origin[static_cast<size_t>(d)][static_cast<size_t>(s)]));
    // key: (dim of tau, tau, chain masks without the final full mask)
    std::vector<std::map<std::vector<unsigned>, int>> index(static_cast<size_t>(top + 1));
    std::function<int(int, int, const std::vector<unsigned>&)> get;
    get = [&](int d, int s, const std::vector<unsigned>& chain) -> int {
        // chain: strictly increasing masks, last one is full (1<<(d+1))-1
        int k = static_cast<int>(chain.size()) - 1;
        if (k == 0) return vertex_of[static_cast<size_t>(d)][static_cast<size_t>(s)];
        std::vector<unsigned> key{static_cast<unsigned>(d), static_cast<unsigned>(s)};
        key.insert(key.end(), chain.begin(), chain.end());
        auto& idx = index[static_cast<size_t>(k)];
        auto it = idx.find(key);
        if (it != idx.end()) return it->second;
        std::vector<int> f;
        for (int i = 0; i < k; ++i) {
            std::vector<unsigned> sub = chain;
            sub.erase(sub.begin() + i);
            f.push_back(get(d, s, sub));
        }
        auto [fd, fs] = face_of(d, s, chain[static_cast<size_t>(k - 1)]);
        std::vector<unsigned> sub;
        for (int i = 0; i < k; ++i) sub.push_back(compress(chain[static_cast<size_t>(i)], chain[static_cast<size_t>(k - 1)]));
        f.push_back(get(fd, fs, sub));
        int id = y.add(k, f, x.origin[static_cast<size_t>(d)][static_cast<size_t>(s)]);
        idx.emplace(std::move(key), id);
        return id;
    };
    // enumerate chains in a fixed order: by tau, then chains of increasing length
    for (int d = 1; d <= top; ++d) {
        unsigned full = (1u << (d + 1)) - 1;
        for (int s = 0; s < static_cast<int>(x.count(d)); ++s) {
            std::function<void(std::vector<unsigned>&)> extend = [&](std::vector<unsigned>& rev) {
                // rev holds the chain from the top down
                std::vector<unsigned> chain(rev.rbegin(), rev.rend());
                get(d, s, chain);
                unsigned cur = rev.back();
                for (unsigned sub = (cur - 1) & cur; sub; sub = (sub - 1) & cur) {
                    rev.push_back(sub);
                    extend(rev);
                    rev.pop_back();
                }
            };
            std::vector<unsigned> rev{full};
            extend(rev);
        }
    }
    return y;
}

inline DeltaComplex barycentric_subdivide(const DeltaComplex& x, int times) {
    if (times < 1 || times > 2) throw validation_error("barycentric subdivision supports 1 or 2 rounds");
    DeltaComplex y = barycentric_once(x);
    return times == 2 ? barycentric_once(y) : y;
}

/// True when every simplex has distinct vertices and no two simplices share a vertex set.
inline bool is_simplicial(const DeltaComplex& x) {
    for (int d = 1; d <= x.dimension(); ++d) {
        std::set<std::vector<int>> seen;
        for (int s = 0; s < static_cast<int>(x.count(d)); ++s) {
            auto v = x.vertices(d, s);
            std::sort(v.begin(), v.end());
            if (std::adjacent_find(v.begin(), v.end()) != v.end()) return false;
            if (!seen.insert(v).second) return false;
        }
    }
    return true;
}

/// Reads a cell complex as a Delta complex; refuses cells that are not simplices with
/// consistently ordered faces.
inline DeltaComplex as_delta(const CellComplex& c) {
    validate_complex(c);
    DeltaComplex x;
    std::vector<int> at(c.size(), -1);
    for (int v : c.cells_of_dim(0)) at[static_cast<size_t>(v)] = x.add(0, {}, 0);
    for (int e : c.cells_of_dim(1))
        at[static_cast<size_t>(e)] = x.add(1, {at[static_cast<size_t>(c.end(e))], at[static_cast<size_t>(c.start(e))]}, 1);
    for (int f : c.cells_of_dim(2)) {
        const auto& b = c.cells[static_cast<size_t>(f)].boundary;
        if (b.size() != 3) throw refusal(c.name(f) + " is not a triangle");
        // edges [v0v1, v1v2, v2v0] in some rotation; find v0 as the common tail of the two out-edges
        std::optional<std::vector<int>> found;
        for (size_t r = 0; r < 3 && !found; ++r) {
            const auto& a = b[r];
            const auto& bb = b[(r + 1) % 3];
            const auto& cc = b[(r + 2) % 3];
            if (a.orient > 0 && bb.orient > 0 && cc.orient < 0)
                found = std::vector<int>{at[static_cast<size_t>(bb.cell)], at[static_cast<size_t>(cc.cell)], at[static_cast<size_t>(a.cell)]};
        }
        if (!found) throw refusal(c.name(f) + " has no compatible vertex order");
        at[static_cast<size_t>(f)] = x.add(2, *found, 2);
    }
    if (!c.cells_of_dim(3).empty()) throw refusal("3-cells are not read as simplices; cone them first");
    validate_delta(x);
    return x;
}

/// Converts a Delta complex back into a cell complex (simplices with explicit spheres).
inline CellComplex to_cell_complex(const DeltaComplex& x) {
    CellComplex c;
    std::vector<std::vector<int>> at(static_cast<size_t>(x.dimension() + 1));
    for (int s = 0; s < static_cast<int>(x.count(0)); ++s) at[0].push_back(c.add_vertex());
    for (int s = 0; s < static_cast<int>(x.count(1)); ++s) {
        const auto& f = x.face_list(1, s);
        at[1].push_back(c.add_edge(at[0][static_cast<size_t>(f[1])], at[0][static_cast<size_t>(f[0])]));
    }
    for (int s = 0; s < static_cast<int>(x.count(2)); ++s) {
        const auto& f = x.face_list(2, s);
        // v0 -> v1 -> v2 -> v0 : d2, d0, reverse d1
        at[2].push_back(c.add(2, {{at[1][static_cast<size_t>(f[2])], 1}, {at[1][static_cast<size_t>(f[0])], 1}, {at[1][static_cast<size_t>(f[1])], -1}}));
    }
    for (int s = 0; s < static_cast<int>(x.count(3)); ++s) {
        Sphere sp;
        auto v = x.vertices(3, s);
        for (int u : v) sp.vertices.push_back(at[0][static_cast<size_t>(u)]);
        // local edges of the tetrahedron, by vertex pair
        std::map<std::pair<int, int>, int> le;
        const auto& f = x.face_list(3, s);
        std::vector<Incidence> bd;
        for (int i = 0; i < 4; ++i) {
            int tri = f[static_cast<size_t>(i)];
            std::vector<int> lv;
            for (int j = 0; j < 4; ++j)
                if (j != i) lv.push_back(j);
            // triangle edges in the order used above: (lv0 lv1), (lv1 lv2), (lv0 lv2)
            const auto& tf = x.face_list(2, tri);
            std::array<std::pair<int, int>, 3> pairs{{{lv[0], lv[1]}, {lv[1], lv[2]}, {lv[0], lv[2]}}};
            std::array<int, 3> cells{at[1][static_cast<size_t>(tf[2])], at[1][static_cast<size_t>(tf[0])], at[1][static_cast<size_t>(tf[1])]};
            SphereFace sf{at[2][static_cast<size_t>(tri)], i % 2 ? -1 : 1, {}};
            for (int k = 0; k < 3; ++k) {
                auto it = le.find(pairs[static_cast<size_t>(k)]);
                if (it == le.end()) {
                    it = le.emplace(pairs[static_cast<size_t>(k)], static_cast<int>(sp.edges.size())).first;
                    sp.edges.push_back(SphereEdge{cells[static_cast<size_t>(k)], pairs[static_cast<size_t>(k)].first, pairs[static_cast<size_t>(k)].second});
                }
                sf.edges.push_back(it->second);
            }
            bd.push_back({sf.cell, sf.orient});
            sp.faces.push_back(std::move(sf));
        }
        c.add(3, bd, sp);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Canonical labelling

namespace detail {

/// Ordered partition refinement on an undirected multigraph with vertex colours.
class Partition {
public:
    std::vector<int> lab, cell_of, cell_end;  // cell_of[v], cell_end[start]

    Partition(const std::vector<long>& colour) {
        size_t n = colour.size();
        lab.resize(n);
        std::iota(lab.begin(), lab.end(), 0);
        std::stable_sort(lab.begin(), lab.end(), [&](int a, int b) { return colour[static_cast<size_t>(a)] < colour[static_cast<size_t>(b)]; });
        cell_of.assign(n, 0);
        cell_end.assign(n, 0);
        size_t i = 0;
        while (i < n) {
            size_t j = i;
            while (j < n && colour[static_cast<size_t>(lab[j])] == colour[static_cast<size_t>(lab[i])]) ++j;
            for (size_t k = i; k < j; ++k) cell_of[static_cast<size_t>(lab[k])] = static_cast<int>(i);
            cell_end[i] = static_cast<int>(j);
            i = j;
        }
    }
    size_t size() const { return lab.size(); }
    std::vector<int> starts() const {
        std::vector<int> s;
        for (size_t i = 0; i < lab.size(); i = static_cast<size_t>(cell_end[i])) s.push_back(static_cast<int>(i));
        return s;
    }
    bool discrete() const {
        for (size_t i = 0; i < lab.size(); ++i)
            if (cell_end[i] != static_cast<int>(i) + 1 && cell_of[static_cast<size_t>(lab[i])] == static_cast<int>(i))
                return false;
        return true;
    }
};

inline void refine(Partition& p, const std::vector<std::vector<int>>& adj, std::deque<int> queue) {
    size_t n = p.size();
    std::vector<char> in_queue(n, 0);
    for (int s : queue) in_queue[static_cast<size_t>(s)] = 1;
    std::vector<long> count(n, 0);
    std::vector<int> touched;
    while (!queue.empty()) {
        int w = queue.front();
        queue.pop_front();
        in_queue[static_cast<size_t>(w)] = 0;
        touched.clear();
        for (int k = w; k < p.cell_end[static_cast<size_t>(w)]; ++k)
            for (int u : adj[static_cast<size_t>(p.lab[static_cast<size_t>(k)])]) {
                if (count[static_cast<size_t>(u)]++ == 0) touched.push_back(u);
            }
        std::set<int> cells;
        for (int u : touched) cells.insert(p.cell_of[static_cast<size_t>(u)]);
        for (int c : cells) {
            int e = p.cell_end[static_cast<size_t>(c)];
            if (e - c == 1) continue;
            auto first = p.lab.begin() + c, last = p.lab.begin() + e;
            std::sort(first, last, [&](int a, int b) {
                long ca = count[static_cast<size_t>(a)], cb = count[static_cast<size_t>(b)];
                return ca != cb ? ca < cb : a < b;
            });
            if (count[static_cast<size_t>(*first)] == count[static_cast<size_t>(*(last - 1))]) continue;
            std::vector<std::pair<int, int>> frags;
            int s = c;
            for (int k = c + 1; k <= e; ++k)
                if (k == e || count[static_cast<size_t>(p.lab[static_cast<size_t>(k)])] != count[static_cast<size_t>(p.lab[static_cast<size_t>(s)])]) {
                    frags.push_back({s, k});
                    s = k;
                }
            for (auto [a, b] : frags) {
                p.cell_end[static_cast<size_t>(a)] = b;
                for (int k = a; k < b; ++k) p.cell_of[static_cast<size_t>(p.lab[static_cast<size_t>(k)])] = a;
            }
            if (in_queue[static_cast<size_t>(c)]) {
                for (auto [a, b] : frags)
                    if (!in_queue[static_cast<size_t>(a)]) {
                        in_queue[static_cast<size_t>(a)] = 1;
                        queue.push_back(a);
                    }
            } else {
                size_t big = 0;
                for (size_t f = 1; f < frags.size(); ++f)
                    if (frags[f].second - frags[f].first > frags[big].second - frags[big].first) big = f;
                for (size_t f = 0; f < frags.size(); ++f)
                    if (f != big) {
                        in_queue[static_cast<size_t>(frags[f].first)] = 1;
                        queue.push_back(frags[f].first);
                    }
            }
        }
        for (int u : touched) count[static_cast<size_t>(u)] = 0;
    }
}

/// Canonical labelling by individualisation-refinement with invariant pruning and
/// root-level orbit pruning. Returns the canonical certificate.
class Canonizer {
public:
    Canonizer(const std::vector<long>& colour, const std::vector<std::vector<int>>& adj)
        : colour_(colour), adj_(adj) {}

    std::vector<uint32_t> run() {
        Partition p(colour_);
        std::deque<int> q;
        for (int s : p.starts()) q.push_back(s);
        refine(p, adj_, q);
        orbit_.resize(p.size());
        std::iota(orbit_.begin(), orbit_.end(), 0);
        std::vector<std::vector<int>> invs;
        search(p, invs, 0);
        return best_form_;
    }

    size_t leaves() const { return leaves_; }

private:
    const std::vector<long>& colour_;
    const std::vector<std::vector<int>>& adj_;
    std::vector<std::vector<int>> best_invs_;
    std::vector<uint32_t> best_form_;
    std::vector<int> best_lab_;
    bool have_best_ = false;
    std::vector<int> orbit_;
    size_t leaves_ = 0;

    int find(int a) { return orbit_[static_cast<size_t>(a)] == a ? a : orbit_[static_cast<size_t>(a)] = find(orbit_[static_cast<size_t>(a)]); }

    static std::vector<int> invariant(const Partition& p) {
        std::vector<int> v;
        for (int s : p.starts()) v.push_back(p.cell_end[static_cast<size_t>(s)] - s);
        return v;
    }

    std::vector<uint32_t> form(const Partition& p) const {
        size_t n = p.size();
        std::vector<int> label(n);
        for (size_t k = 0; k < n; ++k) label[static_cast<size_t>(p.lab[k])] = static_cast<int>(k);
        std::vector<uint32_t> f;
        f.push_back(static_cast<uint32_t>(n));
        for (size_t k = 0; k < n; ++k) f.push_back(static_cast<uint32_t>(colour_[static_cast<size_t>(p.lab[k])]));
        for (size_t k = 0; k < n; ++k) {
            std::vector<uint32_t> nb;
            for (int u : adj_[static_cast<size_t>(p.lab[k])]) nb.push_back(static_cast<uint32_t>(label[static_cast<size_t>(u)]));
            std::sort(nb.begin(), nb.end());
            f.push_back(static_cast<uint32_t>(nb.size()));
            f.insert(f.end(), nb.begin(), nb.end());
        }
        return f;
    }

    // -1: better than best so far, 0: tie, 1: worse
    int compare_prefix(const std::vector<std::vector<int>>& invs) const {
        if (!have_best_) return -1;
        for (size_t i = 0; i < invs.size() && i < best_invs_.size(); ++i) {
            if (invs[i] < best_invs_[i]) return -1;
            if (best_invs_[i] < invs[i]) return 1;
        }
        return 0;
    }

    void search(const Partition& p, std::vector<std::vector<int>>& invs, int depth) {
        invs.push_back(invariant(p));
        int cmp = compare_prefix(invs);
        if (cmp > 0) {
            invs.pop_back();
            return;
        }
        if (p.discrete()) {
            ++leaves_;
            auto f = form(p);
            bool better = !have_best_ || invs < best_invs_ || (invs == best_invs_ && f < best_form_);
            if (have_best_ && invs == best_invs_ && f == best_form_) {
                // automorphism: best_lab[k] -> p.lab[k]
                for (size_t k = 0; k < p.size(); ++k) {
                    int a = find(best_lab_[k]), b = find(p.lab[k]);
                    if (a != b) orbit_[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
                }
            } else if (better) {
                best_invs_ = invs;
                best_form_ = std::move(f);
                best_lab_ = p.lab;
                have_best_ = true;
            }
            invs.pop_back();
            return;
        }
        // target: smallest non-singleton cell, first by position
        int target = -1, tsize = 0;
        for (int s : p.starts()) {
            int sz = p.cell_end[static_cast<size_t>(s)] - s;
            if (sz > 1 && (target < 0 || sz < tsize)) {
                target = s;
                tsize = sz;
            }
        }
        std::vector<int> members(p.lab.begin() + target, p.lab.begin() + p.cell_end[static_cast<size_t>(target)]);
        std::sort(members.begin(), members.end());
        std::set<int> done_orbits;
        for (int v : members) {
            if (depth == 0) {
                int o = find(v);
                if (done_orbits.count(o)) continue;
            }
            Partition child = p;
            // individualise v: move it to the front of its cell
            auto it = std::find(child.lab.begin() + target, child.lab.begin() + child.cell_end[static_cast<size_t>(target)], v);
            std::iter_swap(child.lab.begin() + target, it);
            int end = child.cell_end[static_cast<size_t>(target)];
            child.cell_end[static_cast<size_t>(target)] = target + 1;
            child.cell_end[static_cast<size_t>(target + 1)] = end;
            for (int k = target + 1; k < end; ++k) child.cell_of[static_cast<size_t>(child.lab[static_cast<size_t>(k)])] = target + 1;
            child.cell_of[static_cast<size_t>(v)] = target;
            refine(child, adj_, std::deque<int>{target});
            search(child, invs, depth + 1);
            if (depth == 0) done_orbits.insert(find(v));
        }
        invs.pop_back();
    }
};

}  // namespace detail

struct CanonicalForm {
    std::vector<uint32_t> words;
    std::array<size_t, 4> model_counts{};  // simplices of the twice-subdivided model by dimension

    bool operator==(const CanonicalForm& o) const { return words == o.words; }
    bool operator<(const CanonicalForm& o) const { return words < o.words; }

    std::vector<unsigned char> bytes() const {
        std::vector<unsigned char> b;
        for (uint32_t w : words)
            for (int k = 3; k >= 0; --k) b.push_back(static_cast<unsigned char>((w >> (8 * k)) & 0xff));
        return b;
    }
};

/// Canonical form of the twice-subdivided simplicial model. Vertices of the model are the
/// simplices of the once-subdivided cone complex; they are coloured by dimension and by the
/// dimension (and tag, when given) of the original cell whose interior contains them, and
/// joined along codimension-1 face relations.
inline CanonicalForm canonical_form(const CellComplex& c, const std::vector<int>* tags = nullptr) {
    DeltaComplex once = barycentric_once(cone_subdivide(c, nullptr, tags));
    std::vector<long> colour;
    std::vector<std::vector<int>> adj;
    std::vector<std::vector<int>> node(static_cast<size_t>(once.dimension() + 1));
    for (int d = 0; d <= once.dimension(); ++d)
        for (int s = 0; s < static_cast<int>(once.count(d)); ++s) {
            node[static_cast<size_t>(d)].push_back(static_cast<int>(colour.size()));
            colour.push_back(once.origin[static_cast<size_t>(d)][static_cast<size_t>(s)] * 4L + d);
            adj.emplace_back();
        }
    for (int d = 1; d <= once.dimension(); ++d)
        for (int s = 0; s < static_cast<int>(once.count(d)); ++s)
            for (int f : once.face_list(d, s)) {
                int a = node[static_cast<size_t>(d)][static_cast<size_t>(s)], b = node[static_cast<size_t>(d - 1)][static_cast<size_t>(f)];
                adj[static_cast<size_t>(a)].push_back(b);
                adj[static_cast<size_t>(b)].push_back(a);
            }
    CanonicalForm cf;
    if (colour.empty()) return cf;
    detail::Canonizer canon(colour, adj);
    cf.words = canon.run();
    // the model's simplex counts: chains in the face poset, by length
    std::vector<std::vector<long>> chains(colour.size());
    size_t total = colour.size();
    std::vector<size_t> by_len(4, 0);
    by_len[0] = total;
    // chains ending at each node, counted by number of steps, along the face relation
    std::vector<std::array<long, 4>> ending(total);
    for (auto& e : ending) e = {1, 0, 0, 0};
    for (int d = 1; d <= once.dimension(); ++d)
        for (int s = 0; s < static_cast<int>(once.count(d)); ++s) {
            int a = node[static_cast<size_t>(d)][static_cast<size_t>(s)];
            // all strict faces reachable: walk down through every lower dimension
            std::set<int> seen;
            std::vector<std::pair<int, int>> stack{{d, s}};
            std::vector<std::pair<int, int>> below;
            while (!stack.empty()) {
                auto [dd, ss] = stack.back();
                stack.pop_back();
                for (int f : once.face_list(dd, ss)) {
                    int id = node[static_cast<size_t>(dd - 1)][static_cast<size_t>(f)];
                    if (seen.insert(id).second) {
                        below.push_back({dd - 1, f});
                        if (dd - 1 > 0) stack.push_back({dd - 1, f});
                    }
                }
            }
            for (auto [bd, bs] : below) {
                int b = node[static_cast<size_t>(bd)][static_cast<size_t>(bs)];
                for (int k = 0; k < 3; ++k) ending[static_cast<size_t>(a)][static_cast<size_t>(k + 1)] += ending[static_cast<size_t>(b)][static_cast<size_t>(k)];
            }
        }
    for (size_t i = 0; i < total; ++i)
        for (int k = 1; k < 4; ++k) by_len[static_cast<size_t>(k)] += static_cast<size_t>(ending[i][static_cast<size_t>(k)]);
    for (int k = 0; k < 4; ++k) cf.model_counts[static_cast<size_t>(k)] = by_len[static_cast<size_t>(k)];
    return cf;
}

/// Groups indices of a batch by canonical form; groups ordered by their smallest form.
inline std::vector<std::vector<size_t>> classify(const std::vector<CanonicalForm>& forms) {
    std::map<std::vector<uint32_t>, std::vector<size_t>> groups;
    for (size_t i = 0; i < forms.size(); ++i) groups[forms[i].words].push_back(i);
    std::vector<std::vector<size_t>> out;
    for (auto& [k, v] : groups) out.push_back(v);
    return out;
}

inline std::vector<std::vector<size_t>> classify(const std::vector<CellComplex>& batch) {
    std::vector<CanonicalForm> forms;
    for (const auto& c : batch) forms.push_back(canonical_form(c));
    return classify(forms);
}

// ---------------------------------------------------------------------------
// Homology

struct HomologyReport {
    std::array<long, 4> betti{};
    std::array<std::vector<Int>, 4> torsion;  // invariant factors > 1
    bool integral = true;                     // false when the mod-2 fallback was used
    long euler_cells = 0, euler_ranks = 0;
};

namespace detail {

using IntMatrix = std::vector<std::vector<Int>>;

/// Diagonal entries of a Smith form (nonzero ones), normalised to invariant factors.
inline std::vector<Int> smith_diagonal(IntMatrix m) {
    size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    std::vector<Int> diag;
    size_t t = 0;
    while (t < rows && t < cols) {
        // pivot: smallest nonzero absolute value in the remaining block
        size_t pr = rows, pc = cols;
        Int best = 0;
        for (size_t i = t; i < rows; ++i)
            for (size_t j = t; j < cols; ++j)
                if (m[i][j] != 0 && (best == 0 || abs(m[i][j]) < best)) {
                    best = abs(m[i][j]);
                    pr = i;
                    pc = j;
                }
        if (pr == rows) break;
        std::swap(m[t], m[pr]);
        for (auto& row : m) std::swap(row[t], row[pc]);
        bool clean = false;
        while (!clean) {
            clean = true;
            for (size_t i = t + 1; i < rows; ++i)
                if (m[i][t] != 0) {
                    Int q = m[i][t] / m[t][t];
                    for (size_t j = t; j < cols; ++j) m[i][j] -= q * m[t][j];
                    if (m[i][t] != 0) {
                        std::swap(m[t], m[i]);
                        clean = false;
                    }
                }
            for (size_t j = t + 1; j < cols; ++j)
                if (m[t][j] != 0) {
                    Int q = m[t][j] / m[t][t];
                    for (size_t i = t; i < rows; ++i) m[i][j] -= q * m[i][t];
                    if (m[t][j] != 0) {
                        for (auto& row : m) std::swap(row[t], row[j]);
                        clean = false;
                    }
                }
        }
        diag.push_back(abs(m[t][t]));
        ++t;
    }
    // normalise so that each factor divides the next
    for (size_t i = 0; i < diag.size(); ++i)
        for (size_t j = i + 1; j < diag.size(); ++j) {
            Int g = gcd(diag[i], diag[j]);
            Int l = diag[i] / g * diag[j];
            diag[i] = g;
            diag[j] = l;
        }
    return diag;
}

inline long rank_mod2(IntMatrix m) {
    size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    std::vector<std::vector<char>> b(rows, std::vector<char>(cols));
    for (size_t i = 0; i < rows; ++i)
        for (size_t j = 0; j < cols; ++j) b[i][j] = static_cast<char>((m[i][j] % 2) != 0);
    long r = 0;
    for (size_t j = 0; j < cols && static_cast<size_t>(r) < rows; ++j) {
        size_t p = static_cast<size_t>(r);
        while (p < rows && !b[p][j]) ++p;
        if (p == rows) continue;
        std::swap(b[p], b[static_cast<size_t>(r)]);
        for (size_t i = 0; i < rows; ++i)
            if (i != static_cast<size_t>(r) && b[i][j])
                for (size_t k = 0; k < cols; ++k) b[i][k] ^= b[static_cast<size_t>(r)][k];
        ++r;
    }
    return r;
}

}  // namespace detail

/// Cellular boundary matrix from dimension d to d-1 (rows: (d-1)-cells, cols: d-cells).
inline detail::IntMatrix boundary_matrix(const CellComplex& c, int d) {
    auto lower = c.cells_of_dim(d - 1), upper = c.cells_of_dim(d);
    std::map<int, size_t> row;
    for (size_t i = 0; i < lower.size(); ++i) row[lower[i]] = i;
    detail::IntMatrix m(lower.size(), std::vector<Int>(upper.size(), Int(0)));
    for (size_t j = 0; j < upper.size(); ++j)
        for (const auto& b : c.cells[static_cast<size_t>(upper[j])].boundary) m[row[b.cell]][j] += b.orient;
    return m;
}

inline HomologyReport homology(const CellComplex& c) {
    validate_complex(c);
    HomologyReport h;
    auto counts = c.counts();
    std::array<detail::IntMatrix, 5> bd;
    for (int d = 1; d <= 3; ++d) bd[static_cast<size_t>(d)] = boundary_matrix(c, d);
    // d^2 = 0 check
    for (int d = 2; d <= 3 && h.integral; ++d) {
        const auto& a = bd[static_cast<size_t>(d - 1)];
        const auto& b = bd[static_cast<size_t>(d)];
        for (size_t i = 0; i < a.size() && h.integral; ++i)
            for (size_t j = 0; j < (b.empty() ? 0 : b[0].size()) && h.integral; ++j) {
                Int s = 0;
                for (size_t k = 0; k < b.size(); ++k) s += a[i][k] * b[k][j];
                if (s != 0) h.integral = false;
            }
    }
    std::array<long, 5> rank{};
    for (int d = 1; d <= 3; ++d) {
        const auto& m = bd[static_cast<size_t>(d)];
        if (m.empty() || m[0].empty()) continue;
        if (h.integral) {
            auto diag = detail::smith_diagonal(m);
            rank[static_cast<size_t>(d)] = static_cast<long>(diag.size());
            for (const auto& x : diag)
                if (x > 1) h.torsion[static_cast<size_t>(d - 1)].push_back(x);
        } else {
            rank[static_cast<size_t>(d)] = detail::rank_mod2(m);
        }
    }
    for (int d = 0; d <= 3; ++d) {
        h.betti[static_cast<size_t>(d)] = static_cast<long>(counts[static_cast<size_t>(d)]) - rank[static_cast<size_t>(d)] - rank[static_cast<size_t>(d + 1)];
        h.euler_ranks += (d % 2 ? -1 : 1) * h.betti[static_cast<size_t>(d)];
    }
    h.euler_cells = c.euler();
    return h;
}

// ---------------------------------------------------------------------------
// Relabelling

/// A copy with permuted cell order, fresh ids, rotated 2-cell boundaries and shuffled sphere
/// numbering. The result is isomorphic to the input.
inline CellComplex relabeled(const CellComplex& c, std::mt19937_64& rng) {
    size_t n = c.size();
    // permute within dimensions while keeping boundaries before cells
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return c.cells[static_cast<size_t>(a)].dim < c.cells[static_cast<size_t>(b)].dim; });
    std::vector<int> pos(n);
    for (size_t i = 0; i < n; ++i) pos[static_cast<size_t>(order[i])] = static_cast<int>(i);
    std::vector<long> ids(n);
    std::iota(ids.begin(), ids.end(), 1L);
    std::shuffle(ids.begin(), ids.end(), rng);
    for (auto& v : ids) v = v * 7 + 3;
    CellComplex out;
    // rotation applied to each 2-cell's boundary list
    std::vector<size_t> rot(n, 0);
    for (size_t i = 0; i < n; ++i)
        if (c.cells[i].dim == 2) rot[i] = std::uniform_int_distribution<size_t>(0, c.cells[i].boundary.size() - 1)(rng);
    for (size_t k = 0; k < n; ++k) {
        const Cell& x = c.cells[static_cast<size_t>(order[k])];
        Cell y;
        y.id = ids[k];
        y.dim = x.dim;
        size_t r = rot[static_cast<size_t>(order[k])];
        for (size_t j = 0; j < x.boundary.size(); ++j) {
            const auto& b = x.boundary[(j + r) % x.boundary.size()];
            y.boundary.push_back({pos[static_cast<size_t>(b.cell)], b.orient});
        }
        if (x.dim == 3) {
            Sphere s = sphere_of(c, order[k]);
            Sphere t;
            std::vector<int> vp(s.vertices.size()), ep(s.edges.size()), fp(s.faces.size());
            std::iota(vp.begin(), vp.end(), 0);
            std::iota(ep.begin(), ep.end(), 0);
            std::iota(fp.begin(), fp.end(), 0);
            std::shuffle(vp.begin(), vp.end(), rng);
            std::shuffle(ep.begin(), ep.end(), rng);
            std::shuffle(fp.begin(), fp.end(), rng);
            t.vertices.resize(s.vertices.size());
            for (size_t i = 0; i < s.vertices.size(); ++i) t.vertices[static_cast<size_t>(vp[i])] = pos[static_cast<size_t>(s.vertices[i])];
            t.edges.resize(s.edges.size());
            for (size_t i = 0; i < s.edges.size(); ++i)
                t.edges[static_cast<size_t>(ep[i])] = SphereEdge{pos[static_cast<size_t>(s.edges[i].cell)], vp[static_cast<size_t>(s.edges[i].from)], vp[static_cast<size_t>(s.edges[i].to)]};
            t.faces.resize(s.faces.size());
            for (size_t i = 0; i < s.faces.size(); ++i) {
                const auto& f = s.faces[i];
                size_t fr = rot[static_cast<size_t>(f.cell)];
                SphereFace g{pos[static_cast<size_t>(f.cell)], f.orient, {}};
                for (size_t j = 0; j < f.edges.size(); ++j) g.edges.push_back(ep[static_cast<size_t>(f.edges[(j + fr) % f.edges.size()])]);
                t.faces[static_cast<size_t>(fp[i])] = std::move(g);
            }
            y.boundary.clear();
            for (const auto& f : t.faces) y.boundary.push_back({f.cell, f.orient});
            y.sphere = std::move(t);
        }
        out.cells.push_back(std::move(y));
    }
    return out;
}

/// Standard small complexes.
namespace shapes {

inline CellComplex point() {
    CellComplex c;
    c.add_vertex();
    return c;
}

inline CellComplex polygon(int k) {
    CellComplex c;
    std::vector<int> v, e;
    for (int i = 0; i < k; ++i) v.push_back(c.add_vertex());
    std::vector<Incidence> b;
    for (int i = 0; i < k; ++i) b.push_back({c.add_edge(v[static_cast<size_t>(i)], v[static_cast<size_t>((i + 1) % k)]), 1});
    c.add(2, b);
    return c;
}

/// One vertex, two loops a, b and a square attached along a b a^-1 b^-1.
inline CellComplex torus() {
    CellComplex c;
    int v = c.add_vertex();
    int a = c.add_edge(v, v), b = c.add_edge(v, v);
    c.add(2, {{a, 1}, {b, 1}, {a, -1}, {b, -1}});
    return c;
}

/// Solid cube: 8 vertices, 12 edges, 6 squares, one 3-cell.
inline CellComplex cube() {
    CellComplex c;
    std::array<int, 8> v{};
    for (auto& x : v) x = c.add_vertex();
    std::map<std::pair<int, int>, int> edge;
    auto e = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = edge.find(key);
        if (it == edge.end()) it = edge.emplace(key, c.add_edge(v[static_cast<size_t>(key.first)], v[static_cast<size_t>(key.second)])).first;
        return it->second;
    };
    auto face = [&](std::array<int, 4> q) {
        std::vector<Incidence> b;
        for (int i = 0; i < 4; ++i) {
            int a = q[static_cast<size_t>(i)], bb = q[static_cast<size_t>((i + 1) % 4)];
            b.push_back({e(a, bb), a < bb ? 1 : -1});
        }
        return c.add(2, b);
    };
    // vertex bits: x = 1, y = 2, z = 4
    std::vector<int> faces{face({0, 1, 3, 2}), face({4, 6, 7, 5}), face({0, 4, 5, 1}),
                           face({2, 3, 7, 6}), face({0, 2, 6, 4}), face({1, 5, 7, 3})};
    std::vector<Incidence> bd;
    for (int f : faces) bd.push_back({f, 1});
    c.add(3, bd);
    return c;
}

/// 2-sphere from two discs glued along a k-gon, filled with one 3-cell.
inline CellComplex pillow(int k) {
    CellComplex c;
    std::vector<int> v;
    for (int i = 0; i < k; ++i) v.push_back(c.add_vertex());
    std::vector<Incidence> up, down;
    std::vector<int> e;
    for (int i = 0; i < k; ++i) e.push_back(c.add_edge(v[static_cast<size_t>(i)], v[static_cast<size_t>((i + 1) % k)]));
    for (int i = 0; i < k; ++i) up.push_back({e[static_cast<size_t>(i)], 1});
    for (int i = k - 1; i >= 0; --i) down.push_back({e[static_cast<size_t>(i)], -1});
    int f1 = c.add(2, up), f2 = c.add(2, down);
    c.add(3, {{f1, 1}, {f2, 1}});
    return c;
}

}  // namespace shapes

}  // namespace smalldil
