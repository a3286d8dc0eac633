#pragma once

// Brute-force rectangle relations and cell ranges, computed from matrix powers and closures.

#include <smalldil/equiv.hpp>

#include <functional>
#include <numeric>

namespace oracle {

using namespace smalldil;

struct Partition {
    std::vector<size_t> parent;
    explicit Partition(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
    void join(size_t a, size_t b) { parent[find(a)] = find(b); }
    std::set<std::set<size_t>> classes() {
        std::map<size_t, std::set<size_t>> m;
        for (size_t i = 0; i < parent.size(); ++i) m[find(i)].insert(i);
        std::set<std::set<size_t>> out;
        for (auto& [k, v] : m) out.insert(v);
        return out;
    }
};

inline std::set<std::set<size_t>> as_sets(const std::vector<std::vector<size_t>>& cls) {
    std::set<std::set<size_t>> out;
    for (const auto& c : cls) out.insert(std::set<size_t>(c.begin(), c.end()));
    return out;
}

/// phi^beta takes a onto b homeomorphically, read off A^beta.
inline bool homeo(const Matrix& ab, size_t a, size_t b) {
    Int row = 0, col = 0;
    for (size_t j = 0; j < ab.size(); ++j) row += ab[a][j];
    for (size_t i = 0; i < ab.size(); ++i) col += ab[i][b];
    return row == 1 && col == 1 && ab[a][b] == 1;
}

inline bool unmixed_by(const Matrix& ab, size_t r) {
    for (size_t j = 0; j < ab.size(); ++j)
        if (ab[r][j] != 0) return homeo(ab, r, j);
    return false;
}

/// Adjacency from the X complex: closed rectangles sharing a cell other than a special vertex.
inline std::vector<std::set<size_t>> adjacency_oracle(const MarkovPartition& mp, const XStructure& x) {
    std::vector<std::set<int>> cells(mp.n());
    for (size_t r = 0; r < mp.n(); ++r) cells[r] = closure(x.sc.cx, x.rect_cell[r]);
    std::vector<std::set<size_t>> out(mp.n());
    for (size_t a = 0; a < mp.n(); ++a)
        for (size_t b = 0; b < mp.n(); ++b)
            for (int c : cells[a]) {
                auto role = x.sc.role[static_cast<size_t>(c)];
                if (role == CellRole::Singular || role == CellRole::Marked) continue;
                if (cells[b].count(c)) {
                    out[a].insert(b);
                    break;
                }
            }
    return out;
}

struct RelationOracle {
    std::set<std::set<size_t>> h, N, Y;
    std::map<std::pair<size_t, size_t>, long> beta;
};

inline RelationOracle relation_oracle(const MarkovPartition& mp, const XStructure& x) {
    size_t n = mp.n();
    Matrix a = mp.raw_matrix();
    auto adj = adjacency_oracle(mp, x);
    Partition h(n), N(n);
    RelationOracle o;
    std::vector<std::vector<std::pair<size_t, long>>> nrel(n);
    Matrix ab = a;
    for (long beta = 1; beta <= static_cast<long>(n); ++beta) {
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (!homeo(ab, i, j)) continue;
                h.join(i, j);
                o.beta[{i, j}] = beta;
                o.beta[{j, i}] = -beta;
                bool whole = true;
                for (size_t r : adj[i]) whole = whole && unmixed_by(ab, r);
                if (whole) {
                    N.join(i, j);
                    nrel[i].push_back({j, beta});
                }
            }
        ab = multiply(ab, a);
    }
    o.h = h.classes();
    o.N = N.classes();
    for (const auto& cl : o.N) {
        size_t init = *cl.begin();
        for (size_t r : cl)
            if (o.beta.count({init, r}) && o.beta[{init, r}] < 0) init = r;
        o.Y.insert({init});
        std::set<size_t> rest = cl;
        rest.erase(init);
        if (!rest.empty()) o.Y.insert(rest);
    }
    return o;
}

/// (k-, k+) per Y cell from the closure of the pairwise relation (e, R) <-> (phi^beta e, R').
inline std::vector<std::pair<long, long>> range_oracle(const YStructure& y, const EquivalenceTable& t, const StepMaps& sm) {
    size_t n = y.sc.cx.size();
    std::vector<size_t> parent(n);
    std::vector<long> off(n, 0);  // exponent of the cell relative to its parent
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::pair<size_t, long>(size_t)> find = [&](size_t c) -> std::pair<size_t, long> {
        if (parent[c] == c) return {c, 0};
        auto [r, o] = find(parent[c]);
        parent[c] = r;
        off[c] += o;
        return {r, off[c]};
    };
    for (const auto& cl : t.Y)
        for (size_t R : cl)
            for (size_t R2 : cl) {
                long beta = *t.beta(R, R2);
                if (beta <= 0) continue;
                for (int c : sm.rect_cells[R]) {
                    auto img = iterate(sm, {c, 1}, beta);
                    if (!img) continue;
                    // exponent(img) = exponent(c) + beta
                    auto [rc, oc] = find(static_cast<size_t>(c));
                    auto [ri, oi] = find(static_cast<size_t>(img->cell));
                    if (rc == ri) continue;
                    parent[ri] = rc;
                    off[ri] = oc + beta - oi;
                }
            }
    std::map<size_t, std::pair<long, long>> ext;
    for (size_t c = 0; c < n; ++c) {
        auto [r, o] = find(c);
        auto it = ext.find(r);
        if (it == ext.end()) ext[r] = {o, o};
        else it->second = {std::min(it->second.first, o), std::max(it->second.second, o)};
    }
    std::vector<std::pair<long, long>> out(n);
    for (size_t c = 0; c < n; ++c) {
        auto [r, o] = find(c);
        out[c] = {ext[r].first - o, ext[r].second - o};
    }
    return out;
}

/// Empty when map is a cellular isomorphism a -> b: a bijection on cells keeping dimension
/// and carrying each signed boundary onto the boundary of the image.
inline std::string cell_isomorphism(const CellComplex& a, const CellComplex& b, const std::vector<Incidence>& map) {
    if (a.size() != b.size() || map.size() != a.size()) return "cell counts differ";
    std::set<int> hit;
    for (size_t c = 0; c < a.size(); ++c) {
        const auto& im = map[c];
        std::string who = "cell " + std::to_string(c);
        if (im.cell < 0 || static_cast<size_t>(im.cell) >= b.size() || !hit.insert(im.cell).second) return who + ": not a bijection";
        const auto& x = a.cells[c];
        const auto& y = b.cells[static_cast<size_t>(im.cell)];
        if (x.dim != y.dim) return who + ": dimension changes";
        std::vector<Incidence> m;
        for (const auto& e : x.boundary) m.push_back({map[static_cast<size_t>(e.cell)].cell, e.orient * map[static_cast<size_t>(e.cell)].orient});
        if (x.dim == 1) {
            int s = m[0].cell, t = m[1].cell;
            if (im.orient < 0) std::swap(s, t);
            if (b.start(im.cell) != s || b.end(im.cell) != t) return who + ": endpoints disagree";
        } else if (x.dim == 2) {
            if (im.orient < 0) {
                std::reverse(m.begin(), m.end());
                for (auto& e : m) e.orient = -e.orient;
            }
            bool found = false;
            for (size_t r = 0; r < m.size() && !found; ++r) {
                bool same = m.size() == y.boundary.size();
                for (size_t j = 0; same && j < m.size(); ++j) same = m[(j + r) % m.size()] == y.boundary[j];
                found = same;
            }
            if (!found) return who + ": boundary word is not a rotation of the image's";
        } else if (x.dim == 3) {
            std::multiset<std::pair<int, int>> want, got;
            for (const auto& f : m) got.insert({f.cell, f.orient * im.orient});
            for (const auto& f : y.boundary) want.insert({f.cell, f.orient});
            if (want != got) return who + ": boundary faces disagree";
        }
    }
    return {};
}

}  // namespace oracle
