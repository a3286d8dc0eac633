#pragma once

#include "field.hpp"
#include "numeric.hpp"
#include "pf_core.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace smalldil {

enum class Side { Bottom = 0, Right = 1, Top = 2, Left = 3 };

inline bool is_horizontal(Side s) { return s == Side::Bottom || s == Side::Top; }
inline const char* side_name(Side s) {
    static const char* names[] = {"bottom", "right", "top", "left"};
    return names[static_cast<int>(s)];
}

enum Corner { BottomLeft = 0, BottomRight = 1, TopRight = 2, TopLeft = 3 };

struct SurfaceData {
    long genus = 0;
    long marked_points = 0;
    long euler_characteristic() const { return 2 - 2 * genus - marked_points; }
};

struct Segment {
    long id = 0;
    long partner_id = 0;
    bool reversed = false;
    // filled during validation
    size_t partner = 0;
    size_t rect = 0;
    Side side = Side::Bottom;
    size_t pos = 0;
};

struct Rectangle {
    long id = 0;
    std::array<std::vector<size_t>, 4> sides;  // segment indices, indexed by Side

    const std::vector<size_t>& side(Side s) const { return sides[static_cast<int>(s)]; }
};

enum class PointKind { Singular, Marked };

struct BoundaryPoint {
    PointKind kind = PointKind::Singular;
    int prongs = 0;
    size_t segment = 0;
    int end = 0;
    size_t vertex = 0;
};

struct Pass {
    size_t target = 0;
    bool reversed = false;
};

struct StackEntry {
    size_t source = 0;
    size_t pass_index = 0;
};

struct MapData {
    std::vector<std::vector<Pass>> passes;
    std::vector<std::vector<StackEntry>> stacks;
};

/// Union-find closure of segment endpoints. Node 2*s + e is endpoint e of segment s.
struct VertexClosure {
    size_t count = 0;
    std::vector<size_t> of_node;
    std::vector<std::array<size_t, 4>> corners;  // per rectangle, indexed by Corner
    std::vector<int> prongs;                     // 0 when the vertex is a plain corner
    std::vector<char> singular, marked;

    size_t at(size_t seg, int end) const { return of_node[2 * seg + static_cast<size_t>(end)]; }
    bool special(size_t v) const { return singular[v] || marked[v]; }
};

struct MarkovPartition {
    std::string name;
    SurfaceData surface;
    std::vector<Rectangle> rects;
    std::vector<Segment> segments;
    std::vector<BoundaryPoint> points;
    MapData map;
    std::optional<Rat> declared_P;
    VertexClosure vertices;

    size_t n() const { return rects.size(); }
    long chi() const { return surface.euler_characteristic(); }
    std::string rect_name(size_t r) const { return "R" + std::to_string(rects[r].id); }

    std::shared_ptr<RealField> field() const {
        if (!field_) field_ = RealField::perron(raw_matrix());
        return field_;
    }

    Matrix raw_matrix() const {
        Matrix a(n(), std::vector<Int>(n(), 0));
        for (size_t i = 0; i < n(); ++i)
            for (const auto& p : map.passes[i]) a[i][p.target] += 1;
        return a;
    }

private:
    mutable std::shared_ptr<RealField> field_;
};

struct ValidationReport {
    std::vector<std::string> errors;
    bool small = false;
    long rectangle_bound = 0;
    std::optional<bool> psi_member;

    bool ok() const { return errors.empty(); }
    std::string summary() const {
        std::string s;
        for (const auto& e : errors) s += (s.empty() ? "" : "\n") + e;
        return s;
    }
};

namespace detail {

inline const nlohmann::json& need(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw validation_error("schema: missing key '" + std::string(key) + "' in " + where);
    return j.at(key);
}

inline long need_id(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long>() <= 0) throw validation_error("schema: expected a positive integer id in " + where);
    return j.get<long>();
}

inline bool need_bool(const nlohmann::json& j, const std::string& where) {
    if (!j.is_boolean()) throw validation_error("schema: expected a boolean in " + where);
    return j.get<bool>();
}

struct UnionFind {
    std::vector<size_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    size_t find(size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace detail

/// Reads the partition layout. Only the schema is checked here; see validate().
inline MarkovPartition parse_partition(const nlohmann::json& j) {
    using detail::need;
    MarkovPartition mp;
    if (j.contains("name") && j["name"].is_string()) mp.name = j["name"].get<std::string>();
    const auto& surf = need(j, "surface", "top level");
    auto nonneg = [](const nlohmann::json& v, const char* what) {
        if (!v.is_number_integer() || v.get<long>() < 0) throw validation_error(std::string("schema: ") + what + " must be a nonnegative integer");
        return v.get<long>();
    };
    mp.surface.genus = nonneg(need(surf, "genus", "surface"), "genus");
    mp.surface.marked_points = nonneg(need(surf, "marked_points", "surface"), "marked_points");
    if (j.contains("declared_P") && !j["declared_P"].is_null()) {
        const auto& p = j["declared_P"];
        if (p.is_string()) mp.declared_P = parse_rational(p.get<std::string>());
        else if (p.is_number_integer()) mp.declared_P = Rat(p.get<long>());
        else if (p.is_number()) mp.declared_P = rational_from_double(p.get<double>());
        else throw validation_error("schema: declared_P must be a number or rational string");
        if (*mp.declared_P <= 0) throw validation_error("schema: declared_P must be positive");
    }

    std::map<long, size_t> rect_index, seg_index;
    const auto& rects = need(j, "rectangles", "top level");
    if (!rects.is_array() || rects.empty()) throw validation_error("schema: rectangles must be a nonempty array");
    const auto& segs = need(j, "segments", "top level");
    if (!segs.is_array()) throw validation_error("schema: segments must be an array");
    for (const auto& s : segs) {
        Segment seg;
        seg.id = detail::need_id(need(s, "id", "segment"), "segment id");
        seg.partner_id = detail::need_id(need(s, "partner", "segment " + std::to_string(seg.id)), "segment partner");
        seg.reversed = s.contains("reversed") ? detail::need_bool(s["reversed"], "segment reversed") : false;
        if (!seg_index.emplace(seg.id, mp.segments.size()).second)
            throw validation_error("schema: duplicate segment id " + std::to_string(seg.id));
        mp.segments.push_back(seg);
    }
    std::vector<char> used(mp.segments.size(), 0);
    for (const auto& r : rects) {
        Rectangle rect;
        rect.id = detail::need_id(need(r, "id", "rectangle"), "rectangle id");
        std::string where = "rectangle " + std::to_string(rect.id);
        if (!rect_index.emplace(rect.id, mp.rects.size()).second)
            throw validation_error("schema: duplicate rectangle id " + std::to_string(rect.id));
        for (Side s : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            const auto& arr = need(r, side_name(s), where);
            if (!arr.is_array() || arr.empty())
                throw validation_error("schema: " + where + " side " + side_name(s) + " must be a nonempty array");
            for (size_t k = 0; k < arr.size(); ++k) {
                long sid = detail::need_id(arr[k], where);
                auto it = seg_index.find(sid);
                if (it == seg_index.end())
                    throw validation_error("schema: " + where + " names unknown segment " + std::to_string(sid));
                if (used[it->second]++)
                    throw validation_error("schema: segment " + std::to_string(sid) + " appears on more than one side");
                auto& seg = mp.segments[it->second];
                seg.rect = mp.rects.size();
                seg.side = s;
                seg.pos = k;
                rect.sides[static_cast<int>(s)].push_back(it->second);
            }
        }
        mp.rects.push_back(rect);
    }
    for (size_t i = 0; i < used.size(); ++i)
        if (!used[i]) throw validation_error("schema: segment " + std::to_string(mp.segments[i].id) + " lies on no rectangle side");

    if (j.contains("points")) {
        for (const auto& p : j["points"]) {
            BoundaryPoint bp;
            auto kind = need(p, "kind", "point");
            if (kind == "singular") bp.kind = PointKind::Singular;
            else if (kind == "marked") bp.kind = PointKind::Marked;
            else throw validation_error("schema: point kind must be 'singular' or 'marked'");
            const auto& pr = need(p, "prongs", "point");
            if (!pr.is_number_integer() || pr.get<int>() < 1) throw validation_error("schema: prongs must be a positive integer");
            bp.prongs = pr.get<int>();
            const auto& at = need(p, "at", "point");
            long sid = detail::need_id(need(at, "segment", "point.at"), "point.at.segment");
            auto it = seg_index.find(sid);
            if (it == seg_index.end()) throw validation_error("schema: point located on unknown segment " + std::to_string(sid));
            bp.segment = it->second;
            const auto& e = need(at, "end", "point.at");
            if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1))
                throw validation_error("schema: point.at.end must be 0 or 1");
            bp.end = e.get<int>();
            mp.points.push_back(bp);
        }
    }

    const auto& m = need(j, "map", "top level");
    const auto& passes = need(m, "passes", "map");
    const auto& stacks = need(m, "stacks", "map");
    mp.map.passes.assign(mp.n(), {});
    mp.map.stacks.assign(mp.n(), {});
    auto lookup_rect = [&](const std::string& key, const char* what) {
        long id = 0;
        try {
            id = std::stol(key);
        } catch (const std::exception&) {
            throw validation_error(std::string("schema: ") + what + " key '" + key + "' is not a rectangle id");
        }
        auto it = rect_index.find(id);
        if (it == rect_index.end()) throw validation_error(std::string("schema: ") + what + " names unknown rectangle " + key);
        return it->second;
    };
    for (auto it = passes.begin(); it != passes.end(); ++it) {
        size_t i = lookup_rect(it.key(), "passes");
        for (const auto& p : it.value()) {
            long t = detail::need_id(need(p, "target", "pass"), "pass target");
            auto ti = rect_index.find(t);
            if (ti == rect_index.end()) throw validation_error("schema: pass targets unknown rectangle " + std::to_string(t));
            bool rev = p.contains("reversed") ? detail::need_bool(p["reversed"], "pass reversed") : false;
            mp.map.passes[i].push_back({ti->second, rev});
        }
    }
    for (auto it = stacks.begin(); it != stacks.end(); ++it) {
        size_t jx = lookup_rect(it.key(), "stacks");
        for (const auto& s : it.value()) {
            long src = detail::need_id(need(s, "source", "stack entry"), "stack source");
            auto si = rect_index.find(src);
            if (si == rect_index.end()) throw validation_error("schema: stack names unknown rectangle " + std::to_string(src));
            const auto& pi = need(s, "pass_index", "stack entry");
            if (!pi.is_number_integer() || pi.get<long>() < 0) throw validation_error("schema: pass_index must be a nonnegative integer");
            mp.map.stacks[jx].push_back({si->second, pi.get<size_t>()});
        }
    }
    return mp;
}

/// Builds the union-find closure of segment endpoints: partner gluing, consecutive
/// segments along a side, and the four corners of each rectangle.
inline VertexClosure close_vertices(const MarkovPartition& mp) {
    size_t ns = mp.segments.size();
    detail::UnionFind uf(2 * ns);
    for (size_t s = 0; s < ns; ++s) {
        const auto& seg = mp.segments[s];
        size_t p = seg.partner;
        uf.unite(2 * s, 2 * p + (seg.reversed ? 1 : 0));
        uf.unite(2 * s + 1, 2 * p + (seg.reversed ? 0 : 1));
    }
    for (const auto& r : mp.rects) {
        for (const auto& side : r.sides)
            for (size_t k = 0; k + 1 < side.size(); ++k) uf.unite(2 * side[k] + 1, 2 * side[k + 1]);
        const auto& b = r.side(Side::Bottom);
        const auto& t = r.side(Side::Top);
        const auto& l = r.side(Side::Left);
        const auto& rt = r.side(Side::Right);
        uf.unite(2 * b.front(), 2 * l.front());
        uf.unite(2 * b.back() + 1, 2 * rt.front());
        uf.unite(2 * t.front(), 2 * l.back() + 1);
        uf.unite(2 * t.back() + 1, 2 * rt.back() + 1);
    }
    VertexClosure vc;
    vc.of_node.resize(2 * ns);
    std::map<size_t, size_t> label;
    for (size_t x = 0; x < 2 * ns; ++x) {
        auto [it, fresh] = label.emplace(uf.find(x), label.size());
        vc.of_node[x] = it->second;
    }
    vc.count = label.size();
    for (const auto& r : mp.rects) {
        std::array<size_t, 4> c{};
        c[BottomLeft] = vc.of_node[2 * r.side(Side::Bottom).front()];
        c[BottomRight] = vc.of_node[2 * r.side(Side::Bottom).back() + 1];
        c[TopRight] = vc.of_node[2 * r.side(Side::Top).back() + 1];
        c[TopLeft] = vc.of_node[2 * r.side(Side::Top).front()];
        vc.corners.push_back(c);
    }
    vc.prongs.assign(vc.count, 0);
    vc.singular.assign(vc.count, 0);
    vc.marked.assign(vc.count, 0);
    return vc;
}

/// Rectangle count bound for smallness.
inline long small_bound(const MarkovPartition& mp) { return 9 * std::labs(mp.chi()); }

/// lambda^{|chi|} <= P, decided exactly.
inline bool psi_member(const MarkovPartition& mp, const Rat& P) {
    auto f = mp.field();
    unsigned k = static_cast<unsigned>(std::labs(mp.chi()));
    if (k == 0) return f->sign(Poly({-P, Rat(1)})) <= 0;
    // lambda^k - P as an element of Q(lambda)
    Poly g = Poly::monomial(Rat(1), k) - Poly::constant(P);
    return f->sign(g) <= 0;
}

/// Least P at 1e-9 resolution with lambda^{|chi|} <= P.
inline Rat infer_P(const MarkovPartition& mp) {
    auto f = mp.field();
    unsigned k = static_cast<unsigned>(std::max(1L, std::labs(mp.chi())));
    Rat step(1, 1000000000);
    while (pow_rat(f->hi(), k) - pow_rat(f->lo(), k) > step / 10 && f->hi() != f->lo()) f->refine();
    Rat P = Rat(ceil_rat(pow_rat(f->hi(), k) / step)) * step;
    return P;
}

inline ValidationReport validate(MarkovPartition& mp) {
    ValidationReport rep;
    auto err = [&](std::string s) { rep.errors.push_back(std::move(s)); };
    auto sid = [&](size_t s) { return std::to_string(mp.segments[s].id); };
    std::map<long, size_t> seg_index;
    for (size_t s = 0; s < mp.segments.size(); ++s) seg_index[mp.segments[s].id] = s;

    bool gluing_ok = true;
    for (size_t s = 0; s < mp.segments.size(); ++s) {
        auto& seg = mp.segments[s];
        auto it = seg_index.find(seg.partner_id);
        if (it == seg_index.end()) {
            err("involution: segment " + sid(s) + " has unknown partner " + std::to_string(seg.partner_id));
            gluing_ok = false;
            continue;
        }
        seg.partner = it->second;
    }
    if (gluing_ok) {
        for (size_t s = 0; s < mp.segments.size(); ++s) {
            const auto& seg = mp.segments[s];
            const auto& p = mp.segments[seg.partner];
            if (seg.partner == s) {
                err("involution: segment " + sid(s) + " is its own partner");
                gluing_ok = false;
            } else if (p.partner != s) {
                err("involution: segment " + sid(s) + " names partner " + sid(seg.partner) + " whose partner is " +
                    std::to_string(p.partner_id));
                gluing_ok = false;
            } else if (p.reversed != seg.reversed) {
                err("gluing: segments " + sid(s) + " and " + sid(seg.partner) + " disagree on the reversed flag");
                gluing_ok = false;
            } else if (s < seg.partner) {
                bool ok = is_horizontal(seg.side) == is_horizontal(p.side) &&
                          ((seg.side == p.side) == seg.reversed);
                if (!ok) {
                    err("gluing: segment " + sid(s) + " (" + side_name(seg.side) + ") cannot be glued to segment " +
                        sid(seg.partner) + " (" + side_name(p.side) + ")" + (seg.reversed ? " with reversal" : ""));
                    gluing_ok = false;
                }
            }
        }
    }
    if (!gluing_ok) return rep;

    mp.vertices = close_vertices(mp);
    auto& vc = mp.vertices;
    for (auto& pt : mp.points) {
        pt.vertex = vc.at(pt.segment, pt.end);
        size_t v = pt.vertex;
        if (vc.prongs[v] != 0) {
            err("points: two declared points share the vertex at segment " + sid(pt.segment) + " end " + std::to_string(pt.end));
            continue;
        }
        vc.prongs[v] = pt.prongs;
        (pt.kind == PointKind::Marked ? vc.marked : vc.singular)[v] = 1;
        if (pt.kind == PointKind::Singular && pt.prongs < 3)
            err("points: unmarked singular point at segment " + sid(pt.segment) + " has " + std::to_string(pt.prongs) +
                " prongs (needs >= 3)");
    }
    long marked = std::count_if(mp.points.begin(), mp.points.end(), [](const auto& p) { return p.kind == PointKind::Marked; });
    if (marked != mp.surface.marked_points)
        err("points: surface declares " + std::to_string(mp.surface.marked_points) + " marked points but " +
            std::to_string(marked) + " are located");
    if (mp.chi() >= 0) err("surface: euler characteristic " + std::to_string(mp.chi()) + " is not negative");
    long ep = 0;
    for (const auto& p : mp.points) ep += 2 - p.prongs;
    long closed = 2 * mp.chi() + 2 * mp.surface.marked_points;
    if (ep != closed)
        err("euler-poincare: sum of (2 - prongs) is " + std::to_string(ep) + ", expected 2*chi + 2*p = " + std::to_string(closed));

    for (size_t r = 0; r < mp.n(); ++r) {
        for (Side s : {Side::Bottom, Side::Right, Side::Top, Side::Left}) {
            std::set<size_t> special;
            for (size_t seg : mp.rects[r].side(s))
                for (int e : {0, 1})
                    if (vc.special(vc.at(seg, e))) special.insert(vc.at(seg, e));
            if (special.size() > 1)
                err("points: " + mp.rect_name(r) + " side " + side_name(s) + " carries " + std::to_string(special.size()) +
                    " singular or marked points");
        }
    }

    // map data
    size_t n = mp.n();
    if (mp.map.passes.size() != n || mp.map.stacks.size() != n) err("map: passes/stacks must cover every rectangle");
    Matrix by_pass(n, std::vector<Int>(n, 0)), by_stack(n, std::vector<Int>(n, 0));
    std::vector<std::vector<int>> claimed(n);
    for (size_t i = 0; i < n; ++i) {
        if (mp.map.passes[i].empty()) err("map: " + mp.rect_name(i) + " has no passes");
        for (const auto& p : mp.map.passes[i]) by_pass[i][p.target] += 1;
        claimed[i].assign(mp.map.passes[i].size(), 0);
    }
    for (size_t j = 0; j < n; ++j) {
        for (const auto& st : mp.map.stacks[j]) {
            by_stack[st.source][j] += 1;
            const auto& ps = mp.map.passes[st.source];
            if (st.pass_index >= ps.size()) {
                err("map: stack of " + mp.rect_name(j) + " names pass " + std::to_string(st.pass_index) + " of " +
                    mp.rect_name(st.source) + ", which does not exist");
            } else if (ps[st.pass_index].target != j) {
                err("map: stack of " + mp.rect_name(j) + " names pass " + std::to_string(st.pass_index) + " of " +
                    mp.rect_name(st.source) + ", which targets " + mp.rect_name(ps[st.pass_index].target));
            } else if (claimed[st.source][st.pass_index]++) {
                err("map: pass " + std::to_string(st.pass_index) + " of " + mp.rect_name(st.source) + " appears in two stacks");
            }
        }
    }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j)
            if (by_pass[i][j] != by_stack[i][j])
                err("map: " + to_string(by_pass[i][j]) + " passes " + mp.rect_name(i) + "->" + mp.rect_name(j) + " but " +
                    to_string(by_stack[i][j]) + " stack entries");
    if (!rep.ok()) return rep;

    auto prim = is_perron_frobenius(by_pass);
    if (!prim.primitive) {
        err("map: transition matrix is not primitive (" + prim.reason + ")");
        return rep;
    }
    rep.rectangle_bound = small_bound(mp);
    rep.small = static_cast<long>(n) <= rep.rectangle_bound;
    if (mp.declared_P) {
        rep.psi_member = psi_member(mp, *mp.declared_P);
        if (!*rep.psi_member) err("psi: dilatation exceeds declared P^(1/|chi|) with P = " + to_string(*mp.declared_P));
    }
    return rep;
}

inline MarkovPartition partition_from_json(const nlohmann::json& j, ValidationReport* report = nullptr) {
    MarkovPartition mp = parse_partition(j);
    auto rep = validate(mp);
    if (report) *report = rep;
    if (!rep.ok()) throw validation_error(rep.summary());
    return mp;
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("schema: " + path + " is not valid JSON: " + e.what());
    }
}

inline MarkovPartition load_partition(const std::string& path, ValidationReport* report = nullptr) {
    auto mp = partition_from_json(read_json_file(path), report);
    if (mp.name.empty()) mp.name = path;
    return mp;
}

inline PFMatrix transition_matrix(const MarkovPartition& mp) { return make_pf_matrix(mp.raw_matrix()); }

inline AlgebraicInterval dilatation(const MarkovPartition& mp, const Rat& tol) {
    return spectral_radius(transition_matrix(mp), tol);
}

/// Pass sequences of phi^k, composed symbolically from the pass lists.
inline std::vector<std::vector<Pass>> composed_passes(const MarkovPartition& mp, unsigned k) {
    if (k == 0) throw validation_error("power must be positive");
    auto cur = mp.map.passes;
    for (unsigned step = 1; step < k; ++step) {
        std::vector<std::vector<Pass>> next(mp.n());
        for (size_t i = 0; i < mp.n(); ++i) {
            for (const auto& p : mp.map.passes[i]) {
                const auto& sub = cur[p.target];
                if (!p.reversed) {
                    for (const auto& q : sub) next[i].push_back({q.target, q.reversed});
                } else {
                    for (auto it = sub.rbegin(); it != sub.rend(); ++it) next[i].push_back({it->target, !it->reversed});
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

struct DegreeTable {
    unsigned k = 1;
    std::vector<Int> deg, codeg;
    bool cross_checked = false;
};

inline DegreeTable degrees(const MarkovPartition& mp, unsigned k) {
    if (k == 0) throw validation_error("power must be positive");
    DegreeTable t;
    t.k = k;
    Matrix ak = matrix_power(mp.raw_matrix(), k);
    t.deg = row_sums(ak);
    t.codeg = column_sums(ak);
    if (k <= 3) {
        auto seq = composed_passes(mp, k);
        Matrix counted(mp.n(), std::vector<Int>(mp.n(), 0));
        for (size_t i = 0; i < mp.n(); ++i)
            for (const auto& p : seq[i]) counted[i][p.target] += 1;
        if (counted != ak) throw invariant_error("composed pass sequences of phi^" + std::to_string(k) + " disagree with A^" + std::to_string(k));
        t.cross_checked = true;
    }
    return t;
}

/// Mixed flags for phi^k from degrees.
inline std::vector<bool> mixed_flags(const MarkovPartition& mp, unsigned k) {
    Matrix ak = matrix_power(mp.raw_matrix(), k);
    auto deg = row_sums(ak);
    auto codeg = column_sums(ak);
    std::vector<bool> mixed(mp.n(), true);
    for (size_t i = 0; i < mp.n(); ++i) {
        if (deg[i] != 1) continue;
        size_t target = 0;
        for (size_t j = 0; j < mp.n(); ++j)
            if (ak[i][j] == 1) target = j;
        mixed[i] = codeg[target] != 1;
    }
    return mixed;
}

/// Unmixed straight from the pass/stack lists: one pass, alone in its target's stack.
inline std::vector<bool> unmixed_brute(const MarkovPartition& mp, unsigned k) {
    auto seq = composed_passes(mp, k);
    std::vector<size_t> stack_size(mp.n(), 0);
    for (size_t i = 0; i < mp.n(); ++i)
        for (const auto& p : seq[i]) ++stack_size[p.target];
    std::vector<bool> out(mp.n());
    for (size_t i = 0; i < mp.n(); ++i) out[i] = seq[i].size() == 1 && stack_size[seq[i][0].target] == 1;
    return out;
}

inline std::vector<bool> classify_mixed(const MarkovPartition& mp, unsigned k) {
    if (k == 0) throw validation_error("power must be positive");
    auto mixed = mixed_flags(mp, k);
    unsigned upto = std::max(k, 4u);
    std::vector<bool> prev = mixed_flags(mp, 1);
    for (unsigned j = 2; j <= upto; ++j) {
        auto cur = mixed_flags(mp, j);
        for (size_t i = 0; i < mp.n(); ++i)
            if (prev[i] && !cur[i])
                throw invariant_error(mp.rect_name(i) + " is mixed by phi^" + std::to_string(j - 1) + " but not by phi^" + std::to_string(j));
        prev = std::move(cur);
    }
    return mixed;
}

struct ConstantsLedger {
    Rat P, C, D1, D2, D3, E_h, E_N, E_Y, D, K1, K;

    std::vector<std::pair<std::string, Rat>> items() const {
        return {{"C", C}, {"D1", D1}, {"D2", D2}, {"D3", D3}, {"E_h", E_h},
                {"E_N", E_N}, {"E_Y", E_Y}, {"D", D}, {"K1", K1}, {"K", K}};
    }
};

inline ConstantsLedger constants(const Rat& P) {
    if (P < 1) throw validation_error("P must be at least 1");
    ConstantsLedger c;
    c.P = P;
    Rat p9 = pow_rat(P, 9);
    c.C = 2 * p9 * (p9 + 1);
    c.D1 = 4 * p9 + 16;
    c.D2 = 2 * c.C * c.D1;
    c.D3 = c.D2 + 5;
    c.E_h = 2 * c.C;
    c.E_N = c.E_h * (c.C * c.D3 + 1);
    c.E_Y = 2 * c.E_N;
    c.D = c.D2 * c.D2 * c.E_Y;
    c.K1 = c.D1 + 4 * c.D2 * c.D2;
    c.K = c.D + c.E_Y * c.K1;
    return c;
}

/// The P used for bound checks: explicit, else declared, else inferred.
inline Rat effective_P(const MarkovPartition& mp, const std::optional<Rat>& override_P = std::nullopt) {
    if (override_P) return *override_P;
    if (mp.declared_P) return *mp.declared_P;
    return infer_P(mp);
}

struct MixedBudget {
    long mixed = 0;
    Int deg_sum = 0;
    Int codeg_sum = 0;
    Rat C;
    bool within_budget = false;
};

inline MixedBudget mixed_budget(const MarkovPartition& mp, const std::optional<Rat>& P) {
    if (!P) throw refusal("mixed budget needs a declared P");
    MixedBudget b;
    b.C = constants(*P).C;
    auto mixed = classify_mixed(mp, 1);
    auto d = degrees(mp, 1);
    std::set<size_t> targets;
    for (size_t i = 0; i < mp.n(); ++i) {
        if (!mixed[i]) continue;
        ++b.mixed;
        b.deg_sum += d.deg[i];
        for (const auto& p : mp.map.passes[i]) targets.insert(p.target);
    }
    for (size_t t : targets) b.codeg_sum += d.codeg[t];
    b.within_budget = Rat(b.mixed) <= b.C && Rat(b.deg_sum) <= b.C && Rat(b.codeg_sum) <= b.C;
    return b;
}

struct EigenGeometry {
    std::shared_ptr<RealField> field;
    std::vector<FieldNum> length, width;  // exact, max entry 1
    std::vector<double> length_approx, width_approx;
    double length_residual = 0, width_residual = 0;
};

inline EigenGeometry eigen_geometry(const MarkovPartition& mp, double tol = 1e-9) {
    EigenGeometry g;
    g.field = mp.field();
    Matrix a = mp.raw_matrix();
    size_t n = mp.n();
    auto cd = characteristic_data(a);
    auto normalize = [&](std::vector<FieldNum> v) {
        FieldNum mx = v[0];
        for (const auto& x : v)
            if (x > mx) mx = x;
        if (mx.sign() <= 0) throw numeric_error("eigenvector is not positive");
        for (auto& x : v) x = x / mx;
        return v;
    };
    std::vector<FieldNum> l, w;
    for (size_t i = 0; i < n; ++i) {
        l.emplace_back(g.field, cd.adjugate_entry(i, 0));
        w.emplace_back(g.field, cd.adjugate_entry(0, i));
    }
    g.length = normalize(l);
    g.width = normalize(w);
    FieldNum lam = FieldNum::generator(g.field);
    for (size_t i = 0; i < n; ++i) {
        FieldNum rl = -(lam * g.length[i]), rw = -(lam * g.width[i]);
        for (size_t j = 0; j < n; ++j) {
            FieldNum aij = FieldNum::constant(g.field, Rat(a[i][j])), aji = FieldNum::constant(g.field, Rat(a[j][i]));
            rl += aij * g.length[j];
            rw += aji * g.width[j];
        }
        if (rl.sign() != 0 || rw.sign() != 0) throw numeric_error("eigenvector fails the exact residual check");
        if (g.length[i].sign() <= 0 || g.width[i].sign() <= 0) throw numeric_error("eigenvector is not positive");
    }
    double lm = g.field->approx();
    for (size_t i = 0; i < n; ++i) {
        g.length_approx.push_back(g.length[i].approx());
        g.width_approx.push_back(g.width[i].approx());
    }
    for (size_t i = 0; i < n; ++i) {
        double rl = -lm * g.length_approx[i], rw = -lm * g.width_approx[i];
        for (size_t j = 0; j < n; ++j) {
            rl += to_double(a[i][j]) * g.length_approx[j];
            rw += to_double(a[j][i]) * g.width_approx[j];
        }
        g.length_residual = std::max(g.length_residual, std::fabs(rl));
        g.width_residual = std::max(g.width_residual, std::fabs(rw));
    }
    if (g.length_residual > tol || g.width_residual > tol)
        throw numeric_error("eigenvector residual above tolerance");
    return g;
}

struct DistortionReport {
    double max_length_ratio = 1, max_width_ratio = 1;
    Rat bound;
    bool holds = false;
};

inline DistortionReport distortion_check(const MarkovPartition& mp, const std::optional<Rat>& P) {
    if (!P) throw refusal("distortion check needs a declared P");
    DistortionReport r;
    r.bound = pow_rat(*P, 9);
    auto g = eigen_geometry(mp);
    auto f = g.field;
    FieldNum bound = FieldNum::constant(f, r.bound), one = FieldNum::constant(f, Rat(1));
    r.holds = true;
    auto scan = [&](const std::vector<FieldNum>& v, double& ratio) {
        FieldNum mn = v[0];
        for (const auto& x : v)
            if (x < mn) mn = x;
        ratio = 1.0 / mn.approx();
        if (bound * mn < one) r.holds = false;
    };
    scan(g.length, r.max_length_ratio);
    scan(g.width, r.max_width_ratio);
    return r;
}

}  // namespace smalldil
