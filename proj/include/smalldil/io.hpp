#pragma once

#include "suspension.hpp"

#include <fstream>
#include <json.hpp>

namespace smalldil {

using ojson = nlohmann::ordered_json;

inline std::string to_hex(const std::vector<unsigned char>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(2 * bytes.size());
    for (unsigned char b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

inline std::string form_hex(const CanonicalForm& f) { return to_hex(f.bytes()); }

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << text;
    if (!out) throw io_error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const ojson& j) { write_text_file(path, j.dump(1) + "\n"); }

// ---------------------------------------------------------------------------
// matrices

inline Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array())
        throw validation_error("schema: matrix file needs \"rows\"");
    Matrix a;
    for (const auto& row : j["rows"]) {
        if (!row.is_array()) throw validation_error("schema: matrix rows must be arrays");
        a.emplace_back();
        for (const auto& v : row) {
            if (!v.is_number_integer() || v.get<long long>() < 0)
                throw validation_error("schema: matrix entries must be nonnegative integers");
            a.back().push_back(Int(v.get<long long>()));
        }
    }
    if (j.contains("n") && (!j["n"].is_number_integer() || j["n"].get<long long>() != static_cast<long long>(a.size())))
        throw validation_error("schema: \"n\" disagrees with the number of rows");
    validate_square_nonnegative(a);
    return a;
}

inline Matrix read_matrix_file(const std::string& path) {
    nlohmann::json j;
    std::string text = read_text_file(path);
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("schema: " + path + " is not valid JSON: " + e.what());
    }
    return matrix_from_json(j);
}

inline ojson matrix_to_json(const Matrix& a) {
    ojson rows = ojson::array();
    for (const auto& r : a) {
        ojson row = ojson::array();
        for (const auto& v : r) row.push_back(v.convert_to<long long>());
        rows.push_back(row);
    }
    return ojson{{"n", a.size()}, {"rows", rows}};
}

// ---------------------------------------------------------------------------
// complexes

inline ojson complex_to_json(const CellComplex& c) {
    auto id = [&](int idx) { return c.cells[static_cast<size_t>(idx)].id; };
    ojson cells = ojson::array();
    for (const auto& x : c.cells) {
        ojson b = ojson::array();
        for (const auto& e : x.boundary) b.push_back({{"cell", id(e.cell)}, {"orient", e.orient}});
        ojson cell = {{"id", x.id}, {"dim", x.dim}, {"boundary", b}};
        if (x.sphere) {
            const Sphere& s = *x.sphere;
            ojson vs = ojson::array(), es = ojson::array(), fs = ojson::array();
            for (int v : s.vertices) vs.push_back(id(v));
            for (const auto& e : s.edges) es.push_back({{"cell", id(e.cell)}, {"from", e.from}, {"to", e.to}});
            for (const auto& f : s.faces) fs.push_back({{"cell", id(f.cell)}, {"orient", f.orient}, {"edges", f.edges}});
            cell["sphere"] = {{"vertices", vs}, {"edges", es}, {"faces", fs}};
        }
        cells.push_back(cell);
    }
    return ojson{{"cells", cells}};
}

namespace detail {

inline long json_long(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_number_integer())
        throw validation_error("schema: " + where + " needs integer \"" + key + "\"");
    return j[key].get<long>();
}

inline const nlohmann::json& json_array(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_array())
        throw validation_error("schema: " + where + " needs array \"" + key + "\"");
    return j[key];
}

}  // namespace detail

/// Parses and validates a complex; cell references are by id.
inline CellComplex complex_from_json(const nlohmann::json& j) {
    using detail::json_array;
    using detail::json_long;
    const auto& cells = json_array(j, "cells", "complex");
    std::map<long, int> index;
    for (const auto& x : cells) {
        long id = json_long(x, "id", "cell");
        if (id <= 0) throw validation_error("complex: cell ids must be positive");
        if (!index.emplace(id, static_cast<int>(index.size())).second)
            throw validation_error("complex: duplicate cell id " + std::to_string(id));
    }
    auto ref = [&](long id, const std::string& where) {
        auto it = index.find(id);
        if (it == index.end()) throw validation_error("complex: " + where + " names unknown cell " + std::to_string(id));
        return it->second;
    };
    auto orient = [&](const nlohmann::json& x, const std::string& where) {
        long o = json_long(x, "orient", where);
        if (o != 1 && o != -1) throw validation_error("complex: " + where + " orientation must be +1 or -1");
        return static_cast<int>(o);
    };
    CellComplex c;
    for (const auto& x : cells) {
        long id = json_long(x, "id", "cell");
        std::string where = "cell " + std::to_string(id);
        int dim = static_cast<int>(json_long(x, "dim", where));
        std::vector<Incidence> b;
        for (const auto& e : json_array(x, "boundary", where)) b.push_back({ref(json_long(e, "cell", where), where), orient(e, where)});
        std::optional<Sphere> sphere;
        if (x.contains("sphere")) {
            const auto& sj = x["sphere"];
            Sphere s;
            for (const auto& v : json_array(sj, "vertices", where)) {
                if (!v.is_number_integer()) throw validation_error("schema: " + where + " sphere vertex must be an id");
                s.vertices.push_back(ref(v.get<long>(), where));
            }
            for (const auto& e : json_array(sj, "edges", where))
                s.edges.push_back({ref(json_long(e, "cell", where), where), static_cast<int>(json_long(e, "from", where)),
                                   static_cast<int>(json_long(e, "to", where))});
            for (const auto& f : json_array(sj, "faces", where)) {
                SphereFace sf{ref(json_long(f, "cell", where), where), orient(f, where), {}};
                for (const auto& le : json_array(f, "edges", where)) {
                    if (!le.is_number_integer()) throw validation_error("schema: " + where + " sphere face edges must be integers");
                    sf.edges.push_back(le.get<int>());
                }
                s.faces.push_back(std::move(sf));
            }
            sphere = std::move(s);
        }
        c.add(dim, std::move(b), std::move(sphere), id);
    }
    validate_complex(c);
    return c;
}

struct ComplexFile {
    CellComplex cx;
    nlohmann::json tags;   // everything besides "cells"
    std::vector<int> tag;  // per cell: 0 ordinary, 1 singular, 2 marked
};

inline ComplexFile read_complex_file(const std::string& path) {
    std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error("schema: " + path + " is not valid JSON: " + e.what());
    }
    ComplexFile f;
    f.cx = complex_from_json(j);
    f.tags = j;
    f.tags.erase("cells");
    std::map<long, int> index;
    for (size_t i = 0; i < f.cx.size(); ++i) index[f.cx.cells[i].id] = static_cast<int>(i);
    f.tag.assign(f.cx.size(), 0);
    for (auto [key, value] : {std::pair{"singular", 1}, std::pair{"marked", 2}}) {
        if (!j.contains(key)) continue;
        for (const auto& id : j[key]) {
            auto it = id.is_number_integer() ? index.find(id.get<long>()) : index.end();
            if (it == index.end()) throw validation_error("complex: \"" + std::string(key) + "\" names an unknown cell");
            f.tag[static_cast<size_t>(it->second)] = value;
        }
    }
    return f;
}

inline ojson id_list(const CellComplex& c, const std::vector<int>& cells) {
    ojson out = ojson::array();
    for (int x : cells) out.push_back(c.cells[static_cast<size_t>(x)].id);
    return out;
}

/// X or Y with a per-cell role block.
inline ojson surface_to_json(const SurfaceComplex& sc) {
    ojson j = complex_to_json(sc.cx);
    ojson roles = ojson::array();
    std::vector<int> sing, mark;
    for (size_t i = 0; i < sc.cx.size(); ++i) {
        roles.push_back(role_name(sc.role[i]));
        if (sc.role[i] == CellRole::Singular) sing.push_back(static_cast<int>(i));
        if (sc.role[i] == CellRole::Marked) mark.push_back(static_cast<int>(i));
    }
    j["roles"] = roles;
    j["singular"] = id_list(sc.cx, sing);
    j["marked"] = id_list(sc.cx, mark);
    return j;
}

inline ojson suspension_to_json(const SuspensionComplex& h) {
    const auto& c = h.cx;
    ojson j = complex_to_json(c);
    ojson part = ojson::array();
    for (size_t i = 0; i < c.size(); ++i) part.push_back(h.is_surface(static_cast<int>(i)) ? "surface" : "suspension");
    j["part"] = part;
    j["singular"] = id_list(c, h.singular);
    j["marked"] = id_list(c, h.marked);
    ojson boxes = ojson::array();
    for (const auto& b : h.boxes)
        boxes.push_back({{"rectangle", b.rect + 1},
                         {"cell", c.cells[static_cast<size_t>(b.cell)].id},
                         {"bottom", id_list(c, b.bottom)},
                         {"top", id_list(c, b.top)},
                         {"sides", id_list(c, b.sides)},
                         {"side_edges", id_list(c, b.side_edges)}});
    j["boxes"] = boxes;
    return j;
}

inline ojson quotient_to_json(const QuotientComplex& q) {
    const auto& c = q.cx;
    ojson j = complex_to_json(c);
    j["part"] = q.role;
    j["singular"] = id_list(c, q.singular);
    j["marked"] = id_list(c, q.marked);
    ojson boxes = ojson::array();
    for (const auto& [cell, r] : q.box_of) boxes.push_back({{"rectangle", r + 1}, {"cell", c.cells[static_cast<size_t>(cell)].id}});
    j["boxes"] = boxes;
    return j;
}

}  // namespace smalldil
