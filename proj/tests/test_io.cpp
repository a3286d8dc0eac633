#include <smalldil/io.hpp>
#include <smalldil/pipeline.hpp>

#include <gtest/gtest.h>

#include <filesystem>

using namespace smalldil;

namespace {

std::string data(const std::string& f) { return std::string(SMALLDIL_DATA_DIR) + "/" + f; }

CellComplex round_trip(const CellComplex& c) {
    auto text = complex_to_json(c).dump();
    return complex_from_json(nlohmann::json::parse(text));
}

void expect_same_cells(const CellComplex& a, const CellComplex& b) {
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.cells[i].id, b.cells[i].id);
        EXPECT_EQ(a.cells[i].dim, b.cells[i].dim);
        EXPECT_EQ(a.cells[i].boundary, b.cells[i].boundary) << i;
        ASSERT_EQ(a.cells[i].sphere.has_value(), b.cells[i].sphere.has_value());
        if (a.cells[i].sphere) {
            const auto &s = *a.cells[i].sphere, &t = *b.cells[i].sphere;
            EXPECT_EQ(s.vertices, t.vertices);
            ASSERT_EQ(s.edges.size(), t.edges.size());
            for (size_t e = 0; e < s.edges.size(); ++e) {
                EXPECT_EQ(s.edges[e].cell, t.edges[e].cell);
                EXPECT_EQ(s.edges[e].from, t.edges[e].from);
                EXPECT_EQ(s.edges[e].to, t.edges[e].to);
            }
            ASSERT_EQ(s.faces.size(), t.faces.size());
            for (size_t f = 0; f < s.faces.size(); ++f) {
                EXPECT_EQ(s.faces[f].cell, t.faces[f].cell);
                EXPECT_EQ(s.faces[f].orient, t.faces[f].orient);
                EXPECT_EQ(s.faces[f].edges, t.faces[f].edges);
            }
        }
    }
}

nlohmann::json cube_json() { return nlohmann::json::parse(complex_to_json(shapes::cube()).dump()); }

const PipelineRun& e2() {
    static const PipelineRun run = [] {
        auto mp = load_partition(data("e2.json"));
        Rat P = infer_P(mp);
        return run_pipeline(std::move(mp), P, Stage::Quotient);
    }();
    return run;
}

}  // namespace

TEST(Hex, LowercaseBytesInOrder) {
    EXPECT_EQ(to_hex({0x0a, 0xff, 0x00, 0x9b}), "0aff009b");
    EXPECT_EQ(to_hex({}), "");
    CanonicalForm f;
    f.words = {0x01020304u, 0xa0b0c0d0u};
    EXPECT_EQ(form_hex(f), "01020304a0b0c0d0");
}

TEST(SciUpper, RoundsUp) {
    EXPECT_EQ(sci_upper(Rat(0)), "0");
    EXPECT_EQ(sci_upper(Rat(1, 3)), "3.34e-1");
    EXPECT_EQ(sci_upper(Rat(1, 1000000)), "1.00e-6");
    EXPECT_EQ(sci_upper(Rat(9995, 10)), "1.00e+3");
    EXPECT_EQ(sci_upper(Rat(12)), "1.20e+1");
}

TEST(ComplexJson, RoundTripOnShapes) {
    for (const auto& c : {shapes::point(), shapes::polygon(5), shapes::torus(), shapes::cube(), shapes::pillow(3)}) {
        auto back = round_trip(c);
        expect_same_cells(c, back);
        EXPECT_TRUE(canonical_form(c) == canonical_form(back));
    }
}

TEST(ComplexJson, RoundTripKeepsExplicitSpheres) {
    const auto& run = e2();
    ASSERT_TRUE(run.complete);
    for (const CellComplex* c : {&run.h.cx, &run.q.cx}) {
        auto back = round_trip(*c);
        expect_same_cells(*c, back);
        EXPECT_TRUE(canonical_form(*c) == canonical_form(back));
    }
}

TEST(ComplexJson, RoundTripOfRelabeledComplex) {
    std::mt19937_64 rng(11);
    auto r = relabeled(shapes::cube(), rng);
    auto back = round_trip(r);
    expect_same_cells(r, back);
    EXPECT_TRUE(canonical_form(back) == canonical_form(shapes::cube()));
}

TEST(ComplexJson, RejectsMalformedInput) {
    auto expect_invalid = [](nlohmann::json j, const std::string& what) {
        EXPECT_THROW(complex_from_json(j), validation_error) << what;
    };
    expect_invalid(nlohmann::json::object(), "no cells");
    auto j = cube_json();
    j["cells"][8]["boundary"][0]["cell"] = 999;
    expect_invalid(j, "unknown cell");
    j = cube_json();
    j["cells"][8]["boundary"][0]["orient"] = 0;
    expect_invalid(j, "orientation");
    j = cube_json();
    j["cells"][1]["id"] = j["cells"][0]["id"];
    expect_invalid(j, "duplicate id");
    j = cube_json();
    j["cells"][0]["id"] = -4;
    expect_invalid(j, "negative id");
    j = cube_json();
    auto& b3 = j["cells"].back()["boundary"];
    b3.erase(b3.size() - 1);
    expect_invalid(j, "3-cell missing a face");
    j = cube_json();
    j["cells"][0].erase("dim");
    expect_invalid(j, "missing dim");
}

TEST(ComplexFile, TagsAreReadBack) {
    const auto& run = e2();
    auto dir = std::filesystem::temp_directory_path() / ("smalldil_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    auto path = (dir / "hat-y.json").string();
    write_json_file(path, suspension_to_json(run.h));
    auto f = read_complex_file(path);
    expect_same_cells(run.h.cx, f.cx);
    for (size_t c = 0; c < f.cx.size(); ++c) {
        int want = std::binary_search(run.h.marked.begin(), run.h.marked.end(), static_cast<int>(c))     ? 2
                   : std::binary_search(run.h.singular.begin(), run.h.singular.end(), static_cast<int>(c)) ? 1
                                                                                                         : 0;
        EXPECT_EQ(f.tag[c], want) << c;
    }
    EXPECT_EQ(f.tags["boxes"].size(), run.h.boxes.size());
    EXPECT_EQ(f.tags["part"].size(), run.h.cx.size());
    std::filesystem::remove_all(dir);
}

TEST(ComplexFile, MissingFileIsAnIoError) {
    EXPECT_THROW(read_complex_file(data("does_not_exist.json")), io_error);
}

TEST(MatrixJson, ReadsFixtures) {
    auto a = read_matrix_file(data("pf3.json"));
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(a[2][0], 2);
    EXPECT_EQ(matrix_from_json(nlohmann::json::parse(matrix_to_json(a).dump())), a);
}

TEST(MatrixJson, RejectsBadShapes) {
    using nlohmann::json;
    EXPECT_THROW(matrix_from_json(json::parse(R"({"n": 2, "rows": [[1, 1]]})")), validation_error);
    EXPECT_THROW(matrix_from_json(json::parse(R"({"rows": [[1, -1], [1, 1]]})")), validation_error);
    EXPECT_THROW(matrix_from_json(json::parse(R"({"rows": [[1, 1, 1], [1, 1]]})")), validation_error);
    EXPECT_THROW(matrix_from_json(json::parse(R"({"rows": [[1.5]]})")), validation_error);
    EXPECT_THROW(matrix_from_json(json::parse(R"([1, 2])")), validation_error);
}
