#include <smalldil/surface_cells.hpp>

#include <gtest/gtest.h>

#include <cstdlib>

using namespace smalldil;

namespace {

std::string data(const std::string& f) { return std::string(SMALLDIL_DATA_DIR) + "/" + f; }

const std::vector<std::string> realizable = {"e2", "cover4", "chain4", "refine00", "refine01",
                                             "refine02", "refine03", "refine04", "refine05"};

MarkovPartition load(const std::string& name) { return load_partition(data(name + ".json")); }

long total_entries(const MarkovPartition& mp) {
    long t = 0;
    for (const auto& ps : mp.map.passes) t += static_cast<long>(ps.size());
    return t;
}

}  // namespace

TEST(X, E2Counts) {
    auto mp = load("e2");
    auto x = build_X(mp);
    auto c = x.sc.cx.counts();
    EXPECT_EQ(c[0], 4u);
    EXPECT_EQ(c[1], 6u);
    EXPECT_EQ(c[2], 2u);
    EXPECT_EQ(x.sc.punctured_euler(), -1);
}

TEST(X, EulerMatchesSurfaceOnAllFixtures) {
    for (auto name : realizable) {
        auto mp = load(name);
        EXPECT_EQ(build_X(mp).sc.punctured_euler(), mp.chi()) << name;
    }
    auto e3 = load("e3");
    EXPECT_EQ(build_X(e3).sc.punctured_euler(), -4);
}

TEST(X, PartnersShareOneCell) {
    for (auto name : {"e2", "e3", "chain4"}) {
        auto mp = load(name);
        auto x = build_X(mp);
        for (size_t s = 0; s < mp.segments.size(); ++s) {
            size_t t = mp.segments[s].partner;
            EXPECT_EQ(x.seg_cell[s], x.seg_cell[t]) << name << " segment " << mp.segments[s].id;
        }
        for (size_t r = 0; r < mp.n(); ++r) {
            size_t nseg = 0;
            for (int sd = 0; sd < 4; ++sd) nseg += mp.rects[r].sides[sd].size();
            EXPECT_EQ(x.sc.cx.cells[static_cast<size_t>(x.rect_cell[r])].boundary.size(), nseg);
        }
    }
}

TEST(X, D1HoldsAtInferredP) {
    for (auto name : realizable) {
        auto mp = load(name);
        auto rep = check_D1(mp, build_X(mp), infer_P(mp));
        EXPECT_TRUE(rep.holds()) << name;
    }
}

TEST(Y, E2StripCounts) {
    auto mp = load("e2");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    ASSERT_EQ(y.strips.size(), 2u);
    EXPECT_EQ(y.strips[0].size(), 3u);
    EXPECT_EQ(y.strips[1].size(), 2u);
    auto c = y.sc.cx.counts();
    EXPECT_EQ(c[0], 7u);
    EXPECT_EQ(c[1], 12u);
    EXPECT_EQ(c[2], 5u);
}

TEST(Y, E3SingleStripInSecondRectangle) {
    auto mp = load("e3");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    EXPECT_EQ(y.strips[1].size(), 1u);
    EXPECT_EQ(y.sc.punctured_euler(), -4);
}

TEST(Y, StripsMatchCodegreesAndEulerIsKept) {
    for (auto name : realizable) {
        auto mp = load(name);
        auto x = build_X(mp);
        auto y = build_Y(mp, x);
        auto codeg = degrees(mp, 1).codeg;
        for (size_t j = 0; j < mp.n(); ++j) EXPECT_EQ(Int(y.strips[j].size()), codeg[j]) << name << " " << mp.rect_name(j);
        EXPECT_EQ(static_cast<long>(y.sc.cx.counts()[2]), total_entries(mp)) << name;
        EXPECT_EQ(y.sc.punctured_euler(), x.sc.punctured_euler()) << name;
        EXPECT_NO_THROW(validate_complex(y.sc.cx)) << name;
    }
}

TEST(Y, PiecesSubdivideTheirParents) {
    auto mp = load("cover4");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    for (int c : x.sc.cx.cells_of_dim(1)) {
        auto it = y.pieces.find(c);
        ASSERT_NE(it, y.pieces.end());
        const auto& ps = y.params.at(c);
        ASSERT_EQ(ps.size(), it->second.size() + 1);
        for (size_t i = 0; i + 1 < ps.size(); ++i) EXPECT_LT(ps[i], ps[i + 1]);
        for (int e : it->second) EXPECT_EQ(y.sc.parent[static_cast<size_t>(e)], c);
    }
}

TEST(Y, GeometryConflictRejected) {
    auto j = read_json_file(data("e2.json"));
    auto glue = [&](int a, int b, bool rev) {
        for (auto& s : j["segments"]) {
            if (s["id"] == a) s["partner"] = b, s["reversed"] = rev;
            if (s["id"] == b) s["partner"] = a, s["reversed"] = rev;
        }
    };
    // both bottom pieces of R1 now glue to segments of size equal to R2's length
    glue(1, 9, true);
    glue(3, 4, true);
    glue(2, 10, false);
    auto mp = partition_from_json(j);
    try {
        solve_geometry(mp);
        FAIL() << "expected a geometry conflict";
    } catch (const validation_error& e) {
        EXPECT_NE(std::string(e.what()).find("geometry conflict"), std::string::npos) << e.what();
    }
}

TEST(Y, ExactModeGivesSameComplex) {
    auto mp = load("refine03");
    auto x = build_X(mp);
    auto fast = build_Y(mp, x);
    setenv("SMALLDIL_EXACT", "1", 1);
    auto mp2 = load("refine03");
    auto x2 = build_X(mp2);
    auto exact = build_Y(mp2, x2);
    unsetenv("SMALLDIL_EXACT");
    EXPECT_EQ(fast.sc.cx.counts(), exact.sc.cx.counts());
    EXPECT_GT(exact.exact_decisions, 0);
    EXPECT_TRUE(canonical_form(fast.sc.cx) == canonical_form(exact.sc.cx));
}

TEST(Phi, ContinuousOnRealizableFixtures) {
    for (auto name : realizable) {
        auto mp = load(name);
        auto x = build_X(mp);
        auto y = build_Y(mp, x);
        PhiMap phi(mp, x, y);
        ContinuityReport rep;
        auto img = phi.vertex_images(rep);
        for (int c : x.sc.cx.cells_of_dim(1)) EXPECT_TRUE(phi.edge_image(c, &rep).has_value()) << name;
        EXPECT_TRUE(rep.problems.empty()) << name << ": " << rep.problems.front();
        for (int v : x.sc.cx.cells_of_dim(0)) EXPECT_EQ(y.sc.cx.cells[static_cast<size_t>(img[static_cast<size_t>(v)])].dim, 0);
    }
}

TEST(Phi, E2FixesItsMarkedPoint) {
    auto mp = load("e2");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    PhiMap phi(mp, x, y);
    ContinuityReport rep;
    auto img = phi.vertex_images(rep);
    for (int v : x.sc.cx.cells_of_dim(0))
        if (x.sc.role[static_cast<size_t>(v)] == CellRole::Marked) EXPECT_EQ(img[static_cast<size_t>(v)], y.x_to_y_vertex[static_cast<size_t>(v)]);
}

TEST(Phi, E3IsNotCellular) {
    auto mp = load("e3");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    auto d2 = check_D2(mp, x, y, infer_P(mp));
    EXPECT_FALSE(d2.holds[3]);
    ASSERT_FALSE(d2.violations.empty());
    EXPECT_EQ(d2.violations.front().rfind("part 4", 0), 0u);
}

TEST(D2, E2Observed) {
    auto mp = load("e2");
    auto x = build_X(mp);
    auto y = build_Y(mp, x);
    auto d2 = check_D2(mp, x, y, infer_P(mp));
    EXPECT_TRUE(d2.all());
    EXPECT_EQ(d2.observed, (std::array<long, 5>{3, 3, 3, 2, 6}));
}

TEST(D2, AllPartsOnRealizableFixtures) {
    for (auto name : realizable) {
        auto mp = load(name);
        auto x = build_X(mp);
        auto y = build_Y(mp, x);
        auto d2 = check_D2(mp, x, y, infer_P(mp));
        EXPECT_TRUE(d2.all()) << name;
        EXPECT_TRUE(d2.violations.empty()) << name;
    }
}
