#include <smalldil/pf_core.hpp>

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace smalldil;

namespace {

Matrix m(std::initializer_list<std::initializer_list<int>> rows) {
    Matrix a;
    for (auto& r : rows) {
        a.emplace_back();
        for (int v : r) a.back().emplace_back(v);
    }
    return a;
}

const Matrix fig1 = m({{1, 1, 0}, {0, 0, 1}, {2, 1, 0}});

}  // namespace

TEST(Primitivity, Figure1NeedsCube) {
    auto r = is_perron_frobenius(fig1);
    EXPECT_TRUE(r.primitive);
    EXPECT_EQ(r.power, 3u);
    // A^2 has a zero, A^3 does not
    auto a2 = matrix_power(fig1, 2);
    bool has_zero = false;
    for (auto& row : a2)
        for (auto& v : row) has_zero |= v == 0;
    EXPECT_TRUE(has_zero);
}

TEST(Primitivity, OneByOne) { EXPECT_EQ(is_perron_frobenius(m({{2}})).power, 1u); }

TEST(Primitivity, PermutationRefused) {
    EXPECT_FALSE(is_perron_frobenius(m({{0, 1}, {1, 0}})).primitive);
    EXPECT_THROW(make_pf_matrix(m({{0, 1}, {1, 0}})), refusal);
}

TEST(Primitivity, BadShapes) {
    EXPECT_THROW(is_perron_frobenius(m({{1, 1}, {1}})), validation_error);
    EXPECT_THROW(is_perron_frobenius(m({{1, -1}, {1, 1}})), validation_error);
    EXPECT_THROW(is_perron_frobenius(Matrix{}), validation_error);
}

TEST(Primitivity, WielandtExtremalMatrixHitsBound) {
    // n-cycle plus one chord: exponent is exactly n^2 - 2n + 2
    for (size_t n = 2; n <= 6; ++n) {
        Matrix a(n, std::vector<Int>(n, 0));
        for (size_t i = 0; i + 1 < n; ++i) a[i][i + 1] = 1;
        a[n - 1][0] = 1;
        a[n - 1][1] = 1;
        auto r = is_perron_frobenius(a);
        ASSERT_TRUE(r.primitive);
        EXPECT_EQ(r.power, wielandt_bound(n));
    }
}

TEST(CharPoly, Figure1) {
    auto d = characteristic_data(fig1);
    // x^3 - x^2 - x - 1
    std::vector<Int> want{-1, -1, -1, 1};
    EXPECT_EQ(d.coeffs, want);
}

TEST(CharPoly, AgreesWithDeterminantOracle) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 50; ++t) {
        auto a = random_primitive(rng, 5, 3);
        auto p = characteristic_data(a).poly();
        for (int x = -3; x <= 3; ++x)
            EXPECT_EQ(p.eval(Rat(x)), oracle::char_value(a, Rat(x))) << matrix_to_string(a);
    }
}

TEST(Spectral, Figure1) {
    auto iv = spectral_radius(make_pf_matrix(fig1), Rat(1, 1000000));
    EXPECT_LE(iv.width(), Rat(1, 1000000));
    EXPECT_GE(iv.midpoint(), rat(1839286, 1000000));
    EXPECT_LE(iv.midpoint(), rat(1839288, 1000000));
    // the tribonacci constant 1.839286755...
    EXPECT_LE(iv.lo, rat(18392867552, 10000000000));
    EXPECT_GE(iv.hi, rat(18392867553, 10000000000));
    EXPECT_TRUE(iv.isolation_verified);
}

TEST(Spectral, Figure1MatchesBisectionOracle) {
    auto iv = spectral_radius(make_pf_matrix(fig1), Rat(1, 1000000000));
    auto [lo, hi] = oracle::bisect_root(fig1, Rat(1), Rat(3), Rat(1, 1000000000));
    EXPECT_LE(iv.lo, hi);
    EXPECT_GE(iv.hi, lo);
}

TEST(Spectral, OneByOneIsExact) {
    auto iv = spectral_radius(make_pf_matrix(m({{2}})), Rat(1, 1000));
    EXPECT_TRUE(iv.exact());
    EXPECT_EQ(iv.lo, 2);
}

TEST(Spectral, GoldenSquare) {
    auto iv = spectral_radius(make_pf_matrix(m({{2, 1}, {1, 1}})), Rat(1, 1000000000));
    double target = (3 + std::sqrt(5.0)) / 2;
    EXPECT_NEAR(to_double(iv.midpoint()), target, 1e-9);
    EXPECT_GE(iv.lo, 2);
    EXPECT_LE(iv.hi, 3);
}

TEST(Spectral, ExactRationalRoot) {
    // row sums all 3: lambda = 3 is found exactly
    auto iv = spectral_radius(make_pf_matrix(m({{1, 2}, {2, 1}})), Rat(1, 1000));
    EXPECT_LE(iv.lo, 3);
    EXPECT_GE(iv.hi, 3);
}

TEST(Spectral, BadTolerance) {
    auto a = make_pf_matrix(fig1);
    EXPECT_THROW(spectral_radius(a, Rat(0)), validation_error);
    EXPECT_THROW(spectral_radius(a, Rat(-1)), validation_error);
}

TEST(Spectral, RandomAgreesWithPowerIteration) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
        auto a = random_primitive(rng, 5, 3);
        auto iv = spectral_radius(make_pf_matrix(a), Rat(1, 1000000000));
        long double pi = oracle::power_iteration(a);
        EXPECT_NEAR(to_double(iv.midpoint()), static_cast<double>(pi), 1e-6) << matrix_to_string(a);
        auto [mn, mx] = row_sum_bounds(a);
        Rat w = iv.width();
        EXPECT_LE(Rat(mn), iv.lo + w);
        EXPECT_LE(iv.hi - w, Rat(mx));
        EXPECT_TRUE(iv.isolation_verified);
    }
}

TEST(Spectral, MonotoneUnderRefinement) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 30; ++t) {
        auto a = make_pf_matrix(random_primitive(rng, 5, 3));
        Rat tol(1, 10);
        auto prev = spectral_radius(a, tol);
        for (int k = 0; k < 6; ++k) {
            tol /= 17;
            auto cur = spectral_radius(a, tol);
            EXPECT_GE(cur.lo, prev.lo);
            EXPECT_LE(cur.hi, prev.hi);
            prev = cur;
        }
    }
}

TEST(RowSums, Examples) {
    EXPECT_EQ(row_sum_bounds(fig1), std::make_pair(Int(1), Int(3)));
    EXPECT_EQ(row_sum_bounds(m({{2}})), std::make_pair(Int(2), Int(2)));
    EXPECT_EQ(row_sum_bounds(m({{2, 1}, {1, 1}})), std::make_pair(Int(2), Int(3)));
}

TEST(Paths, Examples) {
    auto g = adjacency_graph(fig1);
    EXPECT_EQ(count_paths(g, 1, 1, 3), 3);
    EXPECT_EQ(count_paths_dfs(g, 1, 1, 3), 3);
    auto h = adjacency_graph(m({{2, 1}, {1, 1}}));
    EXPECT_EQ(count_paths(h, 1, 2, 2), 3);
    for (long i = 1; i <= 3; ++i)
        for (long j = 1; j <= 3; ++j) EXPECT_EQ(count_paths(g, i, j, 0), i == j ? 1 : 0);
    EXPECT_THROW(count_paths(g, 0, 1, 1), validation_error);
    EXPECT_THROW(count_paths(g, 1, 4, 1), validation_error);
}

TEST(Paths, MatrixPowersMatchDfs) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 60; ++t) {
        auto a = random_primitive(rng, 5, 2);
        auto g = adjacency_graph(a);
        for (unsigned mm = 0; mm <= 4; ++mm)
            for (long i = 1; i <= static_cast<long>(g.n); ++i)
                for (long j = 1; j <= static_cast<long>(g.n); ++j)
                    ASSERT_EQ(count_paths(g, i, j, mm), count_paths_dfs(g, i, j, mm));
    }
}

TEST(Graph, DegreeSumsAgree) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        auto g = adjacency_graph(random_primitive(rng, 6, 3));
        Int so = 0, si = 0;
        for (auto& d : g.deg_out) {
            so += d;
            EXPECT_GT(d, 0);
        }
        for (auto& d : g.deg_in) {
            si += d;
            EXPECT_GT(d, 0);
        }
        EXPECT_EQ(so, g.edge_count);
        EXPECT_EQ(si, g.edge_count);
    }
}

TEST(Graph, DotExport) {
    auto dot = to_dot(adjacency_graph(fig1));
    EXPECT_NE(dot.find("3 -> 1 [label=\"2\"]"), std::string::npos);
    EXPECT_EQ(dot.find("2 -> 1"), std::string::npos);
}

TEST(HamSong, Figure1) {
    auto r = ham_song_check(make_pf_matrix(fig1));
    EXPECT_EQ(r.lhs, 4);
    EXPECT_EQ(r.min_row_sum_power, 5);
    EXPECT_TRUE(r.holds);
    // lambda^3 = lambda^2 + lambda + 1 = 6.2222625...
    EXPECT_LE(r.lambda_pow_lo, rat(62222626, 10000000));
    EXPECT_GE(r.lambda_pow_hi, rat(62222625, 10000000));
    EXPECT_EQ(to_decimal((r.lambda_pow_lo + r.lambda_pow_hi) / 2 + rat(5, 100000), 4), "6.2223");
    EXPECT_TRUE(r.float_holds);
}

TEST(HamSong, SmallCases) {
    auto r = ham_song_check(make_pf_matrix(m({{2}})));
    EXPECT_EQ(r.lhs, 2);
    EXPECT_EQ(r.min_row_sum_power, 2);
    EXPECT_TRUE(r.holds);
    auto f = ham_song_check(make_pf_matrix(m({{1, 1}, {1, 0}})));
    EXPECT_EQ(f.lhs, 2);
    EXPECT_EQ(f.min_row_sum_power, 2);
    EXPECT_TRUE(f.holds);
}

TEST(HamSong, RandomMatrices) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 300; ++t) {
        auto a = random_primitive(rng, 6, 3);
        auto r = ham_song_check(make_pf_matrix(a));
        ASSERT_TRUE(r.holds) << matrix_to_string(a);
        ASSERT_TRUE(r.float_holds) << matrix_to_string(a);
    }
}

TEST(Random, Deterministic) {
    std::mt19937_64 a(7), b(7);
    for (int t = 0; t < 20; ++t) EXPECT_EQ(random_primitive(a, 5, 3), random_primitive(b, 5, 3));
}
