#pragma once

// Independent reference computations used only by the test suites.

#include <smalldil/numeric.hpp>

#include <cmath>
#include <vector>

namespace oracle {

using smalldil::Int;
using smalldil::Rat;

// det(tI - A) by exact Gaussian elimination over the rationals.
inline Rat char_value(const std::vector<std::vector<Int>>& a, const Rat& t) {
    size_t n = a.size();
    std::vector<std::vector<Rat>> m(n, std::vector<Rat>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) m[i][j] = (i == j ? t : Rat(0)) - Rat(a[i][j]);
    Rat det = 1;
    for (size_t c = 0; c < n; ++c) {
        size_t p = c;
        while (p < n && m[p][c] == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            std::swap(m[p], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (size_t r = c + 1; r < n; ++r) {
            if (m[r][c] == 0) continue;
            Rat f = m[r][c] / m[c][c];
            for (size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        }
    }
    return det;
}

// Power iteration in long double; good to ~1e-12 on small primitive matrices.
inline long double power_iteration(const std::vector<std::vector<Int>>& a, int iters = 4000) {
    size_t n = a.size();
    std::vector<long double> v(n, 1.0L), w(n);
    long double lam = 0;
    for (int it = 0; it < iters; ++it) {
        for (size_t i = 0; i < n; ++i) {
            w[i] = 0;
            for (size_t j = 0; j < n; ++j) w[i] += a[i][j].convert_to<long double>() * v[j];
        }
        long double mx = 0;
        for (auto x : w) mx = std::max(mx, x);
        lam = mx;
        for (size_t i = 0; i < n; ++i) v[i] = w[i] / mx;
    }
    return lam;
}

// Plain bisection of det(tI - A) on [lo, hi] assuming a sign change; exact arithmetic.
inline std::pair<Rat, Rat> bisect_root(const std::vector<std::vector<Int>>& a, Rat lo, Rat hi,
                                       const Rat& tol) {
    Rat flo = char_value(a, lo);
    if (flo == 0) return {lo, lo};
    while (hi - lo > tol) {
        Rat mid = (lo + hi) / 2;
        Rat fm = char_value(a, mid);
        if (fm == 0) return {mid, mid};
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

}  // namespace oracle
