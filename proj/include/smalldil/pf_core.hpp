#pragma once

#include "numeric.hpp"
#include "poly.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace smalldil {

using Matrix = std::vector<std::vector<Int>>;

inline Matrix identity_matrix(size_t n) {
    Matrix m(n, std::vector<Int>(n, Int(0)));
    for (size_t i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
    size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    Matrix r(n, std::vector<Int>(m, Int(0)));
    for (size_t i = 0; i < n; ++i)
        for (size_t t = 0; t < k; ++t) {
            if (a[i][t] == 0) continue;
            for (size_t j = 0; j < m; ++j) r[i][j] += a[i][t] * b[t][j];
        }
    return r;
}

inline Matrix matrix_power(const Matrix& a, unsigned e) {
    Matrix result = identity_matrix(a.size());
    Matrix base = a;
    while (e) {
        if (e & 1u) result = multiply(result, base);
        e >>= 1u;
        if (e) base = multiply(base, base);
    }
    return result;
}

inline Matrix transpose(const Matrix& a) {
    size_t n = a.size();
    Matrix t(n, std::vector<Int>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) t[j][i] = a[i][j];
    return t;
}

inline std::vector<Int> row_sums(const Matrix& a) {
    std::vector<Int> s;
    for (const auto& row : a) {
        Int t = 0;
        for (const auto& v : row) t += v;
        s.push_back(t);
    }
    return s;
}

inline std::vector<Int> column_sums(const Matrix& a) {
    std::vector<Int> s(a.size(), Int(0));
    for (const auto& row : a)
        for (size_t j = 0; j < row.size(); ++j) s[j] += row[j];
    return s;
}

inline void validate_square_nonnegative(const Matrix& a) {
    if (a.empty()) throw validation_error("matrix must have positive dimension");
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != a.size())
            throw validation_error("matrix is not square: row " + std::to_string(i + 1) + " has " +
                                   std::to_string(a[i].size()) + " entries, expected " +
                                   std::to_string(a.size()));
        for (size_t j = 0; j < a.size(); ++j)
            if (a[i][j] < 0)
                throw validation_error("negative entry at (" + std::to_string(i + 1) + "," +
                                       std::to_string(j + 1) + ")");
    }
}

/// Wielandt's bound on the exponent of a primitive n x n matrix.
inline unsigned wielandt_bound(size_t n) { return static_cast<unsigned>(n * n - 2 * n + 2); }

struct PrimitivityResult {
    bool primitive = false;
    unsigned power = 0;  // least k with A^k > 0 when primitive
    unsigned cutoff = 0;
    std::string reason;
};

inline PrimitivityResult is_perron_frobenius(const Matrix& a) {
    validate_square_nonnegative(a);
    size_t n = a.size();
    PrimitivityResult res;
    res.cutoff = wielandt_bound(n);
    std::vector<std::vector<char>> pattern(n, std::vector<char>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) pattern[i][j] = a[i][j] > 0;
    auto cur = pattern;
    for (unsigned k = 1; k <= res.cutoff; ++k) {
        bool all = true;
        for (size_t i = 0; i < n && all; ++i)
            for (size_t j = 0; j < n && all; ++j) all = cur[i][j];
        if (all) {
            res.primitive = true;
            res.power = k;
            return res;
        }
        std::vector<std::vector<char>> next(n, std::vector<char>(n, 0));
        for (size_t i = 0; i < n; ++i)
            for (size_t t = 0; t < n; ++t)
                if (cur[i][t])
                    for (size_t j = 0; j < n; ++j)
                        if (pattern[t][j]) next[i][j] = 1;
        cur = std::move(next);
    }
    res.reason = "no power A^k with k <= " + std::to_string(res.cutoff) + " is entrywise positive";
    return res;
}

/// Square nonnegative integer matrix carrying a primitivity certificate.
struct PFMatrix {
    Matrix a;
    unsigned primitivity_power = 0;

    size_t n() const { return a.size(); }
    const Int& operator()(size_t i, size_t j) const { return a[i][j]; }
};

/// Certifies primitivity exactly; refuses matrices that are not primitive.
inline PFMatrix make_pf_matrix(const Matrix& a) {
    auto res = is_perron_frobenius(a);
    if (!res.primitive) throw refusal("matrix is not primitive: " + res.reason);
    Matrix p = matrix_power(a, res.power);
    for (const auto& row : p)
        for (const auto& v : row)
            if (v < 1) throw invariant_error("primitivity certificate failed exact check");
    return PFMatrix{a, res.power};
}

struct AdjacencyGraph {
    size_t n = 0;
    Matrix multiplicity;
    std::vector<Int> deg_out, deg_in;
    Int edge_count = 0;
};

inline AdjacencyGraph adjacency_graph(const Matrix& a) {
    validate_square_nonnegative(a);
    AdjacencyGraph g;
    g.n = a.size();
    g.multiplicity = a;
    g.deg_out = row_sums(a);
    g.deg_in = column_sums(a);
    for (const auto& v : g.deg_out) g.edge_count += v;
    return g;
}

inline std::string to_dot(const AdjacencyGraph& g) {
    std::ostringstream out;
    out << "digraph G {\n";
    for (size_t i = 0; i < g.n; ++i) out << "  " << i + 1 << ";\n";
    for (size_t i = 0; i < g.n; ++i)
        for (size_t j = 0; j < g.n; ++j)
            if (g.multiplicity[i][j] > 0)
                out << "  " << i + 1 << " -> " << j + 1 << " [label=\"" << g.multiplicity[i][j]
                    << "\"];\n";
    out << "}\n";
    return out.str();
}

/// Characteristic polynomial det(xI - A) (coefficients lowest first, monic) together with
/// the matrix coefficients of adj(xI - A) = sum_k B_k x^(n-1-k), by Faddeev-LeVerrier.
struct CharacteristicData {
    std::vector<Int> coeffs;
    std::vector<Matrix> adjugate_terms;

    Poly poly() const {
        std::vector<Rat> c;
        for (const auto& v : coeffs) c.emplace_back(v);
        return Poly(c);
    }
    /// Entry (i, j) of adj(xI - A) as a polynomial in x.
    Poly adjugate_entry(size_t i, size_t j) const {
        size_t n = adjugate_terms.size();
        std::vector<Rat> c(n);
        for (size_t k = 0; k < n; ++k) c[n - 1 - k] = Rat(adjugate_terms[k][i][j]);
        return Poly(c);
    }
};

inline CharacteristicData characteristic_data(const Matrix& a) {
    size_t n = a.size();
    CharacteristicData d;
    d.coeffs.assign(n + 1, Int(0));
    d.coeffs[n] = 1;
    Matrix m = identity_matrix(n);  // B_0
    for (size_t k = 1; k <= n; ++k) {
        d.adjugate_terms.push_back(m);
        Matrix am = multiply(a, m);
        Int trace = 0;
        for (size_t i = 0; i < n; ++i) trace += am[i][i];
        if (trace % Int(k) != 0) throw invariant_error("Faddeev-LeVerrier division not exact");
        Int ck = -trace / Int(k);
        d.coeffs[n - k] = ck;
        for (size_t i = 0; i < n; ++i) am[i][i] += ck;
        m = std::move(am);
    }
    for (const auto& row : m)
        for (const auto& v : row)
            if (v != 0) throw invariant_error("Cayley-Hamilton residual is nonzero");
    return d;
}

inline std::pair<Int, Int> row_sum_bounds(const Matrix& a) {
    auto s = row_sums(a);
    return {*std::min_element(s.begin(), s.end()), *std::max_element(s.begin(), s.end())};
}

/// Rational interval [lo, hi] bracketing the largest real root of `polynomial`.
struct AlgebraicInterval {
    std::vector<Int> polynomial;  // lowest degree first
    Rat lo, hi;
    bool isolation_verified = false;

    Rat width() const { return hi - lo; }
    Rat midpoint() const { return (lo + hi) / 2; }
    bool exact() const { return lo == hi; }
};

/// Bisection engine shared by spectral_radius and the field arithmetic of surface_cells.
class PFRootIsolator {
public:
    explicit PFRootIsolator(const Matrix& a) {
        auto d = characteristic_data(a);
        charpoly_ = d.coeffs;
        squarefree_ = squarefree_part(d.poly());
        chain_ = sturm_chain(squarefree_);
        auto [mn, mx] = row_sum_bounds(a);
        if (mn < 1) throw refusal("matrix has a zero row sum; row-sum bracket degenerates");
        lo_ = Rat(mn);
        hi_ = Rat(mx);
        bound_ = cauchy_bound(squarefree_);
        if (lo_ == hi_ || count_roots(chain_, lo_, hi_) == 0) {
            if (squarefree_.eval(lo_) != 0)
                throw numeric_error("no root of the characteristic polynomial in the row-sum bracket");
            hi_ = lo_;
        }
    }

    const Rat& lo() const { return lo_; }
    const Rat& hi() const { return hi_; }
    const Poly& squarefree() const { return squarefree_; }
    const std::vector<Poly>& chain() const { return chain_; }
    const std::vector<Int>& charpoly() const { return charpoly_; }

    void bisect() {
        if (lo_ == hi_) return;
        Rat mid = (lo_ + hi_) / 2;
        if (count_roots(chain_, mid, hi_) > 0) {
            lo_ = mid;
        } else if (squarefree_.eval(mid) == 0) {
            lo_ = hi_ = mid;
        } else {
            hi_ = mid;
        }
    }

    /// No other real root has modulus >= lo; complex roots are controlled by the
    /// primitivity certificate.
    bool isolation_verified() const {
        if (count_roots(chain_, hi_, bound_) != 0) return false;
        Rat neg_lo = -lo_;
        return count_roots(chain_, -bound_, neg_lo) == 0 && squarefree_.eval(neg_lo) != 0;
    }

    AlgebraicInterval interval() const {
        return AlgebraicInterval{charpoly_, lo_, hi_, isolation_verified()};
    }

private:
    std::vector<Int> charpoly_;
    Poly squarefree_;
    std::vector<Poly> chain_;
    Rat lo_, hi_, bound_;
};

inline AlgebraicInterval spectral_radius(const PFMatrix& m, const Rat& tol) {
    if (tol <= 0) throw validation_error("tolerance must be positive");
    PFRootIsolator iso(m.a);
    while (iso.lo() != iso.hi() && (iso.hi() - iso.lo() > tol || !iso.isolation_verified()))
        iso.bisect();
    return iso.interval();
}

inline void check_vertex(const AdjacencyGraph& g, long v) {
    if (v < 1 || static_cast<size_t>(v) > g.n)
        throw validation_error("unknown vertex id " + std::to_string(v));
}

/// Number of directed paths of length m from i to j (1-based ids): entry (i, j) of A^m.
inline Int count_paths(const AdjacencyGraph& g, long i, long j, unsigned m) {
    check_vertex(g, i);
    check_vertex(g, j);
    Matrix p = matrix_power(g.multiplicity, m);
    return p[static_cast<size_t>(i - 1)][static_cast<size_t>(j - 1)];
}

/// Independent path count by depth-first enumeration of individual edges.
inline Int count_paths_dfs(const AdjacencyGraph& g, long i, long j, unsigned m) {
    check_vertex(g, i);
    check_vertex(g, j);
    if (m > 8) throw validation_error("depth-first enumeration is limited to m <= 8");
    std::vector<std::vector<size_t>> edges(g.n);  // one entry per parallel edge
    for (size_t u = 0; u < g.n; ++u)
        for (size_t v = 0; v < g.n; ++v)
            for (Int k = 0; k < g.multiplicity[u][v]; ++k) edges[u].push_back(v);
    size_t target = static_cast<size_t>(j - 1);
    Int count = 0;
    std::function<void(size_t, unsigned)> walk = [&](size_t u, unsigned left) {
        if (left == 0) {
            if (u == target) ++count;
            return;
        }
        for (size_t v : edges[u]) walk(v, left - 1);
    };
    walk(static_cast<size_t>(i - 1), m);
    return count;
}

struct HamSongReport {
    size_t n = 0;
    Int lhs;                // 1 + sum_v (deg_out(v) - 1)
    Int edge_count;         // |E(Gamma_A)|
    Int chain_rhs;          // |E| - (n - 1)
    Int min_row_sum_power;  // smallest row sum of A^n
    bool holds = false;     // integer verdict
    AlgebraicInterval lambda;
    Rat lambda_pow_lo, lambda_pow_hi;
    bool float_holds = false;
};

inline HamSongReport ham_song_check(const PFMatrix& m, const Rat& tol = Rat(1, 1000000000)) {
    auto g = adjacency_graph(m.a);
    HamSongReport r;
    r.n = m.n();
    r.lhs = 1;
    for (const auto& d : g.deg_out) r.lhs += d - 1;
    r.edge_count = g.edge_count;
    r.chain_rhs = g.edge_count - Int(r.n - 1);
    Matrix p = matrix_power(m.a, static_cast<unsigned>(r.n));
    r.min_row_sum_power = row_sum_bounds(p).first;
    r.holds = r.lhs == r.chain_rhs && r.min_row_sum_power >= r.chain_rhs;
    r.lambda = spectral_radius(m, tol);
    r.lambda_pow_lo = pow_rat(r.lambda.lo, static_cast<unsigned>(r.n));
    r.lambda_pow_hi = pow_rat(r.lambda.hi, static_cast<unsigned>(r.n));
    r.float_holds = r.lambda_pow_hi >= Rat(r.lhs);
    return r;
}

/// Seeded rejection sampler for primitive matrices with n in [1, max_n].
inline Matrix random_primitive(std::mt19937_64& rng, size_t max_n, unsigned max_entry,
                               size_t min_n = 1) {
    std::uniform_int_distribution<size_t> dim(min_n, max_n);
    std::uniform_int_distribution<unsigned> entry(0, max_entry);
    for (;;) {
        size_t n = dim(rng);
        Matrix a(n, std::vector<Int>(n));
        for (auto& row : a)
            for (auto& v : row) v = entry(rng);
        if (is_perron_frobenius(a).primitive) return a;
    }
}

inline std::string matrix_to_string(const Matrix& a) {
    std::ostringstream out;
    out << "[";
    for (size_t i = 0; i < a.size(); ++i) {
        out << (i ? "," : "") << "[";
        for (size_t j = 0; j < a[i].size(); ++j) out << (j ? "," : "") << a[i][j];
        out << "]";
    }
    out << "]";
    return out.str();
}

}  // namespace smalldil
