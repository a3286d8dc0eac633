#pragma once

#include "numeric.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace smalldil {

/// Univariate polynomial with rational coefficients, lowest degree first.
struct Poly {
    std::vector<Rat> c;

    Poly() = default;
    explicit Poly(std::vector<Rat> coeffs) : c(std::move(coeffs)) { trim(); }
    static Poly constant(const Rat& v) { return Poly({v}); }
    static Poly monomial(const Rat& v, size_t deg) {
        std::vector<Rat> cs(deg + 1);
        cs[deg] = v;
        return Poly(cs);
    }

    void trim() {
        while (!c.empty() && c.back() == 0) c.pop_back();
    }
    bool is_zero() const { return c.empty(); }
    int degree() const { return static_cast<int>(c.size()) - 1; }
    const Rat& lead() const { return c.back(); }
    Rat coeff(size_t i) const { return i < c.size() ? c[i] : Rat(0); }

    Rat eval(const Rat& x) const {
        Rat r = 0;
        for (size_t i = c.size(); i-- > 0;) r = r * x + c[i];
        return r;
    }
    double eval(double x) const {
        double r = 0;
        for (size_t i = c.size(); i-- > 0;) r = r * x + to_double(c[i]);
        return r;
    }

    Poly derivative() const {
        std::vector<Rat> d;
        for (size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<long>(i));
        return Poly(d);
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<Rat> r(std::max(a.c.size(), b.c.size()));
        for (size_t i = 0; i < r.size(); ++i) r[i] = a.coeff(i) + b.coeff(i);
        return Poly(r);
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        std::vector<Rat> r(std::max(a.c.size(), b.c.size()));
        for (size_t i = 0; i < r.size(); ++i) r[i] = a.coeff(i) - b.coeff(i);
        return Poly(r);
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        std::vector<Rat> r(a.c.size() + b.c.size() - 1);
        for (size_t i = 0; i < a.c.size(); ++i)
            for (size_t j = 0; j < b.c.size(); ++j) r[i + j] += a.c[i] * b.c[j];
        return Poly(r);
    }
    friend Poly operator*(const Rat& s, const Poly& a) {
        std::vector<Rat> r = a.c;
        for (auto& x : r) x *= s;
        return Poly(r);
    }
    friend bool operator==(const Poly& a, const Poly& b) { return a.c == b.c; }

    /// Shift: multiply by x^k.
    Poly shifted(size_t k) const {
        if (is_zero()) return *this;
        std::vector<Rat> r(k, Rat(0));
        r.insert(r.end(), c.begin(), c.end());
        return Poly(r);
    }
};

inline std::pair<Poly, Poly> divmod(const Poly& a, const Poly& b) {
    if (b.is_zero()) throw std::domain_error("polynomial division by zero");
    Poly r = a;
    std::vector<Rat> q(std::max(0, a.degree() - b.degree() + 1));
    while (!r.is_zero() && r.degree() >= b.degree()) {
        size_t shift = static_cast<size_t>(r.degree() - b.degree());
        Rat f = r.lead() / b.lead();
        q[shift] = f;
        r = r - Poly::monomial(f, shift) * b;
    }
    return {Poly(q), r};
}

inline Poly monic(const Poly& p) {
    if (p.is_zero()) return p;
    return Rat(1) / p.lead() * p;
}

inline Poly gcd(Poly a, Poly b) {
    while (!b.is_zero()) {
        Poly r = divmod(a, b).second;
        a = std::move(b);
        b = std::move(r);
    }
    return monic(a);
}

/// Extended Euclid: returns (g, s, t) with s*a + t*b = g and g monic.
inline std::tuple<Poly, Poly, Poly> ext_gcd(Poly a, Poly b) {
    Poly s0 = Poly::constant(1), s1, t0, t1 = Poly::constant(1);
    while (!b.is_zero()) {
        auto [q, r] = divmod(a, b);
        Poly s2 = s0 - q * s1, t2 = t0 - q * t1;
        a = std::move(b);
        b = std::move(r);
        s0 = std::move(s1);
        s1 = std::move(s2);
        t0 = std::move(t1);
        t1 = std::move(t2);
    }
    if (a.is_zero()) return {a, s0, t0};
    Rat k = Rat(1) / a.lead();
    return {k * a, k * s0, k * t0};
}

inline Poly squarefree_part(const Poly& p) {
    Poly g = gcd(p, p.derivative());
    if (g.degree() <= 0) return monic(p);
    return monic(divmod(p, g).first);
}

inline int sign_of(const Rat& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }

/// Sturm chain of a squarefree polynomial.
inline std::vector<Poly> sturm_chain(const Poly& p) {
    std::vector<Poly> chain{p, p.derivative()};
    while (!chain.back().is_zero()) {
        Poly r = divmod(chain[chain.size() - 2], chain.back()).second;
        if (r.is_zero()) break;
        chain.push_back(Rat(-1) * r);
    }
    return chain;
}

inline int sign_variations(const std::vector<Poly>& chain, const Rat& x) {
    int count = 0, last = 0;
    for (const auto& q : chain) {
        int s = sign_of(q.eval(x));
        if (s == 0) continue;
        if (last != 0 && s != last) ++count;
        last = s;
    }
    return count;
}

/// Number of distinct real roots in (a, b] of the squarefree polynomial behind `chain`.
inline int count_roots(const std::vector<Poly>& chain, const Rat& a, const Rat& b) {
    return sign_variations(chain, a) - sign_variations(chain, b);
}

/// Cauchy bound: every complex root has modulus < bound.
inline Rat cauchy_bound(const Poly& p) {
    Rat m = 0;
    for (int i = 0; i < p.degree(); ++i) {
        Rat v = p.c[static_cast<size_t>(i)] / p.lead();
        if (v < 0) v = -v;
        if (v > m) m = v;
    }
    return m + 1;
}

/// Tight enclosure of p over [lo, hi] by interval Horner evaluation.
inline std::pair<Rat, Rat> eval_interval(const Poly& p, const Rat& lo, const Rat& hi) {
    Rat rlo = 0, rhi = 0;
    for (size_t i = p.c.size(); i-- > 0;) {
        Rat a = rlo * lo, b = rlo * hi, c = rhi * lo, d = rhi * hi;
        Rat mn = std::min({a, b, c, d}), mx = std::max({a, b, c, d});
        rlo = mn + p.c[i];
        rhi = mx + p.c[i];
    }
    return {rlo, rhi};
}

}  // namespace smalldil
