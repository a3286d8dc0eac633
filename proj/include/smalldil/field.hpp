#pragma once

#include "numeric.hpp"
#include "pf_core.hpp"
#include "poly.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>

namespace smalldil {

/// Q(lambda) for a real algebraic lambda, held as a squarefree polynomial with lambda as its
/// only root in (lo, hi]. Elements are polynomials in lambda. The modulus shrinks to a proper
/// factor whenever a zero divisor turns up, so it converges towards the minimal polynomial.
class RealField {
public:
    RealField(Poly modulus, Rat lo, Rat hi) : mod_(monic(std::move(modulus))), lo_(std::move(lo)), hi_(std::move(hi)) {
        if (mod_.degree() < 1) throw validation_error("field modulus must have positive degree");
        reset_chain();
        if (count_roots(chain_, lo_, hi_) != 1) throw numeric_error("interval does not isolate a single root");
        if (mod_.eval(hi_) == 0) collapse_to(hi_);
        update_approx();
        for (int i = 0; i < 60 && mod_.degree() > 1; ++i) refine();
    }

    /// The Perron-Frobenius root of a primitive matrix.
    static std::shared_ptr<RealField> perron(const Matrix& a) {
        PFRootIsolator iso(a);
        while (iso.lo() != iso.hi() &&
               (count_roots(iso.chain(), iso.lo(), iso.hi()) != 1 || !iso.isolation_verified()))
            iso.bisect();
        if (iso.lo() == iso.hi()) return std::make_shared<RealField>(Poly({-iso.lo(), Rat(1)}), iso.lo() - 1, iso.lo());
        return std::make_shared<RealField>(iso.squarefree(), iso.lo(), iso.hi());
    }

    const Poly& modulus() const { return mod_; }
    const Rat& lo() const { return lo_; }
    const Rat& hi() const { return hi_; }
    double approx() const { return approx_; }
    long exact_decisions() const { return exact_decisions_; }

    Poly reduce(const Poly& g) const {
        if (g.degree() < mod_.degree()) return g;
        return divmod(g, mod_).second;
    }

    double value(const Poly& g) const {
        double r = 0;
        for (size_t i = g.c.size(); i-- > 0;) r = r * approx_ + to_double(g.c[i]);
        return r;
    }

    /// Sign of g(lambda). Floating point decides when it is far from zero; otherwise exact.
    int sign(const Poly& g0) {
        Poly g = reduce(g0);
        if (g.is_zero()) return 0;
        if (g.degree() == 0) return sign_of(g.c[0]);
        if (!exact_mode_forced()) {
            double v = value(g), scale = 0;
            for (size_t i = g.c.size(); i-- > 0;) scale = scale * std::max(1.0, approx_) + std::fabs(to_double(g.c[i]));
            if (std::fabs(v) > 1e-9 * scale) return v > 0 ? 1 : -1;
        }
        ++exact_decisions_;
        return exact_sign(g);
    }

    Poly inverse(const Poly& g0) {
        Poly g = reduce(g0);
        if (exact_sign(g) == 0) throw numeric_error("division by zero in Q(lambda)");
        auto [d, s, t] = ext_gcd(g, mod_);
        if (d.degree() != 0) throw numeric_error("inverse: element is a zero divisor");
        return reduce(s);
    }

    void refine() {
        if (lo_ == hi_) return;
        Rat mid = (lo_ + hi_) / 2;
        if (mod_.eval(mid) == 0) {
            collapse_to(mid);
        } else if (count_roots(chain_, mid, hi_) > 0) {
            lo_ = mid;
        } else {
            hi_ = mid;
        }
        update_approx();
    }

private:
    void reset_chain() { chain_ = sturm_chain(mod_); }
    void update_approx() { approx_ = to_double(mod_.degree() == 1 ? hi_ : (lo_ + hi_) / 2); }

    void collapse_to(const Rat& r) {
        mod_ = Poly({-r, Rat(1)});
        lo_ = r - 1;
        hi_ = r;
        reset_chain();
        update_approx();
    }

    int exact_sign(const Poly& g0) {
        Poly g = reduce(g0);
        if (g.is_zero()) return 0;
        if (mod_.degree() == 1) return sign_of(g.eval(hi_));
        Poly h = gcd(g, mod_);
        if (h.degree() >= 1) {
            if (count_roots(sturm_chain(h), lo_, hi_) > 0) {
                mod_ = h;
                reset_chain();
                if (mod_.degree() == 1) collapse_to(-mod_.c[0]);
                return 0;
            }
            mod_ = monic(divmod(mod_, h).first);
            reset_chain();
            if (mod_.degree() == 1) {
                collapse_to(-mod_.c[0]);
                return sign_of(reduce(g).eval(hi_));
            }
            g = reduce(g);
        }
        while (true) {
            auto [a, b] = eval_interval(g, lo_, hi_);
            if (a > 0) return 1;
            if (b < 0) return -1;
            refine();
            if (lo_ == hi_) return sign_of(g.eval(hi_));
        }
    }

    Poly mod_;
    Rat lo_, hi_;
    std::vector<Poly> chain_;
    double approx_ = 0;
    long exact_decisions_ = 0;
};

/// An element of a RealField.
class FieldNum {
public:
    FieldNum() = default;
    FieldNum(std::shared_ptr<RealField> f, Poly p) : f_(std::move(f)), p_(std::move(p)) {
        if (f_) p_ = f_->reduce(p_);
    }
    static FieldNum constant(std::shared_ptr<RealField> f, const Rat& v) { return FieldNum(std::move(f), Poly::constant(v)); }
    static FieldNum generator(std::shared_ptr<RealField> f) { return FieldNum(std::move(f), Poly({Rat(0), Rat(1)})); }

    const Poly& poly() const { return p_; }
    const std::shared_ptr<RealField>& field() const { return f_; }
    double approx() const { return f_ ? f_->value(f_->reduce(p_)) : 0.0; }
    int sign() const { return f_ ? f_->sign(p_) : 0; }

    friend FieldNum operator+(const FieldNum& a, const FieldNum& b) { return {pick(a, b), a.p_ + b.p_}; }
    friend FieldNum operator-(const FieldNum& a, const FieldNum& b) { return {pick(a, b), a.p_ - b.p_}; }
    friend FieldNum operator*(const FieldNum& a, const FieldNum& b) { return {pick(a, b), a.p_ * b.p_}; }
    friend FieldNum operator/(const FieldNum& a, const FieldNum& b) {
        auto f = pick(a, b);
        return {f, a.p_ * f->inverse(b.p_)};
    }
    FieldNum operator-() const { return {f_, Rat(-1) * p_}; }
    FieldNum& operator+=(const FieldNum& o) { return *this = *this + o; }
    FieldNum& operator-=(const FieldNum& o) { return *this = *this - o; }

    friend int compare(const FieldNum& a, const FieldNum& b) { return (a - b).sign(); }
    friend bool operator==(const FieldNum& a, const FieldNum& b) { return compare(a, b) == 0; }
    friend bool operator<(const FieldNum& a, const FieldNum& b) { return compare(a, b) < 0; }
    friend bool operator>(const FieldNum& a, const FieldNum& b) { return compare(a, b) > 0; }
    friend bool operator<=(const FieldNum& a, const FieldNum& b) { return compare(a, b) <= 0; }
    friend bool operator>=(const FieldNum& a, const FieldNum& b) { return compare(a, b) >= 0; }

    std::string str() const {
        Poly q = f_ ? f_->reduce(p_) : p_;
        if (q.is_zero()) return "0";
        std::string s;
        for (size_t i = q.c.size(); i-- > 0;) {
            if (q.c[i] == 0) continue;
            if (!s.empty()) s += " + ";
            s += "(" + to_string(q.c[i]) + ")";
            if (i > 0) s += i == 1 ? "*L" : "*L^" + std::to_string(i);
        }
        return s;
    }

private:
    static std::shared_ptr<RealField> pick(const FieldNum& a, const FieldNum& b) {
        if (a.f_ && b.f_ && a.f_ != b.f_) throw std::logic_error("mixing elements of different fields");
        return a.f_ ? a.f_ : b.f_;
    }

    std::shared_ptr<RealField> f_;
    Poly p_;
};

}  // namespace smalldil
