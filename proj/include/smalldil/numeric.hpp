#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace smalldil {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Malformed or inconsistent input. Maps to CLI exit code 1.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A theorem-backed bound or structural invariant failed. Exit code 2.
struct invariant_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The operation declines the input (non-primitive matrix, missing P, ...).
struct refusal : validation_error {
    using validation_error::validation_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Rat rat(long long num, long long den = 1) { return Rat(Int(num), Int(den)); }

inline Int numer(const Rat& r) { return boost::multiprecision::numerator(r); }
inline Int denom(const Rat& r) { return boost::multiprecision::denominator(r); }

inline double to_double(const Rat& r) { return r.convert_to<double>(); }
inline double to_double(const Int& r) { return r.convert_to<double>(); }

inline std::string to_string(const Int& v) { return v.str(); }

inline std::string to_string(const Rat& r) {
    if (denom(r) == 1) return numer(r).str();
    return numer(r).str() + "/" + denom(r).str();
}

inline Int floor_div(const Int& a, const Int& b) {
    Int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
    return q;
}

inline Int ceil_rat(const Rat& r) { return -floor_div(-numer(r), denom(r)); }
inline Int floor_rat(const Rat& r) { return floor_div(numer(r), denom(r)); }

inline Rat pow_rat(const Rat& base, unsigned e) {
    Rat r = 1;
    for (unsigned i = 0; i < e; ++i) r *= base;
    return r;
}

inline Int pow_int(const Int& base, unsigned e) {
    Int r = 1;
    for (unsigned i = 0; i < e; ++i) r *= base;
    return r;
}

/// Parses "3", "-2/7", "1.25", "1e-6", "2.5E3" into an exact rational.
inline Rat parse_rational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    if (s.empty()) throw validation_error("empty rational literal");
    auto slash = s.find('/');
    try {
        if (slash != std::string::npos) {
            Int n(s.substr(0, slash));
            Int d(s.substr(slash + 1));
            if (d == 0) throw validation_error("zero denominator in '" + text + "'");
            return Rat(n, d);
        }
        long exp10 = 0;
        auto epos = s.find_first_of("eE");
        std::string mant = s;
        if (epos != std::string::npos) {
            exp10 = std::stol(s.substr(epos + 1));
            mant = s.substr(0, epos);
        }
        bool neg = false;
        if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
            neg = mant[0] == '-';
            mant = mant.substr(1);
        }
        auto dot = mant.find('.');
        std::string digits = mant;
        if (dot != std::string::npos) {
            digits = mant.substr(0, dot) + mant.substr(dot + 1);
            exp10 -= static_cast<long>(mant.size() - dot - 1);
        }
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw validation_error("bad rational literal '" + text + "'");
        Rat v{Int(digits)};
        Rat ten(10);
        if (exp10 > 0) v *= pow_rat(ten, static_cast<unsigned>(exp10));
        if (exp10 < 0) v /= pow_rat(ten, static_cast<unsigned>(-exp10));
        return neg ? -v : v;
    } catch (const validation_error&) {
        throw;
    } catch (const std::exception&) {
        throw validation_error("bad rational literal '" + text + "'");
    }
}

/// Exact rational for a double via its shortest round-trip decimal form.
inline Rat rational_from_double(double x) {
    if (!std::isfinite(x)) throw validation_error("non-finite number");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 17; ++prec) {
        char tmp[64];
        std::snprintf(tmp, sizeof tmp, "%.*g", prec, x);
        if (std::strtod(tmp, nullptr) == x) return parse_rational(tmp);
    }
    return parse_rational(buf);
}

/// Decimal rendering with a fixed number of digits after the point (truncated toward -inf).
inline std::string to_decimal(const Rat& r, int digits) {
    Rat scaled = r * pow_rat(Rat(10), static_cast<unsigned>(digits));
    Int q = floor_rat(scaled);
    bool neg = q < 0;
    if (neg) q = -q;
    std::string s = q.str();
    if (digits > 0) {
        while (static_cast<int>(s.size()) <= digits) s = "0" + s;
        s.insert(s.size() - static_cast<size_t>(digits), ".");
    }
    return neg ? "-" + s : s;
}

inline bool exact_mode_forced() {
    const char* v = std::getenv("SMALLDIL_EXACT");
    return v && std::string(v) == "1";
}

}  // namespace smalldil
