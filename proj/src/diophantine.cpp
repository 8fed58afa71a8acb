#include "nustab/diophantine.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

#include "nustab/errors.hpp"

namespace nustab {

namespace mp = boost::multiprecision;
using cpp_int = mp::cpp_int;

namespace {

constexpr long double kPi = 3.14159265358979323846264338327950288L;

long long to_ll(const cpp_int& v) {
    if (v > std::numeric_limits<long long>::max() ||
        v < std::numeric_limits<long long>::min())
        throw DataError("diophantine: quotient exceeds 64-bit range");
    return v.convert_to<long long>();
}

cpp_int floor_div(const cpp_int& a, const cpp_int& b) {
    cpp_int q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

long long isqrt_ll(long long v) {
    if (v < 0) throw ConfigError("parse_xi0: negative radicand");
    long long r = static_cast<long long>(sqrtl(static_cast<long double>(v)));
    while (r > 0 && r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

struct Frac {
    cpp_int num, den; // den > 0
    void reduce() {
        cpp_int g = mp::gcd(num < 0 ? cpp_int(-num) : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
};

std::string format_prefix(const ContinuedFraction& cf) {
    std::ostringstream os;
    os << "[0;";
    for (std::size_t i = 1; i < cf.quotients.size(); ++i) {
        if (i > 1) os << ",";
        os << cf.quotients[i];
    }
    os << "]";
    return os.str();
}

// Exact integer recursion for (P + sqrt(N))/Q; every quotient is certified.
ContinuedFraction pqa_prefix(const Xi0& xi, int max_depth) {
    cpp_int P = xi.a, Q = xi.c;
    cpp_int N = cpp_int(xi.d) * xi.b * xi.b;
    if (xi.b < 0) {
        P = -P;
        Q = -Q;
    }
    if (Q == 0) throw ConfigError("parse_xi0: zero denominator");
    if ((N - P * P) % Q != 0) {
        const cpp_int qa = Q < 0 ? cpp_int(-Q) : Q;
        P *= qa;
        N *= Q * Q;
        Q *= qa;
    }
    const cpp_int s = mp::sqrt(N);
    if (s * s == N)
        throw DomainError("pqa_prefix: radicand is a perfect square");

    ContinuedFraction cf;
    while (static_cast<int>(cf.quotients.size()) <= max_depth) {
        cpp_int ak;
        if (Q > 0)
            ak = floor_div(P + s, Q);
        else
            ak = -(floor_div(P + s, -Q) + 1);
        cf.quotients.push_back(to_ll(ak));
        P = ak * Q - P;
        Q = (N - P * P) / Q;
    }
    return cf;
}

ContinuedFraction rational_prefix(long long p, long long q, int max_depth) {
    ContinuedFraction cf;
    cf.quotients.push_back(0);
    long long u = q, v = p;
    while (v != 0 && cf.depth() < max_depth) {
        const long long a = u / v;
        cf.quotients.push_back(a);
        const long long r = u - a * v;
        u = v;
        v = r;
    }
    cf.terminated = (v == 0);
    return cf;
}

ContinuedFraction decimal_prefix(const cpp_int& num, int digits,
                                 int max_depth) {
    const cpp_int den = mp::pow(cpp_int(10), static_cast<unsigned>(digits));
    Frac lo{num - 1, den}, hi{num + 1, den};
    if (!(lo.num > 0 && hi.num < den))
        throw ConfigError(
            "parse_xi0: decimal value not certifiably inside (0,1)");
    ContinuedFraction cf;
    cf.quotients.push_back(0);
    while (cf.depth() < max_depth) {
        if (lo.num <= 0 || hi.num <= 0) break;
        const cpp_int a_from_hi = hi.den / hi.num; // floor(1/hi), the smaller
        const cpp_int a_from_lo = lo.den / lo.num;
        if (a_from_hi != a_from_lo) break;
        cf.quotients.push_back(to_ll(a_from_hi));
        Frac nlo{hi.den - a_from_hi * hi.num, hi.num};
        Frac nhi{lo.den - a_from_hi * lo.num, lo.num};
        nlo.reduce();
        nhi.reduce();
        lo = nlo;
        hi = nhi;
    }
    return cf;
}

struct TermScan {
    long long a = 0;        // integer part accumulator
    long long b = 0;        // surd coefficient accumulator
    long long d = 0;        // shared radicand, 0 while unset
};

long long parse_ll(const std::string& s, std::size_t& pos) {
    const std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
        ++pos;
    if (pos == start) throw ConfigError("parse_xi0: expected digits");
    try {
        return std::stoll(s.substr(start, pos - start));
    } catch (const std::exception&) {
        throw ConfigError("parse_xi0: integer out of range");
    }
}

void parse_terms(const std::string& s, TermScan& t) {
    std::size_t pos = 0;
    bool first = true;
    while (pos < s.size()) {
        long long sign = 1;
        if (s[pos] == '+' || s[pos] == '-') {
            sign = s[pos] == '-' ? -1 : 1;
            ++pos;
        } else if (!first) {
            throw ConfigError("parse_xi0: expected + or - between terms");
        }
        first = false;
        long long coef = 1;
        bool have_coef = false;
        if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            coef = parse_ll(s, pos);
            have_coef = true;
            if (pos < s.size() && s[pos] == '*') ++pos;
        }
        if (s.compare(pos, 4, "sqrt") == 0) {
            pos += 4;
            bool paren = pos < s.size() && s[pos] == '(';
            if (paren) ++pos;
            const long long rad = parse_ll(s, pos);
            if (paren) {
                if (pos >= s.size() || s[pos] != ')')
                    throw ConfigError("parse_xi0: unbalanced sqrt parenthesis");
                ++pos;
            }
            if (rad <= 0) throw ConfigError("parse_xi0: radicand must be positive");
            const long long r = isqrt_ll(rad);
            if (r * r == rad) {
                t.a += sign * coef * r; // perfect square folds into the integer part
            } else {
                if (t.d != 0 && t.d != rad)
                    throw ConfigError("parse_xi0: mixed radicands");
                t.d = rad;
                t.b += sign * coef;
            }
        } else if (have_coef) {
            t.a += sign * coef;
        } else {
            throw ConfigError("parse_xi0: unrecognized term");
        }
    }
}

} // namespace

Xi0 parse_xi0(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) throw ConfigError("parse_xi0: empty input");

    const bool has_sqrt = s.find("sqrt") != std::string::npos;
    const std::size_t dot = s.find('.');

    if (!has_sqrt && dot != std::string::npos) {
        const std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
        if (!(ip.empty() || ip == "0") || fp.empty())
            throw ConfigError("parse_xi0: decimal must look like 0.ddd");
        for (char ch : fp)
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw ConfigError("parse_xi0: bad decimal digit");
        Xi0 xi;
        xi.kind = Xi0::Kind::decimal;
        xi.dec_num = cpp_int(fp);
        xi.dec_digits = static_cast<int>(fp.size());
        if (xi.dec_num == 0)
            throw ConfigError("parse_xi0: value must lie inside (0,1)");
        return xi;
    }

    if (!has_sqrt) {
        const std::size_t slash = s.find('/');
        if (slash == std::string::npos)
            throw ConfigError("parse_xi0: integers are not inside (0,1)");
        std::size_t pa = 0, pb = 0;
        const std::string left = s.substr(0, slash), right = s.substr(slash + 1);
        long long p = parse_ll(left, pa), q = parse_ll(right, pb);
        if (pa != left.size() || pb != right.size())
            throw ConfigError("parse_xi0: malformed rational");
        if (q <= 0 || p <= 0 || p >= q)
            throw ConfigError("parse_xi0: rational must lie inside (0,1)");
        const long long g = std::gcd(p, q);
        Xi0 xi;
        xi.kind = Xi0::Kind::rational;
        xi.a = p / g;
        xi.c = q / g;
        return xi;
    }

    std::string expr = s;
    long long den = 1;
    if (s.front() == '(') {
        const std::size_t close = s.rfind(')');
        if (close == std::string::npos)
            throw ConfigError("parse_xi0: unbalanced parenthesis");
        expr = s.substr(1, close - 1);
        std::string rest = s.substr(close + 1);
        if (!rest.empty()) {
            if (rest.front() != '/')
                throw ConfigError("parse_xi0: expected /denominator");
            std::size_t pr = 0;
            den = parse_ll(rest.substr(1), pr);
            if (pr != rest.size() - 1)
                throw ConfigError("parse_xi0: malformed denominator");
        }
    } else {
        const std::size_t slash = s.rfind('/');
        if (slash != std::string::npos) {
            std::size_t pr = 0;
            const std::string rest = s.substr(slash + 1);
            den = parse_ll(rest, pr);
            if (pr != rest.size())
                throw ConfigError("parse_xi0: malformed denominator");
            expr = s.substr(0, slash);
        }
    }
    if (den <= 0) throw ConfigError("parse_xi0: denominator must be positive");

    TermScan t;
    parse_terms(expr, t);
    Xi0 xi;
    if (t.b == 0) {
        if (t.a <= 0 || t.a >= den)
            throw ConfigError("parse_xi0: value must lie inside (0,1)");
        const long long g = std::gcd(t.a, den);
        xi.kind = Xi0::Kind::rational;
        xi.a = t.a / g;
        xi.c = den / g;
        return xi;
    }
    xi.kind = Xi0::Kind::quadratic;
    xi.a = t.a;
    xi.b = t.b;
    xi.c = den;
    xi.d = t.d;
    const double v = xi.value();
    if (!(v > 1e-12 && v < 1.0 - 1e-12))
        throw ConfigError("parse_xi0: value must lie strictly inside (0,1)");
    return xi;
}

void Xi0::two_term(long double& hi, long double& lo) const {
    using BF = mp::cpp_bin_float_50;
    BF v;
    switch (kind) {
        case Kind::rational:
            v = BF(a) / BF(c);
            break;
        case Kind::quadratic:
            v = (BF(a) + BF(b) * sqrt(BF(d))) / BF(c);
            break;
        case Kind::decimal:
            v = BF(dec_num) /
                BF(mp::pow(cpp_int(10), static_cast<unsigned>(dec_digits)));
            break;
    }
    hi = v.convert_to<long double>();
    lo = (v - BF(hi)).convert_to<long double>();
}

double Xi0::value() const {
    long double h = 0.0L, l = 0.0L;
    two_term(h, l);
    return static_cast<double>(h + l);
}

ContinuedFraction cf_prefix(const Xi0& xi, int max_depth) {
    if (max_depth < 1) throw ConfigError("cf_prefix: depth must be >= 1");
    switch (xi.kind) {
        case Xi0::Kind::rational:
            return rational_prefix(xi.a, xi.c, max_depth);
        case Xi0::Kind::quadratic:
            return pqa_prefix(xi, max_depth);
        case Xi0::Kind::decimal:
            return decimal_prefix(xi.dec_num, xi.dec_digits, max_depth);
    }
    throw ConfigError("cf_prefix: unknown input kind");
}

ContinuedFraction continued_fraction(const Xi0& xi, int depth) {
    ContinuedFraction cf = cf_prefix(xi, depth);
    if (!cf.terminated && cf.depth() < depth)
        throw PrecisionExhausted(
            "continued_fraction: input precision certifies only " +
            format_prefix(cf));
    return cf;
}

std::vector<Convergent> convergents(const ContinuedFraction& cf) {
    if (cf.quotients.empty())
        throw DataError("convergents: empty continued fraction");
    std::vector<Convergent> out;
    out.reserve(cf.quotients.size());
    cpp_int p_prev = 1, q_prev = 0; // k = -1
    cpp_int p = cf.quotients[0], q = 1;
    out.push_back({p, q});
    for (std::size_t k = 1; k < cf.quotients.size(); ++k) {
        const cpp_int a = cf.quotients[k];
        const cpp_int pn = a * p + p_prev;
        const cpp_int qn = a * q + q_prev;
        p_prev = p;
        q_prev = q;
        p = pn;
        q = qn;
        out.push_back({p, q});
    }
    return out;
}

bool determinant_identity(const std::vector<Convergent>& cs) {
    for (std::size_t k = 1; k < cs.size(); ++k) {
        const cpp_int det = cs[k].p * cs[k - 1].q - cs[k - 1].p * cs[k].q;
        const cpp_int expect = (k % 2 == 1) ? 1 : -1;
        if (det != expect) return false;
    }
    return true;
}

namespace {

struct MinPair {
    long double value = std::numeric_limits<long double>::infinity();
    long long arg = 0;
    void take(long double v, long long n) {
        if (v < value || (v == value && (arg == 0 || n < arg))) {
            value = v;
            arg = n;
        }
    }
    void merge(const MinPair& o) {
        if (o.arg != 0) take(o.value, o.arg);
    }
};

template <bool Parallel>
ApproxStats stats_impl(const Xi0& xi, long long n_max) {
    if (n_max < 1 || n_max > 10'000'000)
        throw ConfigError("brute_force_stats: n_max must be in [1, 1e7]");

    ApproxStats out;
    out.n_max = n_max;

    if (xi.kind == Xi0::Kind::rational && xi.c <= n_max) {
        out.c_est = 0.0;
        out.argmin = xi.c;
        out.c_min_full = 0.0;
        out.argmin_full = xi.c;
        return out;
    }

    long double hi = 0.0L, lo = 0.0L;
    xi.two_term(hi, lo);
    const long long half = n_max / 2;

    MinPair full, tail;
#pragma omp parallel if (Parallel)
    {
        MinPair lfull, ltail;
#pragma omp for schedule(static) nowait
        for (long long n = 1; n <= n_max; ++n) {
            const long double nf = static_cast<long double>(n);
            const long double p = nf * hi;
            const long double e = fmal(nf, hi, -p); // exact product tail
            long double dd = remainderl(p, 1.0L) + (e + nf * lo);
            dd = remainderl(dd, 1.0L);
            long double dist = fabsl(dd);
            if (dist > 0.5L) dist = 1.0L - dist;
            const long double v = dist * nf;
            lfull.take(v, n);
            if (n > half) ltail.take(v, n);
        }
#pragma omp critical(nustab_dio_reduce)
        {
            full.merge(lfull);
            tail.merge(ltail);
        }
    }

    out.c_est = static_cast<double>(tail.value);
    out.argmin = tail.arg;
    out.c_min_full = static_cast<double>(full.value);
    out.argmin_full = full.arg;
    return out;
}

} // namespace

ApproxStats brute_force_stats(const Xi0& xi, long long n_max) {
    return stats_impl<true>(xi, n_max);
}

ApproxStats brute_force_stats_serial(const Xi0& xi, long long n_max) {
    return stats_impl<false>(xi, n_max);
}

ConstantTypeReport constant_type_check(const Xi0& xi, long long n_max,
                                       int depth, long long bounded_threshold) {
    ConstantTypeReport rep;
    rep.stats = brute_force_stats(xi, n_max);
    ContinuedFraction cf = cf_prefix(xi, depth);
    if (!cf.terminated && cf.depth() < depth)
        throw PrecisionExhausted(
            "constant_type_check: input precision certifies only " +
            format_prefix(cf));
    rep.rational = cf.terminated;
    rep.quotient_depth = cf.depth();
    for (std::size_t i = 1; i < cf.quotients.size(); ++i)
        rep.max_quotient = std::max(rep.max_quotient, cf.quotients[i]);
    rep.bounded_quotients =
        !rep.rational && rep.max_quotient < bounded_threshold;
    return rep;
}

double sine_coupling_lower_bound(const ApproxStats& stats, long long n) {
    if (n < 1) throw ConfigError("sine_coupling_lower_bound: n must be >= 1");
    if (!(stats.c_est > 0.0))
        throw DomainError(
            "sine_coupling_lower_bound: rational location admits no bound");
    return 2.0 * std::sqrt(2.0) * stats.c_est / static_cast<double>(n);
}

RateFunction implied_pointwise_rate(const ApproxStats& stats) {
    if (!(stats.c_est > 0.0))
        throw DomainError("implied_pointwise_rate: needs a positive c_est");
    const double pi = static_cast<double>(kPi);
    return RateFunction::power(
        1.0 / (4.0 * stats.c_est * stats.c_est * pi * pi), 2.0);
}

double log_branch_bound(long long n, double eps) {
    if (n < 2) throw ConfigError("log_branch_bound: n must be >= 2");
    if (!(eps > 0.0)) throw ConfigError("log_branch_bound: eps must be positive");
    const double ln = std::log(static_cast<double>(n));
    return 2.0 * std::sqrt(2.0) /
           (static_cast<double>(n) * std::pow(ln, 1.0 + eps));
}

std::string to_json(const ContinuedFraction& cf) {
    nlohmann::json j;
    j["quotients"] = cf.quotients;
    j["depth"] = cf.depth();
    j["terminated"] = cf.terminated;
    return j.dump(2);
}

std::string to_json(const ApproxStats& stats) {
    nlohmann::json j;
    j["n_max"] = stats.n_max;
    j["c_est"] = stats.c_est;
    j["argmin"] = stats.argmin;
    j["c_min_full"] = stats.c_min_full;
    j["argmin_full"] = stats.argmin_full;
    return j.dump(2);
}

std::string to_json(const ConstantTypeReport& rep) {
    nlohmann::json j;
    j["stats"] = nlohmann::json::parse(to_json(rep.stats));
    j["max_quotient"] = rep.max_quotient;
    j["quotient_depth"] = rep.quotient_depth;
    j["bounded_quotients"] = rep.bounded_quotients;
    j["rational"] = rep.rational;
    return j.dump(2);
}

} // namespace nustab
