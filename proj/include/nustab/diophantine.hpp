#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "nustab/rate_function.hpp"

namespace nustab {

// Damping location accepted in three forms: exact rational p/q, exact
// quadratic surd (a + b*sqrt(d))/c, or a decimal string whose precision is
// the number of digits given.  Arithmetic routes differ per form: rationals
// use the Euclidean algorithm, surds the exact integer PQa recursion, and
// decimals an interval Gauss map that certifies each quotient or stops.
struct Xi0 {
    enum class Kind { rational, quadratic, decimal };
    Kind kind = Kind::rational;

    // rational: a / c.  quadratic: (a + b*sqrt(d)) / c, c > 0, d not a square.
    long long a = 0, b = 0, c = 1, d = 0;

    // decimal: value = dec_num / 10^dec_digits, known to +-1 in the last digit.
    boost::multiprecision::cpp_int dec_num;
    int dec_digits = 0;

    double value() const;
    // Two-term extended-precision expansion, hi + lo accurate to ~1e-38.
    void two_term(long double& hi, long double& lo) const;
};

// Grammar: "p/q" | "0.ddd..." | surd expressions like "(sqrt5-1)/2",
// "sqrt2-1", "(3-sqrt5)/2", with an optional "k*" coefficient on the sqrt.
// The value must lie strictly inside (0,1).
Xi0 parse_xi0(const std::string& text);

struct ContinuedFraction {
    std::vector<long long> quotients; // a0 (= 0 here); a1, a2, ...
    bool terminated = false;          // rational input: expansion is complete
    // Number of partial quotients after a0.
    int depth() const { return static_cast<int>(quotients.size()) - 1; }
};

// Certified prefix of the expansion, at most max_depth quotients.  Decimal
// inputs stop early where the two interval endpoints disagree on a quotient.
ContinuedFraction cf_prefix(const Xi0& xi, int max_depth);

// Same, but demands the full depth: throws PrecisionExhausted (naming the
// certified prefix) if the input precision cannot support it.
ContinuedFraction continued_fraction(const Xi0& xi, int depth);

struct Convergent {
    boost::multiprecision::cpp_int p, q;
};

std::vector<Convergent> convergents(const ContinuedFraction& cf);

// p_k q_{k-1} - p_{k-1} q_k = (-1)^{k-1}, exactly, at every depth.
bool determinant_identity(const std::vector<Convergent>& cs);

struct ApproxStats {
    long long n_max = 0;
    // Liminf estimator: min of n*dist(n*xi0, Z) over n in (n_max/2, n_max].
    double c_est = 0.0;
    long long argmin = 0;
    // Full-range minimum over 1 <= n <= n_max; valid for every n in the
    // sine-bound chain.
    double c_min_full = 0.0;
    long long argmin_full = 0;
};

ApproxStats brute_force_stats(const Xi0& xi, long long n_max);
// Reference loop without worker parallelism; must match brute_force_stats
// exactly.
ApproxStats brute_force_stats_serial(const Xi0& xi, long long n_max);

struct ConstantTypeReport {
    ApproxStats stats;
    long long max_quotient = 0;
    int quotient_depth = 0;      // certified quotients examined (a1..)
    bool bounded_quotients = false;
    bool rational = false;
};

// Brute-force stats plus the max partial quotient over the certified prefix;
// bounded_quotients = (max quotient < bounded_threshold).
ConstantTypeReport constant_type_check(const Xi0& xi, long long n_max,
                                       int depth = 20,
                                       long long bounded_threshold = 10);

// 2*sqrt(2)*c_est/n, the constant-type lower bound for |sqrt2 sin(n pi xi0)|.
double sine_coupling_lower_bound(const ApproxStats& stats, long long n);

// Resolvent growth implied by the coupling bound: M(s) = s^2/(4 c_est^2 pi^2).
RateFunction implied_pointwise_rate(const ApproxStats& stats);

// Almost-every-location branch: 2*sqrt(2)/(n*log(n)^{1+eps}) for n >= 2.
// Reported as-is; nothing certifies that a specific xi0 lies in the full
// measure set, so this is a reference value, not a proven bound.
double log_branch_bound(long long n, double eps = 0.1);

std::string to_json(const ContinuedFraction& cf);
std::string to_json(const ApproxStats& stats);
std::string to_json(const ConstantTypeReport& rep);

} // namespace nustab
