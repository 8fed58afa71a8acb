#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "nustab/diophantine.hpp"
#include "nustab/errors.hpp"

using namespace nustab;
using boost::multiprecision::cpp_int;

TEST_CASE("parser accepts the three input forms") {
    Xi0 r = parse_xi0("2/7");
    CHECK(r.kind == Xi0::Kind::rational);
    CHECK(r.value() == doctest::Approx(2.0 / 7.0).epsilon(1e-15));

    Xi0 g = parse_xi0("(sqrt5-1)/2");
    CHECK(g.kind == Xi0::Kind::quadratic);
    CHECK(g.value() == doctest::Approx(0.6180339887498949).epsilon(1e-15));

    Xi0 s = parse_xi0("sqrt2-1");
    CHECK(s.kind == Xi0::Kind::quadratic);
    CHECK(s.value() == doctest::Approx(0.41421356237309505).epsilon(1e-15));

    Xi0 d = parse_xi0("0.61");
    CHECK(d.kind == Xi0::Kind::decimal);
    CHECK(d.dec_digits == 2);
    CHECK(d.value() == doctest::Approx(0.61).epsilon(1e-15));

    Xi0 c = parse_xi0("(3-sqrt5)/2");
    CHECK(c.value() == doctest::Approx(0.3819660112501051).epsilon(1e-15));
}

TEST_CASE("parser rejects values outside the open unit interval") {
    CHECK_THROWS_AS(parse_xi0("3/2"), ConfigError);
    CHECK_THROWS_AS(parse_xi0("0/5"), ConfigError);
    CHECK_THROWS_AS(parse_xi0("(sqrt5+1)/2"), ConfigError);
    CHECK_THROWS_AS(parse_xi0("nonsense"), ConfigError);
}

TEST_CASE("golden ratio expansion is all ones") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    ContinuedFraction cf = continued_fraction(g, 30);
    CHECK_FALSE(cf.terminated);
    CHECK(cf.depth() == 30);
    CHECK(cf.quotients[0] == 0);
    for (int i = 1; i <= 30; ++i) CHECK(cf.quotients[i] == 1);
}

TEST_CASE("2/7 terminates as [0; 3, 2]") {
    ContinuedFraction cf = cf_prefix(parse_xi0("2/7"), 20);
    CHECK(cf.terminated);
    REQUIRE(cf.quotients.size() == 3);
    CHECK(cf.quotients[0] == 0);
    CHECK(cf.quotients[1] == 3);
    CHECK(cf.quotients[2] == 2);
}

TEST_CASE("sqrt2 - 1 repeats the quotient 2") {
    ContinuedFraction cf = continued_fraction(parse_xi0("sqrt2-1"), 25);
    for (int i = 1; i <= 25; ++i) CHECK(cf.quotients[i] == 2);
}

TEST_CASE("decimal intervals certify exactly as far as the digits allow") {
    // 0.61 stands for anything within one unit of the last digit; the
    // interval Gauss map certifies a short prefix only.
    Xi0 d = parse_xi0("0.61");
    ContinuedFraction cf = cf_prefix(d, 10);
    CHECK_FALSE(cf.terminated);
    CHECK(cf.depth() < 10);
    CHECK(cf.quotients[1] == 1); // 1/0.61 = 1.639...
    CHECK_THROWS_AS(continued_fraction(d, 10), PrecisionExhausted);

    // With enough digits the prefix deepens to the requested depth.
    Xi0 longer = parse_xi0("0.6180339887498948482");
    ContinuedFraction cf2 = cf_prefix(longer, 10);
    CHECK(cf2.depth() == 10);
    for (int i = 1; i <= 10; ++i) CHECK(cf2.quotients[i] == 1);
}

TEST_CASE("the liouville-like decimal of e-2 shows a huge quotient early") {
    // e - 2 = 0.71828182845904523536...; its expansion begins
    // [0; 1, 2, 1, 1, 4, 1, 1, 6, ...] with quotients growing linearly.
    Xi0 e2 = parse_xi0("0.71828182845904523536028747135266");
    ContinuedFraction cf = cf_prefix(e2, 20);
    long long biggest = 0;
    for (int i = 1; i < static_cast<int>(cf.quotients.size()); ++i)
        biggest = std::max(biggest, cf.quotients[i]);
    CHECK(biggest >= 10);
}

TEST_CASE("convergents of 2/7 are 1/3 and 2/7") {
    std::vector<Convergent> cs = convergents(cf_prefix(parse_xi0("2/7"), 20));
    REQUIRE(cs.size() == 3); // includes the a0 = 0 convergent 0/1
    CHECK(cs[0].p == 0);
    CHECK(cs[0].q == 1);
    CHECK(cs[1].p == 1);
    CHECK(cs[1].q == 3);
    CHECK(cs[2].p == 2);
    CHECK(cs[2].q == 7);
    CHECK(determinant_identity(cs));
}

TEST_CASE("golden convergent denominators are the fibonacci numbers") {
    std::vector<Convergent> cs =
        convergents(continued_fraction(parse_xi0("(sqrt5-1)/2"), 24));
    cpp_int fib_prev = 1, fib = 1;
    for (std::size_t k = 1; k < cs.size(); ++k) {
        CHECK(cs[k].q == fib);
        const cpp_int next = fib_prev + fib;
        fib_prev = fib;
        fib = next;
    }
    CHECK(determinant_identity(cs));
    // |xi0 - p/q| <= 1/q^2 for every convergent.
    const double x = parse_xi0("(sqrt5-1)/2").value();
    for (const Convergent& c : cs) {
        const double p = c.p.convert_to<double>();
        const double q = c.q.convert_to<double>();
        CHECK(std::abs(x - p / q) <= 1.0 / (q * q) * (1.0 + 1e-12));
    }
}

TEST_CASE("determinant identity detects corruption") {
    std::vector<Convergent> cs =
        convergents(continued_fraction(parse_xi0("(sqrt5-1)/2"), 10));
    CHECK(determinant_identity(cs));
    cs[4].p += 1;
    CHECK_FALSE(determinant_identity(cs));
}

TEST_CASE("golden brute force matches the fibonacci structure") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    ApproxStats st = brute_force_stats(g, 100000);
    // liminf n |n xi - p| = 1/sqrt5 = 0.4472...; over (5e4, 1e5] the minimum
    // sits at the fibonacci number 75025.
    CHECK(st.argmin == 75025);
    CHECK(st.c_est > 0.44);
    CHECK(st.c_est < 0.448);
    // The all-n minimum is attained immediately: 1*dist(0.618..., Z).
    CHECK(st.argmin_full == 1);
    CHECK(st.c_min_full == doctest::Approx(0.3819660112501051).epsilon(1e-9));
}

TEST_CASE("c_est stabilizes under a tenfold range increase") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    const double c4 = brute_force_stats(g, 10000).c_est;
    const double c5 = brute_force_stats(g, 100000).c_est;
    CHECK(std::abs(c5 - c4) <= 1e-3 * c4);
}

TEST_CASE("rational locations have zero approximation constant") {
    ApproxStats st = brute_force_stats(parse_xi0("2/7"), 1000);
    CHECK(st.c_est == 0.0);
    // n = 7 lands exactly on an integer multiple.
    CHECK(st.c_min_full == 0.0);
    CHECK(st.argmin_full == 7);
}

TEST_CASE("serial and parallel brute force agree bitwise") {
    for (const char* text : {"(sqrt5-1)/2", "sqrt2-1", "0.37"}) {
        Xi0 xi = parse_xi0(text);
        ApproxStats a = brute_force_stats(xi, 20000);
        ApproxStats b = brute_force_stats_serial(xi, 20000);
        CHECK(a.c_est == b.c_est);
        CHECK(a.argmin == b.argmin);
        CHECK(a.c_min_full == b.c_min_full);
        CHECK(a.argmin_full == b.argmin_full);
    }
}

TEST_CASE("constant type report separates golden from rational from e-2") {
    ConstantTypeReport gold =
        constant_type_check(parse_xi0("(sqrt5-1)/2"), 10000);
    CHECK(gold.bounded_quotients);
    CHECK(gold.max_quotient == 1);
    CHECK(gold.quotient_depth == 20);
    CHECK_FALSE(gold.rational);

    ConstantTypeReport rat = constant_type_check(parse_xi0("2/7"), 1000);
    CHECK(rat.rational);

    ConstantTypeReport e2 = constant_type_check(
        parse_xi0("0.71828182845904523536028747135266"), 1000);
    CHECK_FALSE(e2.bounded_quotients);
    CHECK(e2.max_quotient >= 10);
}

TEST_CASE("sine couplings respect the constant-type lower bound") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    ApproxStats st = brute_force_stats(g, 10000);
    const double x = g.value();
    for (long long n = 1; n <= 10000; ++n) {
        const double s = std::abs(std::sqrt(2.0) * std::sin(M_PI * n * x));
        CHECK(s >= sine_coupling_lower_bound(st, n) * (1.0 - 1e-9));
    }
    // Worked value at n = 10.
    CHECK(sine_coupling_lower_bound(st, 10) ==
          doctest::Approx(2.0 * std::sqrt(2.0) * st.c_est / 10.0)
              .epsilon(1e-12));
    // Rational locations admit no such bound.
    ApproxStats rat = brute_force_stats(parse_xi0("2/7"), 100);
    CHECK_THROWS_AS(sine_coupling_lower_bound(rat, 5), DomainError);
}

TEST_CASE("implied resolvent growth is quadratic with the measured constant") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    ApproxStats st = brute_force_stats(g, 10000);
    RateFunction m = implied_pointwise_rate(st);
    const double c = st.c_est;
    CHECK(m(7.0) == doctest::Approx(49.0 / (4.0 * c * c * M_PI * M_PI))
                        .epsilon(1e-10));
}

TEST_CASE("log branch reference bound") {
    CHECK(log_branch_bound(10) ==
          doctest::Approx(2.0 * std::sqrt(2.0) /
                          (10.0 * std::pow(std::log(10.0), 1.1)))
              .epsilon(1e-12));
    CHECK_THROWS_AS(log_branch_bound(1), ConfigError);
    CHECK_THROWS_AS(log_branch_bound(10, 0.0), ConfigError);
}

TEST_CASE("reports serialize to JSON with matching keys") {
    Xi0 g = parse_xi0("(sqrt5-1)/2");
    ContinuedFraction cf = continued_fraction(g, 5);
    nlohmann::json jc = nlohmann::json::parse(to_json(cf));
    CHECK(jc.at("quotients").size() == 6);
    CHECK_FALSE(jc.at("terminated").get<bool>());

    ApproxStats st = brute_force_stats(g, 1000);
    nlohmann::json js = nlohmann::json::parse(to_json(st));
    CHECK(js.at("n_max").get<long long>() == 1000);
    CHECK(js.at("c_est").get<double>() == doctest::Approx(st.c_est));

    ConstantTypeReport rep = constant_type_check(g, 1000);
    nlohmann::json jr = nlohmann::json::parse(to_json(rep));
    CHECK(jr.at("bounded_quotients").get<bool>());
}
