#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <optional>
#include <vector>

#include "nustab/errors.hpp"
#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"
#include "nustab/rate_function.hpp"
#include "nustab/resolvent.hpp"

using namespace nustab;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModalSystem wave(WeakProfile profile, int n, double xi0 = 0.0) {
    SystemSpec spec;
    spec.kind = SystemKind::wave1d;
    WeakDamping w;
    w.profile = profile;
    w.xi0 = xi0;
    spec.damping = w;
    spec.truncation = n;
    return build_modal_system(spec);
}

} // namespace

TEST_CASE("closed forms evaluate and report their parameters") {
    RateFunction p = RateFunction::power(3.0, 2.0);
    CHECK(p(2.0) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(p.param_c() == 3.0);
    CHECK(p.param_a() == 2.0);
    CHECK(p.closed_form());
    CHECK(p.non_decreasing());

    RateFunction pl = RateFunction::power_log(2.0, 1.0, 1.0);
    CHECK(pl(5.0) == doctest::Approx(10.0 * std::log(7.0)).epsilon(1e-14));

    RateFunction sh = RateFunction::shifted_power(1.0, 3.0);
    CHECK(sh(1.0) == doctest::Approx(8.0).epsilon(1e-15));
}

TEST_CASE("tabulated rate interpolates and takes the lower value at a jump") {
    RateFunction m = RateFunction::tabulated({0.0, 1.0, 1.0, 2.0},
                                             {1.0, 1.0, 5.0, 5.0});
    CHECK(m(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m(1.0) == doctest::Approx(1.0).epsilon(1e-15)); // left limit at the jump
    CHECK(m(1.5) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(m.non_decreasing());
    CHECK_FALSE(m.closed_form());
    CHECK(m.domain_start() == 0.0);
    CHECK(m.domain_end() == 2.0);
}

TEST_CASE("monotone envelope is the running maximum") {
    RateFunction m = RateFunction::tabulated({0.0, 1.0, 2.0, 3.0},
                                             {2.0, 1.0, 4.0, 3.0});
    CHECK_FALSE(m.non_decreasing());
    RateFunction env = m.monotone_envelope();
    CHECK(env.non_decreasing());
    CHECK(env(0.0) == 2.0);
    CHECK(env(1.0) == 2.0);
    CHECK(env(2.0) == 4.0);
    CHECK(env(3.0) == 4.0);
}

TEST_CASE("scale_rate multiplies pointwise") {
    RateFunction m = RateFunction::power(1.0, 2.0);
    RateFunction k = scale_rate(m, 4.0);
    CHECK(k(3.0) == doctest::Approx(36.0).epsilon(1e-15));
    CHECK(k.form() == RateFunction::Form::power);
}

TEST_CASE("sup-inverse honors its defining contract") {
    // M(s) = s^2: the inverse of t is sqrt(t).
    InverseRate inv = invert_rate(RateFunction::power(1.0, 2.0));
    CHECK(inv(100.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(inv(2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    // Step function: M = 1 on [0,1], then 5 on (1,2].  Values between the
    // two levels invert to the jump location.
    InverseRate step = invert_rate(RateFunction::tabulated(
        {0.0, 1.0, 1.0, 2.0}, {1.0, 1.0, 5.0, 5.0}));
    CHECK(step(3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(step(1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(step(7.0) == doctest::Approx(2.0).epsilon(1e-15)); // clamped at the end
    CHECK_THROWS_AS(step(0.5), DomainError);

    // Non-monotone input is inverted through its envelope.
    InverseRate env_inv = invert_rate(RateFunction::tabulated(
        {0.0, 1.0, 2.0}, {2.0, 1.0, 4.0}));
    CHECK(env_inv(2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sup-inverse contract holds on a sample sweep") {
    // For every t in range: M(inv(t)) <= t (+eps) and inv(M(s)) >= s.
    for (const RateFunction& m :
         {RateFunction::power(2.0, 3.0), RateFunction::power_log(1.0, 2.0, 1.0)}) {
        InverseRate inv = invert_rate(m);
        for (double t : {1.0, 3.0, 10.0, 500.0, 1e6}) {
            const double s = inv(t);
            CHECK(m(s) <= t * (1.0 + 1e-9));
        }
        for (double s : {0.5, 2.0, 30.0}) {
            CHECK(inv(m(s)) >= s * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("positive increase certificate: powers yes, bare logs no") {
    auto cert = check_positive_increase(RateFunction::power(1.0, 2.0));
    REQUIRE(cert.has_value());
    CHECK(cert->alpha == doctest::Approx(2.0).epsilon(0.01));
    CHECK(cert->c_alpha > 0.5);
    CHECK(cert->c_alpha <= 1.0 + 1e-9);

    auto logcert = check_positive_increase(RateFunction::power_log(1.0, 0.0, 1.0));
    CHECK_FALSE(logcert.has_value());

    auto slog = check_positive_increase(RateFunction::power_log(1.0, 1.0, 1.0));
    REQUIRE(slog.has_value());
    CHECK(slog->alpha >= 0.99);
    CHECK(slog->alpha <= 1.01);
}

TEST_CASE("decay prediction is the reciprocal sup-inverse") {
    RateFunction m = RateFunction::power(1.0, 6.0);
    DecayPrediction pred = predict_decay(m, check_positive_increase(m));
    CHECK(pred.has_certificate);
    // M(s) = s^6 predicts decay t^{-1/6}.
    CHECK(pred(64.0) == doctest::Approx(std::pow(64.0, -1.0 / 6.0)).epsilon(1e-10));
    CHECK(pred(1e6) == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("pseudoinverse bounds: linear profile mode 1 gives pi^2") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 8);
    PseudoinverseSeries ser = pseudoinverse_lower_bounds(ms);
    REQUIRE(ser.entries.size() == 8);
    CHECK(ser.undamped_modes.empty());
    const PseudoinverseEntry& e1 = ser.entries.front();
    CHECK(e1.n == 1);
    CHECK(e1.lambda == doctest::Approx(kPi).epsilon(1e-15));
    // Projection of the damping on the mode-1 eigenpair: b_1^2/2 = 1/pi^2.
    CHECK(e1.bs_norm_sq == doctest::Approx(1.0 / (kPi * kPi)).epsilon(1e-12));
    CHECK(e1.lower_bound == doctest::Approx(kPi * kPi).epsilon(1e-12));
}

TEST_CASE("pseudoinverse bounds: fractional damping gives 2 lambda^{2 alpha}") {
    SystemSpec spec;
    spec.damping = FractionalDamping{0.25};
    spec.truncation = 6;
    ModalSystem ms = build_modal_system(spec);
    PseudoinverseSeries ser = pseudoinverse_lower_bounds(ms);
    for (const PseudoinverseEntry& e : ser.entries)
        CHECK(e.lower_bound ==
              doctest::Approx(2.0 * std::pow(e.lambda, 0.5)).epsilon(1e-10));
}

TEST_CASE("pseudoinverse flags undamped modes at rational points") {
    SystemSpec spec;
    spec.damping = PointwiseDamping{1.0 / 3.0};
    spec.truncation = 9;
    ModalSystem ms = build_modal_system(spec);
    PseudoinverseSeries ser = pseudoinverse_lower_bounds(ms);
    REQUIRE(ser.undamped_modes.size() == 3);
    CHECK(ser.undamped_modes[0] == 3);
    CHECK(ser.undamped_modes[1] == 6);
    CHECK(ser.undamped_modes[2] == 9);
}

TEST_CASE("pseudoinverse bounds stay below measured peaks") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 24);
    DampedGenerator dg = assemble_damped(ms);
    PeakSeries ps = peak_series(dg, ms, 1, 12, ResolventMethod::rank_one);
    PseudoinverseSeries ser = pseudoinverse_lower_bounds(ms);
    for (int n = 1; n <= 12; ++n) {
        const double bound = ser.entries[n - 1].lower_bound;
        const double peak = ps.peaks[n - 1].peak_norm;
        CHECK(bound <= peak * 1.05);
    }
}

TEST_CASE("eigenvalue asymptotics track the first-order prediction") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 40);
    DampedGenerator dg = assemble_damped(ms);
    AsymptoticsTable tab = eigenvalue_asymptotics_check(dg, ms, 10, 20);
    REQUIRE(tab.rows.size() == 11);
    double prev = 1e300;
    for (const AsymptoticsRow& r : tab.rows) {
        CHECK_FALSE(r.ambiguous);
        CHECK(r.deviation < 0.1);
        prev = r.deviation;
    }
    // Deviation shrinks with frequency: compare window ends.
    CHECK(tab.rows.back().deviation < tab.rows.front().deviation);
}

TEST_CASE("optimality proxy is flat when the rate matches") {
    RateFunction m0 = RateFunction::power(1.0, 2.0);
    std::vector<double> t, tr;
    for (int i = 0; i <= 50; ++i) {
        const double ti = 10.0 + 4.0 * i;
        t.push_back(ti);
        tr.push_back(0.7 / std::sqrt(ti)); // exactly c * M0^{-1}(t)^{-1}
    }
    OptimalityProxy proxy = optimality_limsup(t, tr, m0);
    CHECK(proxy.spread == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(proxy.max_value == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(proxy.window_start >= t.front());

    // A trace decaying faster than predicted drives the proxy down.
    std::vector<double> fast;
    for (double ti : t) fast.push_back(1.0 / (ti * ti));
    OptimalityProxy down = optimality_limsup(t, fast, m0);
    // value = t^{-3/2}: spread (210/110)^{3/2} over the second half window
    CHECK(down.spread > 2.0);
}
