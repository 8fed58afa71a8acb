#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cmath>
#include <vector>

#include "nustab/errors.hpp"
#include "nustab/grids.hpp"
#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"
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

TEST_CASE("undamped single block: norm is 1/distance to the frequency") {
    TruncatedGenerator gen;
    gen.lambda = Eigen::VectorXd::Constant(1, kPi);
    RankOneDamping b;
    b.beta = Eigen::VectorXd::Zero(2);
    DampedGenerator dg = assemble_damped(gen, DampingMatrix{b});
    CHECK(resolvent_norm_dense(dg, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
    CHECK(resolvent_norm_dense(dg, 2.0 * kPi) ==
          doctest::Approx(1.0 / kPi).epsilon(1e-12));
    // On the frequency itself the block is singular.
    CHECK_THROWS_AS(resolvent_norm_rankone(gen, b.beta, kPi), UndampedPole);
}

TEST_CASE("dense norms at frozen points match an independent computation") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 2);
    DampedGenerator dg = assemble_damped(ms);
    // Values computed outside this codebase with numpy's SVD.
    CHECK(resolvent_norm_dense(dg, 3.0) ==
          doctest::Approx(5.7782534960962613).epsilon(1e-10));
    CHECK(resolvent_norm_dense(dg, 6.0) ==
          doctest::Approx(3.5338317772929693).epsilon(1e-10));
    CHECK(resolvent_norm_dense(dg, 9.87) ==
          doctest::Approx(0.27875811173911097).epsilon(1e-10));
}

TEST_CASE("structured methods agree with dense to 1e-8") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 20);
    DampedGenerator dg = assemble_damped(ms);
    CHECK(fast_method_for(dg) == ResolventMethod::rank_one);
    for (double s : {0.5, 4.0, 17.3, 40.1, 62.0}) {
        const double dense = resolvent_norm(dg, s, true);
        const double fast = resolvent_norm(dg, s);
        CHECK(std::abs(fast - dense) <= 1e-8 * dense);
    }

    SystemSpec fr;
    fr.damping = FractionalDamping{0.5};
    fr.truncation = 20;
    ModalSystem msf = build_modal_system(fr);
    DampedGenerator dgf = assemble_damped(msf);
    CHECK(fast_method_for(dgf) == ResolventMethod::diagonal);
    for (double s : {0.5, 4.0, 17.3, 40.1}) {
        const double dense = resolvent_norm(dgf, s, true);
        const double fast = resolvent_norm(dgf, s);
        CHECK(std::abs(fast - dense) <= 1e-8 * dense);
    }
}

TEST_CASE("norm is symmetric under s -> -s") {
    ModalSystem ms = wave(WeakProfile::xi2_one_minus_xi, 10);
    DampedGenerator dg = assemble_damped(ms);
    for (double s : {0.7, 3.3, 15.0}) {
        const double plus = resolvent_norm(dg, s);
        const double minus = resolvent_norm(dg, -s);
        CHECK(std::abs(plus - minus) <= 1e-10 * plus);
    }
}

TEST_CASE("default grid avoids resonances and scan rejects disorder") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 8);
    std::vector<double> grid = default_scan_grid(ms);
    REQUIRE(grid.size() > 8);
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);
    DampedGenerator dg = assemble_damped(ms);
    ResolventScan sc = scan(dg, grid, ResolventMethod::rank_one);
    CHECK(sc.size() == grid.size());
    for (double v : sc.norm) CHECK(std::isfinite(v));

    std::vector<double> bad = {1.0, 3.0, 2.0};
    CHECK_THROWS_AS(scan(dg, bad, ResolventMethod::rank_one), DataError);
}

TEST_CASE("midpoint norms for the undamped system hit 2/gap") {
    // Between consecutive wave frequencies the undamped norm is 2/pi.
    TruncatedGenerator gen;
    gen.lambda = Eigen::VectorXd(3);
    gen.lambda << kPi, 2.0 * kPi, 3.0 * kPi;
    RankOneDamping b;
    b.beta = Eigen::VectorXd::Zero(6);
    DampedGenerator dg = assemble_damped(gen, DampingMatrix{b});
    for (double s : {1.5 * kPi, 2.5 * kPi})
        CHECK(resolvent_norm_dense(dg, s) ==
              doctest::Approx(2.0 / kPi).epsilon(1e-12));
}

TEST_CASE("synthetic peak series fits slope exactly 2") {
    PeakSeries ps;
    ps.truncation = 12;
    for (int n = 1; n <= 12; ++n)
        ps.peaks.push_back({n, n * kPi, (n * kPi) * (n * kPi)});
    SlopeFit fit = fit_growth_exponent(ps, 1, 12);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.max_residual < 1e-12);
}

TEST_CASE("peak series grows like s^2 for linear-profile damping") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 24);
    DampedGenerator dg = assemble_damped(ms);
    PeakSeries ps = peak_series(dg, ms, 4, 12, ResolventMethod::rank_one);
    REQUIRE(ps.peaks.size() == 9);
    for (const PeakPoint& p : ps.peaks) {
        CHECK(std::abs(p.s - p.n * kPi) < 0.5);
        CHECK(p.peak_norm > 1.0);
    }
    SlopeFit fit = fit_growth_exponent(ps, 4, 12);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("peak norms scale with the resonance width") {
    // Scaling the coupling by kappa multiplies the peak by ~kappa^-2.
    auto peak1 = [](double kappa) {
        TruncatedGenerator gen;
        gen.lambda = Eigen::VectorXd(2);
        gen.lambda << 5.0 * kPi, 12.0 * kPi;
        RankOneDamping b;
        b.beta = Eigen::VectorXd::Zero(4);
        b.beta(1) = kappa * std::sqrt(2.0) / (5.0 * kPi);
        b.beta(3) = kappa * std::sqrt(2.0) / (12.0 * kPi);
        DampedGenerator dg = assemble_damped(gen, DampingMatrix{b});
        ModalSystem ms;
        ms.modes = {{1, 5.0 * kPi, b.beta(1)}, {2, 12.0 * kPi, b.beta(3)}};
        ms.spectral_gap = 7.0 * kPi;
        PeakSeries ps = peak_series(dg, ms, 1, 1, ResolventMethod::rank_one);
        return ps.peaks.at(0).peak_norm;
    };
    const double lo = peak1(0.25), mid = peak1(1.0), hi = peak1(4.0);
    const double expo_lo = std::log(lo / mid) / std::log(4.0);
    const double expo_hi = std::log(mid / hi) / std::log(4.0);
    CHECK(std::abs(expo_lo - 2.0) < 0.2);
    CHECK(std::abs(expo_hi - 2.0) < 0.2);
}

TEST_CASE("peaks recovered from a dense scan agree with the ladder") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 12);
    DampedGenerator dg = assemble_damped(ms);
    PeakSeries ladder = peak_series(dg, ms, 2, 6, ResolventMethod::rank_one);

    std::vector<double> grid;
    for (int n = 2; n <= 6; ++n) {
        const double lam = n * kPi;
        // half-step shift keeps the exact frequency off the grid
        for (int k = -400; k < 400; ++k)
            grid.push_back(lam + (k + 0.5) * 0.0005);
    }
    ResolventScan sc = scan(dg, grid, ResolventMethod::rank_one);
    PeakSeries coarse = peak_series_from_scan(sc, ms, 2, 6);
    REQUIRE(coarse.peaks.size() == ladder.peaks.size());
    for (std::size_t i = 0; i < coarse.peaks.size(); ++i) {
        CHECK(coarse.peaks[i].n == ladder.peaks[i].n);
        // The dense grid is coarser than the golden refinement.
        CHECK(std::abs(coarse.peaks[i].s - ladder.peaks[i].s) < 0.01);
        CHECK(coarse.peaks[i].peak_norm <= ladder.peaks[i].peak_norm * (1.0 + 1e-6));
        CHECK(coarse.peaks[i].peak_norm >= ladder.peaks[i].peak_norm * 0.5);
    }
}

TEST_CASE("damping-side bounds hold along the default grid") {
    for (const ModalSystem& ms :
         {wave(WeakProfile::one_minus_xi, 16), wave(WeakProfile::indicator, 16, 0.37)}) {
        DampedGenerator dg = assemble_damped(ms);
        std::vector<double> grid = default_scan_grid(ms);
        BoundCheckReport rep =
            verify_resolvent_bounds(dg, grid, ResolventMethod::rank_one);
        CHECK(rep.pass);
        CHECK(rep.worst_bstarb <= 1.0 + 1e-10);
    }
}

TEST_CASE("doubling the truncation does not move interior peaks") {
    SystemSpec spec;
    spec.kind = SystemKind::wave1d;
    spec.damping = WeakDamping{WeakProfile::one_minus_xi, 0.0, {}};
    spec.truncation = 16;
    DoublingCheckReport rep = doubling_convergence_check(spec, 2, 8);
    CHECK(rep.converged);
    CHECK(rep.max_rel_change < 1e-3);
}

TEST_CASE("rank-one path is at least 20x faster than dense at N=400") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 400);
    DampedGenerator dg = assemble_damped(ms);
    const std::vector<double> pts = {100.5, 400.25, 900.125};

    using clk = std::chrono::steady_clock;
    auto t0 = clk::now();
    double acc_fast = 0.0;
    for (double s : pts) acc_fast += resolvent_norm(dg, s);
    auto t1 = clk::now();
    double acc_dense = 0.0;
    for (double s : pts) acc_dense += resolvent_norm(dg, s, true);
    auto t2 = clk::now();

    const double fast_us =
        std::chrono::duration<double, std::micro>(t1 - t0).count();
    const double dense_us =
        std::chrono::duration<double, std::micro>(t2 - t1).count();
    CHECK(acc_fast == doctest::Approx(acc_dense).epsilon(1e-7));
    CHECK(dense_us > 20.0 * fast_us);
}

TEST_CASE("validity window errors carry the offending truncation") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 8);
    DampedGenerator dg = assemble_damped(ms);
    // Peaks beyond the retained window are refused, not extrapolated.
    CHECK_THROWS_AS(peak_series(dg, ms, 1, 20, ResolventMethod::rank_one),
                    ValidityWindow);
}
