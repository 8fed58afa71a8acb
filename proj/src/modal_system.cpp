#include "nustab/modal_system.hpp"

#include <algorithm>
#include <cmath>

#include "nustab/errors.hpp"

namespace nustab {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kSqrt2 = 1.41421356237309504880168872420969808;

// 8-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr double kGlNode[8] = {
    -0.96028985649753623168356086856947299, -0.79666647741362673959155393647583044,
    -0.52553240991632898581773904918924635, -0.18343464249564980493947614236018398,
    0.18343464249564980493947614236018398,  0.52553240991632898581773904918924635,
    0.79666647741362673959155393647583044,  0.96028985649753623168356086856947299};
constexpr double kGlWeight[8] = {
    0.10122853629037625915253135430996219, 0.22238103445337447054435599442624088,
    0.31370664587788728733796220198660131, 0.36268378337836198296515044927719561,
    0.36268378337836198296515044927719561, 0.31370664587788728733796220198660131,
    0.22238103445337447054435599442624088, 0.10122853629037625915253135430996219};

double lerp_table(const std::vector<std::pair<double, double>>& tab, double x) {
    if (x <= tab.front().first) return tab.front().second;
    if (x >= tab.back().first) return tab.back().second;
    auto it = std::upper_bound(
        tab.begin(), tab.end(), x,
        [](double v, const std::pair<double, double>& p) { return v < p.first; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double w = (x - lo.first) / (hi.first - lo.first);
    return lo.second + w * (hi.second - lo.second);
}

// integral over [0,1] of b(xi) * sqrt(2) sin(n pi xi), with panel edges at the
// table breakpoints so the piecewise-linear interpolant has no interior kinks
// inside any panel.
double tabulated_coupling(const std::vector<std::pair<double, double>>& tab, int n) {
    std::vector<double> edges;
    edges.push_back(0.0);
    for (const auto& p : tab)
        if (p.first > 0.0 && p.first < 1.0) edges.push_back(p.first);
    edges.push_back(1.0);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const double hmax = 1.0 / (2.0 * n); // panel count grows with n
    double acc = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double a = edges[e], b = edges[e + 1];
        const int sub = std::max(1, static_cast<int>(std::ceil((b - a) / hmax)));
        const double h = (b - a) / sub;
        for (int s = 0; s < sub; ++s) {
            const double lo = a + s * h;
            const double mid = lo + 0.5 * h;
            double panel = 0.0;
            for (int q = 0; q < 8; ++q) {
                const double x = mid + 0.5 * h * kGlNode[q];
                panel += kGlWeight[q] * lerp_table(tab, x) * std::sin(n * kPi * x);
            }
            acc += panel * 0.5 * h;
        }
    }
    return kSqrt2 * acc;
}

void validate(const SystemSpec& spec) {
    if (spec.truncation < 2)
        throw InsufficientModes("truncation must be at least 2 modes");
    if (const auto* w = std::get_if<WeakDamping>(&spec.damping)) {
        if (w->profile == WeakProfile::indicator &&
            !(w->xi0 > 0.0 && w->xi0 < 1.0))
            throw ConfigError("indicator damping needs xi0 in (0,1)");
        if (w->profile == WeakProfile::tabulated) {
            if (w->samples.size() < 2)
                throw ConfigError("tabulated damping needs at least 2 samples");
            for (std::size_t i = 0; i < w->samples.size(); ++i) {
                const double x = w->samples[i].first;
                if (x < 0.0 || x > 1.0)
                    throw ConfigError("tabulated sample abscissae must lie in [0,1]");
                if (i && !(x > w->samples[i - 1].first))
                    throw ConfigError("tabulated sample abscissae must increase");
            }
        }
    } else if (const auto* p = std::get_if<PointwiseDamping>(&spec.damping)) {
        if (!(p->xi0 > 0.0 && p->xi0 < 1.0))
            throw ConfigError("pointwise damping needs xi0 in (0,1)");
    } else if (const auto* f = std::get_if<FractionalDamping>(&spec.damping)) {
        if (!(f->alpha > 0.0 && f->alpha <= 1.0))
            throw ConfigError("fractional damping needs alpha in (0,1]");
    }
}

} // namespace

double mode_frequency(SystemKind kind, int n) {
    if (n < 1) throw DataError("mode index must be >= 1");
    const double np = n * kPi;
    return kind == SystemKind::wave1d ? np : np * np;
}

double coupling_coefficient(const SystemSpec& spec, int n) {
    validate(spec);
    if (n < 1 || n > spec.truncation)
        throw DataError("coupling_coefficient: mode index out of range");
    if (const auto* w = std::get_if<WeakDamping>(&spec.damping)) {
        const double np = n * kPi;
        switch (w->profile) {
            case WeakProfile::one_minus_xi:
                return kSqrt2 / np;
            case WeakProfile::xi2_one_minus_xi:
                // 2 sqrt(2) (2(-1)^n - 1) / (n pi)^3: cubic-decay coupling with
                // a 9:1 alternating weight between odd and even modes.
                return 2.0 * kSqrt2 * (2.0 * ((n % 2 == 0) ? 1.0 : -1.0) - 1.0) /
                       (np * np * np);
            case WeakProfile::indicator:
                return kSqrt2 * (1.0 - std::cos(np * w->xi0)) / np;
            case WeakProfile::tabulated:
                return tabulated_coupling(w->samples, n);
        }
        throw DataError("unreachable damping profile");
    }
    if (const auto* p = std::get_if<PointwiseDamping>(&spec.damping)) {
        // sqrt(2) sin(n pi xi0), reduced as sin(pi(k+r)) = (-1)^k sin(pi r)
        // so actuator locations with n*xi0 integral silence mode n exactly.
        const double m = n * p->xi0;
        const double k = std::nearbyint(m);
        const double r = m - k;
        const double sgn = std::fmod(std::abs(k), 2.0) == 0.0 ? 1.0 : -1.0;
        return kSqrt2 * sgn * std::sin(kPi * r);
    }
    const auto& f = std::get<FractionalDamping>(spec.damping);
    return std::pow(mode_frequency(spec.kind, n), -f.alpha);
}

ModalSystem build_modal_system(const SystemSpec& spec) {
    validate(spec);
    ModalSystem ms;
    ms.kind = spec.kind;
    ms.damping_kind = std::holds_alternative<FractionalDamping>(spec.damping)
                          ? DampingKind::diagonal
                          : DampingKind::rank_one;
    ms.modes.reserve(static_cast<std::size_t>(spec.truncation));
    for (int n = 1; n <= spec.truncation; ++n)
        ms.modes.push_back(
            {n, mode_frequency(spec.kind, n), coupling_coefficient(spec, n)});
    ms.spectral_gap = spectral_gap(ms);
    return ms;
}

double spectral_gap(const ModalSystem& ms) {
    if (ms.size() < 2) throw InsufficientModes("spectral_gap needs >= 2 modes");
    double gap = ms.modes[1].frequency - ms.modes[0].frequency;
    for (std::size_t i = 2; i < ms.modes.size(); ++i)
        gap = std::min(gap, ms.modes[i].frequency - ms.modes[i - 1].frequency);
    if (!(gap > 0.0)) throw DataError("frequencies must be strictly increasing");
    return gap;
}

std::string to_string(SystemKind k) {
    return k == SystemKind::wave1d ? "wave1d" : "beam1d";
}

} // namespace nustab
