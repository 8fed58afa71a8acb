#include "nustab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <json.hpp>

#include "nustab/errors.hpp"
#include "nustab/rng.hpp"
#include "nustab/semigroup.hpp"

namespace nustab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double eval_clamped(const RateFunction& m, double s) {
    return m(std::clamp(s, m.domain_start(), m.domain_end()));
}

// Smallest value of m(s) * (1+s)^pow over the domain, estimated on a wide
// log grid; closed forms additionally get their s -> inf limit folded in.
double rate_grid_inf(const RateFunction& m, int pow2) {
    const double lo = m.domain_start();
    const double hi = std::min(m.domain_end(), 1e12);
    const auto weight = [pow2](double s) {
        return pow2 == 0 ? 1.0 : (1.0 + s) * (1.0 + s);
    };
    double best = m(lo) * weight(lo);
    const double glo = std::max(lo, 1e-6);
    const int kPts = 2000;
    for (int i = 0; i <= kPts; ++i) {
        const double s =
            glo * std::pow(hi / glo, static_cast<double>(i) / kPts);
        if (s < lo || s > m.domain_end()) continue;
        best = std::min(best, m(s) * weight(s));
    }
    if (m.closed_form()) {
        const double tail_exp = m.param_a() + 2.0 * pow2;
        if (tail_exp < 0.0) best = 0.0;
        if (tail_exp == 0.0 && m.form() == RateFunction::Form::power_log &&
            m.param_b() < 0.0)
            best = 0.0;
    }
    return best;
}

// (is - A) x without forming the matrix; A is the block rotation generator.
Eigen::VectorXcd shift_apply(const TruncatedGenerator& gen, double s,
                             const Eigen::VectorXcd& x) {
    const int n = gen.n_modes();
    Eigen::VectorXcd y(2 * n);
    const std::complex<double> is(0.0, s);
    for (int k = 0; k < n; ++k) {
        const double lam = gen.lambda(k);
        y(2 * k) = is * x(2 * k) - lam * x(2 * k + 1);
        y(2 * k + 1) = is * x(2 * k + 1) + lam * x(2 * k);
    }
    return y;
}

std::complex<double> phase_integral(double delta, double tau) {
    if (delta == 0.0) return {tau, 0.0};
    const std::complex<double> num =
        std::polar(1.0, delta * tau) - std::complex<double>(1.0, 0.0);
    return num / std::complex<double>(0.0, delta);
}

} // namespace

WavepacketParams wavepacket_params(const ModalSystem& ms) {
    if (ms.modes.empty())
        throw InsufficientModes("wavepacket_params: empty system");
    WavepacketParams wp;
    wp.delta0 = ms.spectral_gap / 4.0;
    const int n = ms.size();
    wp.s.reserve(n);
    wp.gamma0.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double center = ms.modes[i].frequency;
        double g = kInf;
        for (int j = 0; j < n; ++j) {
            if (std::abs(ms.modes[j].frequency - center) < wp.delta0)
                g = std::min(g, std::abs(ms.modes[j].coupling));
        }
        wp.s.push_back(center);
        wp.gamma0.push_back(g);
    }
    const bool all_damped =
        std::all_of(wp.gamma0.begin(), wp.gamma0.end(),
                    [](double g) { return g > 1e-14; });
    if (n >= 3 && all_damped) wp.predicted_m = predicted_M_from_wavepackets(wp);
    return wp;
}

RateFunction predicted_M_from_wavepackets(const WavepacketParams& wp) {
    if (wp.s.size() < 3)
        throw DataError("predicted_M_from_wavepackets: need at least 3 windows");
    if (wp.delta0 <= 0.0)
        throw DomainError("predicted_M_from_wavepackets: nonpositive half-width");
    std::vector<double> mvals(wp.s.size());
    for (std::size_t i = 0; i < wp.s.size(); ++i) {
        if (!(wp.gamma0[i] > 0.0))
            throw DomainError(
                "predicted_M_from_wavepackets: window with zero damping bound");
        mvals[i] = 1.0 / (wp.gamma0[i] * wp.gamma0[i] * wp.delta0 * wp.delta0);
    }
    return RateFunction::tabulated(wp.s, mvals).monotone_envelope();
}

HautusReport hautus_check(const TruncatedGenerator& gen,
                          const DampingMatrix& damping, const RateFunction& M_o,
                          const RateFunction& m_o,
                          const std::vector<double>& s_samples,
                          const std::vector<Eigen::VectorXcd>& x_samples) {
    if (s_samples.empty() || x_samples.empty())
        throw DataError("hautus_check: empty sample set");
    const int dim = gen.dim();
    for (const auto& x : x_samples)
        if (x.size() != dim)
            throw DimensionMismatch("hautus_check: sample dimension mismatch");

    const std::int64_t ns = static_cast<std::int64_t>(s_samples.size());
    const std::int64_t nx = static_cast<std::int64_t>(x_samples.size());
    const std::int64_t total = ns * nx;

    double worst = -kInf;
    std::int64_t worst_idx = -1;
#pragma omp parallel
    {
        double local_worst = -kInf;
        std::int64_t local_idx = -1;
#pragma omp for schedule(static) nowait
        for (std::int64_t idx = 0; idx < total; ++idx) {
            const std::int64_t si = idx / nx;
            const std::int64_t xi = idx % nx;
            const double s = s_samples[static_cast<std::size_t>(si)];
            const Eigen::VectorXcd& x = x_samples[static_cast<std::size_t>(xi)];
            const double xs = x.squaredNorm();
            if (xs == 0.0) continue;
            const double ms_val = eval_clamped(m_o, std::abs(s));
            const double Ms_val = eval_clamped(M_o, std::abs(s));
            const double shift = shift_apply(gen, s, x).squaredNorm();
            const double obs = bstar_apply(damping, x).squaredNorm();
            const double den = Ms_val * shift + ms_val * obs;
            const double ratio = den > 0.0 ? xs / den : kInf;
            if (ratio > local_worst ||
                (ratio == local_worst && local_idx >= 0 && idx < local_idx)) {
                local_worst = ratio;
                local_idx = idx;
            }
        }
#pragma omp critical(nustab_hautus_reduce)
        {
            if (local_worst > worst ||
                (local_worst == worst && local_idx >= 0 &&
                 (worst_idx < 0 || local_idx < worst_idx))) {
                worst = local_worst;
                worst_idx = local_idx;
            }
        }
    }

    HautusReport rep;
    rep.sample_count = static_cast<int>(total);
    rep.worst_ratio = worst;
    rep.worst_s =
        worst_idx >= 0
            ? s_samples[static_cast<std::size_t>(worst_idx / nx)]
            : 0.0;
    rep.pass = worst <= 1.0 + 1e-9;
    return rep;
}

std::pair<RateFunction, RateFunction>
hautus_pair_from_scan(const ResolventScan& sc) {
    if (sc.s.size() < 2)
        throw DataError("hautus_pair_from_scan: need at least 2 scan points");
    std::vector<double> mo(sc.norm.size()), mo_small(sc.norm.size());
    for (std::size_t i = 0; i < sc.norm.size(); ++i) {
        if (!(sc.norm[i] > 0.0))
            throw DataError("hautus_pair_from_scan: nonpositive scan value");
        mo[i] = 2.0 * sc.norm[i] * sc.norm[i];
        mo_small[i] = 2.0 * sc.norm[i];
    }
    // Exact at the scan abscissae; between them the linear interpolant is a
    // heuristic, so check at the scan grid.
    return {RateFunction::tabulated(sc.s, std::move(mo)),
            RateFunction::tabulated(sc.s, std::move(mo_small))};
}

std::vector<Eigen::VectorXcd> hautus_sample_set(int dim, std::uint64_t seed,
                                                int n_random) {
    if (dim <= 0) throw ConfigError("hautus_sample_set: dimension must be positive");
    std::vector<Eigen::VectorXcd> out;
    out.reserve(static_cast<std::size_t>(dim + n_random));
    for (int j = 0; j < dim; ++j) {
        Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
        e(j) = 1.0;
        out.push_back(std::move(e));
    }
    CounterRng rng(seed);
    for (int j = 0; j < n_random; ++j) out.push_back(rng.unit_vector_complex(dim));
    return out;
}

double SchrodingerWavepacket::delta0(double s) const {
    return c0 / (std::sqrt(2.0 * eval_clamped(m_large, s)) * (1.0 + s));
}

double SchrodingerWavepacket::gamma0(double s) const {
    return 1.0 / std::sqrt(2.0 * eval_clamped(m_small, s));
}

double SchrodingerWavepacket::predicted_m(double s) const {
    return (1.0 + s * s) * eval_clamped(m_large, s) * eval_clamped(m_small, s);
}

SchrodingerWavepacket schrodinger_to_wavepacket(const RateFunction& m_large,
                                                const RateFunction& m_small) {
    const double r0 = rate_grid_inf(m_small, 0);
    if (!(r0 > 0.0))
        throw DomainError("schrodinger_to_wavepacket: m_S is not bounded below");
    const double eta = rate_grid_inf(m_large, 1);
    if (!(eta > 0.0))
        throw DomainError("schrodinger_to_wavepacket: inf M_S(s)(1+s)^2 vanishes");
    SchrodingerWavepacket out{m_large, m_small, eta,
                              std::min(std::sqrt(eta), 0.5)};
    return out;
}

double observability_integral(const ModalSystem& ms, const Eigen::VectorXcd& x,
                              double tau) {
    if (!(tau > 0.0))
        throw ConfigError("observability_integral: tau must be positive");
    const int n = ms.size();
    if (x.size() != 2 * n)
        throw DimensionMismatch("observability_integral: coefficient length");
    const std::complex<double> iu(0.0, 1.0);

    if (ms.damping_kind == DampingKind::diagonal) {
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
            const std::complex<double> p = x(2 * k), v = x(2 * k + 1);
            const std::complex<double> cp = 0.5 * (v + iu * p);
            const std::complex<double> cm = 0.5 * (v - iu * p);
            const double d = ms.modes[k].coupling;
            const double lam = ms.modes[k].frequency;
            const double term =
                (std::norm(cp) + std::norm(cm)) * tau +
                2.0 * std::real(cp * std::conj(cm) *
                                phase_integral(2.0 * lam, tau));
            total += d * d * term;
        }
        return std::max(total, 0.0);
    }

    // Rank-one output: one trigonometric polynomial over signed frequencies.
    std::vector<double> w(2 * static_cast<std::size_t>(n));
    std::vector<std::complex<double>> g(2 * static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const std::complex<double> p = x(2 * k), v = x(2 * k + 1);
        const double b = ms.modes[k].coupling;
        const double lam = ms.modes[k].frequency;
        w[2 * k] = lam;
        g[2 * k] = b * 0.5 * (v + iu * p);
        w[2 * k + 1] = -lam;
        g[2 * k + 1] = b * 0.5 * (v - iu * p);
    }
    double total = 0.0;
    const std::size_t m = w.size();
    for (std::size_t j = 0; j < m; ++j) {
        total += std::norm(g[j]) * tau;
        for (std::size_t l = j + 1; l < m; ++l)
            total += 2.0 * std::real(g[j] * std::conj(g[l]) *
                                     phase_integral(w[j] - w[l], tau));
    }
    return std::max(total, 0.0);
}

std::vector<Eigen::VectorXcd> obs_sample_set(const ModalSystem& ms,
                                             std::uint64_t seed, int n_random) {
    return hautus_sample_set(2 * ms.size(), seed, n_random);
}

ObservabilityReport nonuniform_obs_check(
    const ModalSystem& ms, double beta, double tau,
    const std::vector<Eigen::VectorXcd>& samples) {
    if (beta < 0.0)
        throw ConfigError("nonuniform_obs_check: beta must be nonnegative");
    if (!(tau > 0.0))
        throw ConfigError("nonuniform_obs_check: tau must be positive");
    if (samples.empty()) throw DataError("nonuniform_obs_check: no samples");
    const int n = ms.size();

    double c_tau = kInf;
    std::int64_t argmin = -1;
    const std::int64_t count = static_cast<std::int64_t>(samples.size());
#pragma omp parallel
    {
        double local_min = kInf;
        std::int64_t local_idx = -1;
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < count; ++i) {
            const Eigen::VectorXcd& x = samples[static_cast<std::size_t>(i)];
            if (x.size() != 2 * n) continue;
            double den = 0.0;
            for (int k = 0; k < n; ++k) {
                const double wk = std::pow(ms.modes[k].frequency, -2.0 * beta);
                den += wk * (std::norm(x(2 * k)) + std::norm(x(2 * k + 1)));
            }
            if (den <= 0.0) continue;
            const double ratio = observability_integral(ms, x, tau) / den;
            if (ratio < local_min ||
                (ratio == local_min && local_idx >= 0 && i < local_idx)) {
                local_min = ratio;
                local_idx = i;
            }
        }
#pragma omp critical(nustab_obs_reduce)
        {
            if (local_min < c_tau ||
                (local_min == c_tau && local_idx >= 0 &&
                 (argmin < 0 || local_idx < argmin))) {
                c_tau = local_min;
                argmin = local_idx;
            }
        }
    }

    ObservabilityReport rep;
    rep.beta = beta;
    rep.tau = tau;
    rep.c_tau = std::isfinite(c_tau) ? c_tau : 0.0;
    rep.sample_count = static_cast<int>(samples.size());
    rep.argmin_sample = static_cast<int>(argmin);
    rep.pass = rep.c_tau > 0.0;
    return rep;
}

SandwichReport damped_observability_sandwich(const ModalSystem& ms,
                                             const DampedGenerator& dg,
                                             const Eigen::VectorXcd& x,
                                             double tau) {
    if (!(tau > 0.0))
        throw ConfigError("damped_observability_sandwich: tau must be positive");
    if (x.size() != dg.dim())
        throw DimensionMismatch("damped_observability_sandwich: state length");

    SandwichReport rep;
    rep.undamped = observability_integral(ms, x, tau);
    const double xs = x.squaredNorm();
    if (xs == 0.0) {
        rep.damped_le_undamped = true;
        return rep;
    }

    const double lam_max = ms.modes.back().frequency;
    const double h_max = std::min(0.01, 0.1 / lam_max);
    std::int64_t m = static_cast<std::int64_t>(std::ceil(tau / h_max));
    if (m < 2) m = 2;
    if (m % 2 != 0) ++m;
    const double h = tau / static_cast<double>(m);

    std::vector<double> f(static_cast<std::size_t>(m) + 1);
    Eigen::VectorXcd x_final;
    const SpectralFactorization sf = eig_decompose(dg);
    if (!sf.expm_fallback) {
        const Eigen::VectorXcd c = sf.v_inv * x;
        for (std::int64_t k = 0; k <= m; ++k) {
            const double t = h * static_cast<double>(k);
            const Eigen::VectorXcd scaled =
                ((t * sf.eigenvalues.array()).exp() * c.array()).matrix();
            const Eigen::VectorXcd xt = sf.v * scaled;
            f[static_cast<std::size_t>(k)] =
                bstar_apply(dg.damping, xt).squaredNorm();
            if (k == m) x_final = xt;
        }
    } else {
        // Contraction semigroup: repeated application of the step matrix does
        // not amplify rounding error.
        const Eigen::MatrixXd step = expm(h * dg.matrix);
        Eigen::VectorXd xr = x.real(), xi = x.imag();
        for (std::int64_t k = 0; k <= m; ++k) {
            Eigen::VectorXcd xt =
                xr.cast<std::complex<double>>() +
                std::complex<double>(0.0, 1.0) * xi.cast<std::complex<double>>();
            f[static_cast<std::size_t>(k)] =
                bstar_apply(dg.damping, xt).squaredNorm();
            if (k == m) {
                x_final = xt;
                break;
            }
            xr = step * xr;
            xi = step * xi;
        }
    }

    double odd = 0.0, even = 0.0;
    for (std::int64_t k = 1; k < m; ++k) {
        if (k % 2 == 1)
            odd += f[static_cast<std::size_t>(k)];
        else
            even += f[static_cast<std::size_t>(k)];
    }
    rep.damped =
        h / 3.0 * (f.front() + 4.0 * odd + 2.0 * even + f.back());
    rep.balance_lhs = 2.0 * rep.damped;
    rep.balance_rhs = xs - x_final.squaredNorm();
    rep.balance_rel_err = std::abs(rep.balance_lhs - rep.balance_rhs) / xs;
    rep.damped_le_undamped = rep.damped <= rep.undamped * (1.0 + 2e-6) + 1e-12;
    return rep;
}

std::pair<RateFunction, RateFunction>
hautus_secondorder_convert(const RateFunction& mt_large,
                           const RateFunction& mt_small,
                           const ModalSystem& ms) {
    if (ms.modes.empty())
        throw InsufficientModes("hautus_secondorder_convert: empty system");
    double c_b = 0.0;
    for (const Mode& mode : ms.modes)
        c_b = std::max(c_b, std::abs(mode.coupling) / mode.frequency);
    const double c_a = ms.modes.front().frequency * ms.modes.front().frequency;

    RateFunction m_o = scale_rate(mt_small, 4.0);

    // max{M~_o, 8 m~_o c_B^2 + c_A} mixes forms, so tabulate it on a merged
    // grid covering the truncated frequency range.
    const double lo = std::max(mt_large.domain_start(), mt_small.domain_start());
    const double hi_closed = 4.0 * ms.modes.back().frequency;
    const double hi =
        std::min({mt_large.domain_end(), mt_small.domain_end(), hi_closed});
    if (!(hi > lo))
        throw DomainError("hautus_secondorder_convert: empty common domain");
    std::vector<double> grid;
    if (!mt_large.closed_form())
        for (double s : mt_large.table_s())
            if (s >= lo && s <= hi) grid.push_back(s);
    if (!mt_small.closed_form())
        for (double s : mt_small.table_s())
            if (s >= lo && s <= hi) grid.push_back(s);
    grid.push_back(lo);
    grid.push_back(hi);
    const double glo = std::max(lo, hi * 1e-6);
    for (int i = 0; i <= 128; ++i)
        grid.push_back(glo * std::pow(hi / glo, static_cast<double>(i) / 128.0));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        vals[i] = std::max(mt_large(grid[i]),
                           8.0 * mt_small(grid[i]) * c_b * c_b + c_a);
    return {RateFunction::tabulated(std::move(grid), std::move(vals)),
            std::move(m_o)};
}

std::pair<RateFunction, RateFunction>
hautus_secondorder_converse(const RateFunction& m_large,
                            const RateFunction& m_small) {
    return {m_large, scale_rate(m_small, 0.5)};
}

std::string to_json(const HautusReport& r) {
    nlohmann::json j;
    j["sample_count"] = r.sample_count;
    j["worst_ratio"] = r.worst_ratio;
    j["worst_s"] = r.worst_s;
    j["pass"] = r.pass;
    return j.dump(2);
}

std::string to_json(const ObservabilityReport& r) {
    nlohmann::json j;
    j["beta"] = r.beta;
    j["tau"] = r.tau;
    j["c_tau"] = r.c_tau;
    j["sample_count"] = r.sample_count;
    j["argmin_sample"] = r.argmin_sample;
    j["pass"] = r.pass;
    return j.dump(2);
}

std::string to_json(const SandwichReport& r) {
    nlohmann::json j;
    j["undamped"] = r.undamped;
    j["damped"] = r.damped;
    j["balance_lhs"] = r.balance_lhs;
    j["balance_rhs"] = r.balance_rhs;
    j["balance_rel_err"] = r.balance_rel_err;
    j["damped_le_undamped"] = r.damped_le_undamped;
    return j.dump(2);
}

std::string to_json(const WavepacketParams& wp) {
    nlohmann::json j;
    j["delta0"] = wp.delta0;
    j["s"] = wp.s;
    j["gamma0"] = wp.gamma0;
    if (wp.predicted_m) {
        j["predicted_m"] = {{"s", wp.predicted_m->table_s()},
                            {"m", wp.predicted_m->table_m()}};
    } else {
        j["predicted_m"] = nullptr;
    }
    return j.dump(2);
}

} // namespace nustab
