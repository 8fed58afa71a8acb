#include "nustab/rate_function.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nustab/errors.hpp"

namespace nustab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_eval_closed(RateFunction::Form form, double c, double a, double b,
                       double s) {
    switch (form) {
        case RateFunction::Form::power:
            return std::log(c) + a * std::log(s);
        case RateFunction::Form::power_log:
            return std::log(c) + a * std::log(s) +
                   b * std::log(std::log(2.0 + s));
        case RateFunction::Form::shifted_power:
            return std::log(c) + a * std::log1p(s);
        case RateFunction::Form::tabulated:
            break;
    }
    throw DomainError("log_eval_closed: tabulated form");
}

} // namespace

RateFunction RateFunction::power(double c, double a, double s0) {
    if (c <= 0.0) throw ConfigError("RateFunction::power: scale must be positive");
    if (s0 < 0.0) throw ConfigError("RateFunction::power: domain start negative");
    if (a < 0.0 && s0 <= 0.0)
        throw ConfigError("RateFunction::power: decreasing power needs s0 > 0");
    RateFunction m;
    m.form_ = Form::power;
    m.c_ = c;
    m.a_ = a;
    m.s0_ = s0;
    return m;
}

RateFunction RateFunction::power_log(double c, double a, double b, double s0) {
    if (c <= 0.0) throw ConfigError("RateFunction::power_log: scale must be positive");
    if (s0 < 0.0) throw ConfigError("RateFunction::power_log: domain start negative");
    if (a < 0.0 && s0 <= 0.0)
        throw ConfigError("RateFunction::power_log: decreasing power needs s0 > 0");
    RateFunction m;
    m.form_ = Form::power_log;
    m.c_ = c;
    m.a_ = a;
    m.b_ = b;
    m.s0_ = s0;
    return m;
}

RateFunction RateFunction::shifted_power(double c, double a, double s0) {
    if (c <= 0.0)
        throw ConfigError("RateFunction::shifted_power: scale must be positive");
    if (s0 < 0.0)
        throw ConfigError("RateFunction::shifted_power: domain start negative");
    RateFunction m;
    m.form_ = Form::shifted_power;
    m.c_ = c;
    m.a_ = a;
    m.s0_ = s0;
    return m;
}

RateFunction RateFunction::tabulated(std::vector<double> s,
                                     std::vector<double> mvals) {
    if (s.size() != mvals.size())
        throw DimensionMismatch("RateFunction::tabulated: length mismatch");
    if (s.size() < 2)
        throw ConfigError("RateFunction::tabulated: need at least 2 samples");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] < 0.0)
            throw ConfigError("RateFunction::tabulated: negative abscissa");
        if (mvals[i] <= 0.0)
            throw ConfigError("RateFunction::tabulated: values must be positive");
        if (i > 0 && s[i] < s[i - 1])
            throw ConfigError("RateFunction::tabulated: abscissae must be sorted");
    }
    RateFunction m;
    m.form_ = Form::tabulated;
    m.s0_ = s.front();
    m.ts_ = std::move(s);
    m.tm_ = std::move(mvals);
    return m;
}

double RateFunction::operator()(double s) const {
    if (s < s0_) throw DomainError("RateFunction: s below domain start");
    if (form_ != Form::tabulated) {
        switch (form_) {
            case Form::power: return c_ * std::pow(s, a_);
            case Form::power_log:
                return c_ * std::pow(s, a_) * std::pow(std::log(2.0 + s), b_);
            case Form::shifted_power: return c_ * std::pow(1.0 + s, a_);
            default: break;
        }
    }
    if (s > ts_.back()) throw DomainError("RateFunction: s beyond table end");
    // Exact hits take the first matching sample: at a jump (repeated
    // abscissa) that is the left limit, the lower envelope.
    auto it = std::lower_bound(ts_.begin(), ts_.end(), s);
    std::size_t i = static_cast<std::size_t>(it - ts_.begin());
    if (i < ts_.size() && ts_[i] == s) return tm_[i];
    // ts_[i-1] < s < ts_[i]
    const double t0 = ts_[i - 1], t1 = ts_[i];
    const double m0 = tm_[i - 1], m1 = tm_[i];
    return m0 + (m1 - m0) * (s - t0) / (t1 - t0);
}

double RateFunction::domain_end() const {
    return form_ == Form::tabulated ? ts_.back() : kInf;
}

bool RateFunction::non_decreasing() const {
    switch (form_) {
        case Form::power: return a_ >= 0.0;
        case Form::power_log: return a_ >= 0.0 && b_ >= 0.0;
        case Form::shifted_power: return a_ >= 0.0;
        case Form::tabulated:
            for (std::size_t i = 1; i < tm_.size(); ++i)
                if (tm_[i] < tm_[i - 1]) return false;
            return true;
    }
    return false;
}

RateFunction RateFunction::monotone_envelope() const {
    if (form_ != Form::tabulated) {
        if (!non_decreasing())
            throw DataError("monotone_envelope: closed form is decreasing");
        return *this;
    }
    std::vector<double> env = tm_;
    for (std::size_t i = 1; i < env.size(); ++i)
        env[i] = std::max(env[i], env[i - 1]);
    return tabulated(ts_, env);
}

RateFunction scale_rate(const RateFunction& m, double k) {
    if (!(k > 0.0)) throw ConfigError("scale_rate: factor must be positive");
    using Form = RateFunction::Form;
    switch (m.form()) {
        case Form::power:
            return RateFunction::power(k * m.param_c(), m.param_a(),
                                       m.domain_start());
        case Form::power_log:
            return RateFunction::power_log(k * m.param_c(), m.param_a(),
                                           m.param_b(), m.domain_start());
        case Form::shifted_power:
            return RateFunction::shifted_power(k * m.param_c(), m.param_a(),
                                               m.domain_start());
        case Form::tabulated: {
            std::vector<double> tm = m.table_m();
            for (double& v : tm) v *= k;
            return RateFunction::tabulated(m.table_s(), std::move(tm));
        }
    }
    throw DomainError("scale_rate: unknown form");
}

std::optional<PositiveIncreaseCert>
check_positive_increase(const RateFunction& m, double lambda_max,
                        int grid_points) {
    if (lambda_max <= 1.0)
        throw ConfigError("check_positive_increase: lambda_max must exceed 1");
    if (!m.non_decreasing())
        throw DataError("check_positive_increase: input is not non-decreasing");

    const double s0 = m.domain_start();
    std::vector<double> sgrid;
    if (m.closed_form()) {
        const double lo = std::max(s0, 1e-2), hi = 1e100;
        for (int i = 0; i < grid_points; ++i) {
            const double u = static_cast<double>(i) / (grid_points - 1);
            sgrid.push_back(lo * std::pow(hi / lo, u));
        }
    } else {
        const double hi = m.domain_end() / lambda_max;
        for (double s : m.table_s())
            if (s >= std::max(s0, 1e-12) && s <= hi) sgrid.push_back(s);
        sgrid.erase(std::unique(sgrid.begin(), sgrid.end()), sgrid.end());
        if (sgrid.size() < 3)
            throw DataError("check_positive_increase: table too short for lambda_max");
    }

    std::vector<double> lgrid;
    for (int i = 0; i <= 8; ++i)
        lgrid.push_back(std::pow(lambda_max, static_cast<double>(i) / 8.0));

    const auto log_m = [&m](double s) {
        if (m.closed_form())
            return log_eval_closed(m.form(), m.param_c(), m.param_a(),
                                   m.param_b(), s);
        return std::log(m(s));
    };

    // accept(alpha): the ratio at lambda_max must track lambda_max^alpha
    // within 1% at every s, and the implied constant over the whole lambda
    // grid must stay above 0.01.
    const double log_track = std::log(0.99);
    const double log_floor = std::log(0.01);
    const auto accept = [&](double alpha) {
        double min_excess = 0.0;
        for (double s : sgrid) {
            const double base = log_m(s);
            const double top =
                log_m(lambda_max * s) - base - alpha * std::log(lambda_max);
            if (top < log_track) return false;
            for (double lam : lgrid) {
                const double ex = log_m(lam * s) - base - alpha * std::log(lam);
                min_excess = std::min(min_excess, ex);
                if (min_excess < log_floor) return false;
            }
        }
        return true;
    };

    if (!accept(0.05)) return std::nullopt;
    double lo = 0.05, hi = 0.05;
    while (accept(hi) && hi < 64.0) {
        lo = hi;
        hi *= 2.0;
    }
    if (hi >= 64.0 && accept(hi)) lo = hi;
    while (hi - lo > 0.01) {
        double mid = std::round(100.0 * 0.5 * (lo + hi)) / 100.0;
        if (mid <= lo || mid >= hi) break;
        if (accept(mid))
            lo = mid;
        else
            hi = mid;
    }
    const double alpha = std::round(100.0 * lo) / 100.0;

    double min_excess = 0.0;
    for (double s : sgrid) {
        const double base = log_m(s);
        for (double lam : lgrid)
            min_excess =
                std::min(min_excess, log_m(lam * s) - base - alpha * std::log(lam));
    }
    PositiveIncreaseCert cert;
    cert.alpha = alpha;
    cert.c_alpha = std::min(1.0, std::exp(min_excess));
    cert.s0 = sgrid.front();
    cert.lambda_max = lambda_max;
    cert.grid_points = static_cast<int>(sgrid.size());
    return cert;
}

InverseRate::InverseRate(const RateFunction& m) : env_(m.monotone_envelope()) {
    if (!env_.non_decreasing())
        throw DataError("InverseRate: rate function is not non-decreasing");
}

double InverseRate::operator()(double t) const {
    const double s0 = env_.domain_start();
    using Form = RateFunction::Form;
    if (env_.form() == Form::tabulated) {
        const auto& ts = env_.table_s();
        const auto& tm = env_.table_m();
        if (t < tm.front()) throw DomainError("InverseRate: t below M(s0)");
        if (t >= tm.back()) return ts.back();
        // last sample with value <= t
        auto it = std::upper_bound(tm.begin(), tm.end(), t);
        std::size_t i = static_cast<std::size_t>(it - tm.begin()) - 1;
        if (ts[i + 1] == ts[i] || tm[i + 1] == tm[i]) return ts[i];
        return ts[i] + (t - tm[i]) * (ts[i + 1] - ts[i]) / (tm[i + 1] - tm[i]);
    }
    const double m0 = env_(s0);
    if (t < m0) throw DomainError("InverseRate: t below M(s0)");
    const double a = env_.param_a(), c = env_.param_c(), b = env_.param_b();
    switch (env_.form()) {
        case Form::power:
            if (a == 0.0) return kInf;
            return std::pow(t / c, 1.0 / a);
        case Form::shifted_power:
            if (a == 0.0) return kInf;
            return std::max(s0, std::pow(t / c, 1.0 / a) - 1.0);
        case Form::power_log: {
            if (a == 0.0 && b == 0.0) return kInf;
            double lo = s0, hi = std::max(s0, 1.0) + 1.0;
            while (env_(hi) <= t) {
                lo = hi;
                hi *= 4.0;
                if (hi > 1e300) return hi;
            }
            for (int it2 = 0; it2 < 200; ++it2) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                if (env_(mid) <= t)
                    lo = mid;
                else
                    hi = mid;
            }
            return lo;
        }
        case Form::tabulated: break;
    }
    throw DomainError("InverseRate: unsupported form");
}

InverseRate invert_rate(const RateFunction& m) { return InverseRate(m); }

DecayPrediction predict_decay(const RateFunction& m,
                              const std::optional<PositiveIncreaseCert>& cert) {
    return DecayPrediction{InverseRate(m), cert.has_value()};
}

PseudoinverseSeries pseudoinverse_lower_bounds(const ModalSystem& ms) {
    PseudoinverseSeries out;
    for (const Mode& mode : ms.modes) {
        if (std::abs(mode.coupling) <= 1e-14) {
            out.undamped_modes.push_back(mode.index);
            continue;
        }
        PseudoinverseEntry e;
        e.n = mode.index;
        e.lambda = mode.frequency;
        e.bs_norm_sq = 0.5 * mode.coupling * mode.coupling;
        e.lower_bound = 1.0 / e.bs_norm_sq;
        out.entries.push_back(e);
    }
    return out;
}

AsymptoticsTable eigenvalue_asymptotics_check(const DampedGenerator& dg,
                                              const ModalSystem& ms, int n_lo,
                                              int n_hi) {
    const int n_modes = dg.n_modes();
    if (n_lo < 1 || n_hi < n_lo)
        throw ConfigError("eigenvalue_asymptotics_check: bad mode window");
    if (n_hi > n_modes / 2)
        throw ValidityWindow("eigenvalue_asymptotics_check: window exceeds n <= N/2");

    Eigen::EigenSolver<Eigen::MatrixXd> es(dg.matrix);
    if (es.info() != Eigen::Success)
        throw DomainError("eigenvalue_asymptotics_check: eigensolver failed");
    const Eigen::VectorXcd mu = es.eigenvalues();

    AsymptoticsTable table;
    const double gap = ms.spectral_gap;
    for (int n = n_lo; n <= n_hi; ++n) {
        const Mode& mode = ms.modes[n - 1];
        const std::complex<double> target(0.0, mode.frequency);
        double d1 = kInf, d2 = kInf;
        std::complex<double> nearest(0.0, 0.0);
        for (Eigen::Index k = 0; k < mu.size(); ++k) {
            const double d = std::abs(mu(k) - target);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                nearest = mu(k);
            } else if (d < d2) {
                d2 = d;
            }
        }
        AsymptoticsRow row;
        row.n = n;
        row.lambda = mode.frequency;
        row.bs_norm_sq = 0.5 * mode.coupling * mode.coupling;
        row.ambiguous = d2 < gap / 4.0;
        if (row.bs_norm_sq <= 1e-30) {
            row.deviation =
                d1 <= 1e-12 * std::max(mode.frequency, 1.0) ? 0.0 : kInf;
        } else {
            const std::complex<double> predicted =
                target - std::complex<double>(row.bs_norm_sq, 0.0);
            row.deviation = std::abs(nearest - predicted) / row.bs_norm_sq;
        }
        table.rows.push_back(row);
    }
    return table;
}

OptimalityProxy optimality_limsup(const std::vector<double>& t,
                                  const std::vector<double>& trace,
                                  const RateFunction& m0) {
    if (t.size() != trace.size())
        throw DimensionMismatch("optimality_limsup: length mismatch");
    if (t.size() < 2) throw DataError("optimality_limsup: need at least 2 points");
    if (!std::is_sorted(t.begin(), t.end()))
        throw DataError("optimality_limsup: time grid must be sorted");

    InverseRate inv(m0);
    OptimalityProxy out;
    out.t = t;
    out.value.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) out.value[i] = inv(t[i]) * trace[i];

    out.window_start = 0.5 * (t.front() + t.back());
    out.max_value = 0.0;
    out.min_value = kInf;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < out.window_start) continue;
        out.max_value = std::max(out.max_value, out.value[i]);
        out.min_value = std::min(out.min_value, out.value[i]);
    }
    out.spread = out.min_value > 0.0 ? out.max_value / out.min_value : kInf;
    return out;
}

} // namespace nustab
