#include "nustab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "nustab/errors.hpp"

namespace nustab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Damped 2x2 block for one mode under diagonal damping.
Eigen::Matrix2d diag_mode_block(double lam, double d) {
    Eigen::Matrix2d a;
    a << 0.0, lam, -lam, -d * d;
    return a;
}

double block_trace_norm(double lam, double d, double t) {
    const Eigen::Matrix2d a = diag_mode_block(lam, d);
    const Eigen::Matrix2d e = (t * a).exp();
    const Eigen::Matrix2d k = a.inverse();
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(e * k);
    return svd.singularValues()(0);
}

DecayTrace decay_trace_impl(const DampedGenerator& dg,
                            const std::vector<double>& t_grid,
                            const std::optional<RateFunction>& m,
                            bool parallel) {
    if (t_grid.empty()) throw DataError("decay_trace: empty time grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()))
        throw DataError("decay_trace: time grid must be sorted");
    if (t_grid.front() < 0.0) throw DataError("decay_trace: negative time");

    DecayTrace out;
    out.t = t_grid;
    out.opnorm.assign(t_grid.size(), 0.0);
    out.truncation = dg.n_modes();

    const int half = std::max(1, dg.n_modes() / 2);
    const double lam_half = dg.lambda(half - 1);
    out.floor_estimate = 1.0 / lam_half;

    // Validity horizon: the time when the slowest retained half of the modes
    // stops dominating, estimated as M at the middle frequency.
    out.horizon = kInf;
    if (m) {
        const double s_eval = std::min(lam_half, m->domain_end());
        out.horizon = (*m)(s_eval);
        out.horizon_warning = t_grid.back() > out.horizon;
    }

    const auto count = static_cast<std::ptrdiff_t>(t_grid.size());
    std::vector<std::exception_ptr> errors(t_grid.size());

    if (const auto* di = std::get_if<DiagonalDamping>(&dg.damping)) {
        // Block-diagonal system: the norm splits over per-mode 2x2 blocks.
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                double worst = 0.0;
                for (Eigen::Index n = 0; n < di->d.size(); ++n)
                    worst = std::max(
                        worst, block_trace_norm(dg.lambda(n), di->d(n), t_grid[i]));
                out.opnorm[i] = worst;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        const SpectralFactorization sf = eig_decompose(dg);
        const Eigen::MatrixXd a_inv =
            Eigen::PartialPivLU<Eigen::MatrixXd>(dg.matrix).inverse();
#pragma omp parallel for schedule(dynamic) if (parallel)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                out.opnorm[i] = propagator_norm(sf, a_inv, t_grid[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    }
    for (std::ptrdiff_t i = 0; i < count; ++i)
        if (errors[i]) std::rethrow_exception(errors[i]);

    if (m) {
        InverseRate inv(*m);
        out.predicted.resize(t_grid.size());
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            try {
                const double s = inv(t_grid[i]);
                out.predicted[i] = s > 0.0 ? 1.0 / s : kNaN;
            } catch (const DomainError&) {
                out.predicted[i] = kNaN;
            }
        }
    }
    return out;
}

} // namespace

SpectralFactorization eig_decompose(const DampedGenerator& dg) {
    SpectralFactorization sf;
    sf.generator = dg.matrix;

    Eigen::EigenSolver<Eigen::MatrixXd> es(dg.matrix);
    if (es.info() != Eigen::Success) {
        sf.expm_fallback = true;
        sf.conditioning = kInf;
        return sf;
    }
    sf.eigenvalues = es.eigenvalues();
    sf.v = es.eigenvectors();

    const double scale = std::max(1.0, dg.matrix.norm());
    for (Eigen::Index i = 0; i < sf.eigenvalues.size(); ++i)
        if (sf.eigenvalues(i).real() > 1e-12 * scale)
            throw DomainError(
                "eig_decompose: eigenvalue with positive real part; "
                "input is not a contraction generator");

    // Real 2x-embedding sidesteps Eigen 3.4.0's broken small singular
    // values for complex divide-and-conquer SVD.
    const Eigen::Index n = sf.v.rows();
    Eigen::MatrixXd emb(2 * n, 2 * n);
    emb.topLeftCorner(n, n) = sf.v.real();
    emb.bottomRightCorner(n, n) = sf.v.real();
    emb.topRightCorner(n, n) = -sf.v.imag();
    emb.bottomLeftCorner(n, n) = sf.v.imag();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(emb);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    sf.conditioning = smin > 0.0 ? smax / smin : kInf;
    if (sf.conditioning > 1e8) {
        sf.expm_fallback = true;
        return sf;
    }

    sf.v_inv = Eigen::PartialPivLU<Eigen::MatrixXcd>(sf.v).inverse();
    const Eigen::MatrixXcd recon =
        sf.v * sf.eigenvalues.asDiagonal() * sf.v_inv;
    const double rel_err =
        (recon - dg.matrix.cast<std::complex<double>>()).norm() / scale;
    if (rel_err > 1e-8) sf.expm_fallback = true;
    return sf;
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) { return a.exp(); }

Eigen::MatrixXd propagator(const SpectralFactorization& sf, double t) {
    if (t < 0.0) throw DomainError("propagator: negative time");
    if (sf.expm_fallback) return expm(t * sf.generator);
    const Eigen::VectorXcd e = (t * sf.eigenvalues.array()).exp();
    return (sf.v * e.asDiagonal() * sf.v_inv).real();
}

double propagator_norm(const SpectralFactorization& sf, const Eigen::MatrixXd& k,
                       double t) {
    if (k.rows() != sf.dim())
        throw DimensionMismatch("propagator_norm: operator dimension");
    const Eigen::MatrixXd p = propagator(sf, t) * k;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(p);
    return svd.singularValues()(0);
}

double propagator_norm_unit(const SpectralFactorization& sf, double t) {
    const Eigen::MatrixXd p = propagator(sf, t);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(p);
    return svd.singularValues()(0);
}

DecayTrace decay_trace(const DampedGenerator& dg, const std::vector<double>& t_grid,
                       const std::optional<RateFunction>& m) {
    return decay_trace_impl(dg, t_grid, m, true);
}

DecayTrace decay_trace_serial(const DampedGenerator& dg,
                              const std::vector<double>& t_grid,
                              const std::optional<RateFunction>& m) {
    return decay_trace_impl(dg, t_grid, m, false);
}

SlopeFit fit_decay_exponent(const DecayTrace& trace, double t_lo, double t_hi,
                            double transient_cutoff) {
    // Below a tenth of the truncation floor the finite model has entered its
    // exponential tail and no longer tracks the full system.
    const double floor_level = 0.1 * trace.floor_estimate;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        const double t = trace.t[i];
        if (t < t_lo || t > t_hi || t < transient_cutoff) continue;
        if (trace.opnorm[i] < floor_level) continue;
        xs.push_back(t);
        ys.push_back(trace.opnorm[i]);
    }
    return fit_loglog(xs, ys, 8);
}

std::vector<double> orbit_decay(const SpectralFactorization& sf,
                                const Eigen::VectorXcd& x0,
                                const std::vector<double>& t_grid) {
    if (x0.size() != sf.dim())
        throw DimensionMismatch("orbit_decay: state dimension");
    if (x0.norm() == 0.0) throw DataError("orbit_decay: zero initial state");

    std::vector<double> out(t_grid.size());
    if (sf.expm_fallback) {
        for (std::size_t i = 0; i < t_grid.size(); ++i) {
            const Eigen::MatrixXd e = expm(t_grid[i] * sf.generator);
            const Eigen::VectorXd yr = e * x0.real();
            const Eigen::VectorXd yi = e * x0.imag();
            out[i] = std::sqrt(yr.squaredNorm() + yi.squaredNorm());
        }
        return out;
    }
    const Eigen::VectorXcd c = sf.v_inv * x0;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const Eigen::VectorXcd e = (t_grid[i] * sf.eigenvalues.array()).exp();
        out[i] = (sf.v * e.cwiseProduct(c)).norm();
    }
    return out;
}

} // namespace nustab
