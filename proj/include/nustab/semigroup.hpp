#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nustab/fitting.hpp"
#include "nustab/operator_assembly.hpp"
#include "nustab/rate_function.hpp"

namespace nustab {

// Eigendecomposition of the damped generator with a conditioning diagnostic.
// When the eigenbasis is too ill-conditioned to trust (or the factorization
// fails to reconstruct the matrix), propagators fall back to a
// scaling-and-squaring matrix exponential per time point.
struct SpectralFactorization {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd v;
    Eigen::MatrixXcd v_inv;
    double conditioning = 0.0;
    bool expm_fallback = false;
    Eigen::MatrixXd generator; // kept for the fallback path

    int dim() const { return static_cast<int>(generator.rows()); }
};

struct DecayTrace {
    std::vector<double> t;
    std::vector<double> opnorm;    // |e^{tA_B} A_B^{-1}|
    std::vector<double> predicted; // 1/M^{-1}(t); empty when no rate given
    double horizon = 0.0;          // validity estimate M(lambda_{N/2})
    bool horizon_warning = false;  // grid extends beyond the horizon
    double floor_estimate = 0.0;   // 1/lambda_{N/2}: truncation floor scale
    int truncation = 0;
};

SpectralFactorization eig_decompose(const DampedGenerator& dg);

// Scaling-and-squaring matrix exponential.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// e^{tA} through the factorization (or the fallback).
Eigen::MatrixXd propagator(const SpectralFactorization& sf, double t);

// |e^{tA} K| for a fixed operator K, by singular value decomposition.
double propagator_norm(const SpectralFactorization& sf, const Eigen::MatrixXd& k,
                       double t);

// |e^{tA}|.
double propagator_norm_unit(const SpectralFactorization& sf, double t);

DecayTrace decay_trace(const DampedGenerator& dg, const std::vector<double>& t_grid,
                       const std::optional<RateFunction>& m);
// Reference loop without worker parallelism; must match decay_trace exactly.
DecayTrace decay_trace_serial(const DampedGenerator& dg,
                              const std::vector<double>& t_grid,
                              const std::optional<RateFunction>& m);

// Log-log slope of the trace over [t_lo, t_hi], excluding the transient
// t < transient_cutoff and points below one tenth of the truncation floor.
SlopeFit fit_decay_exponent(const DecayTrace& trace, double t_lo, double t_hi,
                            double transient_cutoff = 10.0);

std::vector<double> orbit_decay(const SpectralFactorization& sf,
                                const Eigen::VectorXcd& x0,
                                const std::vector<double>& t_grid);

} // namespace nustab
