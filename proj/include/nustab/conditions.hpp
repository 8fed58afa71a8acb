#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"
#include "nustab/rate_function.hpp"
#include "nustab/resolvent.hpp"

namespace nustab {

// Per-window lower bound on the damping felt by spectral packets of
// half-width delta0 around each frequency.
struct WavepacketParams {
    double delta0 = 0.0;
    std::vector<double> s;      // frequencies carrying a nonempty window
    std::vector<double> gamma0; // min coupling magnitude inside the window
    std::optional<RateFunction> predicted_m; // envelope of gamma0^-2 delta0^-2
};

WavepacketParams wavepacket_params(const ModalSystem& ms);

RateFunction predicted_M_from_wavepackets(const WavepacketParams& wp);

struct HautusReport {
    int sample_count = 0;
    double worst_ratio = 0.0;
    double worst_s = 0.0;
    bool pass = false;
};

// Frequency-domain test |x|^2 <= M_o(s)|(is-A)x|^2 + m_o(s)|B^T x|^2 over
// the Cartesian product of the supplied s and x samples.
HautusReport hautus_check(const TruncatedGenerator& gen,
                          const DampingMatrix& damping, const RateFunction& M_o,
                          const RateFunction& m_o,
                          const std::vector<double>& s_samples,
                          const std::vector<Eigen::VectorXcd>& x_samples);

// The converse construction M_o = 2M^2, m_o = 2M from a measured scan.
std::pair<RateFunction, RateFunction>
hautus_pair_from_scan(const ResolventScan& sc);

// Default sample set: all modal basis vectors plus seeded random unit states.
std::vector<Eigen::VectorXcd> hautus_sample_set(int dim, std::uint64_t seed,
                                                int n_random);

// Parameter transfer from a group-resolvent estimate: packets of width
// delta0(s) = c0 / (sqrt(2 M_S(s)) (1+s)) carry gamma0 = 1/sqrt(2 m_S(s)),
// and the damped resolvent is predicted to grow like (1+s^2) M_S m_S.
struct SchrodingerWavepacket {
    RateFunction m_large;
    RateFunction m_small;
    double eta = 0.0;
    double c0 = 0.0;

    double delta0(double s) const;
    double gamma0(double s) const;
    double predicted_m(double s) const;
};

SchrodingerWavepacket schrodinger_to_wavepacket(const RateFunction& m_large,
                                                const RateFunction& m_small);

// Exact value of the undamped output energy over [0, tau]: the integrand is
// a trigonometric polynomial, so the integral is a finite exponential sum.
double observability_integral(const ModalSystem& ms, const Eigen::VectorXcd& x,
                              double tau);

struct ObservabilityReport {
    double beta = 0.0;
    double tau = 0.0;
    double c_tau = 0.0;
    int sample_count = 0;
    int argmin_sample = -1;
    bool pass = false;
};

std::vector<Eigen::VectorXcd> obs_sample_set(const ModalSystem& ms,
                                             std::uint64_t seed, int n_random);

// c_tau = min over samples of integral / |(-A)^{-beta} x|^2, the fractional
// observability constant of the truncated system.
ObservabilityReport nonuniform_obs_check(
    const ModalSystem& ms, double beta, double tau,
    const std::vector<Eigen::VectorXcd>& samples);

struct SandwichReport {
    double undamped = 0.0;
    double damped = 0.0;
    double balance_lhs = 0.0;  // 2 * damped integral
    double balance_rhs = 0.0;  // |x|^2 - |T_B(tau) x|^2
    double balance_rel_err = 0.0;
    bool damped_le_undamped = false;
};

// Damped output energy by composite Simpson quadrature against the exact
// undamped value, plus the energy balance identity.
SandwichReport damped_observability_sandwich(const ModalSystem& ms,
                                             const DampedGenerator& dg,
                                             const Eigen::VectorXcd& x,
                                             double tau);

// Second-order test constants to first-order form: m_o = 4 m~_o and
// M_o = max{M~_o, 8 m~_o c_B^2 + c_A} with c_B = sup_n |b_n|/lambda_n and
// c_A = lambda_1^2.
std::pair<RateFunction, RateFunction>
hautus_secondorder_convert(const RateFunction& mt_large,
                           const RateFunction& mt_small, const ModalSystem& ms);

// Converse direction: M~_o = M_o, m~_o = m_o / 2.
std::pair<RateFunction, RateFunction>
hautus_secondorder_converse(const RateFunction& m_large,
                            const RateFunction& m_small);

// JSON serialization for the report records; keys match the field names.
std::string to_json(const HautusReport& r);
std::string to_json(const ObservabilityReport& r);
std::string to_json(const SandwichReport& r);
std::string to_json(const WavepacketParams& wp);

} // namespace nustab
