#pragma once

#include <optional>
#include <vector>

#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"

namespace nustab {

// Growth function M(s).  Closed forms: c*s^a, c*s^a*log(2+s)^b, c*(1+s)^a.
// Tabulated: piecewise linear through samples; a jump is encoded as two
// samples sharing an abscissa, and evaluation at the shared abscissa returns
// the lower value (the sup-inverse contract needs the left limit there).
class RateFunction {
  public:
    enum class Form { power, power_log, shifted_power, tabulated };

    static RateFunction power(double c, double a, double s0 = 0.0);
    static RateFunction power_log(double c, double a, double b, double s0 = 0.0);
    static RateFunction shifted_power(double c, double a, double s0 = 0.0);
    static RateFunction tabulated(std::vector<double> s, std::vector<double> m);

    double operator()(double s) const;
    Form form() const { return form_; }
    bool closed_form() const { return form_ != Form::tabulated; }
    double domain_start() const { return s0_; }
    double domain_end() const; // +inf for closed forms
    bool non_decreasing() const;
    // Running-max envelope; identity on already monotone inputs.
    RateFunction monotone_envelope() const;

    double param_c() const { return c_; }
    double param_a() const { return a_; }
    double param_b() const { return b_; }
    const std::vector<double>& table_s() const { return ts_; }
    const std::vector<double>& table_m() const { return tm_; }

  private:
    RateFunction() = default;
    Form form_ = Form::power;
    double c_ = 1.0, a_ = 0.0, b_ = 0.0, s0_ = 0.0;
    std::vector<double> ts_, tm_;
};

// Pointwise rescale k * M(s); preserves the form and domain.
RateFunction scale_rate(const RateFunction& m, double k);

struct PositiveIncreaseCert {
    double alpha = 0.0;
    double c_alpha = 0.0;
    double s0 = 0.0;
    double lambda_max = 0.0;
    int grid_points = 0;
};

// Certifies M(lambda*s) >= c_alpha * lambda^alpha * M(s) on a grid and
// requires the ratio at lambda_max to track lambda_max^alpha within 1%
// (that keeps slowly varying functions like log(2+s) out).  Returns the
// largest alpha that verifies, at resolution 0.01; empty when no
// alpha >= 0.05 does.
std::optional<PositiveIncreaseCert>
check_positive_increase(const RateFunction& m, double lambda_max = 32.0,
                        int grid_points = 200);

// Right-continuous right-inverse t -> sup{s >= 0 : M(s) <= t}.
class InverseRate {
  public:
    explicit InverseRate(const RateFunction& m);
    double operator()(double t) const;

  private:
    RateFunction env_;
};

InverseRate invert_rate(const RateFunction& m);

struct DecayPrediction {
    InverseRate inverse;
    bool has_certificate = false;

    double operator()(double t) const { return 1.0 / inverse(t); }
};

DecayPrediction predict_decay(const RateFunction& m,
                              const std::optional<PositiveIncreaseCert>& cert);

struct PseudoinverseEntry {
    int n = 0;
    double lambda = 0.0;
    double bs_norm_sq = 0.0;  // squared norm of the damping projected on mode n
    double lower_bound = 0.0; // implied lower bound for M(lambda_n)
};

struct PseudoinverseSeries {
    std::vector<PseudoinverseEntry> entries;
    std::vector<int> undamped_modes; // zero coupling: spectrum stays on axis
};

PseudoinverseSeries pseudoinverse_lower_bounds(const ModalSystem& ms);

struct AsymptoticsRow {
    int n = 0;
    double lambda = 0.0;
    double bs_norm_sq = 0.0;
    double deviation = 0.0; // |mu_n - (i lambda_n - bs_norm_sq)| / bs_norm_sq
    bool ambiguous = false; // two eigenvalue candidates within gap/4
};

struct AsymptoticsTable {
    std::vector<AsymptoticsRow> rows;
};

// Matches computed eigenvalues of the damped generator against the
// first-order perturbation prediction mu_n = i*lambda_n - bs_norm_sq.
AsymptoticsTable eigenvalue_asymptotics_check(const DampedGenerator& dg,
                                              const ModalSystem& ms, int n_lo,
                                              int n_hi);

struct OptimalityProxy {
    double max_value = 0.0;
    double min_value = 0.0;
    double spread = 0.0; // max/min over the second half of the window
    double window_start = 0.0;
    std::vector<double> t;
    std::vector<double> value; // M0^{-1}(t) * trace(t)
};

// Finite-horizon proxy for the optimality lower bound: the running product
// M0^{-1}(t) * trace(t) over the second half of the supplied window.  A
// spread close to 1 with no decreasing trend means the rate is not beaten.
OptimalityProxy optimality_limsup(const std::vector<double>& t,
                                  const std::vector<double>& trace,
                                  const RateFunction& m0);

} // namespace nustab
