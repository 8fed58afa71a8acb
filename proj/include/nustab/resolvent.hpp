#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "nustab/fitting.hpp"
#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"

namespace nustab {

enum class ResolventMethod { dense, rank_one, diagonal };

std::string to_string(ResolventMethod m);

// Picks the structured fast path matching the damping kind.
ResolventMethod fast_method_for(const DampedGenerator& dg);

struct ResolventScan {
    std::vector<double> s;
    std::vector<double> norm;
    ResolventMethod method = ResolventMethod::dense;
    int truncation = 0;

    std::size_t size() const { return s.size(); }
};

struct PeakPoint {
    int n;            // 1-based mode index
    double s;         // location of the local maximum
    double peak_norm;
};

struct PeakSeries {
    std::vector<PeakPoint> peaks;
    int truncation = 0;
};

// 1/sigma_min(is I - A + BB^T) by full singular value decomposition.
double resolvent_norm_dense(const DampedGenerator& dg, double s);

// Rank-one corrected resolvent norm, matrix-free: closed-form 2x2 block
// inverses of (is - A) plus a rank-one update, top singular value by
// two-column subspace iteration.  O(N) per operator application.
double resolvent_norm_rankone(const TruncatedGenerator& gen,
                              const Eigen::VectorXd& beta, double s);

// Exact per-mode 2x2 inversion for diagonal (velocity-proportional) damping.
double resolvent_norm_diagonal(const TruncatedGenerator& gen,
                               const Eigen::VectorXd& d, double s);

double resolvent_norm(const DampedGenerator& dg, double s,
                      bool force_dense = false);

// Frequencies shifted off resonance plus midpoints; safe for every method.
std::vector<double> default_scan_grid(const ModalSystem& ms);

ResolventScan scan(const DampedGenerator& dg, const std::vector<double>& s_grid,
                   ResolventMethod method);
// Reference loop without worker parallelism; must match scan() bit for bit.
ResolventScan scan_serial(const DampedGenerator& dg,
                          const std::vector<double>& s_grid,
                          ResolventMethod method);

// Local maxima of the norm near each retained frequency in [n_lo, n_hi].
// Ladder probes around lambda_n at both the gap scale and the resonance
// width scale, then golden-section refinement.
PeakSeries peak_series(const DampedGenerator& dg, const ModalSystem& ms,
                       int n_lo, int n_hi, ResolventMethod method);

PeakSeries peak_series_from_scan(const ResolventScan& sc, const ModalSystem& ms,
                                 int n_lo, int n_hi);

// Least-squares slope of log(peak_norm) against log(s) over mode window.
SlopeFit fit_growth_exponent(const PeakSeries& ps, int n_lo, int n_hi);

struct BoundCheckReport {
    double worst_bstar_ratio = 0.0;  // max of |B^T R_B| / sqrt(norm)
    double worst_bstarb = 0.0;       // max of |B^T R_B B|
    double worst_bstar_s = 0.0;
    double worst_bstarb_s = 0.0;
    bool pass = false;
};

// Checks, at every grid point, the damping-side resolvent inequalities
//   |B^T R_B(is)|   <= (1 + 1e-6) * norm^{1/2}
//   |B^T R_B(is) B| <= 1 + 1e-10
BoundCheckReport verify_resolvent_bounds(const DampedGenerator& dg,
                                         const std::vector<double>& s_grid,
                                         ResolventMethod method);

struct DoublingCheckReport {
    double max_rel_change = 0.0;
    int argmax_n = 0;
    bool converged = false;
};

// Recomputes the peak window with twice the truncation and reports the
// largest relative change; flags contamination when it exceeds rel_tol.
DoublingCheckReport doubling_convergence_check(const SystemSpec& base,
                                               int n_lo, int n_hi,
                                               double rel_tol = 1e-3);

} // namespace nustab
