#pragma once

#include <vector>

namespace nustab {

struct SlopeFit {
    double exponent = 0.0;
    double log_intercept = 0.0;
    double max_residual = 0.0;
    int points = 0;
};

// Least-squares line through (log x, log y); the residual is the worst
// absolute deviation in log space and is always reported.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    int min_points);

// Indices of the strictly increasing running maxima.  Series driven by an
// equidistributed phase (pointwise damping at irrational locations) scatter
// over orders of magnitude; their growth law lives on this envelope
// subsequence, not on the full cloud.
std::vector<std::size_t> record_indices(const std::vector<double>& values);

} // namespace nustab
