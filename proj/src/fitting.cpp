#include "nustab/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nustab/errors.hpp"

namespace nustab {

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    int min_points) {
    if (x.size() != y.size())
        throw DimensionMismatch("fit_loglog: length mismatch");
    if (static_cast<int>(x.size()) < min_points)
        throw DataError("fit_loglog: need at least " + std::to_string(min_points) +
                        " points, got " + std::to_string(x.size()));
    const std::size_t m = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(m), ly(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0)
            throw DataError("fit_loglog: inputs must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double md = m * sxx - sx * sx;
    if (md == 0.0) throw DataError("fit_loglog: degenerate abscissae");
    SlopeFit fit;
    fit.exponent = (m * sxy - sx * sy) / md;
    fit.log_intercept = (sy - fit.exponent * sx) / m;
    fit.points = static_cast<int>(m);
    for (std::size_t i = 0; i < m; ++i)
        fit.max_residual = std::max(
            fit.max_residual,
            std::abs(ly[i] - (fit.exponent * lx[i] + fit.log_intercept)));
    return fit;
}

std::vector<std::size_t> record_indices(const std::vector<double>& values) {
    std::vector<std::size_t> idx;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] > best) {
            best = values[i];
            idx.push_back(i);
        }
    }
    return idx;
}

} // namespace nustab
