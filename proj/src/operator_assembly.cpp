#include "nustab/operator_assembly.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

#include "nustab/errors.hpp"
#include "nustab/rng.hpp"

namespace nustab {

Eigen::MatrixXd TruncatedGenerator::dense() const {
    const int n = n_modes();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) {
        a(2 * k, 2 * k + 1) = lambda(k);
        a(2 * k + 1, 2 * k) = -lambda(k);
    }
    return a;
}

TruncatedGenerator assemble_generator(const ModalSystem& ms) {
    TruncatedGenerator gen;
    const int n = static_cast<int>(ms.modes.size());
    gen.lambda.resize(n);
    for (int k = 0; k < n; ++k) gen.lambda(k) = ms.modes[k].frequency;
    return gen;
}

DampingMatrix assemble_damping(const ModalSystem& ms) {
    const int n = static_cast<int>(ms.modes.size());
    if (ms.damping_kind == DampingKind::rank_one) {
        RankOneDamping b;
        b.beta = Eigen::VectorXd::Zero(2 * n);
        for (int k = 0; k < n; ++k) b.beta(2 * k + 1) = ms.modes[k].coupling;
        return b;
    }
    DiagonalDamping d;
    d.d.resize(n);
    for (int k = 0; k < n; ++k) d.d(k) = ms.modes[k].coupling;
    return d;
}

Eigen::MatrixXd bbstar_dense(const DampingMatrix& damping, int dim) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
    if (const auto* r1 = std::get_if<RankOneDamping>(&damping)) {
        if (r1->beta.size() != dim)
            throw DimensionMismatch("bbstar_dense: damping vector length mismatch");
        out = r1->beta * r1->beta.transpose();
    } else {
        const auto& dg = std::get<DiagonalDamping>(damping);
        if (2 * dg.d.size() != dim)
            throw DimensionMismatch("bbstar_dense: diagonal damping length mismatch");
        for (int k = 0; k < dg.d.size(); ++k)
            out(2 * k + 1, 2 * k + 1) = dg.d(k) * dg.d(k);
    }
    return out;
}

Eigen::VectorXcd bstar_apply(const DampingMatrix& damping,
                             const Eigen::VectorXcd& x) {
    if (const auto* r1 = std::get_if<RankOneDamping>(&damping)) {
        if (r1->beta.size() != x.size())
            throw DimensionMismatch("bstar_apply: vector length mismatch");
        Eigen::VectorXcd out(1);
        out(0) = r1->beta.cast<std::complex<double>>().dot(x);
        return out;
    }
    const auto& dg = std::get<DiagonalDamping>(damping);
    if (2 * dg.d.size() != x.size())
        throw DimensionMismatch("bstar_apply: vector length mismatch");
    Eigen::VectorXcd out(dg.d.size());
    for (int k = 0; k < dg.d.size(); ++k) out(k) = dg.d(k) * x(2 * k + 1);
    return out;
}

double bstar_norm_sq(const DampingMatrix& damping, const Eigen::VectorXcd& x) {
    return bstar_apply(damping, x).squaredNorm();
}

DampedGenerator assemble_damped(const TruncatedGenerator& gen,
                                const DampingMatrix& damping) {
    DampedGenerator out;
    out.lambda = gen.lambda;
    out.damping = damping;
    out.matrix = gen.dense() - bbstar_dense(damping, gen.dim());

    // Dissipation self-check on a deterministic random sample.
    CounterRng rng(0x5eedu);
    const int dim = gen.dim();
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXcd x = rng.unit_vector_complex(dim);
        const std::complex<double> q = x.dot(out.matrix * x); // <A_B x, x>
        const double lhs = q.real();
        const double rhs = -bstar_norm_sq(damping, x);
        if (std::abs(lhs - rhs) > 1e-12 * x.squaredNorm())
            throw DomainError("assemble_damped: dissipation identity violated");
    }
    return out;
}

DampedGenerator assemble_damped(const ModalSystem& ms) {
    return assemble_damped(assemble_generator(ms), assemble_damping(ms));
}

double truncation_validity_limit(const ModalSystem& ms) {
    if (ms.modes.empty()) throw InsufficientModes("truncation_validity_limit: empty system");
    return 0.5 * ms.modes.back().frequency;
}

void dump_matrix(const Eigen::MatrixXd& m, const std::string& path, bool binary) {
    if (binary) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("dump_matrix: cannot open " + path);
        const std::int64_t rows = m.rows(), cols = m.cols();
        out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
        out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                const double v = m(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
        if (!out) throw DataError("dump_matrix: write failed for " + path);
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("dump_matrix: cannot open " + path);
    out << m.rows() << " " << m.cols() << "\n";
    char buf[64];
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << "\n";
        }
    if (!out) throw DataError("dump_matrix: write failed for " + path);
}

} // namespace nustab
