#pragma once

#include <string>
#include <variant>

#include <Eigen/Core>

#include "nustab/modal_system.hpp"

namespace nustab {

// First-order form on the energy space with the modal basis
//   e_n^(1) = (phi_n / lambda_n, 0),  e_n^(2) = (0, phi_n),
// which makes the energy norm plain Euclidean.  Coordinates are interleaved
// (position_1, velocity_1, position_2, velocity_2, ...) and the generator is
// block diagonal with per-mode blocks [[0, lambda_n], [-lambda_n, 0]].
struct TruncatedGenerator {
    Eigen::VectorXd lambda;

    int n_modes() const { return static_cast<int>(lambda.size()); }
    int dim() const { return 2 * n_modes(); }
    Eigen::MatrixXd dense() const;
};

// Rank-one damping vector: coupling b_n in each velocity slot.
struct RankOneDamping {
    Eigen::VectorXd beta; // length 2N
};

// Diagonal damping acting on velocity slots mode by mode.
struct DiagonalDamping {
    Eigen::VectorXd d; // length N
};

using DampingMatrix = std::variant<RankOneDamping, DiagonalDamping>;

struct DampedGenerator {
    Eigen::MatrixXd matrix; // A - B B^T, 2N x 2N real
    Eigen::VectorXd lambda;
    DampingMatrix damping;

    int dim() const { return static_cast<int>(matrix.rows()); }
    int n_modes() const { return static_cast<int>(lambda.size()); }
};

TruncatedGenerator assemble_generator(const ModalSystem& ms);
DampingMatrix assemble_damping(const ModalSystem& ms);

// Assembles A - B B^T and verifies the dissipation identity
//   Re<(A - BB^T)x, x> = -|B^T x|^2
// on a fixed random sample before returning.
DampedGenerator assemble_damped(const TruncatedGenerator& gen,
                                const DampingMatrix& damping);

DampedGenerator assemble_damped(const ModalSystem& ms);

Eigen::MatrixXd bbstar_dense(const DampingMatrix& damping, int dim);

// B^T x: one component for rank-one damping, N components for diagonal.
Eigen::VectorXcd bstar_apply(const DampingMatrix& damping,
                             const Eigen::VectorXcd& x);
double bstar_norm_sq(const DampingMatrix& damping, const Eigen::VectorXcd& x);

// Largest |s| at which the truncated model is trusted to represent the full
// one: half the top retained frequency.
double truncation_validity_limit(const ModalSystem& ms);

// Column-major dump, text (one value per line) or raw little-endian doubles.
void dump_matrix(const Eigen::MatrixXd& m, const std::string& path, bool binary);

} // namespace nustab
