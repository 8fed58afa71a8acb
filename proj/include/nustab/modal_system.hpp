#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nustab {

// One-dimensional string and beam models on (0,1) with Dirichlet-type ends,
// reduced to their sine modal basis.  Frequencies are those of A0^{1/2}:
//   wave1d:  lambda_n = n*pi          (uniform gap pi)
//   beam1d:  lambda_n = n^2*pi^2      (smallest gap 3*pi^2)
enum class SystemKind { wave1d, beam1d };

enum class WeakProfile { one_minus_xi, xi2_one_minus_xi, indicator, tabulated };

// Distributed damping b(xi) acting through its modal Fourier coefficients.
struct WeakDamping {
    WeakProfile profile = WeakProfile::one_minus_xi;
    double xi0 = 0.0; // indicator upper endpoint, required in (0,1)
    std::vector<std::pair<double, double>> samples; // tabulated profile
};

// Point actuator at xi0: couplings sqrt(2)*sin(n*pi*xi0) do not decay in n.
struct PointwiseDamping {
    double xi0 = 0.0;
};

// Diagonal damping d_n = lambda_n^{-alpha} acting mode by mode.
struct FractionalDamping {
    double alpha = 0.5;
};

using DampingSpec = std::variant<WeakDamping, PointwiseDamping, FractionalDamping>;

struct SystemSpec {
    SystemKind kind = SystemKind::wave1d;
    DampingSpec damping = WeakDamping{};
    int truncation = 2; // number of retained modes, >= 2
};

struct Mode {
    int index = 0;       // 1-based
    double frequency = 0;
    double coupling = 0; // signed b_n, or d_n for diagonal damping
};

enum class DampingKind { rank_one, diagonal };

struct ModalSystem {
    std::vector<Mode> modes;
    DampingKind damping_kind = DampingKind::rank_one;
    double spectral_gap = 0.0;
    SystemKind kind = SystemKind::wave1d;

    int size() const { return static_cast<int>(modes.size()); }
};

double mode_frequency(SystemKind kind, int n);

// Signed modal coefficient of the damping for mode n (1-based).  Closed forms
// for the named profiles; aligned composite Gauss-Legendre panels for
// tabulated ones (panel width <= 1/(2n), so the oscillation is resolved).
double coupling_coefficient(const SystemSpec& spec, int n);

// Validates the spec (xi0 in (0,1), alpha in (0,1], N >= 2, sane tables) and
// materializes modes, damping kind and the truncated spectral gap.
ModalSystem build_modal_system(const SystemSpec& spec);

// Smallest gap between consecutive retained frequencies.
double spectral_gap(const ModalSystem& ms);

std::string to_string(SystemKind k);

} // namespace nustab
