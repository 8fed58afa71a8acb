#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <variant>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nustab/modal_system.hpp"
#include "nustab/operator_assembly.hpp"
#include "nustab/rng.hpp"

using namespace nustab;

namespace {

constexpr double kPi = 3.14159265358979323846;

ModalSystem wave(WeakProfile profile, int n, double xi0 = 0.0) {
    SystemSpec spec;
    spec.kind = SystemKind::wave1d;
    WeakDamping w;
    w.profile = profile;
    w.xi0 = xi0;
    spec.damping = w;
    spec.truncation = n;
    return build_modal_system(spec);
}

ModalSystem fractional(double alpha, int n) {
    SystemSpec spec;
    spec.kind = SystemKind::wave1d;
    spec.damping = FractionalDamping{alpha};
    spec.truncation = n;
    return build_modal_system(spec);
}

} // namespace

TEST_CASE("single-mode undamped block is the plain rotation generator") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 2);
    TruncatedGenerator gen = assemble_generator(ms);
    Eigen::MatrixXd a = gen.dense();
    REQUIRE(a.rows() == 4);
    CHECK(a(0, 1) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(a(1, 0) == doctest::Approx(-kPi).epsilon(1e-15));
    CHECK(a(2, 3) == doctest::Approx(2.0 * kPi).epsilon(1e-15));
    CHECK(a(3, 2) == doctest::Approx(-2.0 * kPi).epsilon(1e-15));
    // Everything off the 2x2 blocks is exactly zero.
    CHECK(a(0, 0) == 0.0);
    CHECK(a(0, 2) == 0.0);
    CHECK(a(1, 3) == 0.0);
    CHECK((a + a.transpose()).norm() == 0.0);
}

TEST_CASE("rank-one damped block matches the worked 2x2 example") {
    // lambda = pi, b = 1: damped matrix [[0, pi], [-pi, -1]].
    TruncatedGenerator gen;
    gen.lambda = Eigen::VectorXd::Constant(1, kPi);
    RankOneDamping b;
    b.beta = Eigen::VectorXd::Zero(2);
    b.beta(1) = 1.0;
    DampedGenerator dg = assemble_damped(gen, DampingMatrix{b});
    CHECK(dg.matrix(0, 0) == 0.0);
    CHECK(dg.matrix(0, 1) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(dg.matrix(1, 0) == doctest::Approx(-kPi).epsilon(1e-15));
    CHECK(dg.matrix(1, 1) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("damping vector lives in the velocity slots") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 3);
    DampingMatrix dm = assemble_damping(ms);
    const auto& b = std::get<RankOneDamping>(dm);
    REQUIRE(b.beta.size() == 6);
    for (int n = 0; n < 3; ++n) {
        CHECK(b.beta(2 * n) == 0.0);
        CHECK(b.beta(2 * n + 1) == ms.modes[n].coupling);
    }

    ModalSystem fr = fractional(0.5, 3);
    DampingMatrix dd = assemble_damping(fr);
    const auto& d = std::get<DiagonalDamping>(dd);
    REQUIRE(d.d.size() == 3);
    for (int n = 0; n < 3; ++n)
        CHECK(d.d(n) == doctest::Approx(std::pow((n + 1) * kPi, -0.5)).epsilon(1e-14));
}

TEST_CASE("dissipation identity holds on random states") {
    for (const ModalSystem& ms :
         {wave(WeakProfile::one_minus_xi, 12), wave(WeakProfile::xi2_one_minus_xi, 12),
          fractional(0.25, 12)}) {
        DampedGenerator dg = assemble_damped(ms);
        CounterRng rng(7u);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd x(dg.dim());
            for (int i = 0; i < dg.dim(); ++i) x(i) = rng.next_gaussian();
            const double lhs = x.dot(dg.matrix * x);
            const double rhs = -bstar_norm_sq(dg.damping, x.cast<std::complex<double>>());
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST_CASE("damped eigenvalues sit in the closed left half-plane") {
    for (const ModalSystem& ms :
         {wave(WeakProfile::one_minus_xi, 16), fractional(0.5, 16)}) {
        DampedGenerator dg = assemble_damped(ms);
        Eigen::EigenSolver<Eigen::MatrixXd> es(dg.matrix);
        for (int i = 0; i < dg.dim(); ++i)
            CHECK(es.eigenvalues()(i).real() <= 1e-12);
    }
}

TEST_CASE("two-mode damped eigenvalues match precomputed values") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 2);
    DampedGenerator dg = assemble_damped(ms);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dg.matrix);
    std::vector<std::complex<double>> eig;
    for (int i = 0; i < 4; ++i) eig.push_back(es.eigenvalues()(i));
    std::sort(eig.begin(), eig.end(), [](auto a, auto b) {
        return std::abs(a.imag()) < std::abs(b.imag());
    });
    CHECK(eig[0].real() == doctest::Approx(-0.10136507).epsilon(1e-5));
    CHECK(std::abs(eig[0].imag()) == doctest::Approx(3.14050134).epsilon(1e-6));
    CHECK(eig[2].real() == doctest::Approx(-0.02528641).epsilon(1e-5));
    CHECK(std::abs(eig[2].imag()) == doctest::Approx(6.28204636).epsilon(1e-6));
}

TEST_CASE("bbstar_dense agrees with the applied form") {
    ModalSystem ms = wave(WeakProfile::indicator, 8, 0.3);
    DampingMatrix dm = assemble_damping(ms);
    Eigen::MatrixXd bb = bbstar_dense(dm, 16);
    CounterRng rng(11u);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXcd x = rng.unit_vector_complex(16);
        const double quad = (x.adjoint() * (bb * x))(0).real();
        CHECK(quad == doctest::Approx(bstar_norm_sq(dm, x)).epsilon(1e-12));
    }
    // Symmetric PSD by construction.
    CHECK((bb - bb.transpose()).norm() == 0.0);
}

TEST_CASE("diagonal damping applies mode by mode") {
    ModalSystem fr = fractional(1.0, 2);
    DampingMatrix dm = assemble_damping(fr);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(4);
    x(1) = std::complex<double>(2.0, 0.0);  // velocity slot of mode 1
    x(3) = std::complex<double>(0.0, 3.0);  // velocity slot of mode 2
    Eigen::VectorXcd y = bstar_apply(dm, x);
    REQUIRE(y.size() == 2);
    CHECK(std::abs(y(0) - std::complex<double>(2.0 / kPi, 0.0)) < 1e-15);
    CHECK(std::abs(y(1) - std::complex<double>(0.0, 3.0 / (2.0 * kPi))) < 1e-15);
}

TEST_CASE("validity limit is half the top retained frequency") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 10);
    CHECK(truncation_validity_limit(ms) == doctest::Approx(5.0 * kPi).epsilon(1e-15));
}

TEST_CASE("matrix dumps round-trip through text and binary") {
    Eigen::MatrixXd m(2, 2);
    m << 1.25, -3.5, 0.0078125, 1e-17;

    const std::string txt = "/tmp/nustab_test_dump.txt";
    dump_matrix(m, txt, false);
    std::ifstream in(txt);
    int rows = 0, cols = 0;
    in >> rows >> cols;
    CHECK(rows == 2);
    CHECK(cols == 2);
    double v[4];
    for (double& x : v) in >> x;
    CHECK(v[0] == 1.25);
    CHECK(v[1] == 0.0078125); // column-major order
    CHECK(v[2] == -3.5);
    CHECK(v[3] == 1e-17);

    const std::string bin = "/tmp/nustab_test_dump.bin";
    dump_matrix(m, bin, true);
    std::ifstream rb(bin, std::ios::binary);
    std::int64_t shape[2];
    rb.read(reinterpret_cast<char*>(shape), sizeof shape);
    CHECK(shape[0] == 2);
    CHECK(shape[1] == 2);
    double w[4];
    rb.read(reinterpret_cast<char*>(w), sizeof w);
    CHECK(rb.gcount() == static_cast<std::streamsize>(sizeof w));
    CHECK(w[0] == 1.25);
    CHECK(w[1] == 0.0078125);
    CHECK(w[2] == -3.5);
    CHECK(w[3] == 1e-17);
    std::remove(txt.c_str());
    std::remove(bin.c_str());
}

TEST_CASE("undamped propagator stays orthogonal over long horizons") {
    ModalSystem ms = wave(WeakProfile::one_minus_xi, 6);
    TruncatedGenerator gen = assemble_generator(ms);
    Eigen::MatrixXd a = gen.dense();
    for (double t : {1.0, 10.0, 100.0}) {
        Eigen::MatrixXd p = (t * a).exp();
        Eigen::MatrixXd gram = p.transpose() * p;
        CHECK((gram - Eigen::MatrixXd::Identity(12, 12)).norm() < 1e-10);
    }
}
