#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ionize/dressed_system.hpp"
#include "ionize/observables.hpp"
#include "oracles.hpp"

using namespace ionize;

namespace {

Eigen::MatrixXcd pure(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

Eigen::VectorXcd basis(int dim, int k) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v(k) = 1.0;
    return v;
}

Eigen::MatrixXcd fock(int dim, int n) { return pure(basis(dim, n)); }

}  // namespace

TEST(PartialTrace, ProductStateFactorises) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXcd rt = oracle::random_density(3, rng);
    const Eigen::MatrixXcd rr = oracle::random_density(5, rng);
    const Eigen::MatrixXcd joint = oracle::kron(rt, rr);
    EXPECT_LT((reduce_transmon(joint, 3, 5) - rt).norm(), 1e-14);
    EXPECT_LT((reduce_resonator(joint, 3, 5) - rr).norm(), 1e-14);
}

TEST(PartialTrace, EntangledPairIsMaximallyMixed) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    const auto rt = reduce_transmon(pure(psi), 2, 2);
    EXPECT_LT((rt - 0.5 * Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-15);
    EXPECT_NEAR(purity(rt), 0.5, 1e-15);
}

TEST(PartialTrace, RandomStatesKeepTraceAndHermiticity) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::MatrixXcd rho = oracle::random_density(4 * 6, rng);
        const auto rt = reduce_transmon(rho, 4, 6);
        const auto rr = reduce_resonator(rho, 4, 6);
        EXPECT_NEAR(rt.trace().real(), 1.0, 1e-13);
        EXPECT_NEAR(rr.trace().real(), 1.0, 1e-13);
        EXPECT_LT((rt - rt.adjoint()).norm(), 1e-14);
        EXPECT_LE(purity(rt), 1.0 + 1e-12);
        EXPECT_GE(purity(rt), 0.25 - 1e-12);
    }
    EXPECT_THROW(reduce_transmon(Eigen::MatrixXcd::Zero(5, 5), 2, 3), DimensionError);
}

TEST(Populations, ProductFockState) {
    const auto rho = pure(basis(4 * 10, 3 * 10 + 7));
    const auto p = populations(rho, 4, 10);
    EXPECT_EQ(p.resonator, 7.0);
    EXPECT_EQ(p.transmon, 3.0);
    EXPECT_EQ(p.levels, (std::vector<double>{0, 0, 0, 1}));
}

TEST(Populations, CoherentResonatorMean) {
    const cplx alpha(1.2, -0.7);
    const Eigen::VectorXcd psi = oracle::kron(basis(2, 1), oracle::coherent(alpha, 40));
    const auto p = populations(pure(psi), 2, 40);
    EXPECT_NEAR(p.resonator, std::norm(alpha), 1e-12);
    EXPECT_NEAR(p.transmon, 1.0, 1e-12);
}

TEST(Purity, PureAndMixed) {
    std::mt19937_64 rng(4);
    Eigen::VectorXcd v = oracle::random_density(5, rng).col(0);
    v.normalize();
    EXPECT_NEAR(purity(pure(v)), 1.0, 1e-14);
    EXPECT_NEAR(purity(Eigen::MatrixXcd::Identity(6, 6) / 6.0), 1.0 / 6.0, 1e-15);
}

TEST(Wigner, VacuumAndSinglePhotonAtOrigin) {
    WignerGridSpec one{0, 0, 0, 0, 1, 1};
    EXPECT_NEAR(wigner(fock(4, 0), one).values(0, 0), 2.0 / std::numbers::pi, 1e-14);
    EXPECT_NEAR(wigner(fock(4, 1), one).values(0, 0), -2.0 / std::numbers::pi, 1e-14);
    EXPECT_NEAR(wigner(fock(6, 2), one).values(0, 0), 2.0 / std::numbers::pi, 1e-14);
}

TEST(Wigner, FockStatesAgainstLaguerreFormula) {
    // W_n(β) = (2/π)(−1)ⁿ e^{−2|β|²} L_n(4|β|²)
    auto laguerre = [](int n, double x) {
        double a = 1.0, b = 1.0 - x;
        if (n == 0) return a;
        for (int k = 1; k < n; ++k) {
            const double c = ((2 * k + 1 - x) * b - k * a) / (k + 1);
            a = b;
            b = c;
        }
        return b;
    };
    const auto spec = WignerGridSpec::square(2.0, 9);
    for (int n : {0, 1, 3, 6}) {
        const auto w = wigner(fock(20, n), spec);
        for (int x = 0; x < 9; ++x)
            for (int y = 0; y < 9; ++y) {
                const double r2 = w.re[x] * w.re[x] + w.im[y] * w.im[y];
                const double expected = 2.0 / std::numbers::pi * (n % 2 ? -1 : 1) * std::exp(-2 * r2) * laguerre(n, 4 * r2);
                EXPECT_NEAR(w.values(x, y), expected, 1e-12);
            }
    }
}

TEST(Wigner, CoherentStateGaussian) {
    const cplx alpha(3.0, 4.0);
    const Eigen::VectorXcd psi = oracle::coherent(alpha, 120);
    WignerGridSpec spec{1.5, 4.5, 2.5, 5.5, 13, 13};
    const auto w = wigner(pure(psi), spec);
    for (int x = 0; x < 13; ++x)
        for (int y = 0; y < 13; ++y)
            EXPECT_NEAR(w.values(x, y), oracle::coherent_wigner(alpha, {w.re[x], w.im[y]}), 1e-10);
}

TEST(Wigner, NormalisationAndMarginal) {
    const Eigen::VectorXcd psi = oracle::coherent({1.0, -0.5}, 110);
    const auto w = wigner(pure(psi), WignerGridSpec::square(5.0, 101));
    EXPECT_NEAR(w.integral, 1.0, 0.01);
    // position marginal of |2⟩: ∫W dIm β = |ψ_2(x)|² in β units, ψ ∝ H_2(√2 x) e^{−x²}
    const auto w2 = wigner(fock(24, 2), WignerGridSpec::square(2.2, 121));
    const double dy = w2.im[1] - w2.im[0];
    for (int x = 0; x < 121; x += 20) {
        double acc = 0.0;
        for (int y = 0; y < 121; ++y) acc += (y == 0 || y == 120 ? 0.5 : 1.0) * w2.values(x, y);
        acc *= dy;
        const double q = std::sqrt(2.0) * w2.re[x];
        const double h2 = 4 * q * q - 2;
        const double expected = std::sqrt(2.0 / std::numbers::pi) * h2 * h2 * std::exp(-q * q) / 8.0;
        EXPECT_NEAR(acc, expected, 0.01 * std::max(expected, 0.1));
    }
}

TEST(Wigner, GridBeyondTruncationThrows) {
    // a square of half-width 2 reaches |β|² = 8, which needs more than 16 Fock states
    EXPECT_THROW(wigner(fock(16, 0), WignerGridSpec::square(2.0, 5)), TruncationError);
    EXPECT_NO_THROW(wigner(fock(16, 0), WignerGridSpec::square(1.9, 5)));
    const auto spec = WignerGridSpec::square(2.0, 5);
    const auto padded = pad_for_grid(fock(16, 0), spec);
    EXPECT_EQ(padded.rows(), 17);
    EXPECT_NO_THROW(wigner(padded, spec));
}

TEST(Wigner, LargeAmplitudesStayAccurate) {
    for (const cplx alpha : {cplx(12.0, 0.0), cplx(-7.0, 9.0), cplx(0.0, 15.0)}) {
        const Eigen::VectorXcd psi = oracle::coherent(alpha, 520);
        WignerGridSpec spec{alpha.real() - 1.0, alpha.real() + 1.0, alpha.imag() - 1.0, alpha.imag() + 1.0, 5, 5};
        const auto w = wigner(pure(psi), spec);
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y)
                EXPECT_NEAR(w.values(x, y), oracle::coherent_wigner(alpha, {w.re[x], w.im[y]}), 1e-9) << alpha;
    }
    // far from a low-photon state the function is negligible but finite
    const auto far = wigner(fock(1030, 3), WignerGridSpec{15.5, 16.0, 15.5, 16.0, 2, 2});
    EXPECT_TRUE(far.values.allFinite());
    EXPECT_LT(far.values.cwiseAbs().maxCoeff(), 1e-300);
}

TEST(DressedPopulations, MatchBareWithoutCoupling) {
    SystemParams p;
    p.dim_t = 3;
    p.dim_r = 6;
    p.g = 0.0;
    const auto d = dressed_spectrum(p);
    std::vector<std::vector<Eigen::Index>> ladders(3);
    for (int i = 0; i < 3; ++i)
        for (int n = 0; n < 6; ++n) {
            Eigen::Index arg;
            d.states.row(d.flat(i, n)).cwiseAbs().maxCoeff(&arg);
            ladders[static_cast<std::size_t>(i)].push_back(arg);
        }
    std::mt19937_64 rng(6);
    const Eigen::MatrixXcd rho = oracle::random_density(18, rng);
    const auto bare = populations(rho, 3, 6);
    const auto dressed = dressed_populations(rho, 3, 6, d.states, ladders);
    EXPECT_NEAR(dressed.resonator, bare.resonator, 1e-12);
    EXPECT_NEAR(dressed.transmon, bare.transmon, 1e-12);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(dressed.levels[i], bare.levels[i], 1e-12);
}
