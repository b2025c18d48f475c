#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "ionize/lindblad.hpp"
#include "oracles.hpp"

using namespace ionize;

namespace {

SystemParams small_system(int dim_t, int dim_r, double drive) {
    SystemParams p;
    p.dim_t = dim_t;
    p.dim_r = dim_r;
    p.drive_amp = drive;
    return p;
}

oracle::LabModel lab_model(const SystemParams& p, const TransmonSpectrum& s, int dim_r) {
    oracle::LabModel m;
    m.energies = s.energies;
    m.n_t = s.n_elements;
    m.omega_r = p.omega_r;
    m.g = p.g;
    m.kappa = p.kappa;
    m.drive = p.drive_amp;
    m.omega_d = p.drive_freq;
    m.dim_r = dim_r;
    return m;
}

PropagatorConfig no_growth(int order = 10, int steps = 75) {
    PropagatorConfig c;
    c.taylor_order = order;
    c.steps_per_drive_period = steps;
    c.truncation_threshold = 1e300;
    return c;
}

Eigen::MatrixXcd random_matrix(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cplx(nd(rng), nd(rng));
    return m;
}

// Dense fourth-order Magnus reference over [0, t_end] with `steps` steps.
Eigen::MatrixXcd dense_reference(const oracle::LabModel& m, const Eigen::MatrixXcd& rho0, double t_end, int steps) {
    const double h = t_end / steps;
    const double off = std::sqrt(3.0) / 6.0;
    const Eigen::MatrixXcd c = m.jump();
    const double k = oracle::two_pi * m.kappa;
    Eigen::VectorXcd v = oracle::vec(rho0);
    for (int s = 0; s < steps; ++s) {
        const double t = s * h;
        const Eigen::MatrixXcd l1 = oracle::liouvillian(m.rotating(t + (0.5 - off) * h), c, k);
        const Eigen::MatrixXcd l2 = oracle::liouvillian(m.rotating(t + (0.5 + off) * h), c, k);
        const Eigen::MatrixXcd omega = 0.5 * h * (l1 + l2) + (std::sqrt(3.0) / 12.0) * h * h * (l2 * l1 - l1 * l2);
        v = omega.exp() * v;
    }
    return oracle::unvec(v, rho0.rows());
}

double frobenius(const Eigen::MatrixXcd& a) { return a.norm(); }

}  // namespace

TEST(Generator, MatchesDenseLiouvillian) {
    const auto p = small_system(3, 8, 0.05);
    const auto s = diagonalize_transmon(p.transmon, 3);
    LindbladGenerator gen(p, s, 8);
    const auto m = lab_model(p, s, 8);
    std::mt19937_64 rng(101);
    for (double t : {0.0, 0.0317, 0.11, 1.7}) {
        const auto c = gen.at(t);
        const Eigen::MatrixXcd h_ref = m.rotating(t);
        EXPECT_LT(frobenius(gen.hamiltonian(c) - h_ref) / frobenius(h_ref), 1e-13) << t;
        const Eigen::MatrixXcd l = oracle::liouvillian(h_ref, m.jump(), oracle::two_pi * p.kappa);
        const Eigen::MatrixXcd rho = random_matrix(24, rng);
        Eigen::MatrixXcd out;
        gen.apply(c, rho, out);
        const Eigen::MatrixXcd ref = oracle::unvec(l * oracle::vec(rho), 24);
        EXPECT_LT(frobenius(out - ref) / frobenius(ref), 1e-12) << t;
    }
}

TEST(Generator, HermitianPathAgrees) {
    const auto p = small_system(4, 10, 0.1);
    const auto s = diagonalize_transmon(p.transmon, 4);
    LindbladGenerator gen(p, s, 10);
    std::mt19937_64 rng(5);
    const Eigen::MatrixXcd rho = oracle::random_density(40, rng);
    Eigen::MatrixXcd a, b;
    gen.apply(gen.at(0.3), rho, a);
    gen.apply_hermitian(gen.at(0.3), rho, b);
    EXPECT_LT(frobenius(a - b), 1e-12 * frobenius(a));
}

TEST(Generator, TraceAnnihilatedRandomized) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> t(0.0, 5.0), drive(0.0, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
        const auto p = small_system(3, 9, drive(rng));
        const auto s = diagonalize_transmon(p.transmon, 3);
        LindbladGenerator gen(p, s, 9);
        const Eigen::MatrixXcd rho = random_matrix(27, rng);
        Eigen::MatrixXcd out;
        gen.apply(gen.at(t(rng)), rho, out);
        EXPECT_LT(std::abs(out.trace()), 1e-11 * frobenius(out));
    }
}

TEST(Generator, PeriodAverageRemovesOscillatingTerms) {
    const auto p = small_system(3, 6, 0.2);
    const auto s = diagonalize_transmon(p.transmon, 3);
    LindbladGenerator gen(p, s, 6);
    const double period = 1.0 / p.drive_freq;
    const auto c = gen.averaged(0.37, period);
    EXPECT_LT(std::abs(c.coupling), 1e-12);
    EXPECT_LT(std::abs(c.drive - cplx(-0.5 * two_pi * p.drive_amp, 0.0)), 1e-12);
}

TEST(Generator, AverageMatchesQuadrature) {
    const auto p = small_system(3, 8, 0.05);
    const auto s = diagonalize_transmon(p.transmon, 3);
    LindbladGenerator gen(p, s, 8);
    const auto m = lab_model(p, s, 8);
    const double quarter = 0.25 / p.drive_freq;
    for (double t : {0.0, 0.05, 0.4}) {
        const Eigen::MatrixXcd ref = oracle::averaged_rotating(m, t, quarter);
        EXPECT_LT(frobenius(gen.hamiltonian(gen.averaged(t, quarter)) - ref) / frobenius(ref), 1e-12);
    }
    // short steps take the small-argument branch of the phase average
    const double tiny = 1e-6;
    const Eigen::MatrixXcd ref = oracle::averaged_rotating(m, 0.1, tiny, 1);
    EXPECT_LT(frobenius(gen.hamiltonian(gen.averaged(0.1, tiny)) - ref) / frobenius(ref), 1e-12);
}

TEST(Propagator, DiagonalStateFixedWithoutCouplingDriveOrLoss) {
    auto p = small_system(4, 6, 0.0);
    p.g = 0.0;
    p.kappa = 0.0;
    const auto s = diagonalize_transmon(p.transmon, 4);
    Propagator prop(p, s, no_growth(), 6);
    Eigen::VectorXd diag = Eigen::VectorXd::LinSpaced(24, 1.0, 24.0);
    diag /= diag.sum();
    DensityMatrix state{4, 6, diag.cast<cplx>().asDiagonal(), 0.0};
    const Eigen::MatrixXcd start = state.rho;
    for (int k = 0; k < 20; ++k) prop.step(state);
    EXPECT_EQ(state.rho, start);
}

TEST(Propagator, SingleStepMatchesMatrixExponential) {
    const auto p = small_system(3, 8, 0.05);
    const auto s = diagonalize_transmon(p.transmon, 3);
    Propagator prop(p, s, no_growth(), 8);
    const auto m = lab_model(p, s, 8);
    std::mt19937_64 rng(3);
    DensityMatrix state{3, 8, oracle::random_density(24, rng), 0.21};
    const double dt = prop.step_size();
    const Eigen::MatrixXcd lbar =
        oracle::liouvillian(oracle::averaged_rotating(m, 0.21, dt), m.jump(), oracle::two_pi * p.kappa);
    const Eigen::MatrixXcd expected = oracle::unvec((dt * lbar).exp() * oracle::vec(state.rho), 24);
    prop.step(state);
    EXPECT_LT(frobenius(state.rho - expected), 1e-10);
    EXPECT_NEAR(state.time, 0.21 + dt, 1e-15);
    EXPECT_LT(prop.last_hermiticity_drift(), 1e-12);
}

TEST(Propagator, SecondOrderInStepSize) {
    const auto p = small_system(2, 6, 0.3);
    const auto s = diagonalize_transmon(p.transmon, 2);
    const auto m = lab_model(p, s, 6);
    std::mt19937_64 rng(9);
    const Eigen::MatrixXcd rho0 = oracle::random_density(12, rng);
    const double period = 1.0 / p.drive_freq;
    const Eigen::MatrixXcd ref = dense_reference(m, rho0, period, 640);

    auto run = [&](int steps, bool magnus) {
        auto cfg = no_growth(12, steps);
        cfg.magnus_commutator = magnus;
        Propagator prop(p, s, cfg, 6);
        DensityMatrix st{2, 6, rho0, 0.0};
        for (int k = 0; k < steps; ++k) {
            st.time = k * prop.step_size();
            prop.step(st);
        }
        return frobenius(st.rho - ref);
    };
    const double e20 = run(20, false), e40 = run(40, false);
    EXPECT_GT(e20 / e40, 3.5);
    EXPECT_LT(e20 / e40, 4.5);
    const double m20 = run(20, true), m40 = run(40, true);
    EXPECT_LT(m20, e20);
    EXPECT_GT(m20 / m40, 12.0);
}

TEST(Propagator, TaylorOrderSufficiency) {
    const auto p = small_system(4, 10, 0.1);
    const auto s = diagonalize_transmon(p.transmon, 4);
    std::mt19937_64 rng(21);
    const Eigen::MatrixXcd rho0 = oracle::random_density(40, rng);
    auto run = [&](int order) {
        Propagator prop(p, s, no_growth(order), 10);
        DensityMatrix st{4, 10, rho0, 0.0};
        for (int k = 0; k < 75; ++k) {
            st.time = k * prop.step_size();
            prop.step(st);
        }
        return st.rho;
    };
    EXPECT_LT(frobenius(run(8) - run(12)), 1e-10);
    EXPECT_LT(frobenius(run(10) - run(16)), 1e-12);
}

TEST(Propagator, TraceHermiticityPositivity) {
    const auto p = small_system(4, 12, 0.1);
    const auto s = diagonalize_transmon(p.transmon, 4);
    Propagator prop(p, s, no_growth(), 12);
    std::mt19937_64 rng(8);
    DensityMatrix st{4, 12, oracle::random_density(48, rng), 0.0};
    // push the random state into low photon numbers so truncation is mild
    for (int i = 0; i < 4; ++i)
        for (int n = 6; n < 12; ++n) {
            st.rho.row(i * 12 + n).setZero();
            st.rho.col(i * 12 + n).setZero();
        }
    st.rho /= st.rho.trace();
    for (int k = 0; k < 5 * 75; ++k) {
        st.time = k * prop.step_size();
        prop.step(st);
        ASSERT_LT(prop.last_hermiticity_drift(), 1e-10);
    }
    EXPECT_LT(std::abs(st.rho.trace() - 1.0), 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(st.rho, Eigen::EigenvaluesOnly);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9);
}

TEST(Propagator, DressedEigenstateStationaryAtWholePeriods) {
    auto p = small_system(3, 6, 0.0);
    p.kappa = 0.0;
    const auto s = diagonalize_transmon(p.transmon, 3);
    const auto d = dressed_spectrum(p, s);
    const auto init = initial_state(d, 0, 6);
    const auto series = evolve(p, s, no_growth(), init, 10.0 / p.drive_freq);
    ASSERT_TRUE(series.complete());
    ASSERT_EQ(series.records.size(), 11u);
    auto drift = [&](int steps) {
        Propagator prop(p, s, no_growth(10, steps), 6);
        DensityMatrix st = init;
        for (int k = 0; k < 10 * steps; ++k) {
            st.time = k * prop.step_size();
            prop.step(st);
        }
        return frobenius(st.rho - init.rho);
    };
    const double coarse = drift(75), fine = drift(150);
    EXPECT_LT(coarse, 1e-5);
    EXPECT_GT(coarse / fine, 3.5);
    EXPECT_NEAR(series.records.back().n_r, series.records.front().n_r, 1e-6);
}

TEST(Propagator, UncoupledCavityMatchesClosedForm) {
    auto p = small_system(2, 10, 0.01);
    p.g = 0.0;
    const auto s = diagonalize_transmon(p.transmon, 2);
    DensityMatrix vac{2, 10, Eigen::MatrixXcd::Zero(20, 20), 0.0};
    vac.rho(0, 0) = 1.0;
    const auto series = evolve(p, s, no_growth(), vac, 20.0);
    ASSERT_TRUE(series.complete());
    for (const auto& r : series.records) {
        const double expected = oracle::driven_cavity_photons(p.drive_amp, p.kappa, p.drive_freq, r.time);
        EXPECT_NEAR(r.n_r, expected, 1e-4 * std::max(expected, 1e-3)) << r.time;
        EXPECT_NEAR(r.n_t, 0.0, 1e-14);
    }
    // far from the drive frequency scale the rotating-wave limit holds
    const double t = series.records.back().time;
    const double rwa = std::pow(p.drive_amp / p.kappa * (1.0 - std::exp(-std::numbers::pi * p.kappa * t)), 2);
    EXPECT_NEAR(series.records.back().n_r, rwa, 2e-3 * rwa);
}

TEST(Truncation, ErrorMeasure) {
    DensityMatrix vac{2, 8, Eigen::MatrixXcd::Zero(16, 16), 0.0};
    vac.rho(0, 0) = 1.0;
    EXPECT_EQ(truncation_error(vac), 0.0);
    DensityMatrix top{2, 8, Eigen::MatrixXcd::Zero(16, 16), 0.0};
    top.rho(15, 15) = 1.0;
    EXPECT_NEAR(truncation_error(top), 8.0, 1e-14);
    const Eigen::VectorXcd psi = oracle::coherent(std::sqrt(8.0), 16);
    DensityMatrix coh{1, 16, psi * psi.adjoint(), 0.0};
    PropagatorConfig cfg;
    EXPECT_GT(truncation_error(coh), cfg.truncation_threshold);
    const auto grown = adapt_hilbert_space(coh, cfg);
    EXPECT_TRUE(grown.resized);
    EXPECT_EQ(grown.state.dim_r, 32);
    cfg.max_dim_r = 16;
    EXPECT_THROW(adapt_hilbert_space(coh, cfg), MaxDimensionError);
}

TEST(Truncation, PaddingPreservesBlocks) {
    std::mt19937_64 rng(12);
    DensityMatrix st{3, 5, oracle::random_density(15, rng), 1.5};
    const auto padded = pad_resonator(st, 9);
    EXPECT_EQ(padded.dim_r, 9);
    EXPECT_EQ(padded.time, 1.5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int a = 0; a < 9; ++a)
                for (int b = 0; b < 9; ++b) {
                    const cplx v = padded.rho(i * 9 + a, j * 9 + b);
                    if (a < 5 && b < 5) EXPECT_EQ(v, st.rho(i * 5 + a, j * 5 + b));
                    else EXPECT_EQ(v, cplx(0.0, 0.0));
                }
    EXPECT_THROW(pad_resonator(st, 4), DimensionError);
}

TEST(Evolve, AdaptiveGrowthMatchesFixedLargeSpace) {
    auto p = small_system(2, 4, 0.04);
    p.g = 0.0;
    const auto s = diagonalize_transmon(p.transmon, 2);
    auto cfg = no_growth();
    cfg.truncation_threshold = 1e-9;
    cfg.max_dim_r = 64;
    DensityMatrix small{2, 4, Eigen::MatrixXcd::Zero(8, 8), 0.0};
    small.rho(0, 0) = 1.0;
    const auto grown = evolve(p, s, cfg, small, 8.0);
    ASSERT_TRUE(grown.complete()) << grown.error;
    EXPECT_GT(grown.resizes, 0);
    DensityMatrix big{2, 32, Eigen::MatrixXcd::Zero(64, 64), 0.0};
    big.rho(0, 0) = 1.0;
    const auto fixed = evolve(p, s, no_growth(), big, 8.0);
    ASSERT_EQ(grown.records.size(), fixed.records.size());
    for (std::size_t k = 0; k < fixed.records.size(); ++k) EXPECT_NEAR(grown.records[k].n_r, fixed.records[k].n_r, 1e-6);

    cfg.max_dim_r = 8;
    const auto capped = evolve(p, s, cfg, small, 8.0);
    EXPECT_FALSE(capped.complete());
    EXPECT_NE(capped.error.find("cap"), std::string::npos);
}

TEST(Evolve, RecordsAtWholePeriodsAndStopsEarly) {
    const auto p = small_system(3, 8, 0.02);
    const auto s = diagonalize_transmon(p.transmon, 3);
    auto cfg = no_growth();
    cfg.record_every = 2;
    const auto init = initial_state(dressed_spectrum(p, s), 1, 8);
    EvolveOptions opts;
    int seen = 0;
    opts.stop_when = [&](const TimeRecord&) { return ++seen == 3; };
    const auto series = evolve(p, s, cfg, init, 10.0, opts);
    ASSERT_EQ(series.records.size(), 3u);
    EXPECT_TRUE(series.complete());
    EXPECT_EQ(series.records[0].time, 0.0);
    EXPECT_NEAR(series.records[2].time, 4.0 / p.drive_freq, 1e-12);
}

TEST(InitialState, ProductStateWithoutCouplingAndDressedWithIt) {
    auto p = small_system(5, 10, 0.0);
    p.g = 0.0;
    const auto s = diagonalize_transmon(p.transmon, 5);
    for (int label = 0; label < 3; ++label) {
        const auto st = initial_state(dressed_spectrum(p, s), label, 10);
        EXPECT_NEAR(std::abs(st.rho(label * 10, label * 10)), 1.0, 1e-12);
        const auto r = observe(st);
        EXPECT_NEAR(r.purity, 1.0, 1e-12);
        EXPECT_NEAR(r.n_t, label, 1e-12);
    }
    p.g = 0.25;
    const auto d = dressed_spectrum(p, s);
    const auto st = initial_state(d, 1, 20);
    EXPECT_EQ(st.dim_r, 20);
    EXPECT_NEAR(st.rho.trace().real(), 1.0, 1e-12);
    EXPECT_NEAR(observe(st).n_t, 1.0, 0.02);
    EXPECT_THROW(initial_state(d, 7, 10), IdentificationError);
}
