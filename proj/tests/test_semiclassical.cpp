#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ionize/semiclassical.hpp"

using namespace ionize;

namespace {

// ω(n) = w0 + k·n sampled on n = 0..size−1; linear interpolation is exact.
BranchFrequencyCurve kerr_curve(double w0, double k, int size, int label = 0) {
    std::vector<double> v(static_cast<std::size_t>(size));
    for (int n = 0; n < size; ++n) v[static_cast<std::size_t>(n)] = w0 + k * n;
    return {label, v, v};
}

SystemParams params(double omega_d, double drive, double kappa) {
    SystemParams p;
    p.drive_freq = omega_d;
    p.drive_amp = drive;
    p.kappa = kappa;
    return p;
}

// Real roots of n((Δ + K n)² + κ²/4) = ℰ²/4 on [0, n_max] by scan and bisection.
std::vector<double> kerr_steady_photons(double delta, double k, double kappa, double drive, double n_max) {
    auto f = [&](double n) { return n * ((delta + k * n) * (delta + k * n) + 0.25 * kappa * kappa) - 0.25 * drive * drive; };
    std::vector<double> roots;
    const int samples = 20000;
    for (int s = 0; s < samples; ++s) {
        double lo = n_max * s / samples, hi = n_max * (s + 1) / samples;
        if (f(lo) * f(hi) > 0) continue;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (f(lo) * f(mid) <= 0) hi = mid; else lo = mid;
        }
        roots.push_back(0.5 * (lo + hi));
    }
    return roots;
}

}  // namespace

TEST(BranchEom, UndrivenVacuumIsFixed) {
    const auto c = kerr_curve(7.4, 0.002, 101);
    const auto tr = integrate_branch_eom(c, params(7.5, 0.0, 0.02), 0.0, 100.0, 0.01);
    for (const auto a : tr.alpha) EXPECT_EQ(a, cplx(0.0, 0.0));
}

TEST(BranchEom, ResonantLinearResponseClosedForm) {
    const double drive = 0.01, kappa = 0.02;
    const auto c = kerr_curve(7.5, 0.0, 101);
    const auto p = params(7.5, drive, kappa);
    const auto tr = integrate_branch_eom(c, p, 0.0, 200.0, 0.05);
    for (std::size_t k = 0; k < tr.times.size(); k += 100) {
        const double t = tr.times[k];
        const cplx expected = cplx(0.0, -drive / kappa) * (1.0 - std::exp(-std::numbers::pi * kappa * t));
        EXPECT_LT(std::abs(tr.alpha[k] - expected), 1e-9) << t;
    }
}

TEST(BranchEom, StepHalvingConverges) {
    const auto c = kerr_curve(7.4, 0.002, 201);
    const auto p = params(7.5, 0.35, 0.02);
    const double dt = 0.5 * max_stable_step(c, p);
    const auto a = integrate_branch_eom(c, p, 0.0, 50.0, dt);
    const auto b = integrate_branch_eom(c, p, 0.0, 50.0, dt / 2);
    EXPECT_LT(std::abs(a.final_alpha() - b.final_alpha()), 1e-6);
}

TEST(BranchEom, StepHeuristicEnforced) {
    const auto c = kerr_curve(7.4, 0.002, 201);
    const auto p = params(7.5, 0.35, 0.02);
    const double dt = max_stable_step(c, p);
    EXPECT_NEAR(dt, 1.0 / (20.0 * two_pi * (0.3 + 0.02)), 1e-12);
    EXPECT_THROW(integrate_branch_eom(c, p, 0.0, 1.0, 2.0 * dt), RangeError);
    EomOptions loose;
    loose.check_step_heuristic = false;
    EXPECT_NO_THROW(integrate_branch_eom(c, p, 0.0, 1.0, 2.0 * dt, loose));
}

TEST(BranchEom, LeavingTheCurveThrowsOrClamps) {
    const auto c = kerr_curve(7.4, 0.002, 11);
    const auto p = params(7.5, 1.0, 0.02);
    EXPECT_THROW(integrate_branch_eom(c, p, cplx(4.0, 0.0), 1.0, 0.01), DomainError);
    EXPECT_THROW(integrate_branch_eom(c, p, 0.0, 400.0, 0.01), DomainError);
    EomOptions clamp;
    clamp.range_policy = RangePolicy::ClampAndFlag;
    const auto tr = integrate_branch_eom(c, p, 0.0, 400.0, 0.01, clamp);
    EXPECT_TRUE(tr.clamped);
    const auto ok = integrate_branch_eom(c, params(7.5, 0.001, 0.02), 0.0, 10.0, 0.01, clamp);
    EXPECT_FALSE(ok.clamped);
}

TEST(BranchEom, AmplitudeBoundedRandomized) {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> drive(0.0, 0.4), k(-0.004, 0.004), radius(0.0, 12.0), phase(0.0, two_pi);
    for (int trial = 0; trial < 10; ++trial) {
        const auto c = kerr_curve(7.5 + k(rng) * 10, k(rng), 2001);
        const auto p = params(7.5, drive(rng), 0.02);
        const cplx a0 = std::polar(radius(rng), phase(rng));
        EomOptions clamp;
        clamp.range_policy = RangePolicy::ClampAndFlag;
        const auto tr = integrate_branch_eom(c, p, a0, 150.0, 0.5 * max_stable_step(c, p), clamp);
        const double bound = 1.1 * std::max(std::abs(a0), p.drive_amp / p.kappa) + 1e-12;
        for (const auto a : tr.alpha) ASSERT_LE(std::abs(a), bound) << trial;
    }
}

TEST(SteadyState, LinearOscillatorSingleAttractor) {
    const auto c = kerr_curve(7.5, 0.0, 101);
    const auto p = params(7.5, 0.05, 0.02);
    const auto r = steady_state(c, p);
    ASSERT_EQ(r.attractors.size(), 1u);
    EXPECT_FALSE(r.bistable());
    EXPECT_LT(std::abs(r.attractors[0] - cplx(0.0, -2.5)), 1e-9);
    EXPECT_LT(r.residuals[0], 1e-10);
}

TEST(SteadyState, KerrBistabilityMatchesCubicRoots) {
    const double delta = -0.1, k = 0.002, kappa = 0.02;
    const double drive = 2.0 * std::sqrt(0.03);
    const auto c = kerr_curve(7.5 + delta, k, 201);
    const auto p = params(7.5, drive, kappa);
    const auto roots = kerr_steady_photons(delta, k, kappa, drive, 200.0);
    ASSERT_EQ(roots.size(), 3u);
    const auto r = steady_state(c, p);
    ASSERT_TRUE(r.bistable());
    ASSERT_EQ(r.attractors.size(), 2u);
    // the middle root is the unstable saddle
    EXPECT_NEAR(std::norm(r.attractors[0]), roots[0], 1e-6 * roots[0]);
    EXPECT_NEAR(std::norm(r.attractors[1]), roots[2], 1e-6 * roots[2]);
    for (double res : r.residuals) EXPECT_LT(res, 1e-10);
}

TEST(SteadyState, KerrMonostableBelowThreshold) {
    const double delta = -0.1, k = 0.002, kappa = 0.02, drive = 0.05;
    const auto roots = kerr_steady_photons(delta, k, kappa, drive, 200.0);
    ASSERT_EQ(roots.size(), 1u);
    const auto r = steady_state(kerr_curve(7.5 + delta, k, 201), params(7.5, drive, kappa));
    ASSERT_EQ(r.attractors.size(), 1u);
    EXPECT_NEAR(std::norm(r.attractors[0]), roots[0], 1e-6 * roots[0]);
}

TEST(FlowField, MatchesDirectIntegrationAndReportsEscapes) {
    const auto c = kerr_curve(7.45, 0.001, 51);
    const auto p = params(7.5, 0.05, 0.02);
    std::vector<cplx> seeds = default_flow_seeds();
    seeds.push_back(cplx(10.0, 0.0));  // outside the 50-photon curve
    const auto flows = flow_field(c, p, seeds, 30.0, 0.02);
    ASSERT_EQ(flows.size(), seeds.size());
    for (std::size_t s = 0; s + 1 < seeds.size(); ++s) {
        ASSERT_TRUE(flows[s].trajectory.has_value());
        const auto direct = integrate_branch_eom(c, p, seeds[s], 30.0, 0.02);
        EXPECT_EQ(flows[s].trajectory->final_alpha(), direct.final_alpha());
    }
    EXPECT_FALSE(flows.back().trajectory.has_value());
    EXPECT_FALSE(flows.back().error.empty());
}

TEST(HandOff, StartsFromPrimaryAmplitude) {
    const auto c0 = kerr_curve(7.5, 0.0, 201, 0);
    const auto c1 = kerr_curve(7.3, 0.0, 201, 1);
    const auto p = params(7.5, 0.1, 0.02);
    const auto primary = integrate_branch_eom(c0, p, 0.0, 100.0, 0.02);
    const auto second = hand_off_trajectory(primary, c1, p, 4.0, 100.0, 0.02);
    ASSERT_TRUE(second.has_value());
    std::size_t k = 0;
    while (primary.photons[k] < 4.0) ++k;
    EXPECT_EQ(second->times.front(), primary.times[k]);
    EXPECT_EQ(second->alpha.front(), primary.alpha[k]);
    EXPECT_NEAR(second->times.back(), 100.0, 1e-9);
    EXPECT_EQ(second->label, 1);
    EXPECT_FALSE(hand_off_trajectory(primary, c1, p, 1e6, 100.0, 0.02).has_value());
}

TEST(PopulationDifference, ZeroDriveAndIdenticalBranches) {
    const auto c0 = kerr_curve(7.49, 0.0005, 201, 0);
    const auto c1 = kerr_curve(7.51, -0.0005, 201, 1);
    const std::vector<double> t_grid{0.0, 10.0, 25.0, 50.0};
    auto p = params(7.5, 0.0, 0.02);
    const auto zero = population_difference(p, c0, c1, t_grid, {0.0}, 0.02);
    EXPECT_EQ(zero.delta.cwiseAbs().maxCoeff(), 0.0);
    const auto same = population_difference(p, c0, c0, t_grid, {0.0, 0.05, 0.1}, 0.02);
    EXPECT_EQ(same.delta.cwiseAbs().maxCoeff(), 0.0);
    const auto diff = population_difference(p, c0, c1, t_grid, {0.05}, 0.02);
    EXPECT_EQ(diff.delta.rows(), 1);
    EXPECT_EQ(diff.delta.cols(), 4);
    EXPECT_EQ(diff.delta(0, 0), 0.0);
    // symmetric detunings give equal photon numbers only at linear order
    EXPECT_LT(std::abs(diff.delta(0, 3)), 0.2 * diff.ground(0, 3));
    EXPECT_THROW(population_difference(p, c0, c1, {5.0, 1.0}, {0.05}, 0.02), RangeError);
}
