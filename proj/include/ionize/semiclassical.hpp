// semiclassical.hpp — branch-wise driven damped nonlinear oscillator
//
//   α̇ = −i[ω_i(|α|²) − ω_d] α − iℰ/2 − κα/2
//
// with ω_i the smoothed branch frequency curve. Frequencies are cyclic GHz in
// the parameters and converted to rad/ns here; time is in ns.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ionize/branch_ladders.hpp"
#include "ionize/dressed_system.hpp"
#include "ionize/errors.hpp"
#include "ionize/units.hpp"

namespace ionize {

struct SemiclassicalTrajectory {
    int label{0};
    std::vector<double> times;  // ns
    std::vector<cplx> alpha;
    std::vector<double> photons;
    bool clamped{false};  // some evaluation fell outside the curve and was clamped

    cplx final_alpha() const { return alpha.back(); }
    double final_photons() const { return photons.back(); }
};

enum class RangePolicy { Throw, ClampAndFlag };

struct EomOptions {
    RangePolicy range_policy{RangePolicy::Throw};
    bool check_step_heuristic{true};
};

namespace detail {

struct EomRhs {
    const BranchFrequencyCurve& curve;
    double omega_d;  // GHz
    double drive;    // ℰ, GHz
    double kappa;    // GHz
    RangePolicy policy;
    bool clamped{false};

    // Right-hand side in GHz (cyclic); multiply by 2π for rad/ns.
    cplx cyclic(cplx a) {
        const double n = std::norm(a);
        double w;
        if (policy == RangePolicy::Throw) {
            if (!curve.contains(n)) {
                throw DomainError("semiclassical: |alpha|^2 = " + std::to_string(n) + " leaves the frequency curve of branch " +
                                  std::to_string(curve.label()) + " (max " + std::to_string(curve.max_photons()) + ")");
            }
            w = curve(n);
        } else {
            bool c = false;
            w = curve.clamped(n, c);
            clamped = clamped || c;
        }
        return cplx(0.0, -(w - omega_d)) * a - cplx(0.0, 0.5 * drive) - 0.5 * kappa * a;
    }

    cplx operator()(cplx a) { return two_pi * cyclic(a); }
};

inline double max_detuning(const BranchFrequencyCurve& curve, double omega_d) {
    double m = 0.0;
    for (double w : curve.smoothed()) m = std::max(m, std::abs(w - omega_d));
    return m;
}

}  // namespace detail

// Largest step allowed by the 1/(20 max|ω_i − ω_d + κ|) heuristic, in ns.
inline double max_stable_step(const BranchFrequencyCurve& curve, const SystemParams& p) {
    const double rate = to_angular(detail::max_detuning(curve, p.drive_freq) + p.kappa);
    return rate > 0.0 ? 1.0 / (20.0 * rate) : std::numeric_limits<double>::infinity();
}

// Fixed-step classical RK4 from t0 to t0 + duration.
inline SemiclassicalTrajectory integrate_branch_eom(const BranchFrequencyCurve& curve, const SystemParams& p, cplx alpha0,
                                                    double t_end, double dt, const EomOptions& opts = {},
                                                    double t0 = 0.0) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw RangeError("semiclassical: need dt > 0 and t_end >= 0");
    if (opts.check_step_heuristic && dt > max_stable_step(curve, p) * (1.0 + 1e-12)) {
        throw RangeError("semiclassical: dt = " + std::to_string(dt) + " ns exceeds stability heuristic " +
                         std::to_string(max_stable_step(curve, p)) + " ns");
    }
    detail::EomRhs f{curve, p.drive_freq, p.drive_amp, p.kappa, opts.range_policy};
    const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
    const double h = steps > 0 ? t_end / static_cast<double>(steps) : 0.0;

    SemiclassicalTrajectory tr;
    tr.label = curve.label();
    tr.times.reserve(static_cast<std::size_t>(steps) + 1);
    tr.alpha.reserve(static_cast<std::size_t>(steps) + 1);
    tr.photons.reserve(static_cast<std::size_t>(steps) + 1);

    cplx a = alpha0;
    if (opts.range_policy == RangePolicy::Throw) f(a);  // validates the starting point
    tr.times.push_back(t0);
    tr.alpha.push_back(a);
    tr.photons.push_back(std::norm(a));
    for (long k = 0; k < steps; ++k) {
        const cplx k1 = f(a);
        const cplx k2 = f(a + 0.5 * h * k1);
        const cplx k3 = f(a + 0.5 * h * k2);
        const cplx k4 = f(a + h * k3);
        a += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (opts.range_policy == RangePolicy::Throw) f(a);
        tr.times.push_back(t0 + static_cast<double>(k + 1) * h);
        tr.alpha.push_back(a);
        tr.photons.push_back(std::norm(a));
    }
    tr.clamped = f.clamped;
    return tr;
}

// Residual of the steady-state condition, GHz.
inline double steady_state_residual(const BranchFrequencyCurve& curve, const SystemParams& p, cplx a) {
    detail::EomRhs f{curve, p.drive_freq, p.drive_amp, p.kappa, RangePolicy::Throw};
    return std::abs(f.cyclic(a));
}

struct SteadyStateOptions {
    double settle_lifetimes{80.0};   // integration length in units of 1/κ
    double dt{0.0};                  // 0 → max_stable_step
    double residual_tol{1e-10};      // GHz
    double dedupe_tol{1e-6};
    std::vector<cplx> extra_seeds;   // besides vacuum, the half-photon ring and radial probes
};

struct SteadyStateResult {
    std::vector<cplx> attractors;  // ordered by |α|²
    std::vector<double> residuals;
    std::vector<std::string> failures;  // NonConvergenceError messages per seed

    bool bistable() const { return attractors.size() > 1; }
};

inline std::vector<cplx> default_flow_seeds() {
    std::vector<cplx> seeds{cplx(0.0, 0.0)};
    for (int k = 0; k < 8; ++k) seeds.push_back(std::polar(0.5, two_pi * k / 8.0));
    return seeds;
}

namespace detail {

// Newton polish on the real 2-vector (Re α, Im α) with a central-difference Jacobian.
inline std::optional<cplx> polish_fixed_point(const BranchFrequencyCurve& curve, const SystemParams& p, cplx a,
                                              double tol) {
    EomRhs f{curve, p.drive_freq, p.drive_amp, p.kappa, RangePolicy::Throw};
    for (int it = 0; it < 60; ++it) {
        if (!curve.contains(std::norm(a))) return std::nullopt;
        const cplx r = f.cyclic(a);
        if (std::abs(r) < tol) return a;
        const double h = 1e-7 * std::max(1.0, std::abs(a));
        Eigen::Matrix2d jac;
        const cplx dirs[2] = {cplx(h, 0.0), cplx(0.0, h)};
        for (int c = 0; c < 2; ++c) {
            if (!curve.contains(std::norm(a + dirs[c])) || !curve.contains(std::norm(a - dirs[c]))) return std::nullopt;
            const cplx d = (f.cyclic(a + dirs[c]) - f.cyclic(a - dirs[c])) / (2.0 * h);
            jac(0, c) = d.real();
            jac(1, c) = d.imag();
        }
        const Eigen::Vector2d step = jac.fullPivLu().solve(Eigen::Vector2d(r.real(), r.imag()));
        if (!step.allFinite()) return std::nullopt;
        a -= cplx(step(0), step(1));
    }
    return std::abs(f.cyclic(a)) < tol ? std::optional<cplx>(a) : std::nullopt;
}

}  // namespace detail

// Attractors reached by long-time integration from a set of seeds, each
// polished as a fixed point. Seeds that do not settle are reported.
inline SteadyStateResult steady_state(const BranchFrequencyCurve& curve, const SystemParams& p,
                                      const SteadyStateOptions& opts = {}) {
    if (!(p.kappa > 0.0)) throw RangeError("steady_state: requires kappa > 0");
    auto seeds = default_flow_seeds();
    for (double frac : {0.25, 0.5, 0.75}) {
        const double r = std::sqrt(frac * curve.max_photons());
        for (int k = 0; k < 4; ++k) seeds.push_back(std::polar(r, two_pi * k / 4.0));
    }
    seeds.insert(seeds.end(), opts.extra_seeds.begin(), opts.extra_seeds.end());

    const double dt = opts.dt > 0.0 ? opts.dt : std::min(max_stable_step(curve, p), 0.25);
    const double t_settle = opts.settle_lifetimes * inverse_rate_ns(p.kappa);
    SteadyStateResult out;
    for (const cplx s : seeds) {
        try {
            const auto tr = integrate_branch_eom(curve, p, s, t_settle, dt);
            const cplx last = tr.final_alpha();
            const auto polished = detail::polish_fixed_point(curve, p, last, opts.residual_tol);
            if (!polished) {
                out.failures.push_back("seed (" + std::to_string(s.real()) + "," + std::to_string(s.imag()) +
                                       "): no fixed point near the end of the trajectory");
                continue;
            }
            // Trajectory must actually have settled near the polished point.
            if (std::abs(*polished - last) > 1e-3 * std::max(1.0, std::abs(last))) {
                out.failures.push_back("seed (" + std::to_string(s.real()) + "," + std::to_string(s.imag()) +
                                       "): trajectory still moving after settle time");
                continue;
            }
            const bool seen = std::any_of(out.attractors.begin(), out.attractors.end(), [&](cplx a) {
                return std::abs(a - *polished) < opts.dedupe_tol * std::max(1.0, std::abs(a));
            });
            if (!seen) out.attractors.push_back(*polished);
        } catch (const DomainError& e) {
            out.failures.push_back(e.what());
        }
    }
    std::sort(out.attractors.begin(), out.attractors.end(), [](cplx a, cplx b) { return std::norm(a) < std::norm(b); });
    for (cplx a : out.attractors) out.residuals.push_back(steady_state_residual(curve, p, a));
    return out;
}

struct FlowResult {
    cplx seed;
    std::optional<SemiclassicalTrajectory> trajectory;
    std::string error;  // DomainError text when the seed left the curve
};

inline std::vector<FlowResult> flow_field(const BranchFrequencyCurve& curve, const SystemParams& p,
                                          const std::vector<cplx>& seeds, double t_end, double dt,
                                          const EomOptions& opts = {}) {
    std::vector<FlowResult> out;
    out.reserve(seeds.size());
    for (const cplx s : seeds) {
        FlowResult r{s, std::nullopt, {}};
        try {
            r.trajectory = integrate_branch_eom(curve, p, s, t_end, dt, opts);
        } catch (const DomainError& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Secondary-branch trajectory launched with the primary's amplitude at the
// first time its photon number reaches `n_cross`; nullopt if never reached.
inline std::optional<SemiclassicalTrajectory> hand_off_trajectory(const SemiclassicalTrajectory& primary,
                                                                  const BranchFrequencyCurve& secondary,
                                                                  const SystemParams& p, double n_cross, double t_end,
                                                                  double dt, const EomOptions& opts = {}) {
    for (std::size_t k = 0; k < primary.photons.size(); ++k) {
        if (primary.photons[k] >= n_cross) {
            const double t0 = primary.times[k];
            if (t0 >= t_end) return std::nullopt;
            return integrate_branch_eom(secondary, p, primary.alpha[k], t_end - t0, dt, opts, t0);
        }
    }
    return std::nullopt;
}

struct PopulationDifference {
    std::vector<double> amplitudes;  // ℰ/2π, GHz
    std::vector<double> times;       // ns
    Eigen::MatrixXd ground;          // |α_0(t)|², rows amplitude, columns time
    Eigen::MatrixXd excited;         // |α_1(t)|²
    Eigen::MatrixXd delta;           // excited − ground
};

namespace detail {

inline std::vector<double> sample_photons(const BranchFrequencyCurve& curve, const SystemParams& p,
                                          const std::vector<double>& t_grid, double dt_max, const EomOptions& opts) {
    std::vector<double> out;
    out.reserve(t_grid.size());
    cplx a(0.0, 0.0);
    double t = 0.0;
    for (double target : t_grid) {
        if (target < t) throw RangeError("population_difference: time grid must be non-decreasing and >= 0");
        if (target > t) {
            const auto tr = integrate_branch_eom(curve, p, a, target - t, dt_max, opts, t);
            a = tr.final_alpha();
            t = target;
        }
        out.push_back(std::norm(a));
    }
    return out;
}

}  // namespace detail

// ΔN_r(ℰ, t) = |α_1(t)|² − |α_0(t)|², both branches started from vacuum.
inline PopulationDifference population_difference(const SystemParams& p, const BranchFrequencyCurve& ground,
                                                  const BranchFrequencyCurve& excited, const std::vector<double>& t_grid,
                                                  const std::vector<double>& amplitudes, double dt_max,
                                                  const EomOptions& opts = {}) {
    PopulationDifference out;
    out.amplitudes = amplitudes;
    out.times = t_grid;
    const auto rows = static_cast<Eigen::Index>(amplitudes.size());
    const auto cols = static_cast<Eigen::Index>(t_grid.size());
    out.ground.resize(rows, cols);
    out.excited.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        SystemParams q = p;
        q.drive_amp = amplitudes[static_cast<std::size_t>(r)];
        const auto n0 = detail::sample_photons(ground, q, t_grid, dt_max, opts);
        const auto n1 = detail::sample_photons(excited, q, t_grid, dt_max, opts);
        for (Eigen::Index c = 0; c < cols; ++c) {
            out.ground(r, c) = n0[static_cast<std::size_t>(c)];
            out.excited(r, c) = n1[static_cast<std::size_t>(c)];
        }
    }
    out.delta = out.excited - out.ground;
    return out;
}

}  // namespace ionize
