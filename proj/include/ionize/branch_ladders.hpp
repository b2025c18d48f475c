// branch_ladders.hpp — resonator branches {i} of the static dressed spectrum
//
// A branch is seeded by the eigenstate closest to |i,0⟩ and grown one photon
// at a time: the next state is the unassigned eigenstate λ maximising
//   C_i(n) = |⟨λ|a†|ī,n⟩ / ⟨ī,n|a a†|ī,n⟩|².
// The same a†-ladder matrix elements, normalised to a transition probability
// |⟨λ|a†|ψ⟩|² / ⟨ψ|a a†|ψ⟩, measure the coupling to other branches.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "ionize/dressed_system.hpp"
#include "ionize/errors.hpp"

namespace ionize {

struct Branch {
    int label{0};
    std::vector<Eigen::Index> state_indices;  // position n is photon label n
    std::vector<double> energies;             // E_{ī,n}, GHz
    std::vector<double> ladder_overlaps;      // C_i(n) for the step n → n+1
    double seed_overlap{0.0};                 // |⟨ī,0|i,0⟩|²
    std::vector<double> mean_transmon_population;

    std::size_t length() const { return state_indices.size(); }

    // Overlap that selected the state at photon label n (seed overlap at n = 0).
    double selection_overlap(std::size_t n) const { return n == 0 ? seed_overlap : ladder_overlaps.at(n - 1); }
};

struct Resonance {
    int branch_a{0};
    int branch_b{0};
    int n{0};        // photon label of |ā,n⟩ before the extra excitation
    int partner_n{0};  // photon label of the matching state in branch b
    double overlap{0.0};
};

struct ResonanceReport {
    double threshold{0.01};
    std::vector<Resonance> entries;  // sorted by n, then branch_a, branch_b
};

// Squared a†-ladder matrix elements |⟨λ|a†|k⟩|² over the full eigenbasis.
class LadderOverlaps {
public:
    explicit LadderOverlaps(const DressedSpectrum& d) {
        if (d.gauge_states.size() == d.states.size() && d.states.size() > 0) {
            // a† is real in the gauge basis up to a factor −i, so magnitudes agree.
            build(d, d.gauge_states);
        } else {
            build(d, d.states);
        }
    }

    double numerator(Eigen::Index lambda, Eigen::Index k) const { return numerators_(lambda, k); }
    double raised_norm(Eigen::Index k) const { return norms_(k); }  // ⟨k|a a†|k⟩

    double ladder_overlap(Eigen::Index lambda, Eigen::Index k) const {
        const double den = norms_(k);
        return den > 0.0 ? numerators_(lambda, k) / (den * den) : 0.0;
    }

    double transition_probability(Eigen::Index lambda, Eigen::Index k) const {
        const double den = norms_(k);
        return den > 0.0 ? numerators_(lambda, k) / den : 0.0;
    }

    const Eigen::MatrixXd& numerators() const { return numerators_; }

private:
    template <typename Matrix>
    void build(const DressedSpectrum& d, const Matrix& states) {
        const Eigen::Index dim = d.size();
        const int dr = d.dim_r;
        Matrix raised = Matrix::Zero(dim, dim);
        for (int i = 0; i < d.dim_t; ++i) {
            for (int n = 1; n < dr; ++n) {
                raised.row(d.flat(i, n)) = std::sqrt(static_cast<double>(n)) * states.row(d.flat(i, n - 1));
            }
        }
        norms_ = raised.colwise().squaredNorm().transpose();
        Matrix elements(dim, dim);
        elements.noalias() = states.adjoint() * raised;
        raised.resize(0, 0);
        numerators_ = elements.cwiseAbs2();
    }

    Eigen::MatrixXd numerators_;
    Eigen::VectorXd norms_;
};

inline double mean_transmon_population(const DressedSpectrum& d, Eigen::Index lambda) {
    double acc = 0.0;
    for (int i = 1; i < d.dim_t; ++i) {
        acc += i * d.states.col(lambda).segment(d.flat(i, 0), d.dim_r).squaredNorm();
    }
    return acc;
}

inline std::vector<Eigen::Index> seed_branches(const DressedSpectrum& d, int n_branches) {
    if (n_branches < 1 || n_branches > d.dim_t) {
        throw RangeError("seed_branches: n_branches must lie in [1, dim_t]");
    }
    std::vector<Eigen::Index> seeds;
    for (int i = 0; i < n_branches; ++i) {
        Eigen::Index best = 0;
        d.states.row(d.flat(i, 0)).cwiseAbs2().maxCoeff(&best);
        for (int j = 0; j < i; ++j) {
            if (seeds[j] == best) {
                throw IdentificationError("seed_branches: |" + std::to_string(j) + ",0> and |" + std::to_string(i) +
                                          ",0> select the same eigenstate " + std::to_string(best));
            }
        }
        seeds.push_back(best);
    }
    return seeds;
}

inline Branch make_seeded_branch(const DressedSpectrum& d, int label, Eigen::Index seed) {
    Branch b;
    b.label = label;
    b.state_indices.push_back(seed);
    b.energies.push_back(d.energies(seed));
    b.seed_overlap = std::norm(d.states(d.flat(label, 0), seed));
    b.mean_transmon_population.push_back(mean_transmon_population(d, seed));
    return b;
}

struct ExtendOptions {
    double tie_tolerance{1e-12};
};

// Appends |ī,n+1⟩ to the branch and returns C_i(n); the chosen state leaves `available`.
inline double extend_branch(const DressedSpectrum& d, const LadderOverlaps& table, Branch& branch,
                            std::vector<bool>& available, const ExtendOptions& opts = {}) {
    if (branch.state_indices.empty()) throw RangeError("extend_branch: branch is empty");
    const Eigen::Index current = branch.state_indices.back();
    const double target_energy = d.energies(current) + d.omega_r;

    Eigen::Index best = -1;
    double best_c = -1.0;
    for (Eigen::Index lambda = 0; lambda < d.size(); ++lambda) {
        if (!available[static_cast<std::size_t>(lambda)]) continue;
        const double c = table.ladder_overlap(lambda, current);
        if (best < 0 || c > best_c + opts.tie_tolerance) {
            best = lambda;
            best_c = c;
        } else if (std::abs(c - best_c) <= opts.tie_tolerance &&
                   std::abs(d.energies(lambda) - target_energy) < std::abs(d.energies(best) - target_energy)) {
            best = lambda;
            best_c = std::max(best_c, c);
        }
    }
    if (best < 0) {
        throw ExhaustionError("extend_branch: no unassigned eigenstates left for branch " +
                              std::to_string(branch.label));
    }
    available[static_cast<std::size_t>(best)] = false;
    branch.state_indices.push_back(best);
    branch.energies.push_back(d.energies(best));
    branch.ladder_overlaps.push_back(best_c);
    branch.mean_transmon_population.push_back(mean_transmon_population(d, best));
    return best_c;
}

// Branches are grown in lock-step: photon label n for every branch before n+1.
inline std::vector<Branch> identify_branches(const DressedSpectrum& d, const LadderOverlaps& table, int n_branches,
                                             int n_max, const ExtendOptions& opts = {}) {
    if (n_max < 0) throw RangeError("identify_branches: n_max must be non-negative");
    if (static_cast<Eigen::Index>(n_branches) * (n_max + 1) > d.size()) {
        throw ExhaustionError("identify_branches: n_branches*(n_max+1) exceeds the number of eigenstates");
    }
    const auto seeds = seed_branches(d, n_branches);
    std::vector<bool> available(static_cast<std::size_t>(d.size()), true);
    std::vector<Branch> branches;
    branches.reserve(seeds.size());
    for (int i = 0; i < n_branches; ++i) {
        available[static_cast<std::size_t>(seeds[i])] = false;
        branches.push_back(make_seeded_branch(d, i, seeds[i]));
    }
    for (int n = 0; n < n_max; ++n) {
        for (auto& b : branches) extend_branch(d, table, b, available, opts);
    }
    return branches;
}

inline std::vector<Branch> identify_branches(const DressedSpectrum& d, int n_branches, int n_max,
                                             const ExtendOptions& opts = {}) {
    const LadderOverlaps table(d);
    return identify_branches(d, table, n_branches, n_max, opts);
}

// For every branch a and label n, the largest transition probability from
// a†|ā,n⟩ into any state of another branch b; entries above threshold are kept.
inline ResonanceReport cross_branch_overlaps(const LadderOverlaps& table, const std::vector<Branch>& branches,
                                             double threshold = 0.01) {
    ResonanceReport report;
    report.threshold = threshold;
    for (const auto& a : branches) {
        for (std::size_t n = 0; n + 1 < a.length(); ++n) {
            const Eigen::Index k = a.state_indices[n];
            for (const auto& b : branches) {
                if (b.label == a.label) continue;
                double best = 0.0;
                std::size_t best_m = 0;
                for (std::size_t m = 0; m < b.length(); ++m) {
                    const double p = table.transition_probability(b.state_indices[m], k);
                    if (p > best) {
                        best = p;
                        best_m = m;
                    }
                }
                if (best > threshold) {
                    report.entries.push_back({a.label, b.label, static_cast<int>(n), static_cast<int>(best_m), best});
                }
            }
        }
    }
    std::stable_sort(report.entries.begin(), report.entries.end(), [](const Resonance& x, const Resonance& y) {
        if (x.n != y.n) return x.n < y.n;
        if (x.branch_a != y.branch_a) return x.branch_a < y.branch_a;
        return x.branch_b < y.branch_b;
    });
    return report;
}

inline ResonanceReport cross_branch_overlaps(const DressedSpectrum& d, const std::vector<Branch>& branches,
                                             double threshold = 0.01) {
    return cross_branch_overlaps(LadderOverlaps(d), branches, threshold);
}

// ω_i(n) = E_{ī,n+1} − E_{ī,n}
inline double branch_frequency(const Branch& b, int n) {
    if (n < 0 || static_cast<std::size_t>(n) + 1 >= b.length()) {
        throw RangeError("branch_frequency: n = " + std::to_string(n) + " outside ladder of branch " +
                         std::to_string(b.label));
    }
    return b.energies[static_cast<std::size_t>(n) + 1] - b.energies[static_cast<std::size_t>(n)];
}

inline std::vector<double> branch_frequencies(const Branch& b) {
    std::vector<double> out;
    for (std::size_t n = 0; n + 1 < b.length(); ++n) out.push_back(b.energies[n + 1] - b.energies[n]);
    return out;
}

// Piecewise-linear curve through first-order Savitzky–Golay smoothed samples.
class BranchFrequencyCurve {
public:
    BranchFrequencyCurve() = default;
    BranchFrequencyCurve(int label, std::vector<double> raw, std::vector<double> smoothed)
        : label_(label), raw_(std::move(raw)), smoothed_(std::move(smoothed)) {}

    int label() const { return label_; }
    const std::vector<double>& raw() const { return raw_; }
    const std::vector<double>& smoothed() const { return smoothed_; }

    // Largest photon number covered: samples live on n = 0..size−1.
    double max_photons() const { return static_cast<double>(smoothed_.size()) - 1.0; }
    bool contains(double n) const { return n >= 0.0 && n <= max_photons(); }

    double operator()(double n) const {
        if (!contains(n)) {
            throw RangeError("frequency curve " + std::to_string(label_) + ": n = " + std::to_string(n) +
                             " outside [0, " + std::to_string(max_photons()) + "]");
        }
        return interpolate(n);
    }

    // Evaluation that clamps to the end samples; `clamped` reports whether it did.
    double clamped(double n, bool& was_clamped) const {
        was_clamped = !contains(n);
        return interpolate(std::clamp(n, 0.0, max_photons()));
    }

private:
    double interpolate(double n) const {
        if (smoothed_.size() == 1) return smoothed_.front();
        const auto lo = std::min(static_cast<std::size_t>(n), smoothed_.size() - 2);
        const double frac = n - static_cast<double>(lo);
        return smoothed_[lo] + frac * (smoothed_[lo + 1] - smoothed_[lo]);
    }

    int label_{0};
    std::vector<double> raw_;
    std::vector<double> smoothed_;
};

// A first-order least-squares fit over a symmetric window evaluates to the
// window mean at its centre; near the ends the window shrinks symmetrically.
inline std::vector<double> savitzky_golay_linear(const std::vector<double>& samples, int window) {
    if (window < 3 || window % 2 == 0) throw RangeError("savitzky_golay: window must be odd and >= 3");
    if (static_cast<std::size_t>(window) > samples.size()) {
        throw RangeError("savitzky_golay: window longer than the sample count");
    }
    const auto count = static_cast<std::ptrdiff_t>(samples.size());
    const std::ptrdiff_t half = window / 2;
    std::vector<double> out(samples.size());
    for (std::ptrdiff_t n = 0; n < count; ++n) {
        const std::ptrdiff_t h = std::min({half, n, count - 1 - n});
        double acc = 0.0;
        for (std::ptrdiff_t k = n - h; k <= n + h; ++k) acc += samples[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(n)] = acc / static_cast<double>(2 * h + 1);
    }
    return out;
}

inline BranchFrequencyCurve smooth_frequency_curve(const Branch& b, int window = 5) {
    auto raw = branch_frequencies(b);
    auto smoothed = savitzky_golay_linear(raw, window);
    return {b.label, std::move(raw), std::move(smoothed)};
}

}  // namespace ionize
