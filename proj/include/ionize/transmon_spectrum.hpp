// transmon_spectrum.hpp — bare transmon in the charge basis
//
// H_t = 4 E_C n² − E_J cos φ with cos φ = ½ Σ (|m⟩⟨m+1| + h.c.) and zero offset
// charge. Energies are kept raw: the potential minimum sits at −E_J and the
// barrier top at +E_J.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "ionize/errors.hpp"

namespace ionize {

// Offset charge is not modelled; kept as a named constant for readability.
inline constexpr double offset_charge = 0.0;

struct TransmonParams {
    double e_c{0.28};                  // GHz
    double e_j{14.0};                  // GHz
    std::optional<int> charge_cutoff;  // basis m = −cutoff..cutoff; unset → max(32, 2·n_keep)

    void validate() const {
        if (!(e_c > 0.0)) throw DimensionError("transmon: E_C must be positive");
        if (!(e_j >= 0.0)) throw DimensionError("transmon: E_J must be non-negative");
        if (charge_cutoff && *charge_cutoff < 1) throw DimensionError("transmon: charge_cutoff must be >= 1");
    }

    int cutoff_for(int n_keep) const { return charge_cutoff.value_or(std::max(32, 2 * n_keep)); }
};

struct TransmonSpectrum {
    Eigen::VectorXd energies;      // ascending, raw reference (well bottom at −E_J)
    Eigen::MatrixXd eigenvectors;  // charge-basis columns, index m + cutoff
    Eigen::MatrixXd n_elements;    // ⟨i|n̂|j⟩ in the eigenbasis
    int bound_count{0};
    int charge_cutoff{0};

    int size() const { return static_cast<int>(energies.size()); }
    double omega_01() const { return energies(1) - energies(0); }

    // Reporting helper: energies shifted so that E_0 = 0.
    Eigen::VectorXd energies_from_ground() const {
        return energies.array() - energies(0);
    }
};

inline Eigen::MatrixXd build_charge_hamiltonian(const TransmonParams& p, int cutoff) {
    p.validate();
    const int dim = 2 * cutoff + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const double m = static_cast<double>(k - cutoff) - offset_charge;
        h(k, k) = 4.0 * p.e_c * m * m;
        if (k + 1 < dim) {
            h(k, k + 1) = -0.5 * p.e_j;
            h(k + 1, k) = -0.5 * p.e_j;
        }
    }
    return h;
}

inline Eigen::MatrixXd build_charge_hamiltonian(const TransmonParams& p) {
    return build_charge_hamiltonian(p, p.charge_cutoff.value_or(32));
}

namespace detail {

// Largest-magnitude component made real and positive; ties go to the lowest index.
template <class Vec>
void fix_column_phase(Vec&& v) {
    using std::abs;
    double max_mag = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) max_mag = std::max(max_mag, static_cast<double>(abs(v(k))));
    if (max_mag == 0.0) return;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (abs(v(k)) >= max_mag * (1.0 - 1e-10)) {
            const auto phase = v(k) / abs(v(k));
            v /= phase;
            return;
        }
    }
}

}  // namespace detail

inline int count_bound_states(const TransmonSpectrum& s, const TransmonParams& p) {
    // Barrier top of −E_J cos φ is +E_J in the raw reference.
    int count = 0;
    for (Eigen::Index i = 0; i < s.energies.size(); ++i) {
        if (s.energies(i) < p.e_j) ++count;
    }
    return count;
}

inline TransmonSpectrum diagonalize_transmon(const TransmonParams& p, int n_keep) {
    p.validate();
    const int cutoff = p.cutoff_for(n_keep);
    const int dim = 2 * cutoff + 1;
    if (n_keep < 1 || n_keep > dim) throw DimensionError("transmon: n_keep must lie in [1, 2*cutoff+1]");

    TransmonSpectrum out;
    out.charge_cutoff = cutoff;
    Eigen::VectorXd charge(dim);
    for (int k = 0; k < dim; ++k) charge(k) = static_cast<double>(k - cutoff) - offset_charge;

    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;
    std::vector<int> parity;  // ±1 per eigenvector; empty when not tracked
    if (p.e_j == 0.0) {
        // Charge states; degenerate ±m pairs ordered by m ascending.
        std::vector<int> order(dim);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            const double ea = 4.0 * p.e_c * charge(a) * charge(a);
            const double eb = 4.0 * p.e_c * charge(b) * charge(b);
            return ea < eb;
        });
        evals.resize(dim);
        evecs = Eigen::MatrixXd::Zero(dim, dim);
        for (int c = 0; c < dim; ++c) {
            evals(c) = 4.0 * p.e_c * charge(order[c]) * charge(order[c]);
            evecs(order[c], c) = 1.0;
        }
    } else {
        // The symmetric and antisymmetric combinations of ±m decouple. Solving the
        // two blocks apart keeps near-degenerate pairs above the barrier from
        // mixing, so every state has exact parity.
        const double hop = -0.5 * p.e_j;
        Eigen::MatrixXd even = Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1);
        Eigen::MatrixXd odd = Eigen::MatrixXd::Zero(cutoff, cutoff);
        for (int m = 0; m <= cutoff; ++m) {
            even(m, m) = 4.0 * p.e_c * m * m;
            if (m + 1 <= cutoff) even(m, m + 1) = even(m + 1, m) = m == 0 ? std::sqrt(2.0) * hop : hop;
        }
        for (int m = 1; m <= cutoff; ++m) {
            odd(m - 1, m - 1) = 4.0 * p.e_c * m * m;
            if (m + 1 <= cutoff) odd(m - 1, m) = odd(m, m - 1) = hop;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(even), so(odd);
        if (se.info() != Eigen::Success || so.info() != Eigen::Success) {
            throw ConvergenceError("transmon: eigensolver failed");
        }
        evals.resize(dim);
        evecs = Eigen::MatrixXd::Zero(dim, dim);
        const double r = std::sqrt(0.5);
        int ie = 0, io = 0;
        for (int c = 0; c < dim; ++c) {
            const bool take_even = io >= cutoff || (ie <= cutoff && se.eigenvalues()(ie) <= so.eigenvalues()(io));
            if (take_even) {
                const auto v = se.eigenvectors().col(ie);
                evals(c) = se.eigenvalues()(ie++);
                parity.push_back(1);
                evecs(cutoff, c) = v(0);
                for (int m = 1; m <= cutoff; ++m) evecs(cutoff + m, c) = evecs(cutoff - m, c) = r * v(m);
            } else {
                const auto v = so.eigenvectors().col(io);
                evals(c) = so.eigenvalues()(io++);
                parity.push_back(-1);
                for (int m = 1; m <= cutoff; ++m) {
                    evecs(cutoff + m, c) = r * v(m - 1);
                    evecs(cutoff - m, c) = -r * v(m - 1);
                }
            }
        }
    }

    out.energies = evals.head(n_keep);
    out.eigenvectors = evecs.leftCols(n_keep);
    for (int c = 0; c < n_keep; ++c) detail::fix_column_phase(out.eigenvectors.col(c));

    const auto top = out.eigenvectors.col(n_keep - 1);
    const double edge_weight = top(0) * top(0) + top(dim - 1) * top(dim - 1);
    if (edge_weight > 1e-6) {
        throw CutoffError("transmon: highest kept state has weight " + std::to_string(edge_weight) +
                          " on the edge charge states; raise charge_cutoff");
    }

    out.n_elements = out.eigenvectors.transpose() * charge.asDiagonal() * out.eigenvectors;
    out.n_elements = (0.5 * (out.n_elements + out.n_elements.transpose())).eval();
    if (!parity.empty()) {
        for (int i = 0; i < n_keep; ++i)
            for (int j = 0; j < n_keep; ++j)
                if (parity[static_cast<std::size_t>(i)] == parity[static_cast<std::size_t>(j)]) out.n_elements(i, j) = 0.0;
    }
    out.bound_count = count_bound_states(out, p);
    return out;
}

inline double plasma_frequency(const TransmonParams& p) { return std::sqrt(8.0 * p.e_c * p.e_j); }

}  // namespace ionize
