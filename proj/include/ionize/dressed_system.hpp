// dressed_system.hpp — coupled transmon-resonator Hamiltonian without RWA
//
// Joint basis |i⟩⊗|n⟩ with flat index i·dim_r + n, transmon i in its bare
// eigenbasis. The static Hamiltonian is
//   H = diag(E_i) ⊗ 1 + ω_r 1 ⊗ a†a − i g n̂_t ⊗ (a − a†).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "ionize/errors.hpp"
#include "ionize/transmon_spectrum.hpp"

namespace ionize {

using cplx = std::complex<double>;

struct SystemParams {
    TransmonParams transmon{};
    double omega_r{7.5};      // GHz
    double g{0.25};           // GHz
    double kappa{0.02};       // GHz
    double drive_amp{0.0};    // ℰ/2π, GHz
    double drive_freq{7.5};   // ω_d/2π, GHz
    int dim_t{16};
    int dim_r{16};
    std::size_t max_dim{8192};  // cap on dim_t·dim_r for dense work

    std::size_t dim() const { return static_cast<std::size_t>(dim_t) * static_cast<std::size_t>(dim_r); }

    void validate() const {
        transmon.validate();
        if (!(omega_r > 0.0)) throw DimensionError("system: omega_r must be positive");
        if (!(kappa >= 0.0)) throw DimensionError("system: kappa must be non-negative");
        if (dim_t < 2 || dim_r < 2) throw DimensionError("system: dim_t and dim_r must be >= 2");
        if (dim() > max_dim) {
            throw DimensionError("system: dim_t*dim_r = " + std::to_string(dim()) + " exceeds cap " +
                                 std::to_string(max_dim));
        }
    }
};

struct DressedSpectrum {
    Eigen::VectorXd energies;  // ascending, GHz
    Eigen::MatrixXcd states;   // columns in the bare product basis
    // Real eigenvectors in the gauge |n⟩ → iⁿ|n⟩; equal to `states` up to that
    // gauge and a phase per column. May be empty.
    Eigen::MatrixXd gauge_states;
    int dim_t{0};
    int dim_r{0};
    double omega_r{0.0};

    Eigen::Index size() const { return energies.size(); }
    Eigen::Index flat(int i, int n) const { return static_cast<Eigen::Index>(i) * dim_r + n; }
};

// Truncated annihilation operator on dim Fock states.
inline Eigen::MatrixXd annihilation(int dim) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

inline Eigen::MatrixXcd build_static_hamiltonian(const SystemParams& p, const TransmonSpectrum& s) {
    p.validate();
    if (s.size() != p.dim_t || s.n_elements.rows() != p.dim_t || s.n_elements.cols() != p.dim_t) {
        throw DimensionError("static hamiltonian: transmon spectrum has " + std::to_string(s.size()) +
                             " levels, expected dim_t = " + std::to_string(p.dim_t));
    }
    const int dt = p.dim_t;
    const int dr = p.dim_r;
    const Eigen::Index dim = static_cast<Eigen::Index>(p.dim());
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
    for (int i = 0; i < dt; ++i) {
        for (int n = 0; n < dr; ++n) h(i * dr + n, i * dr + n) = s.energies(i) + p.omega_r * n;
    }
    // −i g n_ij (a − a†): ⟨n−1|a|n⟩ = √n, ⟨n+1|a†|n⟩ = √(n+1)
    for (int i = 0; i < dt; ++i) {
        for (int j = 0; j < dt; ++j) {
            const double nij = s.n_elements(i, j);
            if (nij == 0.0) continue;
            for (int n = 1; n < dr; ++n) {
                const double amp = p.g * nij * std::sqrt(static_cast<double>(n));
                h(i * dr + n - 1, j * dr + n) += cplx(0.0, -amp);
                h(i * dr + n, j * dr + n - 1) += cplx(0.0, amp);
            }
        }
    }
    return h;
}

inline Eigen::MatrixXcd build_static_hamiltonian(const SystemParams& p) {
    return build_static_hamiltonian(p, diagonalize_transmon(p.transmon, p.dim_t));
}

// Full dense eigendecomposition. Under the gauge change |n⟩ → iⁿ|n⟩ the
// coupling becomes g n̂_t ⊗ (a + a†), so the problem is solved as a real
// symmetric one and the phases are restored afterwards.
inline DressedSpectrum dressed_spectrum(const SystemParams& p, const TransmonSpectrum& s) {
    p.validate();
    if (s.size() != p.dim_t) throw DimensionError("dressed spectrum: transmon spectrum size mismatch");
    const int dt = p.dim_t;
    const int dr = p.dim_r;
    const Eigen::Index dim = static_cast<Eigen::Index>(p.dim());

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dt; ++i) {
        for (int n = 0; n < dr; ++n) h(i * dr + n, i * dr + n) = s.energies(i) + p.omega_r * n;
    }
    for (int i = 0; i < dt; ++i) {
        for (int j = 0; j < dt; ++j) {
            const double nij = s.n_elements(i, j);
            if (nij == 0.0) continue;
            for (int n = 1; n < dr; ++n) {
                const double amp = p.g * nij * std::sqrt(static_cast<double>(n));
                h(i * dr + n - 1, j * dr + n) += amp;
                h(i * dr + n, j * dr + n - 1) += amp;
            }
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success) throw ConvergenceError("dressed spectrum: eigensolver failed");
    h.resize(0, 0);

    DressedSpectrum out;
    out.dim_t = dt;
    out.dim_r = dr;
    out.omega_r = p.omega_r;
    out.energies = solver.eigenvalues();
    out.gauge_states = solver.eigenvectors();
    const Eigen::MatrixXd& real_states = out.gauge_states;
    static const cplx i_pow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    out.states.resize(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
        for (int i = 0; i < dt; ++i) {
            for (int n = 0; n < dr; ++n) {
                const Eigen::Index r = static_cast<Eigen::Index>(i) * dr + n;
                out.states(r, c) = i_pow[n % 4] * real_states(r, c);
            }
        }
        detail::fix_column_phase(out.states.col(c));
    }
    return out;
}

inline DressedSpectrum dressed_spectrum(const SystemParams& p) {
    return dressed_spectrum(p, diagonalize_transmon(p.transmon, p.dim_t));
}

// n_crit = (Δ / 2g')², g' = (E_J / 32 E_C)^{1/4} g, Δ = ω_01 − ω_r.
inline double critical_photon_number(const SystemParams& p, const TransmonSpectrum& s) {
    const double delta = s.omega_01() - p.omega_r;
    const double g_eff = std::pow(p.transmon.e_j / (32.0 * p.transmon.e_c), 0.25) * p.g;
    return (delta / (2.0 * g_eff)) * (delta / (2.0 * g_eff));
}

}  // namespace ionize
