// lindblad.hpp — rotating-frame master equation with a Taylor-root propagator
//
// In the frame U(t) = exp(iω_d a†a t) the generator is
//   Lρ = −i[H_I(t), ρ] + κ(aρa† − ½{a†a, ρ})
//   H_I(t) = Σ E_i|i⟩⟨i| + (ω_r − ω_d) a†a − (ℰ/2)(a + a†)
//          + n̂_t ⊗ (B(t) a† + B*(t) a) + (ℰ/2)(e^{2iω_d t} a† + e^{−2iω_d t} a)
// with B(t) = i g e^{iω_d t}, obtained by transforming −i g n̂_t (a − a†).
// Over a step the oscillating coefficients are replaced by their exact time
// averages, and exp(δt L̄) ≈ Π (1 − δt L̄ / z_k) over the Taylor roots z_k.
//
// All operators act implicitly through matrix products on ρ; no superoperator
// is ever formed. Energies and rates are angular (rad/ns) internally.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ionize/branch_ladders.hpp"
#include "ionize/dressed_system.hpp"
#include "ionize/errors.hpp"
#include "ionize/observables.hpp"
#include "ionize/taylor_roots.hpp"
#include "ionize/transmon_spectrum.hpp"
#include "ionize/units.hpp"

namespace ionize {

struct PropagatorConfig {
    int taylor_order{10};
    int steps_per_drive_period{75};
    double truncation_threshold{1e-6};
    int max_dim_r{1024};
    int record_every{1};  // drive periods between records
    bool magnus_commutator{false};
    double blowup_norm{1e6};

    void validate() const {
        if (taylor_order < 1 || taylor_order > 32) throw DimensionError("propagator: taylor_order must lie in [1, 32]");
        if (steps_per_drive_period < 1) throw DimensionError("propagator: steps_per_drive_period must be >= 1");
        if (!(truncation_threshold > 0.0)) throw DimensionError("propagator: truncation_threshold must be positive");
        if (max_dim_r < 2) throw DimensionError("propagator: max_dim_r must be >= 2");
        if (record_every < 1) throw DimensionError("propagator: record_every must be >= 1");
    }
};

struct DensityMatrix {
    int dim_t{0};
    int dim_r{0};
    Eigen::MatrixXcd rho;
    double time{0.0};  // ns

    Eigen::Index dim() const { return static_cast<Eigen::Index>(dim_t) * dim_r; }
    std::complex<double> trace() const { return rho.trace(); }
};

// Coefficients of the a†-parts of the generator; the a-parts are their conjugates.
struct GeneratorCoefficients {
    cplx coupling;  // multiplies n̂_t ⊗ a†
    cplx drive;     // multiplies 1 ⊗ a†
};

namespace detail {

// (e^{ix} − 1)/(ix), the average of e^{iωs} over a window of phase width x.
inline cplx phase_average(double x) {
    if (std::abs(x) < 1e-4) return {1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0};
    return (std::exp(cplx(0.0, x)) - 1.0) / cplx(0.0, x);
}

// Per-row data of the dissipator: ½κ n_r and √(n_r + 1) (zero on the top
// Fock level of each block).
struct DissipatorRows {
    double kappa{0.0};
    Eigen::VectorXd half_n;
    Eigen::VectorXd raise;
};

// out(r,c) = i (Y(r,c) − conj(X(c,r))) + κ(aρa† − ½{a†a, ρ})(r,c), with X = Y
// for Hermitian ρ. Works in tiles; the transposed tile is staged in a buffer
// so the inner loop runs contiguously.
inline void commutator_and_dissipator(const Eigen::MatrixXcd& y, const Eigen::MatrixXcd& x,
                                      const Eigen::MatrixXcd& rho, const DissipatorRows& rows,
                                      Eigen::MatrixXcd& out) {
    constexpr Eigen::Index tile = 64;
    const Eigen::Index dim = y.rows();
    static thread_local std::vector<cplx> storage(tile * tile);
    cplx* buf = storage.data();
    const bool damped = rows.kappa != 0.0;
    for (Eigen::Index c0 = 0; c0 < dim; c0 += tile) {
        const Eigen::Index cw = std::min(tile, dim - c0);
        for (Eigen::Index r0 = 0; r0 < dim; r0 += tile) {
            const Eigen::Index rw = std::min(tile, dim - r0);
            for (Eigen::Index r = 0; r < rw; ++r) {
                const cplx* src = x.data() + (r0 + r) * dim + c0;
                for (Eigen::Index c = 0; c < cw; ++c) buf[c * tile + r] = src[c];
            }
            for (Eigen::Index c = 0; c < cw; ++c) {
                const Eigen::Index col = c0 + c;
                const cplx* yc = y.data() + col * dim + r0;
                const cplx* tc = buf + c * tile;
                cplx* oc = out.data() + col * dim + r0;
                for (Eigen::Index r = 0; r < rw; ++r) {
                    const double re = yc[r].real() - tc[r].real();
                    const double im = yc[r].imag() + tc[r].imag();
                    oc[r] = cplx(-im, re);
                }
                if (!damped) continue;
                const cplx* pc = rho.data() + col * dim + r0;
                const double* hn = rows.half_n.data() + r0;
                const double hc = rows.half_n(col);
                for (Eigen::Index r = 0; r < rw; ++r) oc[r] -= (hn[r] + hc) * pc[r];
                const double sc = rows.kappa * rows.raise(col);
                if (sc == 0.0) continue;
                // κ √((n_r+1)(n_c+1)) ρ(r+1, c+1)
                const cplx* pn = rho.data() + (col + 1) * dim + r0 + 1;
                const double* up = rows.raise.data() + r0;
                const Eigen::Index limit = std::min(rw, dim - 1 - r0);
                for (Eigen::Index r = 0; r < limit; ++r) oc[r] += (sc * up[r]) * pn[r];
            }
        }
    }
}

}  // namespace detail

class LindbladGenerator {
public:
    LindbladGenerator(const SystemParams& p, const TransmonSpectrum& s, int dim_r)
        : dim_t_(p.dim_t),
          g_(to_angular(p.g)),
          kappa_(to_angular(p.kappa)),
          drive_(to_angular(p.drive_amp)),
          omega_d_(to_angular(p.drive_freq)),
          detuning_(to_angular(p.omega_r - p.drive_freq)) {
        if (s.size() != p.dim_t) throw DimensionError("generator: transmon spectrum size != dim_t");
        energies_ = to_angular(1.0) * (s.energies.array() - s.energies(0)).matrix();
        n_t_ = s.n_elements;
        split_by_parity();
        resize(dim_r);
    }

    int dim_t() const { return dim_t_; }
    int dim_r() const { return dim_r_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(dim_t_) * dim_r_; }
    double kappa() const { return kappa_; }
    double omega_d() const { return omega_d_; }

    void resize(int dim_r) {
        if (dim_r < 2) throw DimensionError("generator: dim_r must be >= 2");
        dim_r_ = dim_r;
        sqrt_n_.resize(dim_r_ + 1);
        for (int n = 0; n <= dim_r_; ++n) sqrt_n_(n) = std::sqrt(static_cast<double>(n));
        diag_.resize(dim());
        for (int i = 0; i < dim_t_; ++i) {
            for (int n = 0; n < dim_r_; ++n) diag_(i * dim_r_ + n) = energies_(i) + detuning_ * n;
        }
        rows_.kappa = kappa_;
        rows_.half_n.resize(dim());
        rows_.raise.resize(dim());
        for (int i = 0; i < dim_t_; ++i) {
            for (int n = 0; n < dim_r_; ++n) {
                rows_.half_n(i * dim_r_ + n) = 0.5 * kappa_ * n;
                rows_.raise(i * dim_r_ + n) = n + 1 < dim_r_ ? sqrt_n_(n + 1) : 0.0;
            }
        }
        y_.resize(0, 0);
        w_.resize(0, 0);
    }

    GeneratorCoefficients at(double t) const {
        return {cplx(0.0, g_) * std::exp(cplx(0.0, omega_d_ * t)),
                -0.5 * drive_ + 0.5 * drive_ * std::exp(cplx(0.0, 2.0 * omega_d_ * t))};
    }

    // Exact averages of the oscillating coefficients over [t, t + dt].
    GeneratorCoefficients averaged(double t, double dt) const {
        const cplx e1 = std::exp(cplx(0.0, omega_d_ * t)) * detail::phase_average(omega_d_ * dt);
        const cplx e2 = std::exp(cplx(0.0, 2.0 * omega_d_ * t)) * detail::phase_average(2.0 * omega_d_ * dt);
        return {cplx(0.0, g_) * e1, -0.5 * drive_ + 0.5 * drive_ * e2};
    }

    // Dense H_I for the given coefficients (diagnostics and small checks).
    Eigen::MatrixXcd hamiltonian(const GeneratorCoefficients& c) const {
        const Eigen::Index d = dim();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
        h.diagonal() = diag_.cast<cplx>();
        for (int i = 0; i < dim_t_; ++i) {
            for (int n = 0; n + 1 < dim_r_; ++n) {
                const double s = sqrt_n_(n + 1);
                h(i * dim_r_ + n + 1, i * dim_r_ + n) += c.drive * s;
                h(i * dim_r_ + n, i * dim_r_ + n + 1) += std::conj(c.drive) * s;
                for (int j = 0; j < dim_t_; ++j) {
                    const double nij = n_t_(i, j);
                    h(i * dim_r_ + n + 1, j * dim_r_ + n) += nij * c.coupling * s;
                    h(i * dim_r_ + n, j * dim_r_ + n + 1) += nij * std::conj(c.coupling) * s;
                }
            }
        }
        return h;
    }

    // out = Lρ for an arbitrary square ρ.
    void apply(const GeneratorCoefficients& c, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
        check(rho);
        Eigen::MatrixXcd left(dim(), dim());
        const Eigen::MatrixXcd rho_dag = rho.adjoint();
        right_multiply(c, rho_dag, left);  // ρ†H = (Hρ)†
        right_multiply(c, rho, y_);        // ρH
        out.resize(dim(), dim());
        detail::commutator_and_dissipator(y_, left, rho, rows_, out);
    }

    // out = Lρ assuming ρ = ρ†; uses Hρ = (ρH)†.
    void apply_hermitian(const GeneratorCoefficients& c, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) const {
        check(rho);
        right_multiply(c, rho, y_);
        out.resize(dim(), dim());
        detail::commutator_and_dissipator(y_, y_, rho, rows_, out);
    }

private:
    void check(const Eigen::MatrixXcd& rho) const {
        if (rho.rows() != dim() || rho.cols() != dim()) {
            throw DimensionError("generator: state is " + std::to_string(rho.rows()) + "x" + std::to_string(rho.cols()) +
                                 ", generator expects " + std::to_string(dim()));
        }
    }

    // y = ρ H_I
    void right_multiply(const GeneratorCoefficients& c, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& y) const {
        const Eigen::Index d = dim();
        const int dr = dim_r_;
        const bool coupled = g_ != 0.0;
        y.resize(d, d);
        if (coupled) w_.resize(d, d);
        const cplx a_up = c.drive, a_dn = std::conj(c.drive);
        const cplx b_up = c.coupling, b_dn = std::conj(c.coupling);
        for (int j = 0; j < dim_t_; ++j) {
            for (int m = 0; m < dr; ++m) {
                const Eigen::Index col = static_cast<Eigen::Index>(j) * dr + m;
                // (ρ(1⊗X))[:, (j,m)] = X_up √(m+1) ρ[:, (j,m+1)] + X_dn √m ρ[:, (j,m−1)]
                if (m + 1 < dr && m > 0) {
                    y.col(col) = diag_(col) * rho.col(col) + (a_up * sqrt_n_(m + 1)) * rho.col(col + 1) +
                                 (a_dn * sqrt_n_(m)) * rho.col(col - 1);
                    if (coupled) {
                        w_.col(col) = (b_up * sqrt_n_(m + 1)) * rho.col(col + 1) + (b_dn * sqrt_n_(m)) * rho.col(col - 1);
                    }
                } else if (m + 1 < dr) {
                    y.col(col) = diag_(col) * rho.col(col) + (a_up * sqrt_n_(m + 1)) * rho.col(col + 1);
                    if (coupled) w_.col(col) = (b_up * sqrt_n_(m + 1)) * rho.col(col + 1);
                } else {
                    y.col(col) = diag_(col) * rho.col(col) + (a_dn * sqrt_n_(m)) * rho.col(col - 1);
                    if (coupled) w_.col(col) = (b_dn * sqrt_n_(m)) * rho.col(col - 1);
                }
            }
        }
        if (coupled) {
            // Column block j of ρ(n̂_t ⊗ K) is Σ_i n_ij W_block_i: one GEMM on the flattened blocks.
            const Eigen::Index block = d * dr;
            if (parity_) {
                // n_ij vanishes between levels of equal parity, so even and odd
                // blocks only feed each other.
                using Strided = Eigen::Map<Eigen::MatrixXcd, 0, Eigen::OuterStride<>>;
                using ConstStrided = Eigen::Map<const Eigen::MatrixXcd, 0, Eigen::OuterStride<>>;
                const Eigen::OuterStride<> stride(2 * block);
                const Eigen::Index evens = (dim_t_ + 1) / 2, odds = dim_t_ / 2;
                ConstStrided w_even(w_.data(), block, evens, stride);
                ConstStrided w_odd(w_.data() + block, block, odds, stride);
                Strided y_even(y.data(), block, evens, stride);
                Strided y_odd(y.data() + block, block, odds, stride);
                y_odd.noalias() += w_even * n_even_odd_;
                y_even.noalias() += w_odd * n_odd_even_;
            } else {
                Eigen::Map<const Eigen::MatrixXcd> w_flat(w_.data(), block, dim_t_);
                Eigen::Map<Eigen::MatrixXcd> y_flat(y.data(), block, dim_t_);
                y_flat.noalias() += w_flat * n_t_;
            }
        }
    }

    void split_by_parity() {
        const double scale = n_t_.cwiseAbs().maxCoeff();
        parity_ = dim_t_ > 1;
        for (int i = 0; i < dim_t_ && parity_; ++i) {
            for (int j = i % 2; j < dim_t_; j += 2) {
                if (std::abs(n_t_(i, j)) > 1e-13 * scale) {
                    parity_ = false;
                    break;
                }
            }
        }
        if (!parity_) return;
        const int evens = (dim_t_ + 1) / 2, odds = dim_t_ / 2;
        n_even_odd_.resize(evens, odds);
        n_odd_even_.resize(odds, evens);
        for (int a = 0; a < evens; ++a) {
            for (int b = 0; b < odds; ++b) {
                n_even_odd_(a, b) = n_t_(2 * a, 2 * b + 1);
                n_odd_even_(b, a) = n_t_(2 * b + 1, 2 * a);
            }
        }
    }

    int dim_t_;
    int dim_r_{0};
    bool parity_{false};
    Eigen::MatrixXd n_even_odd_, n_odd_even_;
    double g_, kappa_, drive_, omega_d_, detuning_;
    Eigen::VectorXd energies_;
    Eigen::MatrixXd n_t_;
    Eigen::VectorXd sqrt_n_;
    Eigen::VectorXd diag_;
    detail::DissipatorRows rows_;
    mutable Eigen::MatrixXcd y_;
    mutable Eigen::MatrixXcd w_;
};

// E = |1 − Tr{ρ[a, a†]}| with the truncated commutator diag(1, …, 1, 1 − dim_r);
// for Tr ρ = 1 this is dim_r times the top Fock population.
inline double truncation_error(const DensityMatrix& s) {
    double top = 0.0;
    for (int i = 0; i < s.dim_t; ++i) {
        const Eigen::Index k = static_cast<Eigen::Index>(i) * s.dim_r + s.dim_r - 1;
        top += s.rho(k, k).real();
    }
    return std::abs(static_cast<double>(s.dim_r) * top);
}

inline DensityMatrix pad_resonator(const DensityMatrix& s, int new_dim_r) {
    if (new_dim_r < s.dim_r) throw DimensionError("pad_resonator: cannot shrink the resonator");
    DensityMatrix out{s.dim_t, new_dim_r, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(s.dim_t) * new_dim_r,
                                                                  static_cast<Eigen::Index>(s.dim_t) * new_dim_r),
                      s.time};
    for (int j = 0; j < s.dim_t; ++j) {
        for (int i = 0; i < s.dim_t; ++i) {
            out.rho.block(static_cast<Eigen::Index>(i) * new_dim_r, static_cast<Eigen::Index>(j) * new_dim_r, s.dim_r,
                          s.dim_r) = s.rho.block(static_cast<Eigen::Index>(i) * s.dim_r,
                                                 static_cast<Eigen::Index>(j) * s.dim_r, s.dim_r, s.dim_r);
        }
    }
    return out;
}

struct AdaptResult {
    DensityMatrix state;
    bool resized{false};
    double error{0.0};
};

// Doubles dim_r (zero-padding in the Fock basis) while E exceeds the threshold.
inline AdaptResult adapt_hilbert_space(const DensityMatrix& s, const PropagatorConfig& cfg) {
    AdaptResult out{s, false, truncation_error(s)};
    if (out.error <= cfg.truncation_threshold) return out;
    const int doubled = 2 * s.dim_r;
    if (doubled > cfg.max_dim_r) {
        throw MaxDimensionError("adapt_hilbert_space: E = " + std::to_string(out.error) + " needs dim_r " +
                                std::to_string(doubled) + " > cap " + std::to_string(cfg.max_dim_r));
    }
    out.state = pad_resonator(s, doubled);
    out.resized = true;
    return out;
}

// One step ρ(t) → ρ(t + δt) through the Taylor-root factors of exp(δt L̄).
// Conjugate root pairs are applied together as the real quadratic
// 1 − 2Re(1/z) δt L̄ + |1/z|² δt² L̄², which equals the two sequential linear
// factors and keeps every intermediate Hermitian.
class Propagator {
public:
    Propagator(const SystemParams& p, const TransmonSpectrum& s, const PropagatorConfig& cfg, int dim_r)
        : cfg_(cfg), generator_(p, s, dim_r), roots_(taylor_roots(cfg.taylor_order)) {
        cfg_.validate();
        if (!(p.drive_freq > 0.0)) throw DimensionError("propagator: drive frequency must be positive");
        dt_ = 1.0 / (p.drive_freq * cfg_.steps_per_drive_period);
    }

    double step_size() const { return dt_; }
    const PropagatorConfig& config() const { return cfg_; }
    LindbladGenerator& generator() { return generator_; }
    const std::vector<cplx>& roots() const { return roots_; }
    double last_hermiticity_drift() const { return drift_; }

    void resize(int dim_r) {
        generator_.resize(dim_r);
        l1_.resize(0, 0);
        l2_.resize(0, 0);
    }

    // Action of the step generator: the averaged L̄, plus the two-point
    // Gauss–Legendre commutator term when enabled.
    void apply_step_generator(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
        generator_.apply_hermitian(generator_.averaged(t, dt_), rho, out);
        if (!cfg_.magnus_commutator) return;
        const double offset = std::sqrt(3.0) / 6.0;
        const auto c1 = generator_.at(t + (0.5 - offset) * dt_);
        const auto c2 = generator_.at(t + (0.5 + offset) * dt_);
        const double weight = std::sqrt(3.0) / 12.0 * dt_;
        Eigen::MatrixXcd first(rho.rows(), rho.cols()), second(rho.rows(), rho.cols());
        generator_.apply_hermitian(c1, rho, first);
        generator_.apply_hermitian(c2, first, second);  // L2 L1 ρ
        out += weight * second;
        generator_.apply_hermitian(c2, rho, first);
        generator_.apply_hermitian(c1, first, second);  // L1 L2 ρ
        out -= weight * second;
    }

    void step(DensityMatrix& s) {
        if (s.dim_r != generator_.dim_r() || s.dim_t != generator_.dim_t()) {
            throw DimensionError("propagator: state dims do not match the generator");
        }
        const double t = s.time;
        std::size_t k = 0;
        while (k < roots_.size()) {
            const cplx z = roots_[k];
            if (z.imag() == 0.0) {
                apply_step_generator(t, s.rho, l1_);
                s.rho -= (dt_ / z.real()) * l1_;
                k += 1;
            } else {
                const cplx inv = 1.0 / z;
                apply_step_generator(t, s.rho, l1_);
                apply_step_generator(t, l1_, l2_);
                s.rho += (-2.0 * inv.real() * dt_) * l1_ + (std::norm(inv) * dt_ * dt_) * l2_;
                k += 2;
            }
            check_norm(s.rho, t);
        }
        drift_ = hermitize(s.rho);
        s.time = t + dt_;
    }

private:
    void check_norm(const Eigen::MatrixXcd& rho, double t) const {
        const double size = rho.cwiseAbs2().maxCoeff();
        if (!std::isfinite(size) || size > cfg_.blowup_norm * cfg_.blowup_norm) {
            throw NumericalBlowupError("propagator: intermediate norm " + std::to_string(std::sqrt(size)) +
                                       " exceeds " + std::to_string(cfg_.blowup_norm) + " at t = " + std::to_string(t) +
                                       " ns");
        }
    }

    // ρ ← (ρ + ρ†)/2; returns the largest |ρ − ρ†| seen.
    static double hermitize(Eigen::MatrixXcd& rho) {
        const Eigen::Index d = rho.rows();
        constexpr Eigen::Index tile = 32;
        double drift = 0.0;
        for (Eigen::Index c0 = 0; c0 < d; c0 += tile) {
            for (Eigen::Index r0 = c0; r0 < d; r0 += tile) {
                const Eigen::Index c_end = std::min(c0 + tile, d);
                const Eigen::Index r_end = std::min(r0 + tile, d);
                for (Eigen::Index c = c0; c < c_end; ++c) {
                    for (Eigen::Index r = std::max(r0, c); r < r_end; ++r) {
                        const cplx a = rho(r, c);
                        const cplx b = std::conj(rho(c, r));
                        drift = std::max(drift, std::abs(a - b));
                        const cplx avg = 0.5 * (a + b);
                        rho(r, c) = avg;
                        rho(c, r) = std::conj(avg);
                    }
                }
            }
        }
        return drift;
    }

    PropagatorConfig cfg_;
    LindbladGenerator generator_;
    std::vector<cplx> roots_;
    double dt_{0.0};
    double drift_{0.0};
    Eigen::MatrixXcd l1_, l2_;
};

// Projector onto |ī,0⟩ embedded (truncated or zero-padded, then renormalised)
// at dim_r resonator levels.
inline DensityMatrix initial_state(const DressedSpectrum& d, int label, int dim_r) {
    if (label < 0 || label >= d.dim_t) throw IdentificationError("initial_state: label outside the transmon levels");
    const auto seeds = seed_branches(d, label + 1);
    const Eigen::VectorXcd psi = d.states.col(seeds[static_cast<std::size_t>(label)]);
    Eigen::VectorXcd embedded = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d.dim_t) * dim_r);
    const int keep = std::min(dim_r, d.dim_r);
    for (int i = 0; i < d.dim_t; ++i) {
        embedded.segment(static_cast<Eigen::Index>(i) * dim_r, keep) = psi.segment(d.flat(i, 0), keep);
    }
    embedded.normalize();
    return {d.dim_t, dim_r, embedded * embedded.adjoint(), 0.0};
}

struct TimeRecord {
    double time{0.0};  // ns
    double n_r{0.0};
    double n_t{0.0};
    std::vector<double> levels;
    double purity{0.0};
    double trace_deviation{0.0};
    int dim_r{0};
};

struct WignerSnapshot {
    std::size_t record{0};
    double time{0.0};
    WignerGrid grid;
};

struct TimeSeries {
    std::vector<TimeRecord> records;
    std::vector<WignerSnapshot> wigner;
    int resizes{0};
    std::string error;  // non-empty when the run stopped early

    bool complete() const { return error.empty(); }
};

inline TimeRecord observe(const DensityMatrix& s) {
    const auto pops = populations(s.rho, s.dim_t, s.dim_r);
    TimeRecord r;
    r.time = s.time;
    r.n_r = pops.resonator;
    r.n_t = pops.transmon;
    r.levels = pops.levels;
    r.purity = purity(reduce_transmon(s.rho, s.dim_t, s.dim_r));
    r.trace_deviation = std::abs(s.rho.trace() - 1.0);
    r.dim_r = s.dim_r;
    return r;
}

struct EvolveOptions {
    int wigner_every{0};  // records between Wigner snapshots; 0 disables
    WignerGridSpec wigner_grid{};
    // Called after each record; returning true ends the run early (no error).
    std::function<bool(const TimeRecord&)> stop_when;
};

// Steps through [0, t_end], doubling dim_r when needed (the offending step is
// recomputed at the larger size) and recording observables every
// `record_every` drive periods, plus the initial state.
inline TimeSeries evolve(const SystemParams& p, const TransmonSpectrum& s, const PropagatorConfig& cfg,
                         const DensityMatrix& initial, double t_end, const EvolveOptions& opts = {}) {
    p.validate();
    cfg.validate();
    TimeSeries series;
    DensityMatrix state = initial;
    state.time = 0.0;
    Propagator prop(p, s, cfg, state.dim_r);
    const double dt = prop.step_size();
    const auto total = static_cast<std::int64_t>(std::ceil(t_end / dt - 1e-9));
    const std::int64_t record_stride = static_cast<std::int64_t>(cfg.steps_per_drive_period) * cfg.record_every;

    auto record = [&]() -> bool {
        series.records.push_back(observe(state));
        if (opts.wigner_every > 0 && (series.records.size() - 1) % static_cast<std::size_t>(opts.wigner_every) == 0) {
            const auto rho_r = reduce_resonator(state.rho, state.dim_t, state.dim_r);
            series.wigner.push_back(
                {series.records.size() - 1, state.time, wigner(pad_for_grid(rho_r, opts.wigner_grid), opts.wigner_grid)});
        }
        return opts.stop_when && opts.stop_when(series.records.back());
    };

    try {
        if (record()) return series;
        DensityMatrix previous;
        for (std::int64_t k = 0; k < total; ++k) {
            previous = state;
            state.time = static_cast<double>(k) * dt;
            prop.step(state);
            while (truncation_error(state) > cfg.truncation_threshold) {
                auto grown = adapt_hilbert_space(state, cfg);
                previous = pad_resonator(previous, grown.state.dim_r);
                prop.resize(grown.state.dim_r);
                ++series.resizes;
                state = previous;
                state.time = static_cast<double>(k) * dt;
                prop.step(state);
            }
            state.time = static_cast<double>(k + 1) * dt;
            if ((k + 1) % record_stride == 0 && record()) return series;
        }
    } catch (const Error& e) {
        series.error = e.what();
    }
    return series;
}

}  // namespace ionize
