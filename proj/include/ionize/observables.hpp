// observables.hpp — reduced states, populations, purity and Wigner functions
//
// Joint states use the flat index i·dim_r + n (transmon major), with the
// transmon in its bare eigenbasis.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "ionize/errors.hpp"

namespace ionize {

namespace detail {

inline void check_joint(const Eigen::MatrixXcd& rho, int dim_t, int dim_r) {
    const Eigen::Index dim = static_cast<Eigen::Index>(dim_t) * dim_r;
    if (rho.rows() != dim || rho.cols() != dim) {
        throw DimensionError("joint state is " + std::to_string(rho.rows()) + "x" + std::to_string(rho.cols()) +
                             ", expected " + std::to_string(dim));
    }
}

}  // namespace detail

inline Eigen::MatrixXcd reduce_transmon(const Eigen::MatrixXcd& rho, int dim_t, int dim_r) {
    detail::check_joint(rho, dim_t, dim_r);
    Eigen::MatrixXcd out(dim_t, dim_t);
    for (int j = 0; j < dim_t; ++j) {
        for (int i = 0; i < dim_t; ++i) out(i, j) = rho.block(i * dim_r, j * dim_r, dim_r, dim_r).trace();
    }
    return out;
}

inline Eigen::MatrixXcd reduce_resonator(const Eigen::MatrixXcd& rho, int dim_t, int dim_r) {
    detail::check_joint(rho, dim_t, dim_r);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_r, dim_r);
    for (int i = 0; i < dim_t; ++i) out += rho.block(i * dim_r, i * dim_r, dim_r, dim_r);
    return out;
}

struct Populations {
    double resonator{0.0};           // N_r = ⟨a†a⟩
    double transmon{0.0};            // N_t = Σ i ⟨i|ρ_t|i⟩
    std::vector<double> levels;      // N_{i,t} = ⟨i|ρ_t|i⟩
};

// N_r from the joint diagonal; transmon level populations in the bare basis.
inline Populations populations(const Eigen::MatrixXcd& rho, int dim_t, int dim_r) {
    detail::check_joint(rho, dim_t, dim_r);
    Populations p;
    p.levels.assign(static_cast<std::size_t>(dim_t), 0.0);
    for (int i = 0; i < dim_t; ++i) {
        double level = 0.0;
        for (int n = 0; n < dim_r; ++n) {
            const double d = rho(i * dim_r + n, i * dim_r + n).real();
            level += d;
            p.resonator += n * d;
        }
        p.levels[static_cast<std::size_t>(i)] = level;
        p.transmon += i * level;
    }
    return p;
}

// Dressed-basis alternative: level i collects ⟨λ|ρ|λ⟩ over the states λ of
// branch {i} that fit in the current resonator space. `states` holds the
// dressed eigenvectors at (dim_t, dim_r); `ladders[i]` lists branch {i}.
inline Populations dressed_populations(const Eigen::MatrixXcd& rho, int dim_t, int dim_r, const Eigen::MatrixXcd& states,
                                       const std::vector<std::vector<Eigen::Index>>& ladders) {
    detail::check_joint(rho, dim_t, dim_r);
    if (states.rows() != rho.rows()) throw DimensionError("dressed populations: eigenvectors do not match the state");
    Populations p;
    p.levels.assign(ladders.size(), 0.0);
    for (std::size_t i = 0; i < ladders.size(); ++i) {
        for (std::size_t n = 0; n < ladders[i].size(); ++n) {
            const auto psi = states.col(ladders[i][n]);
            const double w = psi.dot(rho * psi).real();
            p.levels[i] += w;
            p.transmon += static_cast<double>(i) * w;
            p.resonator += static_cast<double>(n) * w;
        }
    }
    return p;
}

// Tr[ρ_t²] for a Hermitian reduced state.
inline double purity(const Eigen::MatrixXcd& rho_t) { return rho_t.cwiseAbs2().sum(); }

struct WignerGridSpec {
    double re_min{-16.0}, re_max{16.0};
    double im_min{-16.0}, im_max{16.0};
    int re_points{201}, im_points{201};

    static WignerGridSpec square(double extent, int points) {
        return {-extent, extent, -extent, extent, points, points};
    }

    double max_abs_sq() const {
        const double x = std::max(std::abs(re_min), std::abs(re_max));
        const double y = std::max(std::abs(im_min), std::abs(im_max));
        return x * x + y * y;
    }
};

struct WignerGrid {
    std::vector<double> re;  // Re β samples
    std::vector<double> im;  // Im β samples
    Eigen::MatrixXd values;  // values(re index, im index)
    double integral{0.0};    // trapezoidal ∫W d²β
};

namespace detail {

// Diagonals ρ_{m,m+k} of the upper triangle with the (−1)^m parity sign folded
// in, plus the recurrence coefficients, which depend on (m, k) only.
struct WignerDiagonals {
    std::vector<std::vector<double>> re, im;
    std::vector<std::vector<double>> inv;   // 1/√(m(m+k))
    std::vector<std::vector<double>> back;  // √((m−1)(m−1+k)) / √(m(m+k))
};

inline WignerDiagonals upper_diagonals(const Eigen::MatrixXcd& rho, Eigen::Index support) {
    WignerDiagonals out;
    const auto n = static_cast<std::size_t>(support);
    out.re.resize(n);
    out.im.resize(n);
    out.inv.resize(n);
    out.back.resize(n);
    for (Eigen::Index k = 0; k < support; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const auto len = static_cast<std::size_t>(support - k);
        out.re[kk].resize(len);
        out.im[kk].resize(len);
        out.inv[kk].assign(len, 0.0);
        out.back[kk].assign(len, 0.0);
        const double kd = static_cast<double>(k);
        for (std::size_t m = 0; m < len; ++m) {
            const double sign = m % 2 ? -1.0 : 1.0;
            const auto v = rho(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m) + k);
            out.re[kk][m] = sign * v.real();
            out.im[kk][m] = sign * v.imag();
            if (m > 0) {
                const double md = static_cast<double>(m);
                out.inv[kk][m] = 1.0 / std::sqrt(md * (md + kd));
                out.back[kk][m] = std::sqrt((md - 1.0) * (md - 1.0 + kd)) * out.inv[kk][m];
            }
        }
    }
    return out;
}

// W(β) = (2/π) Σ ρ_mn (−1)^m ⟨n|D(2β)|m⟩ for Hermitian ρ. For each offset k the
// normalised elements f_m = √(m!/(m+k)!) x^{k/2} e^{−x/2} L_m^{(k)}(x),
// x = 4|β|², follow a three-term recurrence in m; each |f_m| ≤ 1, and a running
// log-scale carries the tiny starting value e^{−x/2} without underflow.
inline double wigner_point(const WignerDiagonals& diags, std::complex<double> beta) {
    using cd = std::complex<double>;
    const auto support = diags.re.size();
    const double x = 4.0 * std::norm(beta);
    const cd unit = std::abs(beta) > 0.0 ? beta / std::abs(beta) : cd(1.0, 0.0);
    constexpr double limit = 1e150;
    const double log_limit = std::log(limit);
    const double log_x = x > 0.0 ? std::log(x) : 0.0;
    double total = 0.0;
    cd phase(1.0, 0.0);
    for (std::size_t k = 0; k < support; ++k, phase *= unit) {
        if (x == 0.0 && k > 0) break;
        const auto& dr = diags.re[k];
        const auto& di = diags.im[k];
        const auto& inv = diags.inv[k];
        const auto& back = diags.back[k];
        const double kd = static_cast<double>(k);
        const double pr = phase.real(), pi = phase.imag();
        double log_scale = (k > 0 ? 0.5 * kd * log_x : 0.0) - 0.5 * x - 0.5 * std::lgamma(kd + 1.0);
        double prev = 0.0, cur = 1.0;
        double acc = dr[0] * pr - di[0] * pi;
        for (std::size_t m = 1; m < dr.size(); ++m) {
            const double next = ((2.0 * static_cast<double>(m) - 1.0 + kd - x) * cur * inv[m]) - back[m] * prev;
            prev = cur;
            cur = next;
            acc += (dr[m] * pr - di[m] * pi) * cur;
            if (std::abs(cur) > limit) {
                cur /= limit;
                prev /= limit;
                acc /= limit;
                log_scale += log_limit;
            }
        }
        total += (k == 0 ? 1.0 : 2.0) * acc * std::exp(log_scale);
    }
    return 2.0 / std::numbers::pi * total;
}

// Leading Fock levels that matter to W: trailing rows and columns are dropped
// while their summed magnitude stays below 1e-16. Every recurrence element is
// bounded by 1, so W changes by at most (4/π)·1e-16.
inline Eigen::Index fock_support(const Eigen::MatrixXcd& rho_r) {
    Eigen::Index support = rho_r.rows();
    double dropped = 0.0;
    while (support > 1) {
        const Eigen::Index last = support - 1;
        const double edge = rho_r.row(last).head(support).cwiseAbs().sum() + rho_r.col(last).head(last).cwiseAbs().sum();
        if (dropped + edge >= 1e-16) break;
        dropped += edge;
        --support;
    }
    return support;
}

inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = count == 1 ? lo : lo + (hi - lo) * k / (count - 1);
    return out;
}

inline double trapezoid_weight(int k, int count) { return (k == 0 || k == count - 1) ? 0.5 : 1.0; }

}  // namespace detail

// W(β) = (2/π) Tr[D(−β) ρ_r D(β) Π], normalised so ∫W d²β = 1 and |W| ≤ 2/π.
inline WignerGrid wigner(const Eigen::MatrixXcd& rho_r, const WignerGridSpec& spec = {}) {
    if (rho_r.rows() != rho_r.cols() || rho_r.rows() == 0) throw DimensionError("wigner: resonator state must be square");
    if (spec.re_points < 1 || spec.im_points < 1) throw DimensionError("wigner: grid needs at least one point per axis");
    const double dim_r = static_cast<double>(rho_r.rows());
    if (!(spec.max_abs_sq() < 0.5 * dim_r)) {
        throw TruncationError("wigner: grid reaches |beta|^2 = " + std::to_string(spec.max_abs_sq()) +
                              " but dim_r/2 = " + std::to_string(0.5 * dim_r));
    }
    WignerGrid grid;
    grid.re = detail::linspace(spec.re_min, spec.re_max, spec.re_points);
    grid.im = detail::linspace(spec.im_min, spec.im_max, spec.im_points);
    grid.values.resize(spec.re_points, spec.im_points);
    const auto diags = detail::upper_diagonals(rho_r, detail::fock_support(rho_r));
    for (int y = 0; y < spec.im_points; ++y) {
        for (int x = 0; x < spec.re_points; ++x) {
            grid.values(x, y) = detail::wigner_point(diags, {grid.re[static_cast<std::size_t>(x)],
                                                             grid.im[static_cast<std::size_t>(y)]});
        }
    }
    if (spec.re_points > 1 && spec.im_points > 1) {
        const double dx = (spec.re_max - spec.re_min) / (spec.re_points - 1);
        const double dy = (spec.im_max - spec.im_min) / (spec.im_points - 1);
        double acc = 0.0;
        for (int y = 0; y < spec.im_points; ++y) {
            for (int x = 0; x < spec.re_points; ++x) {
                acc += detail::trapezoid_weight(x, spec.re_points) * detail::trapezoid_weight(y, spec.im_points) *
                       grid.values(x, y);
            }
        }
        grid.integral = acc * dx * dy;
    }
    return grid;
}

// Zero-pads a resonator state so that `spec` satisfies the truncation
// precondition; padding adds only empty Fock levels.
inline Eigen::MatrixXcd pad_for_grid(const Eigen::MatrixXcd& rho_r, const WignerGridSpec& spec) {
    auto needed = static_cast<Eigen::Index>(std::floor(2.0 * spec.max_abs_sq())) + 1;
    if (needed <= rho_r.rows()) return rho_r;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(needed, needed);
    out.topLeftCorner(rho_r.rows(), rho_r.cols()) = rho_r;
    return out;
}

}  // namespace ionize
