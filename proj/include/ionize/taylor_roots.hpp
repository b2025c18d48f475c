// taylor_roots.hpp — roots of the truncated exponential series
//
// Σ_{k=0}^{n} x^k/k! = Π_{i=1}^{n} (1 − x/z_i). The roots come from an
// Aberth–Ehrlich iteration in extended precision, are made exactly
// conjugate-symmetric, and are ordered by ascending modulus with each
// conjugate pair adjacent (positive imaginary part first).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "ionize/errors.hpp"

namespace ionize {

namespace detail {

using lcplx = std::complex<long double>;

// Value and derivative of Σ x^k/k! by Horner's rule.
inline void taylor_series_eval(int n, lcplx x, lcplx& value, lcplx& deriv) {
    std::vector<long double> coeff(static_cast<std::size_t>(n) + 1);
    coeff[0] = 1.0L;
    for (int k = 1; k <= n; ++k) coeff[static_cast<std::size_t>(k)] = coeff[static_cast<std::size_t>(k) - 1] / k;
    value = coeff[static_cast<std::size_t>(n)];
    deriv = 0.0L;
    for (int k = n - 1; k >= 0; --k) {
        deriv = deriv * x + value;
        value = value * x + coeff[static_cast<std::size_t>(k)];
    }
}

}  // namespace detail

inline std::vector<std::complex<double>> taylor_roots(int n) {
    using detail::lcplx;
    if (n < 1 || n > 32) throw RootFindingError("taylor_roots: order must lie in [1, 32]");
    if (n == 1) return {std::complex<double>(-1.0, 0.0)};

    // Initial guesses on a circle of the geometric-mean radius (n!)^{1/n}.
    long double log_fact = 0.0L;
    for (int k = 2; k <= n; ++k) log_fact += std::log(static_cast<long double>(k));
    const long double radius = std::exp(log_fact / n);
    std::vector<lcplx> z(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const long double angle = 2.0L * std::numbers::pi_v<long double> * (k + 0.25L) / n + 0.4L;
        z[static_cast<std::size_t>(k)] = std::polar(radius, angle);
    }

    bool converged = false;
    for (int iter = 0; iter < 500 && !converged; ++iter) {
        long double max_step = 0.0L;
        for (std::size_t i = 0; i < z.size(); ++i) {
            lcplx value, deriv;
            detail::taylor_series_eval(n, z[i], value, deriv);
            if (value == lcplx(0.0L)) continue;
            const lcplx ratio = value / deriv;
            lcplx repulsion = 0.0L;
            for (std::size_t j = 0; j < z.size(); ++j) {
                if (j != i) repulsion += 1.0L / (z[i] - z[j]);
            }
            const lcplx step = ratio / (1.0L - ratio * repulsion);
            z[i] -= step;
            max_step = std::max(max_step, std::abs(step) / std::max(1.0L, std::abs(z[i])));
        }
        converged = max_step < 1e-17L;
    }
    // Rounding can stall the iteration just above the target; accept when the
    // Newton correction at every root is negligible.
    for (const auto& zi : z) {
        lcplx value, deriv;
        detail::taylor_series_eval(n, zi, value, deriv);
        if (!(std::abs(value / deriv) <= 1e-13L * std::max(1.0L, std::abs(zi)))) {
            throw RootFindingError("taylor_roots: Aberth iteration did not converge for n = " + std::to_string(n));
        }
    }

    // Pair up conjugates and symmetrise them exactly.
    std::vector<lcplx> upper;
    std::vector<long double> reals;
    std::vector<bool> used(z.size(), false);
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        if (std::abs(z[i].imag()) < 1e-12L * std::max(1.0L, std::abs(z[i]))) {
            reals.push_back(z[i].real());
            continue;
        }
        std::size_t partner = z.size();
        long double best = 0.0L;
        for (std::size_t j = 0; j < z.size(); ++j) {
            if (used[j]) continue;
            const long double d = std::abs(z[j] - std::conj(z[i]));
            if (partner == z.size() || d < best) {
                partner = j;
                best = d;
            }
        }
        if (partner == z.size() || best > 1e-8L * std::max(1.0L, std::abs(z[i]))) {
            throw RootFindingError("taylor_roots: unpaired complex root");
        }
        used[partner] = true;
        const lcplx avg = 0.5L * (z[i] + std::conj(z[partner]));
        upper.emplace_back(avg.real(), std::abs(avg.imag()));
    }
    if (reals.size() != static_cast<std::size_t>(n % 2)) throw RootFindingError("taylor_roots: wrong number of real roots");

    struct Slot {
        long double modulus;
        bool real;
        lcplx value;
    };
    std::vector<Slot> slots;
    for (auto r : reals) slots.push_back({std::abs(r), true, lcplx(r, 0.0L)});
    for (auto u : upper) slots.push_back({std::abs(u), false, u});
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.modulus < b.modulus; });

    std::vector<std::complex<double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (const auto& s : slots) {
        const std::complex<double> v(static_cast<double>(s.value.real()), static_cast<double>(s.value.imag()));
        out.push_back(v);
        if (!s.real) out.push_back(std::conj(v));
    }
    return out;
}

// Coefficients of Π (1 − x/z_i), lowest order first.
inline std::vector<std::complex<double>> expand_root_product(const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> poly{1.0};
    for (const auto& z : roots) {
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t k = 0; k < poly.size(); ++k) {
            next[k] += poly[k];
            next[k + 1] -= poly[k] / z;
        }
        poly = std::move(next);
    }
    return poly;
}

}  // namespace ionize
