// dispersive.hpp — dispersive shift from identified dressed labels

#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "ionize/branch_ladders.hpp"
#include "ionize/dressed_system.hpp"

namespace ionize {

// χ = (E_{1̄,1} − E_{1̄,0} − E_{0̄,1} + E_{0̄,0}) / 2 with labels taken from the
// first ladder step of branches {0} and {1}. Only two columns of the ladder
// table are needed, so they are formed directly.
inline double dispersive_shift(const DressedSpectrum& d) {
    const auto seeds = seed_branches(d, 2);
    std::vector<bool> available(static_cast<std::size_t>(d.size()), true);
    for (auto s : seeds) available[static_cast<std::size_t>(s)] = false;

    std::array<double, 2> first_step{};
    for (int b = 0; b < 2; ++b) {
        const Eigen::VectorXcd psi = d.states.col(seeds[b]);
        Eigen::VectorXcd raised = Eigen::VectorXcd::Zero(d.size());
        for (int i = 0; i < d.dim_t; ++i) {
            for (int n = 1; n < d.dim_r; ++n) raised(d.flat(i, n)) = std::sqrt(double(n)) * psi(d.flat(i, n - 1));
        }
        const Eigen::VectorXd overlaps = (d.states.adjoint() * raised).cwiseAbs2();
        Eigen::Index best = -1;
        for (Eigen::Index l = 0; l < d.size(); ++l) {
            if (available[static_cast<std::size_t>(l)] && (best < 0 || overlaps(l) > overlaps(best))) best = l;
        }
        if (best < 0) throw ExhaustionError("dispersive_shift: spectrum too small");
        available[static_cast<std::size_t>(best)] = false;
        first_step[b] = d.energies(best) - d.energies(seeds[b]);
    }
    return 0.5 * (first_step[1] - first_step[0]);
}

}  // namespace ionize
