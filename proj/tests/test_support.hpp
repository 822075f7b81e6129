// Copyright 2026 The collthermo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "collthermo/linops.hpp"

namespace collthermo::testing {

inline ComplexMatrix random_ginibre(Eigen::Index n, std::mt19937_64 &rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = Complex(g(rng), g(rng));
        }
    }
    return m;
}

inline ComplexMatrix random_hermitian(Eigen::Index n, std::mt19937_64 &rng) {
    const ComplexMatrix g = random_ginibre(n, rng);
    return 0.5 * (g + g.adjoint());
}

/// Full-rank random state (Hilbert-Schmidt measure).
inline DensityOperator random_state(std::size_t qubits, std::mt19937_64 &rng) {
    const auto n = Eigen::Index{1} << qubits;
    const ComplexMatrix g = random_ginibre(n, rng);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    rho = 0.5 * (rho + rho.adjoint());
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < qubits; ++i) {
        labels.push_back("q" + std::to_string(i));
    }
    return DensityOperator(rho, QubitRegister(labels));
}

inline DensityOperator pure_state(const Eigen::VectorXcd &psi, const QubitRegister &reg) {
    const Eigen::VectorXcd v = psi / psi.norm();
    return DensityOperator(v * v.adjoint(), reg);
}

// Element-by-element definition of an embedded operator, independent of the
// gather/scatter path in apply_left.
inline ComplexMatrix embed_oracle(const ComplexMatrix &op, const std::vector<std::size_t> &targets,
                           std::size_t m) {
    const std::size_t d = std::size_t{1} << m;
    const std::size_t k = targets.size();
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    auto bit = [&](std::size_t idx, std::size_t slot) { return (idx >> (m - 1 - slot)) & 1U; };
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            bool same = true;
            for (std::size_t s = 0; s < m; ++s) {
                if (std::find(targets.begin(), targets.end(), s) == targets.end() &&
                    bit(r, s) != bit(c, s)) {
                    same = false;
                }
            }
            if (!same) {
                continue;
            }
            std::size_t lr = 0, lc = 0;
            for (std::size_t i = 0; i < k; ++i) {
                lr = (lr << 1) | bit(r, targets[i]);
                lc = (lc << 1) | bit(c, targets[i]);
            }
            out(r, c) = op(lr, lc);
        }
    }
    return out;
}

inline double max_abs(const ComplexMatrix &m) { return m.cwiseAbs().maxCoeff(); }

} // namespace collthermo::testing
