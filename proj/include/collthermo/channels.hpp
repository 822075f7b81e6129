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
/**
 * @file channels.hpp
 * Thermal occupation, Gibbs states, the finite-temperature relaxation channel
 * and the exchange-collision unitaries.
 *
 * Units: hbar = k_B = 1. |0> is the ground state: the lowering operator
 * |0><1| relaxes toward it and the relaxation fixed point is the Gibbs state.
 */
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linops.hpp"

namespace collthermo {

struct ThermalParams {
    double temperature = 1.0;
    double omega = 1.0; ///< system frequency
    double gamma = 1.0; ///< relaxation rate, temperature independent

    void validate() const {
        if (!(temperature > 0.0)) {
            throw std::invalid_argument("ThermalParams: temperature must be > 0");
        }
        if (!(omega > 0.0)) {
            throw std::invalid_argument("ThermalParams: omega must be > 0");
        }
        if (!(gamma > 0.0)) {
            throw std::invalid_argument("ThermalParams: gamma must be > 0");
        }
    }

    [[nodiscard]] ThermalParams at(double t) const {
        auto out = *this;
        out.temperature = t;
        return out;
    }
};

/// Dimensionless collision angles g*tau_SA and J*tau_A.
struct CollisionCouplings {
    double g_tau_sa = 0.0;
    double j_tau_a = 0.0;

    void validate() const {
        if (!(g_tau_sa >= 0.0) || !(j_tau_a >= 0.0)) {
            throw std::invalid_argument("CollisionCouplings: angles must be >= 0");
        }
    }
};

/// Trace-preserving set of Kraus operators.
class KrausChannel {
  public:
    explicit KrausChannel(std::vector<ComplexMatrix> ops) : ops_(std::move(ops)) {
        if (ops_.empty()) {
            throw std::invalid_argument("KrausChannel: no operators");
        }
        const auto d = ops_.front().rows();
        ComplexMatrix sum = ComplexMatrix::Zero(d, d);
        for (const auto &k : ops_) {
            if (k.rows() != d || k.cols() != d) {
                throw std::invalid_argument(
                    "KrausChannel: operators must share one square dimension");
            }
            sum += k.adjoint() * k;
        }
        const double defect = (sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
        if (defect > 1e-10) {
            throw InvariantViolation("trace-preservation",
                                     "|sum K^dag K - I| = " + std::to_string(defect));
        }
    }

    static KrausChannel identity(Eigen::Index dim = 2) {
        return KrausChannel({ComplexMatrix::Identity(dim, dim)});
    }

    [[nodiscard]] const std::vector<ComplexMatrix> &operators() const noexcept {
        return ops_;
    }
    [[nodiscard]] Eigen::Index dim() const noexcept { return ops_.front().rows(); }

    /// Sum_k K rho K^dagger on a bare matrix of the same dimension.
    [[nodiscard]] ComplexMatrix operator()(const ComplexMatrix &rho) const {
        ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
        for (const auto &k : ops_) {
            out += k * rho * k.adjoint();
        }
        return out;
    }

  private:
    std::vector<ComplexMatrix> ops_;
};

/// Bose occupation 1 / (exp(omega / T) - 1).
inline double mean_occupation(const ThermalParams &p) {
    if (!(p.temperature > 0.0)) {
        throw std::invalid_argument("mean_occupation: temperature must be > 0");
    }
    return 1.0 / std::expm1(p.omega / p.temperature);
}

/// Excited-state population n / (2n + 1) = 1 / (exp(omega / T) + 1).
inline double excited_population(const ThermalParams &p) {
    if (!(p.temperature > 0.0)) {
        throw std::invalid_argument("excited_population: temperature must be > 0");
    }
    return 1.0 / (std::exp(p.omega / p.temperature) + 1.0);
}

inline DensityOperator gibbs_state(const ThermalParams &p,
                                   const std::string &label = "S") {
    const double p1 = excited_population(p);
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 1.0 - p1;
    m(1, 1) = p1;
    return DensityOperator::unchecked(std::move(m), QubitRegister{label});
}

/**
 * Generalized amplitude damping channel solving the single-qubit relaxation
 * master equation for duration t.
 *
 * With n the mean occupation, Gamma = gamma (2n + 1), eta = 1 - exp(-Gamma t)
 * and q = n / (2n + 1) the stationary excited population:
 * populations relax as p1(t) = q + (p1(0) - q) exp(-Gamma t) and coherences
 * decay as exp(-Gamma t / 2).
 */
inline KrausChannel thermal_kraus(const ThermalParams &p, double t) {
    p.validate();
    if (!(t >= 0.0)) {
        throw std::invalid_argument("thermal_kraus: duration must be >= 0");
    }
    if (t == 0.0) {
        return KrausChannel::identity();
    }
    const double n = mean_occupation(p);
    const double q = excited_population(p);
    const double rate = p.gamma * (2.0 * n + 1.0);
    const double eta = -std::expm1(-rate * t);
    const double keep = std::exp(-0.5 * rate * t);
    const double jump = std::sqrt(eta);
    const double down = std::sqrt(1.0 - q);
    const double up = std::sqrt(q);

    ComplexMatrix k0 = ComplexMatrix::Zero(2, 2);
    k0(0, 0) = down;
    k0(1, 1) = down * keep;
    ComplexMatrix k1 = ComplexMatrix::Zero(2, 2);
    k1(0, 1) = down * jump;
    ComplexMatrix k2 = ComplexMatrix::Zero(2, 2);
    k2(0, 0) = up * keep;
    k2(1, 1) = up;
    ComplexMatrix k3 = ComplexMatrix::Zero(2, 2);
    k3(1, 0) = up * jump;
    return KrausChannel({std::move(k0), std::move(k1), std::move(k2), std::move(k3)});
}

/// Replacement channel rho -> gibbs_state(p): the t -> infinity limit of
/// thermal_kraus.
inline KrausChannel gibbs_reset(const ThermalParams &p) {
    p.validate();
    const double p1 = excited_population(p);
    const double a0 = std::sqrt(1.0 - p1);
    const double a1 = std::sqrt(p1);
    std::vector<ComplexMatrix> ops;
    for (int to = 0; to < 2; ++to) {
        for (int from = 0; from < 2; ++from) {
            ComplexMatrix k = ComplexMatrix::Zero(2, 2);
            k(to, from) = to == 0 ? a0 : a1;
            ops.push_back(std::move(k));
        }
    }
    return KrausChannel(std::move(ops));
}

/// Applies a single-qubit channel to one slot of a bare density matrix.
inline ComplexMatrix apply_channel(const ComplexMatrix &rho, const KrausChannel &ch,
                                   std::size_t slot, std::size_t num_qubits) {
    if (ch.dim() != 2) {
        throw std::invalid_argument("apply_channel: expected a single-qubit channel");
    }
    if (slot >= num_qubits) {
        throw std::invalid_argument("apply_channel: invalid slot " +
                                    std::to_string(slot));
    }
    const std::size_t target[1] = {slot};
    if (ch.operators().size() == 1) {
        ComplexMatrix out = rho;
        conjugate_local(out, ch.operators().front(), target, num_qubits);
        return out;
    }
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (const auto &k : ch.operators()) {
        ComplexMatrix term = rho;
        conjugate_local(term, k, target, num_qubits);
        out += term;
    }
    return out;
}

inline DensityOperator apply_channel(const DensityOperator &rho, const KrausChannel &ch,
                                     std::size_t slot) {
    return DensityOperator::unchecked(apply_channel(rho.matrix(), ch, slot, rho.num_qubits()),
                                      rho.reg());
}

/// coupling * (|01><10| + |10><01|): the flip-flop exchange generator.
inline ComplexMatrix exchange_hamiltonian(double coupling) {
    ComplexMatrix h = ComplexMatrix::Zero(4, 4);
    h(1, 2) = coupling;
    h(2, 1) = coupling;
    return h;
}

/// exp(-i exchange_hamiltonian(1) angle). At angle pi/2 this is the phased
/// SWAP |a,b> -> (-i)^(a xor b) |b,a>.
inline ComplexMatrix partial_swap_unitary(double angle) {
    if (!(angle >= 0.0)) {
        throw std::invalid_argument("partial_swap_unitary: angle must be >= 0");
    }
    ComplexMatrix u = ComplexMatrix::Zero(4, 4);
    const double c = std::cos(angle);
    const Complex s(0.0, -std::sin(angle));
    u(0, 0) = 1.0;
    u(3, 3) = 1.0;
    u(1, 1) = c;
    u(2, 2) = c;
    u(1, 2) = s;
    u(2, 1) = s;
    return u;
}

} // namespace collthermo
