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
 * @file linops.hpp
 * Dense complex linear algebra over multi-qubit registers.
 *
 * Ordering convention: slot 0 is the leftmost tensor factor. In a register of
 * m qubits, slot s is bit (m - 1 - s) of a basis index, so slot 0 is the most
 * significant bit and kron(a, b) places `a` on the lower slots.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace collthermo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Tolerances shared by the state invariants.
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kEigenClip = 1e-10;

/// Labels of the tensor factors of a state, slot 0 first.
class QubitRegister {
  public:
    explicit QubitRegister(std::vector<std::string> labels)
        : labels_(std::move(labels)) {
        if (labels_.empty()) {
            throw std::invalid_argument("QubitRegister: needs at least one slot");
        }
        std::unordered_set<std::string> seen;
        for (const auto &l : labels_) {
            if (!seen.insert(l).second) {
                throw std::invalid_argument("QubitRegister: duplicate label '" +
                                            l + "'");
            }
        }
    }
    QubitRegister(std::initializer_list<std::string> labels)
        : QubitRegister(std::vector<std::string>(labels)) {}

    /// System slot "S" followed by one active ancilla "A1".."AN" per chain.
    static QubitRegister layered(std::size_t n_chains) {
        std::vector<std::string> labels{"S"};
        for (std::size_t k = 1; k <= n_chains; ++k) {
            labels.push_back("A" + std::to_string(k));
        }
        return QubitRegister(std::move(labels));
    }

    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] const std::string &label(std::size_t slot) const {
        return labels_.at(slot);
    }
    [[nodiscard]] const std::vector<std::string> &labels() const noexcept {
        return labels_;
    }

    [[nodiscard]] std::size_t index_of(const std::string &label) const {
        auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) {
            throw std::invalid_argument("QubitRegister: no slot '" + label + "'");
        }
        return static_cast<std::size_t>(it - labels_.begin());
    }

    /// Register made of the given slots, in the given order.
    [[nodiscard]] QubitRegister subset(std::span<const std::size_t> slots) const {
        std::vector<std::string> out;
        out.reserve(slots.size());
        for (auto s : slots) {
            out.push_back(label(s));
        }
        return QubitRegister(std::move(out));
    }

    [[nodiscard]] QubitRegister concat(const QubitRegister &other) const {
        auto out = labels_;
        out.insert(out.end(), other.labels_.begin(), other.labels_.end());
        return QubitRegister(std::move(out));
    }

    friend bool operator==(const QubitRegister &, const QubitRegister &) = default;

  private:
    std::vector<std::string> labels_;
};

namespace detail {

inline std::size_t qubit_count(Eigen::Index dim) {
    std::size_t m = 0;
    auto d = static_cast<std::size_t>(dim);
    while ((std::size_t{1} << m) < d) {
        ++m;
    }
    if ((std::size_t{1} << m) != d) {
        throw std::invalid_argument("dimension " + std::to_string(dim) +
                                    " is not a power of two");
    }
    return m;
}

inline std::size_t bit_of(std::size_t slot, std::size_t m) { return m - 1 - slot; }

inline void check_targets(std::span<const std::size_t> targets, std::size_t m) {
    std::unordered_set<std::size_t> seen;
    for (auto t : targets) {
        if (t >= m) {
            throw std::invalid_argument("slot " + std::to_string(t) +
                                        " out of range for " +
                                        std::to_string(m) + " qubits");
        }
        if (!seen.insert(t).second) {
            throw std::invalid_argument("duplicate slot " + std::to_string(t));
        }
    }
}

/// offsets[a] sets the bits of `slots` to the bits of a; slots[0] is the
/// most significant bit of a.
inline std::vector<std::size_t> slot_offsets(std::span<const std::size_t> slots,
                                             std::size_t m) {
    const std::size_t k = slots.size();
    std::vector<std::size_t> offsets(std::size_t{1} << k, 0);
    for (std::size_t a = 0; a < offsets.size(); ++a) {
        for (std::size_t i = 0; i < k; ++i) {
            if ((a >> (k - 1 - i)) & 1U) {
                offsets[a] |= std::size_t{1} << bit_of(slots[i], m);
            }
        }
    }
    return offsets;
}

/// Basis indices whose bits on `slots` are all zero.
inline std::vector<std::size_t> complement_bases(std::span<const std::size_t> slots,
                                                 std::size_t m) {
    std::size_t mask = 0;
    for (auto s : slots) {
        mask |= std::size_t{1} << bit_of(s, m);
    }
    std::vector<std::size_t> out;
    out.reserve((std::size_t{1} << m) >> slots.size());
    for (std::size_t i = 0; i < (std::size_t{1} << m); ++i) {
        if ((i & mask) == 0) {
            out.push_back(i);
        }
    }
    return out;
}

} // namespace detail

/// Largest elementwise deviation |a - a^dagger|.
inline double hermiticity_defect(const ComplexMatrix &a) {
    if (a.rows() != a.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix &a, double tol = kHermitianTol) {
    return a.rows() == a.cols() && hermiticity_defect(a) <= tol;
}

struct HermitianEigen {
    RealVector values;    ///< ascending
    ComplexMatrix vectors; ///< columns are eigenvectors
};

/// Eigendecomposition of a Hermitian matrix (Householder tridiagonalization
/// followed by implicit symmetric QR).
inline HermitianEigen herm_eig(const ComplexMatrix &h) {
    if (!is_hermitian(h)) {
        throw std::invalid_argument("herm_eig: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw InvariantViolation("eigensolver", "did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

inline RealVector herm_eigvals(const ComplexMatrix &h) {
    if (!is_hermitian(h)) {
        throw std::invalid_argument("herm_eigvals: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw InvariantViolation("eigensolver", "did not converge");
    }
    return solver.eigenvalues();
}

/// Maps eigenvalues in [-kEigenClip, 0) to zero; anything more negative is an
/// invariant violation.
inline RealVector clip_spectrum(RealVector values) {
    for (auto &v : values) {
        if (v < -kEigenClip) {
            throw InvariantViolation("positivity",
                                     "eigenvalue " + std::to_string(v) +
                                         " below -1e-10");
        }
        v = std::max(v, 0.0);
    }
    return values;
}

/// Hermitian, unit-trace, positive semidefinite matrix over a QubitRegister.
class DensityOperator {
  public:
    /// Validates every invariant (costs one eigensolve).
    DensityOperator(ComplexMatrix matrix, QubitRegister reg)
        : matrix_(std::move(matrix)), reg_(std::move(reg)) {
        check_shape();
        validate();
    }

    /// Skips the invariant checks; for states produced by trace-preserving
    /// maps of already valid states.
    static DensityOperator unchecked(ComplexMatrix matrix, QubitRegister reg) {
        DensityOperator out(std::move(matrix), std::move(reg), Trusted{});
        out.check_shape();
        return out;
    }

    [[nodiscard]] const ComplexMatrix &matrix() const noexcept { return matrix_; }
    [[nodiscard]] const QubitRegister &reg() const noexcept { return reg_; }
    [[nodiscard]] std::size_t num_qubits() const noexcept { return reg_.size(); }
    [[nodiscard]] Eigen::Index dim() const noexcept { return matrix_.rows(); }
    [[nodiscard]] double trace() const { return matrix_.trace().real(); }

    /// Throws InvariantViolation naming the first failed invariant.
    void validate() const {
        const double herm = hermiticity_defect(matrix_);
        if (herm > kHermitianTol) {
            throw InvariantViolation("hermiticity",
                                     "max deviation " + std::to_string(herm));
        }
        const Complex tr = matrix_.trace();
        if (std::abs(tr - Complex(1.0, 0.0)) > kTraceTol) {
            throw InvariantViolation("trace", "trace " + std::to_string(tr.real()) +
                                                  (tr.imag() >= 0 ? "+" : "") +
                                                  std::to_string(tr.imag()) + "i");
        }
        clip_spectrum(herm_eigvals(matrix_));
    }

  private:
    struct Trusted {};
    DensityOperator(ComplexMatrix matrix, QubitRegister reg, Trusted)
        : matrix_(std::move(matrix)), reg_(std::move(reg)) {}

    void check_shape() const {
        if (matrix_.rows() != matrix_.cols()) {
            throw std::invalid_argument("DensityOperator: matrix not square");
        }
        if (detail::qubit_count(matrix_.rows()) != reg_.size()) {
            throw std::invalid_argument(
                "DensityOperator: dimension does not match register size");
        }
    }

    ComplexMatrix matrix_;
    QubitRegister reg_;
};

inline ComplexMatrix kron(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline DensityOperator kron(const DensityOperator &a, const DensityOperator &b) {
    return DensityOperator::unchecked(kron(a.matrix(), b.matrix()),
                                      a.reg().concat(b.reg()));
}

/// In-place m <- (op on `targets`) * m, for m with 2^num_qubits rows.
inline void apply_left(ComplexMatrix &m, const ComplexMatrix &op,
                       std::span<const std::size_t> targets, std::size_t num_qubits) {
    const std::size_t k = targets.size();
    if (op.rows() != op.cols() ||
        static_cast<std::size_t>(op.rows()) != (std::size_t{1} << k)) {
        throw std::invalid_argument("apply_left: operator dimension does not "
                                    "match target count");
    }
    if (static_cast<std::size_t>(m.rows()) != (std::size_t{1} << num_qubits)) {
        throw std::invalid_argument("apply_left: matrix rows do not match register");
    }
    detail::check_targets(targets, num_qubits);
    const auto offsets = detail::slot_offsets(targets, num_qubits);
    const auto bases = detail::complement_bases(targets, num_qubits);
    const auto local = static_cast<Eigen::Index>(offsets.size());
    std::vector<Complex> in(offsets.size());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Complex *col = m.col(c).data();
        for (auto base : bases) {
            for (Eigen::Index a = 0; a < local; ++a) {
                in[static_cast<std::size_t>(a)] = col[base + offsets[static_cast<std::size_t>(a)]];
            }
            for (Eigen::Index a = 0; a < local; ++a) {
                Complex acc{};
                for (Eigen::Index b = 0; b < local; ++b) {
                    acc += op(a, b) * in[static_cast<std::size_t>(b)];
                }
                col[base + offsets[static_cast<std::size_t>(a)]] = acc;
            }
        }
    }
}

/// Operator acting as `op` on `targets` (targets[0] is op's leftmost factor)
/// and as identity on the remaining slots of an m-qubit register.
inline ComplexMatrix embed(const ComplexMatrix &op, std::span<const std::size_t> targets,
                           std::size_t m) {
    ComplexMatrix out = ComplexMatrix::Identity(Eigen::Index{1} << m, Eigen::Index{1} << m);
    apply_left(out, op, targets, m);
    return out;
}

inline ComplexMatrix embed(const ComplexMatrix &op, std::initializer_list<std::size_t> targets,
                           std::size_t m) {
    return embed(op, std::span<const std::size_t>(targets.begin(), targets.size()), m);
}

/// rho <- op rho op^dagger on the given slots.
inline void conjugate_local(ComplexMatrix &rho, const ComplexMatrix &op,
                            std::span<const std::size_t> targets, std::size_t m) {
    apply_left(rho, op, targets, m);
    // (op (op rho)^dagger)^dagger = (op rho) op^dagger
    rho.adjointInPlace();
    apply_left(rho, op, targets, m);
    rho.adjointInPlace();
}

/// Reduced matrix on `keep` (in that order), tracing out every other slot.
inline ComplexMatrix partial_trace(const ComplexMatrix &rho, std::span<const std::size_t> keep,
                                   std::size_t m) {
    if (keep.empty()) {
        throw std::invalid_argument("partial_trace: keep list is empty");
    }
    detail::check_targets(keep, m);
    if (static_cast<std::size_t>(rho.rows()) != (std::size_t{1} << m) ||
        rho.rows() != rho.cols()) {
        throw std::invalid_argument("partial_trace: matrix does not match register");
    }
    const auto keep_off = detail::slot_offsets(keep, m);
    const auto traced = detail::complement_bases(keep, m);
    const auto d = static_cast<Eigen::Index>(keep_off.size());
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        for (Eigen::Index r = 0; r < d; ++r) {
            Complex acc{};
            const auto ro = keep_off[static_cast<std::size_t>(r)];
            const auto co = keep_off[static_cast<std::size_t>(c)];
            for (auto t : traced) {
                acc += rho(static_cast<Eigen::Index>(ro + t), static_cast<Eigen::Index>(co + t));
            }
            out(r, c) = acc;
        }
    }
    return out;
}

inline DensityOperator partial_trace(const DensityOperator &rho,
                                     std::span<const std::size_t> keep) {
    detail::check_targets(keep, rho.num_qubits());
    return DensityOperator::unchecked(partial_trace(rho.matrix(), keep, rho.num_qubits()),
                                      rho.reg().subset(keep));
}

inline DensityOperator partial_trace(const DensityOperator &rho,
                                     std::initializer_list<std::size_t> keep) {
    return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

/// exp(-i h t) for Hermitian h.
inline ComplexMatrix herm_propagator(const ComplexMatrix &h, double t) {
    if (!is_hermitian(h)) {
        throw std::invalid_argument("herm_propagator: generator is not Hermitian");
    }
    if (t == 0.0) {
        return ComplexMatrix::Identity(h.rows(), h.cols());
    }
    const auto eig = herm_eig(h);
    Eigen::VectorXcd phases(eig.values.size());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        phases(i) = std::exp(Complex(0.0, -eig.values(i) * t));
    }
    return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

/// Schatten-1 norm. Hermitian inputs use |eigenvalues|, others singular values.
inline double trace_norm(const ComplexMatrix &a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("trace_norm: matrix is not square");
    }
    if (a.size() == 0) {
        return 0.0;
    }
    if (is_hermitian(a, 1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff()))) {
        // symmetrize away round-off before the Hermitian solver
        const ComplexMatrix h = 0.5 * (a + a.adjoint());
        return herm_eigvals(h).cwiseAbs().sum();
    }
    Eigen::BDCSVD<ComplexMatrix> svd(a);
    return svd.singularValues().sum();
}

/// -sum lambda ln lambda, natural log, 0 ln 0 = 0.
inline double von_neumann_entropy(const DensityOperator &rho) {
    auto lambda = clip_spectrum(herm_eigvals(rho.matrix()));
    lambda /= lambda.sum();
    double s = 0.0;
    for (auto l : lambda) {
        if (l > 0.0) {
            s -= l * std::log(l);
        }
    }
    return s;
}

/// |psi><psi| for a computational basis string such as "01".
inline ComplexMatrix basis_projector(const std::string &bits) {
    const auto dim = Eigen::Index{1} << bits.size();
    Eigen::Index idx = 0;
    for (char b : bits) {
        if (b != '0' && b != '1') {
            throw std::invalid_argument("basis_projector: expected 0/1 string");
        }
        idx = (idx << 1) | (b == '1' ? 1 : 0);
    }
    ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
    p(idx, idx) = 1.0;
    return p;
}

namespace pauli {
inline ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }
inline ComplexMatrix x() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
inline ComplexMatrix y() {
    ComplexMatrix m(2, 2);
    m << 0, Complex(0, -1), Complex(0, 1), 0;
    return m;
}
/// Diagonal (1, -1): |0> has eigenvalue +1.
inline ComplexMatrix z() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}
} // namespace pauli

} // namespace collthermo
