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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "collthermo/linops.hpp"
#include "test_support.hpp"

using namespace collthermo;
using collthermo::testing::embed_oracle;
using collthermo::testing::max_abs;
using collthermo::testing::random_hermitian;
using collthermo::testing::random_state;

namespace {

ComplexMatrix swap_gate() {
    ComplexMatrix s = ComplexMatrix::Zero(4, 4);
    s(0, 0) = s(1, 2) = s(2, 1) = s(3, 3) = 1.0;
    return s;
}

} // namespace

TEST(QubitRegister, RejectsDuplicatesAndEmpty) {
    EXPECT_THROW(QubitRegister({"S", "S"}), std::invalid_argument);
    EXPECT_THROW(QubitRegister(std::vector<std::string>{}), std::invalid_argument);
    const auto reg = QubitRegister::layered(3);
    EXPECT_EQ(reg.size(), 4U);
    EXPECT_EQ(reg.label(0), "S");
    EXPECT_EQ(reg.index_of("A3"), 3U);
}

TEST(DensityOperator, ValidatesInvariants) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = 0.5;
    m(1, 1) = 0.4;
    try {
        DensityOperator bad(m, QubitRegister{"S"});
        FAIL() << "expected trace violation";
    } catch (const InvariantViolation &e) {
        EXPECT_EQ(e.invariant(), "trace");
    }
    m(1, 1) = 0.5;
    m(0, 1) = 0.1;
    EXPECT_THROW(DensityOperator(m, QubitRegister{"S"}), InvariantViolation);
    m(0, 1) = 0.0;
    m(0, 0) = 1.5;
    m(1, 1) = -0.5;
    EXPECT_THROW(DensityOperator(m, QubitRegister{"S"}), InvariantViolation);
    EXPECT_THROW(DensityOperator(ComplexMatrix::Identity(4, 4) / 4.0, QubitRegister{"S"}),
                 std::invalid_argument);
}

TEST(Kron, Examples) {
    EXPECT_LT(max_abs(kron(pauli::identity(), pauli::identity()) - ComplexMatrix::Identity(4, 4)),
              1e-15);
    ComplexMatrix zi = ComplexMatrix::Zero(4, 4);
    zi.diagonal() << 1, 1, -1, -1;
    EXPECT_LT(max_abs(kron(pauli::z(), pauli::identity()) - zi), 1e-15);
    EXPECT_LT(max_abs(kron(basis_projector("0"), basis_projector("1")) - basis_projector("01")),
              1e-15);
}

TEST(Embed, Examples) {
    const std::size_t t0[1] = {0};
    EXPECT_LT(max_abs(embed(pauli::x(), t0, 2) - kron(pauli::x(), pauli::identity())), 1e-15);
    EXPECT_LT(max_abs(embed(swap_gate(), {0, 1}, 2) - swap_gate()), 1e-15);
    EXPECT_LT(max_abs(embed(swap_gate(), {1, 0}, 2) - swap_gate()), 1e-15);
}

TEST(Embed, Errors) {
    EXPECT_THROW(embed(pauli::x(), {0, 1}, 2), std::invalid_argument);
    EXPECT_THROW(embed(swap_gate(), {1, 1}, 3), std::invalid_argument);
    EXPECT_THROW(embed(pauli::x(), {3}, 3), std::invalid_argument);
}

TEST(Embed, MatchesElementwiseOracleOnNonAdjacentTargets) {
    std::mt19937_64 rng(7);
    const ComplexMatrix op = collthermo::testing::random_ginibre(4, rng);
    for (const auto &targets :
         std::vector<std::vector<std::size_t>>{{0, 2}, {2, 0}, {3, 1}, {1, 3}, {0, 3}}) {
        EXPECT_LT(max_abs(embed(op, targets, 4) - embed_oracle(op, targets, 4)), 1e-14);
    }
}

TEST(Embed, PreservesSpectrumWithMultiplicity) {
    std::mt19937_64 rng(11);
    const ComplexMatrix h = random_hermitian(4, rng);
    const RealVector local = herm_eigvals(h);
    const RealVector full = herm_eigvals(embed(h, {2, 0}, 3));
    std::vector<double> expected;
    for (auto v : local) {
        expected.push_back(v);
        expected.push_back(v);
    }
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(full.size(), 8);
    for (Eigen::Index i = 0; i < 8; ++i) {
        EXPECT_NEAR(full(i), expected[static_cast<std::size_t>(i)], 1e-12);
    }
}

TEST(PartialTrace, Examples) {
    Eigen::VectorXcd phi = Eigen::VectorXcd::Zero(4);
    phi(0) = phi(3) = 1.0;
    const auto bell = collthermo::testing::pure_state(phi, QubitRegister{"a", "b"});
    const auto reduced = partial_trace(bell, {0});
    EXPECT_LT(max_abs(reduced.matrix() - ComplexMatrix::Identity(2, 2) / 2.0), 1e-15);
    EXPECT_EQ(reduced.reg().label(0), "a");

    std::mt19937_64 rng(3);
    const auto a = random_state(1, rng);
    const auto b = DensityOperator(random_state(1, rng).matrix(), QubitRegister{"b"});
    const auto ab = kron(a, b);
    EXPECT_LT(max_abs(partial_trace(ab, {1}).matrix() - b.matrix()), 1e-15);
    EXPECT_EQ(partial_trace(ab, {1}).reg().label(0), "b");
}

TEST(PartialTrace, PreservesTraceOnRandomStates) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rho = random_state(3, rng);
        for (const auto &keep :
             std::vector<std::vector<std::size_t>>{{0}, {2}, {1, 2}, {2, 0}}) {
            EXPECT_NEAR(partial_trace(rho, keep).trace(), 1.0, 1e-12);
        }
    }
}

TEST(PartialTrace, ComposesOverComplementarySets) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rho = random_state(3, rng);
        const auto once = partial_trace(rho, {0});
        const auto step = partial_trace(partial_trace(rho, {0, 1}), {0});
        EXPECT_LT(max_abs(once.matrix() - step.matrix()), 1e-12);
    }
}

TEST(PartialTrace, Errors) {
    std::mt19937_64 rng(1);
    const auto rho = random_state(2, rng);
    EXPECT_THROW(partial_trace(rho, {}), std::invalid_argument);
    EXPECT_THROW(partial_trace(rho, {2}), std::invalid_argument);
    EXPECT_THROW(partial_trace(rho, {0, 0}), std::invalid_argument);
}

TEST(HermitianEigen, ResidualsBelowTolerance) {
    std::mt19937_64 rng(23);
    for (Eigen::Index n : {2, 4, 16, 64}) {
        const ComplexMatrix h = random_hermitian(n, rng);
        const auto eig = herm_eig(h);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXcd v = eig.vectors.col(i);
            EXPECT_LT((h * v - eig.values(i) * v).norm(), 1e-9);
        }
    }
}

TEST(HermPropagator, Examples) {
    std::mt19937_64 rng(2);
    const ComplexMatrix h = random_hermitian(4, rng);
    const ComplexMatrix id = herm_propagator(h, 0.0);
    EXPECT_TRUE(id == ComplexMatrix::Identity(4, 4)); // exact
    const ComplexMatrix u = herm_propagator(pauli::x(), std::numbers::pi / 2);
    EXPECT_LT(max_abs(u - Complex(0, -1) * pauli::x()), 1e-14);
}

TEST(HermPropagator, GroupLawUnitarityAndCommutation) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexMatrix h = random_hermitian(8, rng);
        const double t1 = 0.37 * (trial + 1);
        const double t2 = 1.1 - 0.05 * trial;
        const ComplexMatrix u1 = herm_propagator(h, t1);
        const ComplexMatrix u12 = herm_propagator(h, t1 + t2);
        EXPECT_LT(max_abs(u1 * herm_propagator(h, t2) - u12), 1e-10);
        EXPECT_LT(max_abs(u1.adjoint() * u1 - ComplexMatrix::Identity(8, 8)), 1e-10);
        EXPECT_LT(max_abs(u1 * h - h * u1), 1e-9);
    }
}

TEST(HermPropagator, RejectsNonHermitian) {
    ComplexMatrix a = pauli::x();
    a(0, 1) = 2.0;
    EXPECT_THROW(herm_propagator(a, 1.0), std::invalid_argument);
}

TEST(TraceNorm, Examples) {
    EXPECT_NEAR(trace_norm(pauli::z()), 2.0, 1e-15);
    EXPECT_EQ(trace_norm(ComplexMatrix::Zero(3, 3)), 0.0);
    EXPECT_NEAR(trace_norm(basis_projector("0") - basis_projector("1")), 2.0, 1e-15);
    EXPECT_THROW(trace_norm(ComplexMatrix::Zero(2, 3)), std::invalid_argument);
}

TEST(TraceNorm, NonHermitianUsesSingularValues) {
    ComplexMatrix a = ComplexMatrix::Zero(2, 2);
    a(0, 1) = 3.0; // singular values {3, 0}
    EXPECT_NEAR(trace_norm(a), 3.0, 1e-14);
}

TEST(TraceNorm, IsANorm) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const ComplexMatrix a = random_hermitian(4, rng);
        const ComplexMatrix b = random_hermitian(4, rng);
        EXPECT_LE(trace_norm(a + b), trace_norm(a) + trace_norm(b) + 1e-12);
        const double c = -2.5 + 0.1 * trial;
        EXPECT_NEAR(trace_norm(c * a), std::abs(c) * trace_norm(a), 1e-10);
        EXPECT_GE(trace_norm(a), 0.0);
    }
}

TEST(Entropy, Examples) {
    const QubitRegister q{"q"};
    EXPECT_NEAR(von_neumann_entropy(DensityOperator(basis_projector("0"), q)), 0.0, 1e-15);
    EXPECT_NEAR(von_neumann_entropy(DensityOperator(ComplexMatrix::Identity(2, 2) / 2.0, q)),
                std::log(2.0), 1e-15);
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 0.9;
    d(1, 1) = 0.1;
    // -0.9 ln 0.9 - 0.1 ln 0.1
    EXPECT_NEAR(von_neumann_entropy(DensityOperator(d, q)), 0.325082973391448, 1e-12);
}

TEST(Entropy, AdditiveOnProducts) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_state(1, rng);
        const auto b = DensityOperator(random_state(2, rng).matrix(), QubitRegister{"x", "y"});
        EXPECT_NEAR(von_neumann_entropy(kron(a, b)),
                    von_neumann_entropy(a) + von_neumann_entropy(b), 1e-10);
    }
}

TEST(Entropy, ClipsTinyNegativeEigenvalues) {
    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 1.0 + 5e-11;
    d(1, 1) = -5e-11;
    const auto rho = DensityOperator::unchecked(d, QubitRegister{"q"});
    EXPECT_GE(von_neumann_entropy(rho), -1e-12);
    d(0, 0) = 1.0 + 1e-6;
    d(1, 1) = -1e-6;
    EXPECT_THROW(von_neumann_entropy(DensityOperator::unchecked(d, QubitRegister{"q"})),
                 InvariantViolation);
}

TEST(ConjugateLocal, MatchesEmbeddedProduct) {
    std::mt19937_64 rng(41);
    const auto rho = random_state(4, rng);
    const ComplexMatrix u = herm_propagator(random_hermitian(4, rng), 0.7);
    const std::vector<std::size_t> targets{3, 1};
    ComplexMatrix fast = rho.matrix();
    conjugate_local(fast, u, targets, 4);
    const ComplexMatrix full = embed_oracle(u, targets, 4);
    EXPECT_LT(max_abs(fast - full * rho.matrix() * full.adjoint()), 1e-13);
}
