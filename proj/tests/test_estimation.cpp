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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "collthermo/estimation.hpp"
#include "test_support.hpp"

using namespace collthermo;
using collthermo::testing::max_abs;
using collthermo::testing::random_hermitian;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

StateFamily constant_family(const ComplexMatrix &m) {
    return {[m](double) { return DensityOperator(m, QubitRegister{"q"}); }, "const", 1.0};
}

double gibbs_p1_derivative(double t, double omega = 1.0) {
    const double e = std::exp(omega / t);
    return (omega / (t * t)) * e / ((e + 1.0) * (e + 1.0));
}

// exp(-i H T) psi0: QFI = 4 Var_psi0(H).
struct RotatingPure {
    ComplexMatrix h;
    Eigen::VectorXcd psi0;

    [[nodiscard]] StateFamily family() const {
        return {[h = h, psi0 = psi0](double t) {
                    const Eigen::VectorXcd psi = herm_propagator(h, t) * psi0;
                    return DensityOperator(psi * psi.adjoint(), QubitRegister{"q"});
                },
                "pure", 1.0};
    }

    [[nodiscard]] double qfi() const {
        const double mean = psi0.dot(h * psi0).real();
        const double second = psi0.dot(h * h * psi0).real();
        return 4.0 * (second - mean * mean);
    }
};

RotatingPure random_pure(std::mt19937_64 &rng) {
    RotatingPure r{random_hermitian(2, rng), Eigen::VectorXcd(2)};
    std::normal_distribution<double> g(0.0, 1.0);
    r.psi0 << Complex(g(rng), g(rng)), Complex(g(rng), g(rng));
    r.psi0.normalize();
    return r;
}

// Independent root of x tanh(x / 2) = 4 by bisection.
double stationarity_root() {
    double lo = 1.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mid * std::tanh(0.5 * mid) < 4.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

ProtocolParams protocol(std::size_t n, double g, double j) {
    ProtocolParams p;
    p.n_chains = n;
    p.couplings = {g, j};
    return p;
}

} // namespace

TEST(StateDerivative, ConstantFamilyIsZero) {
    const auto fam = constant_family(basis_projector("0"));
    EXPECT_EQ(max_abs(state_derivative(fam, 1.0, 1e-3)), 0.0);
}

TEST(StateDerivative, GibbsPopulationMatchesClosedForm) {
    const auto fam = gibbs_family({});
    const double exact = gibbs_p1_derivative(1.0);
    const double dt = 1e-3;
    const ComplexMatrix d = state_derivative(fam, 1.0, dt);
    EXPECT_NEAR(d(1, 1).real(), exact, 1e-6);
    EXPECT_NEAR(d(0, 0).real() + d(1, 1).real(), 0.0, 1e-12);

    const double e1 = std::abs(state_derivative(fam, 1.0, 0.02)(1, 1).real() - exact);
    const double e2 = std::abs(state_derivative(fam, 1.0, 0.01)(1, 1).real() - exact);
    EXPECT_NEAR(e1 / e2, 4.0, 0.05);
}

TEST(StateDerivative, Errors) {
    const auto fam = gibbs_family({});
    EXPECT_THROW(state_derivative(fam, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(state_derivative(fam, 1.0, -1e-3), std::invalid_argument);
    EXPECT_THROW(state_derivative(fam, 1e-3, 1e-3), std::invalid_argument);
}

TEST(StateJet, RichardsonIsFourthOrder) {
    const auto fam = as_multi(gibbs_family({}));
    const double exact = gibbs_p1_derivative(0.5);
    const double e1 = std::abs(state_jet(fam, 0.5, 0.04).derivative[0](1, 1).real() - exact);
    const double e2 = std::abs(state_jet(fam, 0.5, 0.02).derivative[0](1, 1).real() - exact);
    EXPECT_NEAR(e1 / e2, 16.0, 1.0);
}

TEST(ThermalQfi, Examples) {
    EXPECT_NEAR(thermal_qfi({1.0, 1.0, 1.0}), 0.1966, 1e-4);
    EXPECT_EQ(thermal_qfi({1e-3, 1.0, 1.0}), 0.0);
    EXPECT_LT(thermal_qfi({1e6, 1.0, 1.0}), 1e-20);
    EXPECT_THROW(thermal_qfi({0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(ThermalQfi, MatchesSimplifiedForm) {
    for (double t = 0.05; t < 20.0; t *= 1.17) {
        for (double omega : {0.5, 1.0, 2.0}) {
            const double x = omega / t;
            const double e = std::exp(x);
            const double simplified = (omega / (t * t)) * (omega / (t * t)) * e / ((e + 1) * (e + 1));
            EXPECT_NEAR(thermal_qfi({t, omega, 1.0}), simplified, 1e-12 * simplified);
        }
    }
}

TEST(QfiSld, ConstantFamilyIsZero) {
    EXPECT_EQ(qfi_sld(constant_family(ComplexMatrix::Identity(2, 2) / 2.0), 1.0).qfi, 0.0);
    EXPECT_EQ(qfi_sld(constant_family(basis_projector("1")), 1.0).qfi, 0.0);
    EXPECT_THROW(qfi_sld(gibbs_family({}), 0.0), std::invalid_argument);
}

TEST(QfiSld, GibbsSaturatesThermalBound) {
    const auto fam = gibbs_family({});
    for (int i = 0; i < 50; ++i) {
        const double t = 0.1 + 4.9 * i / 49.0;
        const double expected = thermal_qfi({t, 1.0, 1.0});
        EXPECT_NEAR(qfi_sld(fam, t).qfi, expected, 1e-8 * expected) << "T=" << t;
    }
}

TEST(QfiSld, StableUnderHalvedStep) {
    const auto fam = ancilla_family(protocol(2, 0.4, 1.1), 2, 1);
    for (double t : {0.2, 0.7, 1.5}) {
        const double full = qfi_sld(fam, t).qfi;
        const double half = qfi_sld(fam, t, 0.5 * default_step(t)).qfi;
        EXPECT_LT(std::abs(full - half), 1e-3 * full);
    }
}

TEST(QfiSld, PureFamilyMatchesVariance) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const auto r = random_pure(rng);
        EXPECT_NEAR(qfi_sld(r.family(), 0.8).qfi, r.qfi(), 1e-6 * r.qfi());
    }
}

TEST(QfiSld, SingleFullSwapTransfersTheThermalState) {
    const auto fam = ancilla_family(protocol(1, kHalfPi, kHalfPi), 1, 1);
    for (double t : {0.2, 0.5, 1.0, 2.0}) {
        const double expected = thermal_qfi({t, 1.0, 1.0});
        EXPECT_NEAR(qfi_sld(fam, t).qfi, expected, 1e-8 * expected);
    }
}

TEST(QfiSld, OptimalAnglesAttainTheQfi) {
    std::mt19937_64 rng(5);
    const auto r = random_pure(rng);
    const auto fam = r.family();
    const auto res = qfi_sld(fam, 0.9);
    ASSERT_TRUE(res.optimal_angles.has_value());
    const double fi = fisher_povm(fam, 0.9, res.optimal_angles->theta, res.optimal_angles->phi);
    EXPECT_NEAR(fi, res.qfi, 1e-5 * res.qfi);

    const auto mixed = ancilla_family(protocol(2, 0.4, 1.1), 2, 1);
    const auto rm = qfi_sld(mixed, 0.6);
    EXPECT_NEAR(fisher_povm(mixed, 0.6, rm.optimal_angles->theta, rm.optimal_angles->phi), rm.qfi,
                1e-8 * rm.qfi);
}

TEST(QfiSld, VarianceBoundIsInverseQfi) {
    const auto res = qfi_sld(gibbs_family({}), 0.7);
    EXPECT_EQ(res.variance_bound() * res.qfi, 1.0);
    EXPECT_TRUE(std::isinf(qfi_sld(constant_family(basis_projector("0")), 1.0).variance_bound()));
}

TEST(FisherPovm, CommutingProjectorSeesPopulationsOnly) {
    const auto fam = gibbs_family({});
    const double t = 0.8;
    const ThermalParams p{t, 1.0, 1.0};
    const double p1 = excited_population(p);
    const double dp1 = gibbs_p1_derivative(t);
    const double expected = dp1 * dp1 / p1 + dp1 * dp1 / (1.0 - p1);
    EXPECT_NEAR(fisher_povm(fam, t, 0.0, 0.0), expected, 1e-8 * expected);
    EXPECT_NEAR(fisher_povm(fam, t, std::numbers::pi / 2, 1.3), expected, 1e-8 * expected);
    // equator projectors carry no population information
    EXPECT_LT(fisher_povm(fam, t, std::numbers::pi / 4, 0.7), 1e-12);
}

TEST(FisherPovm, TemperatureIndependentFamilyIsZero) {
    const auto fam = constant_family(basis_projector("0"));
    for (double th : {0.0, 0.4, 1.2, std::numbers::pi}) {
        EXPECT_EQ(fisher_povm(fam, 1.0, th, 0.3), 0.0);
    }
}

TEST(FisherPovm, Errors) {
    const auto fam = gibbs_family({});
    EXPECT_THROW(fisher_povm(fam, 1.0, -0.1, 0.0), std::invalid_argument);
    EXPECT_THROW(fisher_povm(fam, 1.0, 3.2, 0.0), std::invalid_argument);
    EXPECT_THROW(fisher_povm(fam, 1.0, 1.0, 6.3), std::invalid_argument);
}

TEST(QfiScan, GibbsGridMaximumMatchesBound) {
    const auto fam = gibbs_family({});
    for (double t : {0.25, 1.0, 3.0}) {
        const double expected = thermal_qfi({t, 1.0, 1.0});
        EXPECT_NEAR(qfi_scan(fam, t).qfi, expected, 1e-3 * expected);
    }
}

TEST(QfiScan, PureFamilyMatchesSld) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 3; ++trial) {
        const auto r = random_pure(rng);
        const double sld = qfi_sld(r.family(), 1.1).qfi;
        const double scan = qfi_scan(r.family(), 1.1).qfi;
        EXPECT_LE(scan, sld + 1e-9);
        EXPECT_GT(scan, sld * (1.0 - 1e-3));
    }
}

TEST(QfiScan, DegenerateFamilyIsZero) {
    EXPECT_EQ(qfi_scan(constant_family(ComplexMatrix::Identity(2, 2) / 2.0), 1.0).qfi, 0.0);
}

TEST(QfiScan, NeverExceedsSld) {
    const auto fam = ancilla_family(protocol(2, 0.4, 1.1), 1, 1);
    for (double t : {0.15, 0.4, 1.0, 2.5}) {
        const double sld = qfi_sld(fam, t).qfi;
        const auto scan = qfi_scan(fam, t, {31, 30});
        EXPECT_LE(scan.qfi, sld + 1e-9);
    }
    EXPECT_THROW(qfi_scan(fam, 1.0, {1, 30}), std::invalid_argument);
}

TEST(MaxOverTemperature, ConstantPicksLowerEnd) {
    const auto opt = max_over_temperature([](double) { return 2.0; }, 0.3, 4.0);
    EXPECT_EQ(opt.temperature, 0.3);
    EXPECT_EQ(opt.value, 2.0);
}

TEST(MaxOverTemperature, RefinesBelowMicroKelvinScale) {
    const auto opt =
        max_over_temperature([](double t) { return -(t - 1.2345678) * (t - 1.2345678); }, 0.1, 3.0);
    EXPECT_NEAR(opt.temperature, 1.2345678, 1e-6);
}

TEST(MaxOverTemperature, ReportsAllMaximaWhenNotUnimodal) {
    try {
        max_over_temperature([](double t) { return std::sin(4.0 * t); }, 0.1, 4.0);
        FAIL() << "expected NonUnimodalError";
    } catch (const NonUnimodalError &e) {
        ASSERT_EQ(e.local_maxima().size(), 3U);
        EXPECT_NEAR(e.local_maxima()[0].temperature, std::numbers::pi / 8, 0.02);
    }
    EXPECT_THROW(max_over_temperature([](double t) { return t; }, 0.0, 1.0),
                 std::invalid_argument);
}

TEST(MaxOverTemperature, ThermalBoundSatisfiesStationarity) {
    ThermalParams p;
    const auto opt =
        max_over_temperature([&](double t) { return thermal_qfi(p.at(t)); }, 0.05, 5.0);
    const double x = 1.0 / opt.temperature;
    EXPECT_NEAR(x * std::tanh(0.5 * x), 4.0, 1e-4);
    EXPECT_NEAR(opt.temperature, 1.0 / stationarity_root(), 1e-6);
    const auto wide = thermal_qfi_max();
    EXPECT_NEAR(wide.value, opt.value, 1e-10);
    const double x_star = stationarity_root();
    EXPECT_NEAR(wide.value, thermal_qfi({1.0 / x_star, 1.0, 1.0}), 1e-10);
}

TEST(CheckpointFamily, FullSwapReceiversShareTheQfi) {
    // events: thermalize, U(S,A1), U(A1,A2), U(S,A2)
    const auto p = protocol(2, kHalfPi, kHalfPi);
    for (double t : {0.3, 1.0}) {
        const double s = qfi_sld(checkpoint_family(p, 0, 0), t).qfi;
        const double a1 = qfi_sld(checkpoint_family(p, 1, 1), t).qfi;
        const double a2 = qfi_sld(checkpoint_family(p, 2, 2), t).qfi;
        EXPECT_NEAR(s, a1, 1e-9);
        EXPECT_NEAR(a1, a2, 1e-9);
        EXPECT_LT(qfi_sld(checkpoint_family(p, 1, 0), t).qfi, 1e-9);
        EXPECT_LT(qfi_sld(checkpoint_family(p, 2, 1), t).qfi, 1e-9);
    }
}

TEST(SweepFig2, ExactResetMakesRoundsIdentical) {
    auto p = protocol(1, std::numbers::pi / 100, kHalfPi);
    const auto rows = sweep_fig2(p, {0.3, 0.8}, {1}, {1, 2, 3});
    ASSERT_EQ(rows.size(), 6U);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto &r = rows[i];
        EXPECT_TRUE(std::isfinite(r.qfi));
        EXPECT_GE(r.qfi, 0.0);
        const auto &first = rows[i % 2];
        EXPECT_NEAR(r.qfi, first.qfi, 1e-9 * first.qfi);
        EXPECT_NEAR(r.cumulative_fi, static_cast<double>(r.round) * first.qfi, 1e-9 * r.qfi * 3);
        EXPECT_EQ(r.qfi_thermal, thermal_qfi({r.temperature, 1.0, 1.0}));
    }
    EXPECT_EQ(rows[0].round, 1U);
    EXPECT_EQ(rows[2].round, 2U);
    EXPECT_EQ(rows[1].temperature, 0.8);
}

TEST(SweepFig2, ThreadsGiveIdenticalRows) {
    auto p = protocol(1, 0.3, kHalfPi);
    const auto serial = sweep_fig2(p, {0.3, 0.6, 0.9}, {1, 2}, {1});
    const auto threaded = sweep_fig2(p, {0.3, 0.6, 0.9}, {1, 2}, {1}, 3);
    ASSERT_EQ(serial.size(), threaded.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        EXPECT_EQ(serial[i].qfi, threaded[i].qfi);
    }
    EXPECT_THROW(sweep_fig2(p, {}, {1}, {1}), std::invalid_argument);
}

TEST(ParallelFor, RethrowsWorkerErrors) {
    EXPECT_THROW(parallel_for(8, 3,
                              [](std::size_t i) {
                                  if (i == 5) {
                                      throw std::runtime_error("boom");
                                  }
                              }),
                 std::runtime_error);
}
