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
 * @file estimation.hpp
 * Temperature estimation: quantum Fisher information of temperature-dependent
 * state families, projective-measurement Fisher information, the equilibrium
 * (thermal) bound and the sweeps over chains, rounds and temperature.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "channels.hpp"
#include "linops.hpp"
#include "protocol.hpp"

namespace collthermo {

/// Value reported by the literature for the maximum of the thermal bound.
inline constexpr double kReportedThermalQfiMax = 3.80;

/// T -> reduced state of one designated qubit (or block) of the thermometer.
struct StateFamily {
    std::function<DensityOperator(double)> evaluate;
    std::string designation;
    double omega = 1.0; ///< system frequency, for the thermal bound

    DensityOperator operator()(double t) const { return evaluate(t); }
};

/// T -> several matrices at once; lets one protocol run feed many QFIs.
using MultiStateFamily = std::function<std::vector<ComplexMatrix>(double)>;

inline double default_step(double t) { return 1e-4 * std::max(t, 1.0); }

/// Central difference [rho(T + dT) - rho(T - dT)] / (2 dT).
inline ComplexMatrix state_derivative(const StateFamily &family, double t, double dt) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("state_derivative: dT must be > 0");
    }
    if (!(t - dt > 0.0)) {
        throw std::invalid_argument("state_derivative: T - dT must be > 0");
    }
    return (family(t + dt).matrix() - family(t - dt).matrix()) / (2.0 * dt);
}

/// States at T together with their temperature derivative.
struct StateJet {
    std::vector<ComplexMatrix> value;
    std::vector<ComplexMatrix> derivative;
};

/**
 * Richardson-extrapolated central difference, (4 D(dT/2) - D(dT)) / 3, which
 * cancels the dT^2 error term of the plain central difference.
 */
inline StateJet state_jet(const MultiStateFamily &family, double t, double dt) {
    if (!(dt > 0.0) || !(t - dt > 0.0)) {
        throw std::invalid_argument("state_jet: need dT > 0 and T - dT > 0");
    }
    StateJet jet;
    jet.value = family(t);
    const auto far_hi = family(t + dt);
    const auto far_lo = family(t - dt);
    const auto near_hi = family(t + 0.5 * dt);
    const auto near_lo = family(t - 0.5 * dt);
    jet.derivative.reserve(jet.value.size());
    for (std::size_t i = 0; i < jet.value.size(); ++i) {
        const ComplexMatrix wide = (far_hi[i] - far_lo[i]) / (2.0 * dt);
        const ComplexMatrix narrow = (near_hi[i] - near_lo[i]) / dt;
        jet.derivative.push_back((4.0 * narrow - wide) / 3.0);
    }
    return jet;
}

inline MultiStateFamily as_multi(const StateFamily &family) {
    return [family](double t) { return std::vector<ComplexMatrix>{family(t).matrix()}; };
}

/// Projector angles of |psi> = cos(theta)|0> + e^{i phi} sin(theta)|1>.
struct MeasurementAngles {
    double theta = 0.0;
    double phi = 0.0;
};

struct EstimationResult {
    double temperature = 0.0;
    double qfi = 0.0;
    std::optional<MeasurementAngles> optimal_angles; ///< single-qubit families only
    double thermal_bound = 0.0; ///< QFI of the Gibbs state at this T
    double ratio = 0.0;         ///< qfi / max_T thermal bound

    /// Cramer-Rao lower bound on the temperature variance, 1 / QFI.
    [[nodiscard]] double variance_bound() const {
        return qfi > 0.0 ? 1.0 / qfi : std::numeric_limits<double>::infinity();
    }
};

/// Terms with lambda_i + lambda_j below this are dropped from the SLD sum.
inline constexpr double kSldCutoff = 1e-12;

struct SldResult {
    double qfi = 0.0;
    ComplexMatrix sld; ///< symmetric logarithmic derivative in the input basis
};

/**
 * QFI = sum_{i,j} 2 |<i|d rho|j>|^2 / (lambda_i + lambda_j) over eigenpairs of
 * rho, skipping pairs with lambda_i + lambda_j < kSldCutoff.
 */
inline SldResult sld_qfi(const ComplexMatrix &rho, const ComplexMatrix &drho) {
    const auto eig = herm_eig(0.5 * (rho + rho.adjoint()));
    const RealVector lambda = clip_spectrum(eig.values);
    const ComplexMatrix d = eig.vectors.adjoint() * drho * eig.vectors;
    const auto n = lambda.size();
    ComplexMatrix l = ComplexMatrix::Zero(n, n);
    double qfi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = lambda(i) + lambda(j);
            if (s < kSldCutoff) {
                continue;
            }
            qfi += 2.0 * std::norm(d(i, j)) / s;
            l(i, j) = 2.0 * d(i, j) / s;
        }
    }
    return {qfi, eig.vectors * l * eig.vectors.adjoint()};
}

/// Angles of the first eigenvector of a 2x2 Hermitian matrix.
inline MeasurementAngles angles_of_eigenbasis(const ComplexMatrix &h) {
    const auto eig = herm_eig(0.5 * (h + h.adjoint()));
    const Complex c0 = eig.vectors(0, 1);
    const Complex c1 = eig.vectors(1, 1);
    MeasurementAngles a;
    a.theta = std::atan2(std::abs(c1), std::abs(c0));
    a.phi = std::abs(c1) > 0.0 && std::abs(c0) > 0.0 ? std::arg(c1) - std::arg(c0) : 0.0;
    if (a.phi < 0.0) {
        a.phi += 2.0 * std::numbers::pi;
    }
    return a;
}

/// Equilibrium QFI of the Gibbs qubit:
/// (dn/dT)^2 / (n (n + 1) (2n + 1)^2), with dn/dT = (omega / T^2) n (n + 1).
inline double thermal_qfi(const ThermalParams &p) {
    if (!(p.temperature > 0.0)) {
        throw std::invalid_argument("thermal_qfi: temperature must be > 0");
    }
    const double n = mean_occupation(p);
    if (n == 0.0) {
        return 0.0; // exp(-omega / T) underflow
    }
    const double t = p.temperature;
    const double dn = (p.omega / (t * t)) * n * (n + 1.0);
    const double w = 2.0 * n + 1.0;
    return dn * dn / (n * (n + 1.0) * w * w);
}

struct TemperatureOptimum {
    double temperature = 0.0;
    double value = 0.0;
};

/// Raised by max_over_temperature when the coarse scan is not unimodal.
class NonUnimodalError : public std::runtime_error {
  public:
    explicit NonUnimodalError(std::vector<TemperatureOptimum> maxima)
        : std::runtime_error("max_over_temperature: " + std::to_string(maxima.size()) +
                             " local maxima on the coarse scan"),
          maxima_(std::move(maxima)) {}

    [[nodiscard]] const std::vector<TemperatureOptimum> &local_maxima() const noexcept {
        return maxima_;
    }

  private:
    std::vector<TemperatureOptimum> maxima_;
};

namespace detail {

template <class F>
double golden_max(F &&f, double a, double b, double &arg, double tol = 1e-10) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    arg = 0.5 * (a + b);
    return f(arg);
}

} // namespace detail

/// Coarse-scan maxima plus the refined global maximum.
struct TemperatureScan {
    TemperatureOptimum best;
    std::vector<TemperatureOptimum> local_maxima; ///< coarse samples, ascending T
};

/**
 * Coarse linear scan of f over [lo, hi], then golden-section refinement of the
 * best bracket down to |dT| < 1e-6. Ties go to the smaller temperature. A
 * plateau counts as one maximum at its left end; maxima lower than 1e-9 of
 * the global one are treated as round-off.
 */
inline TemperatureScan scan_temperature(const std::function<double(double)> &f, double lo,
                                        double hi, std::size_t coarse_points = 200) {
    if (!(lo > 0.0) || !(hi > lo)) {
        throw std::invalid_argument("max_over_temperature: need 0 < T_lo < T_hi");
    }
    if (coarse_points < 3) {
        throw std::invalid_argument("max_over_temperature: need >= 3 coarse points");
    }
    std::vector<double> ts(coarse_points);
    std::vector<double> fs(coarse_points);
    for (std::size_t i = 0; i < coarse_points; ++i) {
        ts[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(coarse_points - 1);
        fs[i] = f(ts[i]);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < coarse_points; ++i) {
        if (fs[i] > fs[best]) {
            best = i;
        }
    }
    TemperatureScan scan;
    const double floor = std::abs(fs[best]) * 1e-9;
    for (std::size_t i = 0; i < coarse_points;) {
        std::size_t r = i;
        while (r + 1 < coarse_points && fs[r + 1] == fs[i]) {
            ++r;
        }
        const bool left_ok = i == 0 || fs[i] > fs[i - 1];
        const bool right_ok = r + 1 == coarse_points || fs[i] > fs[r + 1];
        if (left_ok && right_ok && (i == best || fs[i] > floor)) {
            scan.local_maxima.push_back({ts[i], fs[i]});
        }
        i = r + 1;
    }

    scan.best = {ts[best], fs[best]};
    double t_ref = ts[best];
    const double f_ref = detail::golden_max(f, ts[best == 0 ? 0 : best - 1],
                                            ts[best + 1 == coarse_points ? best : best + 1],
                                            t_ref, 1e-6);
    if (f_ref > fs[best]) {
        scan.best = {t_ref, f_ref};
    }
    return scan;
}

/// scan_temperature for unimodal f; throws NonUnimodalError otherwise.
inline TemperatureOptimum max_over_temperature(const std::function<double(double)> &f,
                                               double lo, double hi,
                                               std::size_t coarse_points = 200) {
    auto scan = scan_temperature(f, lo, hi, coarse_points);
    if (scan.local_maxima.size() > 1) {
        throw NonUnimodalError(std::move(scan.local_maxima));
    }
    return scan.best;
}

/// Maximum of thermal_qfi over temperature, bracket scaled with omega.
inline TemperatureOptimum thermal_qfi_max(double omega = 1.0) {
    ThermalParams p;
    p.omega = omega;
    return max_over_temperature([&](double t) { return thermal_qfi(p.at(t)); },
                                0.01 * omega, 5.0 * omega);
}

inline EstimationResult make_result(double t, double qfi, double omega,
                                    std::optional<MeasurementAngles> angles = std::nullopt) {
    ThermalParams p;
    p.temperature = t;
    p.omega = omega;
    EstimationResult r;
    r.temperature = t;
    r.qfi = qfi;
    r.optimal_angles = angles;
    r.thermal_bound = thermal_qfi(p);
    r.ratio = qfi / thermal_qfi_max(omega).value;
    return r;
}

/// QFI of the family at T from the SLD closed form; for a qubit the optimal
/// projective measurement is the SLD eigenbasis.
inline EstimationResult qfi_sld(const StateFamily &family, double t, double dt = 0.0) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("qfi_sld: temperature must be > 0");
    }
    const double step = dt > 0.0 ? dt : default_step(t);
    const auto jet = state_jet(as_multi(family), t, step);
    const auto sld = sld_qfi(jet.value.front(), jet.derivative.front());
    std::optional<MeasurementAngles> angles;
    if (jet.value.front().rows() == 2) {
        angles = angles_of_eigenbasis(sld.sld);
    }
    return make_result(t, sld.qfi, family.omega, angles);
}

/// SLD QFI of every member of a multi-state family at T.
inline std::vector<double> qfi_all(const MultiStateFamily &family, double t, double dt = 0.0) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("qfi_all: temperature must be > 0");
    }
    const auto jet = state_jet(family, t, dt > 0.0 ? dt : default_step(t));
    std::vector<double> out;
    out.reserve(jet.value.size());
    for (std::size_t i = 0; i < jet.value.size(); ++i) {
        out.push_back(sld_qfi(jet.value[i], jet.derivative[i]).qfi);
    }
    return out;
}

inline ComplexMatrix povm_projector(double theta, double phi) {
    Eigen::VectorXcd psi(2);
    psi << std::cos(theta), std::exp(Complex(0.0, phi)) * std::sin(theta);
    return psi * psi.adjoint();
}

/// Classical Fisher information of the two-outcome measurement
/// {Pi(theta, phi), I - Pi(theta, phi)}; outcomes with p < 1e-12 are skipped.
inline double fisher_povm(const ComplexMatrix &rho, const ComplexMatrix &drho, double theta,
                          double phi) {
    if (rho.rows() != 2) {
        throw std::invalid_argument("fisher_povm: single-qubit state expected");
    }
    const ComplexMatrix pi = povm_projector(theta, phi);
    const double p = (pi * rho).trace().real();
    const double dp = (pi * drho).trace().real();
    const double q = rho.trace().real() - p;
    const double dq = drho.trace().real() - dp;
    double fi = 0.0;
    if (p >= 1e-12) {
        fi += dp * dp / p;
    }
    if (q >= 1e-12) {
        fi += dq * dq / q;
    }
    return fi;
}

inline double fisher_povm(const StateFamily &family, double t, double theta, double phi,
                          double dt = 0.0) {
    if (theta < 0.0 || theta > std::numbers::pi) {
        throw std::invalid_argument("fisher_povm: theta outside [0, pi]");
    }
    if (phi < 0.0 || phi > 2.0 * std::numbers::pi) {
        throw std::invalid_argument("fisher_povm: phi outside [0, 2 pi]");
    }
    const auto jet = state_jet(as_multi(family), t, dt > 0.0 ? dt : default_step(t));
    return fisher_povm(jet.value.front(), jet.derivative.front(), theta, phi);
}

struct ScanGrid {
    std::size_t theta_count = 181;
    std::size_t phi_count = 180;
};


/// Best projective Fisher information over a (theta, phi) grid, followed by
/// one golden-section refinement in theta and then in phi.
inline EstimationResult fisher_scan(const ComplexMatrix &rho, const ComplexMatrix &drho,
                                    double t, double omega, ScanGrid grid = {}) {
    if (grid.theta_count < 2 || grid.phi_count < 2) {
        throw std::invalid_argument("qfi_scan: grid counts must be >= 2");
    }
    const double pi = std::numbers::pi;
    const double dtheta = pi / static_cast<double>(grid.theta_count - 1);
    const double dphi = 2.0 * pi / static_cast<double>(grid.phi_count);
    double best = -1.0;
    MeasurementAngles arg;
    for (std::size_t i = 0; i < grid.theta_count; ++i) {
        const double theta = dtheta * static_cast<double>(i);
        for (std::size_t j = 0; j < grid.phi_count; ++j) {
            const double phi = dphi * static_cast<double>(j);
            const double fi = fisher_povm(rho, drho, theta, phi);
            if (fi > best) {
                best = fi;
                arg = {theta, phi};
            }
        }
    }
    double theta_ref = arg.theta;
    const double f_theta = detail::golden_max(
        [&](double th) { return fisher_povm(rho, drho, th, arg.phi); },
        std::max(0.0, arg.theta - dtheta), std::min(pi, arg.theta + dtheta), theta_ref);
    if (f_theta > best) {
        best = f_theta;
        arg.theta = theta_ref;
    }
    double phi_ref = arg.phi;
    const double f_phi = detail::golden_max(
        [&](double ph) { return fisher_povm(rho, drho, arg.theta, ph); },
        std::max(0.0, arg.phi - dphi), std::min(2.0 * pi, arg.phi + dphi), phi_ref);
    if (f_phi > best) {
        best = f_phi;
        arg.phi = phi_ref;
    }
    return make_result(t, best, omega, arg);
}

inline EstimationResult qfi_scan(const StateFamily &family, double t, ScanGrid grid = {},
                                 double dt = 0.0) {
    if (!(t > 0.0)) {
        throw std::invalid_argument("qfi_scan: temperature must be > 0");
    }
    const auto jet = state_jet(as_multi(family), t, dt > 0.0 ? dt : default_step(t));
    return fisher_scan(jet.value.front(), jet.derivative.front(), t, family.omega, grid);
}

// Families ------------------------------------------------------------------

inline StateFamily gibbs_family(const ThermalParams &base) {
    return {[base](double t) { return gibbs_state(base.at(t)); }, "gibbs", base.omega};
}

/// End-of-round reduced state of ancilla A_{k,j}.
inline StateFamily ancilla_family(const ProtocolParams &base, std::size_t k, std::size_t j) {
    if (k < 1 || k > base.n_chains || j < 1 || j > base.n_rounds) {
        throw std::invalid_argument("ancilla_family: (k, j) outside the protocol");
    }
    return {[base, k, j](double t) { return run_protocol(base.at_temperature(t)).ancilla(k, j); },
            "A" + std::to_string(k) + "," + std::to_string(j), base.thermal.omega};
}

/// Reduced state of `slot` right after event `event_index` of the protocol.
inline StateFamily checkpoint_family(const ProtocolParams &base, std::size_t event_index,
                                     std::size_t slot) {
    return {[base, event_index, slot](double t) {
                const auto trace = run_protocol(base.at_temperature(t));
                return trace.events.at(event_index).end_state().slots.at(slot);
            },
            "event" + std::to_string(event_index) + ":slot" + std::to_string(slot),
            base.thermal.omega};
}

/// All ancillae of chain k across rounds 1..n_rounds, as one family.
inline MultiStateFamily chain_rounds_family(const ProtocolParams &base, std::size_t k) {
    return [base, k](double t) {
        const auto trace = run_protocol(base.at_temperature(t));
        std::vector<ComplexMatrix> out;
        for (std::size_t j = 1; j <= base.n_rounds; ++j) {
            out.push_back(trace.ancilla(k, j).matrix());
        }
        return out;
    };
}

// Sweeps --------------------------------------------------------------------

struct SweepRow {
    double temperature = 0.0;
    std::size_t n_chains = 0;
    std::size_t round = 0;
    double qfi = 0.0;
    double qfi_thermal = 0.0;
    double ratio = 0.0;
    double cumulative_fi = 0.0; ///< sum of the best single-ancilla FI over rounds 1..j
};

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn &&fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count && !failed; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        if (!failed.exchange(true)) {
                            error = std::current_exception();
                        }
                    }
                }
            });
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

/**
 * QFI of the last ancilla of the last chain, A_{N,j}, versus temperature for
 * every N in `chains` and j in `rounds`. The cumulative column adds the
 * single-qubit best-measurement FI (equal to the qubit QFI) over rounds 1..j.
 * Rows are ordered by (N, j, T).
 */
inline std::vector<SweepRow> sweep_fig2(const ProtocolParams &base,
                                        const std::vector<double> &temperatures,
                                        const std::vector<std::size_t> &chains,
                                        const std::vector<std::size_t> &rounds,
                                        std::size_t threads = 1) {
    if (temperatures.empty() || chains.empty() || rounds.empty()) {
        throw std::invalid_argument("sweep_fig2: grids must be nonempty");
    }
    const std::size_t max_round = *std::max_element(rounds.begin(), rounds.end());
    const double qth_max = thermal_qfi_max(base.thermal.omega).value;
    const std::size_t nt = temperatures.size();
    // per (N, T): QFI of A_{N,j} for j = 1..max_round
    std::vector<std::vector<double>> qfi(chains.size() * nt);
    parallel_for(qfi.size(), threads, [&](std::size_t idx) {
        const std::size_t ci = idx / nt;
        const double t = temperatures[idx % nt];
        auto p = base;
        p.n_chains = chains[ci];
        p.n_rounds = max_round;
        p.validate();
        qfi[idx] = qfi_all(chain_rounds_family(p, p.n_chains), t);
    });

    std::vector<SweepRow> rows;
    for (std::size_t ci = 0; ci < chains.size(); ++ci) {
        for (auto j : rounds) {
            if (j < 1) {
                throw std::invalid_argument("sweep_fig2: rounds are 1-based");
            }
            for (std::size_t ti = 0; ti < nt; ++ti) {
                const auto &q = qfi[ci * nt + ti];
                SweepRow r;
                r.temperature = temperatures[ti];
                r.n_chains = chains[ci];
                r.round = j;
                r.qfi = q[j - 1];
                r.qfi_thermal = thermal_qfi(base.thermal.at(r.temperature));
                r.ratio = r.qfi / qth_max;
                for (std::size_t jj = 0; jj < j; ++jj) {
                    r.cumulative_fi += q[jj];
                }
                rows.push_back(r);
            }
        }
    }
    return rows;
}

} // namespace collthermo
