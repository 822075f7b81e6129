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
 * @file protocol.hpp
 * Layered collision sequence of the thermometer.
 *
 * One round j acts on the system S plus the j-th ancilla of each of the N
 * chains (register S, A1..AN):
 *
 *   thermalize(S),
 *   U(S,A1), U(A1,A2), U(S,A2), U(A2,A3), ..., U(A_{N-1},A_N), U(S,A_N)
 *
 * Between rounds the ancillae are traced out and archived, fresh |0>
 * ancillae are attached and the reduced state of S is carried over.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "channels.hpp"
#include "linops.hpp"

namespace collthermo {

inline constexpr std::size_t kMaxChains = 10;

enum class ResetKind { ExactGibbs, FiniteTime, None };

/// How S is re-thermalized at the start of each round.
struct ResetMode {
    ResetKind kind = ResetKind::ExactGibbs;
    double tau_se = 0.0; ///< only used by FiniteTime

    static ResetMode exact_gibbs() { return {ResetKind::ExactGibbs, 0.0}; }
    static ResetMode finite_time(double tau) { return {ResetKind::FiniteTime, tau}; }
    static ResetMode none() { return {ResetKind::None, 0.0}; }
};

inline std::string_view to_string(ResetKind k) {
    switch (k) {
    case ResetKind::ExactGibbs:
        return "exact-gibbs";
    case ResetKind::FiniteTime:
        return "finite-time";
    case ResetKind::None:
        return "none";
    }
    return "unknown";
}

/// What run_round does when the ancilla slots are not in |0><0|.
enum class AncillaCheck { Error, Warn, Off };

struct ProtocolParams {
    std::size_t n_chains = 1;
    std::size_t n_rounds = 1;
    ThermalParams thermal{};
    CollisionCouplings couplings{};
    ResetMode reset{};
    std::size_t time_steps_per_collision = 200;
    AncillaCheck ancilla_check = AncillaCheck::Warn;

    void validate() const {
        if (n_chains < 1) {
            throw std::invalid_argument("ProtocolParams: n_chains must be >= 1");
        }
        if (n_chains > kMaxChains) {
            throw std::invalid_argument("ProtocolParams: n_chains exceeds memory cap " +
                                        std::to_string(kMaxChains));
        }
        if (n_rounds < 1) {
            throw std::invalid_argument("ProtocolParams: n_rounds must be >= 1");
        }
        thermal.validate();
        couplings.validate();
        if (reset.kind == ResetKind::FiniteTime && !(reset.tau_se >= 0.0)) {
            throw std::invalid_argument("ProtocolParams: tau_se must be >= 0");
        }
    }

    [[nodiscard]] std::size_t num_qubits() const noexcept { return n_chains + 1; }

    [[nodiscard]] ProtocolParams at_temperature(double t) const {
        auto out = *this;
        out.thermal.temperature = t;
        return out;
    }
};

enum class EventKind { Thermalization, SystemAncilla, AncillaAncilla };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::Thermalization:
        return "thermalization";
    case EventKind::SystemAncilla:
        return "system-ancilla";
    case EventKind::AncillaAncilla:
        return "ancilla-ancilla";
    }
    return "unknown";
}

/// Reduced states at one instant of an event.
struct Snapshot {
    double fraction = 1.0;
    std::vector<DensityOperator> slots;        ///< every slot, index = slot
    std::vector<DensityOperator> system_pairs; ///< (S, A_k) at index k - 1
    std::optional<DensityOperator> joint;      ///< full register, on request
};

struct CollisionEvent {
    EventKind kind = EventKind::SystemAncilla;
    std::size_t round = 1;                 ///< 1-based j
    std::vector<std::size_t> participants; ///< slots, S = 0, A_k = k
    std::vector<std::string> labels;       ///< e.g. {"S", "A2"}
    double angle = 0.0;                    ///< g tau, J tau or gamma tau_SE
    /// False when the state jumps at the event start (instantaneous reset or
    /// fresh ancillae at the start of a round).
    bool continuous_start = true;
    std::vector<Snapshot> snapshots; ///< ordered by fraction, last at 1

    /// Chain index of the first ancilla involved, 0 for thermalization.
    [[nodiscard]] std::size_t chain() const {
        for (auto s : participants) {
            if (s > 0) {
                return s;
            }
        }
        return 0;
    }
    [[nodiscard]] const Snapshot &end_state() const { return snapshots.back(); }
};

struct TraceOptions {
    bool time_resolved = false; ///< sample every collision, not just its end
    bool keep_joint = false;    ///< store the full register in each snapshot
};

struct ProtocolTrace {
    ProtocolParams params;
    Snapshot initial; ///< before the first event
    std::vector<CollisionEvent> events;
    /// Reduced state of A_{k,j} at the end of round j: [j - 1][k - 1].
    std::vector<std::vector<DensityOperator>> end_of_round;
    /// Reduced state of S at the end of each round.
    std::vector<DensityOperator> system_end_of_round;

    [[nodiscard]] const DensityOperator &ancilla(std::size_t k, std::size_t j) const {
        if (j < 1 || j > end_of_round.size() || k < 1 ||
            k > end_of_round[j - 1].size()) {
            throw std::out_of_range("ProtocolTrace: no ancilla A_{" + std::to_string(k) +
                                    "," + std::to_string(j) + "}");
        }
        return end_of_round[j - 1][k - 1];
    }

    /// Indices into `events` belonging to round j.
    [[nodiscard]] std::vector<std::size_t> round_events(std::size_t j) const {
        std::vector<std::size_t> out;
        for (std::size_t e = 0; e < events.size(); ++e) {
            if (events[e].round == j) {
                out.push_back(e);
            }
        }
        return out;
    }
};

struct RoundResult {
    DensityOperator state;
    std::vector<CollisionEvent> events;
};

namespace detail {

inline Snapshot take_snapshot(const ComplexMatrix &rho, const QubitRegister &reg,
                              double fraction, bool keep_joint) {
    const std::size_t m = reg.size();
    Snapshot snap;
    snap.fraction = fraction;
    snap.slots.reserve(m);
    for (std::size_t s = 0; s < m; ++s) {
        const std::size_t keep[1] = {s};
        snap.slots.push_back(
            DensityOperator::unchecked(partial_trace(rho, keep, m), reg.subset(keep)));
    }
    for (std::size_t k = 1; k < m; ++k) {
        const std::size_t keep[2] = {0, k};
        snap.system_pairs.push_back(
            DensityOperator::unchecked(partial_trace(rho, keep, m), reg.subset(keep)));
    }
    if (keep_joint) {
        snap.joint = DensityOperator::unchecked(rho, reg);
    }
    return snap;
}

inline void check_fresh_ancillae(const DensityOperator &state, AncillaCheck mode) {
    if (mode == AncillaCheck::Off) {
        return;
    }
    const std::size_t m = state.num_qubits();
    for (std::size_t k = 1; k < m; ++k) {
        const std::size_t keep[1] = {k};
        const ComplexMatrix a = partial_trace(state.matrix(), keep, m);
        if (std::abs(a(0, 0) - Complex(1.0, 0.0)) > 1e-10) {
            const std::string msg = "ancilla " + state.reg().label(k) +
                                    " is not in the ground state at round start";
            if (mode == AncillaCheck::Error) {
                throw InvariantViolation("fresh-ancillae", "run_round: " + msg);
            }
            std::clog << "warning: " << msg << '\n';
        }
    }
}

class RoundRunner {
  public:
    RoundRunner(const ProtocolParams &p, const TraceOptions &opts) : p_(p), opts_(opts) {}

    RoundResult run(ComplexMatrix rho, const QubitRegister &reg, std::size_t round) const {
        std::vector<CollisionEvent> events;
        const std::size_t n = p_.n_chains;
        if (p_.reset.kind != ResetKind::None) {
            events.push_back(thermalize(rho, reg, round));
        }
        for (std::size_t k = 1; k <= n; ++k) {
            events.push_back(collide(rho, reg, round, EventKind::SystemAncilla, 0, k,
                                     p_.couplings.g_tau_sa));
            if (k < n) {
                events.push_back(collide(rho, reg, round, EventKind::AncillaAncilla, k,
                                         k + 1, p_.couplings.j_tau_a));
            }
        }
        if (round > 1) {
            events.front().continuous_start = false;
        }
        return {DensityOperator::unchecked(std::move(rho), reg), std::move(events)};
    }

  private:
    [[nodiscard]] std::size_t steps() const {
        return opts_.time_resolved ? p_.time_steps_per_collision : 1;
    }

    CollisionEvent thermalize(ComplexMatrix &rho, const QubitRegister &reg,
                              std::size_t round) const {
        const std::size_t m = reg.size();
        CollisionEvent ev;
        ev.kind = EventKind::Thermalization;
        ev.round = round;
        ev.participants = {0};
        ev.labels = {reg.label(0)};
        const std::size_t s = steps();
        if (p_.reset.kind == ResetKind::ExactGibbs) {
            ev.angle = std::numeric_limits<double>::infinity();
            ev.continuous_start = false;
            rho = apply_channel(rho, gibbs_reset(p_.thermal), 0, m);
            for (std::size_t i = 1; i <= s; ++i) {
                ev.snapshots.push_back(take_snapshot(rho, reg, static_cast<double>(i) / s,
                                                     opts_.keep_joint));
            }
            return ev;
        }
        const double tau = p_.reset.tau_se;
        ev.angle = p_.thermal.gamma * tau;
        const ComplexMatrix start = rho;
        for (std::size_t i = 1; i <= s; ++i) {
            const double f = static_cast<double>(i) / s;
            rho = apply_channel(start, thermal_kraus(p_.thermal, f * tau), 0, m);
            ev.snapshots.push_back(take_snapshot(rho, reg, f, opts_.keep_joint));
        }
        return ev;
    }

    CollisionEvent collide(ComplexMatrix &rho, const QubitRegister &reg, std::size_t round,
                           EventKind kind, std::size_t a, std::size_t b,
                           double angle) const {
        const std::size_t m = reg.size();
        CollisionEvent ev;
        ev.kind = kind;
        ev.round = round;
        ev.participants = {a, b};
        ev.labels = {reg.label(a), reg.label(b)};
        ev.angle = angle;
        const std::size_t targets[2] = {a, b};
        const std::size_t s = steps();
        if (s == 1) {
            conjugate_local(rho, partial_swap_unitary(angle), targets, m);
            ev.snapshots.push_back(take_snapshot(rho, reg, 1.0, opts_.keep_joint));
            return ev;
        }
        const ComplexMatrix start = rho;
        for (std::size_t i = 1; i <= s; ++i) {
            const double f = static_cast<double>(i) / s;
            rho = start;
            conjugate_local(rho, partial_swap_unitary(f * angle), targets, m);
            ev.snapshots.push_back(take_snapshot(rho, reg, f, opts_.keep_joint));
        }
        return ev;
    }

    const ProtocolParams &p_;
    TraceOptions opts_;
};

inline DensityOperator attach_fresh_ancillae(const DensityOperator &system,
                                             std::size_t n_chains) {
    const auto reg = QubitRegister::layered(n_chains);
    const auto dim = Eigen::Index{1} << n_chains;
    ComplexMatrix ground = ComplexMatrix::Zero(dim, dim);
    ground(0, 0) = 1.0;
    return DensityOperator::unchecked(kron(system.matrix(), ground), reg);
}

} // namespace detail

/// One round j on S + N ancillae; returns the evolved joint state and the
/// event log (end-of-event snapshots unless opts.time_resolved).
inline RoundResult run_round(const DensityOperator &state, const ProtocolParams &p,
                             std::size_t j, const TraceOptions &opts = {}) {
    p.validate();
    if (state.num_qubits() != p.num_qubits()) {
        throw std::invalid_argument("run_round: register has " +
                                    std::to_string(state.num_qubits()) +
                                    " slots, expected " + std::to_string(p.num_qubits()));
    }
    detail::check_fresh_ancillae(state, p.ancilla_check);
    return detail::RoundRunner(p, opts).run(state.matrix(), state.reg(), j);
}

/// Full protocol starting from the given system state (fresh |0> ancillae).
inline ProtocolTrace run_protocol(const ProtocolParams &p, const DensityOperator &initial_system,
                                  const TraceOptions &opts = {}) {
    p.validate();
    if (initial_system.num_qubits() != 1) {
        throw std::invalid_argument("run_protocol: initial system must be one qubit");
    }
    if (opts.time_resolved && p.time_steps_per_collision == 0) {
        throw std::invalid_argument("run_protocol: time_steps_per_collision must be > 0");
    }
    const detail::RoundRunner runner(p, opts);
    const auto reg = QubitRegister::layered(p.n_chains);

    ProtocolTrace trace;
    trace.params = p;
    DensityOperator system = DensityOperator::unchecked(initial_system.matrix(),
                                                        QubitRegister{"S"});
    {
        const auto joint = detail::attach_fresh_ancillae(system, p.n_chains);
        trace.initial = detail::take_snapshot(joint.matrix(), reg, 0.0, opts.keep_joint);
    }
    for (std::size_t j = 1; j <= p.n_rounds; ++j) {
        const auto joint = detail::attach_fresh_ancillae(system, p.n_chains);
        auto result = runner.run(joint.matrix(), reg, j);
        for (auto &ev : result.events) {
            trace.events.push_back(std::move(ev));
        }
        const auto &last = trace.events.back().end_state();
        std::vector<DensityOperator> ancillae(last.slots.begin() + 1, last.slots.end());
        trace.end_of_round.push_back(std::move(ancillae));
        system = last.slots.front();
        trace.system_end_of_round.push_back(system);
    }
    return trace;
}

/// Protocol with the system initially in |0><0|.
inline ProtocolTrace run_protocol(const ProtocolParams &p, const TraceOptions &opts = {}) {
    ComplexMatrix ground = ComplexMatrix::Zero(2, 2);
    ground(0, 0) = 1.0;
    return run_protocol(p, DensityOperator::unchecked(ground, QubitRegister{"S"}), opts);
}

/// The same collision sequence, time-resolved, from two system preparations.
inline std::pair<ProtocolTrace, ProtocolTrace>
run_time_resolved(const ProtocolParams &p,
                  const std::pair<DensityOperator, DensityOperator> &preparations,
                  bool keep_joint = false) {
    if (p.time_steps_per_collision == 0) {
        throw std::invalid_argument("run_time_resolved: time_steps_per_collision must be > 0");
    }
    const TraceOptions opts{true, keep_joint};
    return {run_protocol(p, preparations.first, opts), run_protocol(p, preparations.second, opts)};
}

} // namespace collthermo
