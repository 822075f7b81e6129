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
 * @file infoflow.hpp
 * Distinguishability dynamics between two protocol runs, its time derivative
 * (the information flow), the backflow (BLP) measure and mutual information.
 *
 * D(t) = || rho_a(t) - rho_b(t) ||_1 without the 1/2 factor, so D is in
 * [0, 2]. sigma = dD/dt < 0 means information leaves the subject.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "linops.hpp"
#include "protocol.hpp"

namespace collthermo {

enum class SubjectKind { System, Ancilla, SystemAncillaPair, Joint };

/// Which reduced subsystem a distance is computed on.
struct Subject {
    SubjectKind kind = SubjectKind::System;
    std::size_t chain = 0; ///< for Ancilla and SystemAncillaPair

    static Subject system() { return {SubjectKind::System, 0}; }
    static Subject ancilla(std::size_t k) { return {SubjectKind::Ancilla, k}; }
    static Subject pair(std::size_t k) { return {SubjectKind::SystemAncillaPair, k}; }
    static Subject joint() { return {SubjectKind::Joint, 0}; }

    /// "S", "A3", "S+A3" or "joint".
    [[nodiscard]] std::string label() const {
        switch (kind) {
        case SubjectKind::System:
            return "S";
        case SubjectKind::Ancilla:
            return "A" + std::to_string(chain);
        case SubjectKind::SystemAncillaPair:
            return "S+A" + std::to_string(chain);
        case SubjectKind::Joint:
            return "joint";
        }
        return "?";
    }

    static Subject parse(const std::string &text) {
        auto chain_of = [&](const std::string &digits) {
            if (digits.empty() ||
                digits.find_first_not_of("0123456789") != std::string::npos) {
                throw std::invalid_argument("subject: bad chain index in '" + text + "'");
            }
            const auto k = static_cast<std::size_t>(std::stoul(digits));
            if (k < 1) {
                throw std::invalid_argument("subject: chains are 1-based in '" + text + "'");
            }
            return k;
        };
        if (text == "S") {
            return system();
        }
        if (text == "joint") {
            return joint();
        }
        if (text.rfind("S+A", 0) == 0) {
            return pair(chain_of(text.substr(3)));
        }
        if (text.rfind('A', 0) == 0) {
            return ancilla(chain_of(text.substr(1)));
        }
        throw std::invalid_argument("subject: unknown selector '" + text + "'");
    }

    friend bool operator==(const Subject &, const Subject &) = default;
};

inline const DensityOperator &select(const Snapshot &snap, const Subject &subject) {
    switch (subject.kind) {
    case SubjectKind::System:
        return snap.slots.at(0);
    case SubjectKind::Ancilla:
        if (subject.chain < 1 || subject.chain >= snap.slots.size()) {
            throw std::invalid_argument("subject " + subject.label() + " not in register");
        }
        return snap.slots[subject.chain];
    case SubjectKind::SystemAncillaPair:
        if (subject.chain < 1 || subject.chain > snap.system_pairs.size()) {
            throw std::invalid_argument("subject " + subject.label() + " not in register");
        }
        return snap.system_pairs[subject.chain - 1];
    case SubjectKind::Joint:
        if (!snap.joint) {
            throw std::invalid_argument("subject joint: trace was run without keep_joint");
        }
        return *snap.joint;
    }
    throw std::invalid_argument("unknown subject");
}

inline constexpr std::size_t kInitialSample = std::numeric_limits<std::size_t>::max();

struct DistinguishabilitySeries {
    Subject subject;
    std::vector<double> times; ///< event e spans [e, e + 1]
    std::vector<double> distance;
    std::vector<std::size_t> event; ///< kInitialSample for t = 0
    /// False where the state jumps between the previous sample and this one.
    std::vector<bool> connected;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
};

struct FlowSeries {
    std::vector<double> times;
    std::vector<double> sigma;
    std::vector<std::size_t> event;
};

/// D(t) on `subject` for two traces of the same collision sequence.
inline DistinguishabilitySeries distinguishability(const ProtocolTrace &a, const ProtocolTrace &b,
                                                   const Subject &subject) {
    if (a.events.size() != b.events.size()) {
        throw std::invalid_argument("distinguishability: mismatched timelines");
    }
    DistinguishabilitySeries s;
    s.subject = subject;
    auto push = [&](double t, const Snapshot &x, const Snapshot &y, std::size_t e, bool conn) {
        s.times.push_back(t);
        s.distance.push_back(
            trace_norm(select(x, subject).matrix() - select(y, subject).matrix()));
        s.event.push_back(e);
        s.connected.push_back(conn);
    };
    push(0.0, a.initial, b.initial, kInitialSample, false);
    for (std::size_t e = 0; e < a.events.size(); ++e) {
        const auto &ea = a.events[e];
        const auto &eb = b.events[e];
        if (ea.kind != eb.kind || ea.participants != eb.participants ||
            ea.snapshots.size() != eb.snapshots.size()) {
            throw std::invalid_argument("distinguishability: mismatched timelines");
        }
        for (std::size_t i = 0; i < ea.snapshots.size(); ++i) {
            if (ea.snapshots[i].fraction != eb.snapshots[i].fraction) {
                throw std::invalid_argument("distinguishability: mismatched timelines");
            }
            const bool conn = i > 0 || ea.continuous_start;
            push(static_cast<double>(e) + ea.snapshots[i].fraction, ea.snapshots[i],
                 eb.snapshots[i], e, conn);
        }
    }
    return s;
}

namespace detail {

/// [first, last] sample ranges over which D is differentiated: one per event,
/// including the preceding sample when the event starts continuously.
struct Piece {
    std::size_t first;
    std::size_t last;
};

inline std::vector<Piece> pieces_of(const DistinguishabilitySeries &s) {
    std::vector<Piece> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j + 1 < s.size() && s.event[j + 1] == s.event[i]) {
            ++j;
        }
        const std::size_t first = (s.connected[i] && i > 0) ? i - 1 : i;
        out.push_back({first, j});
        i = j + 1;
    }
    return out;
}

} // namespace detail

/**
 * sigma(t) = dD/dt: central differences inside each event, one-sided at the
 * ends of an event. Events that start with a jump (instantaneous reset, fresh
 * ancillae) are not differentiated across the jump; a sample with no
 * neighbour in its piece gets sigma = 0.
 */
inline FlowSeries flow(const DistinguishabilitySeries &s) {
    if (s.size() < 3) {
        throw std::invalid_argument("flow: need at least 3 samples");
    }
    FlowSeries f;
    f.times = s.times;
    f.event = s.event;
    f.sigma.assign(s.size(), 0.0);
    std::vector<bool> assigned(s.size(), false);
    const auto &t = s.times;
    const auto &d = s.distance;
    for (const auto &piece : detail::pieces_of(s)) {
        if (piece.last == piece.first) {
            continue; // sigma stays 0 unless a later piece claims the sample
        }
        for (std::size_t i = piece.first; i <= piece.last; ++i) {
            // a shared start sample belongs to the previous event's piece
            if (assigned[i]) {
                continue;
            }
            if (i == piece.first) {
                f.sigma[i] = (d[i + 1] - d[i]) / (t[i + 1] - t[i]);
            } else if (i == piece.last) {
                f.sigma[i] = (d[i] - d[i - 1]) / (t[i] - t[i - 1]);
            } else {
                f.sigma[i] = (d[i + 1] - d[i - 1]) / (t[i + 1] - t[i - 1]);
            }
            assigned[i] = true;
        }
    }
    return f;
}

/**
 * Backflow measure: sum over maximal intervals of increasing D of
 * D(end) - D(start). Increments across jumps are ignored; increments below
 * `tol` count as flat.
 */
inline double blp_measure(const DistinguishabilitySeries &s, double tol = 1e-12) {
    double total = 0.0;
    double run_start = 0.0;
    bool in_run = false;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double inc = s.distance[i] - s.distance[i - 1];
        if (s.connected[i] && inc > tol) {
            if (!in_run) {
                run_start = s.distance[i - 1];
                in_run = true;
            }
            continue;
        }
        if (in_run) {
            total += s.distance[i - 1] - run_start;
            in_run = false;
        }
    }
    if (in_run) {
        total += s.distance.back() - run_start;
    }
    return total;
}

/// I(a : b) = S(a) + S(b) - S(ab), natural log.
inline double mutual_information(const DensityOperator &rho, std::size_t slot_a,
                                 std::size_t slot_b) {
    if (slot_a == slot_b) {
        throw std::invalid_argument("mutual_information: slots must differ");
    }
    const std::size_t a[1] = {slot_a};
    const std::size_t b[1] = {slot_b};
    const std::size_t ab[2] = {slot_a, slot_b};
    return von_neumann_entropy(partial_trace(rho, a)) +
           von_neumann_entropy(partial_trace(rho, b)) -
           von_neumann_entropy(partial_trace(rho, ab));
}

} // namespace collthermo
