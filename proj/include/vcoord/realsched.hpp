#pragma once

#include <functional>

#include "model.hpp"

namespace vcoord {

// ---------------------------------------------------------------------------
// Real-plane scheduler state

struct SchedulerState {
    std::vector<double> xbar;    // exponentially averaged user rates, > 0
    double beta = 0.01;
    std::vector<double> lambda;  // CBA dual prices per (j * N + b)
    double beta3 = 0.05;

    static SchedulerState make(int num_users, int num_prbs, int num_beams, double beta, double beta3) {
        SchedulerState s;
        s.xbar.assign(num_users, 1e-3);  // avoids grad-utility singularities at 0
        s.beta = beta;
        s.lambda.assign(static_cast<std::size_t>(num_prbs) * num_beams, 0.0);
        s.beta3 = beta3;
        return s;
    }
};

struct ScheduleDecision {
    std::vector<PrbAssignment> prbs;
};

// ---------------------------------------------------------------------------
// Per-PRB gradient scheduling. `rates` evaluates candidate assignments
// (mu aligned with entries); `weight` is the utility gradient per local user;
// `cost` is subtracted from the weighted sum (zero for the plain scheduler).

using PrbRateFn = std::function<std::vector<double>(const PrbAssignment&)>;
using PrbCostFn = std::function<double(const PrbAssignment&)>;

inline double weighted_sum(const PrbAssignment& a, const std::vector<double>& mu,
                           const std::function<double(int)>& weight) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += weight(a[k].user) * mu[k];
    return s;
}

// Greedy builder: activate beams one at a time, best (beam,user) atom first,
// re-evaluating all rates after each activation; stop when the objective
// stops improving. Ties resolve to lowest user id, then lowest beam index.
inline PrbAssignment greedy_prb_schedule(const std::vector<BeamAssignment>& atoms, const PrbRateFn& rates,
                                         const std::function<double(int)>& weight, const PrbCostFn& cost = {}) {
    PrbAssignment current;
    double best_value = 0.0;  // empty assignment
    while (true) {
        PrbAssignment best_cand;
        double best_cand_value = 0.0;
        int best_user = 0, best_beam = 0;
        bool have = false;
        for (const auto& atom : atoms) {
            bool clash = false;
            for (const auto& e : current)
                if (e.beam == atom.beam) clash = true;
            if (clash) continue;
            PrbAssignment cand = current;
            cand.push_back(atom);
            const auto mu = rates(cand);
            double v = weighted_sum(cand, mu, weight);
            if (cost) v -= cost(cand);
            const bool better = !have || v > best_cand_value + 1e-12;
            const bool tie = have && std::abs(v - best_cand_value) <= 1e-12 &&
                             (atom.user < best_user || (atom.user == best_user && atom.beam < best_beam));
            if (better || tie) {
                best_cand = std::move(cand);
                best_cand_value = v;
                best_user = atom.user;
                best_beam = atom.beam;
                have = true;
            }
        }
        if (!have || best_cand_value <= best_value + 1e-12) break;
        current = std::move(best_cand);
        best_value = best_cand_value;
    }
    return current;
}

// Exhaustive oracle over all beam-distinct assignments (small instances only).
inline PrbAssignment exhaustive_prb_schedule(const std::vector<BeamAssignment>& atoms, const PrbRateFn& rates,
                                             const std::function<double(int)>& weight, const PrbCostFn& cost = {}) {
    int max_beam = 0;
    for (const auto& a : atoms) max_beam = std::max(max_beam, a.beam + 1);
    if (atoms.size() > 16) throw ConfigError("exhaustive schedule: too many atoms");

    PrbAssignment best;
    double best_value = 0.0;
    PrbAssignment stack;

    std::function<void(std::size_t)> rec = [&](std::size_t idx) {
        {
            const auto mu = rates(stack);
            double v = weighted_sum(stack, mu, weight);
            if (cost && !stack.empty()) v -= cost(stack);
            if (v > best_value + 1e-12) {
                best_value = v;
                best = stack;
            }
        }
        for (std::size_t k = idx; k < atoms.size(); ++k) {
            bool clash = false;
            for (const auto& e : stack)
                if (e.beam == atoms[k].beam) clash = true;
            if (clash) continue;
            stack.push_back(atoms[k]);
            rec(k + 1);
            stack.pop_back();
        }
    };
    rec(0);
    return best;
}

inline PrbAssignment gradient_schedule(const std::vector<BeamAssignment>& atoms, const PrbRateFn& rates,
                                       const std::function<double(int)>& weight) {
    return greedy_prb_schedule(atoms, rates, weight);
}

// Cost of a CBA decision on one PRB: each active beam consumes an equal share
// of the PRB's total target power.
inline double cba_beam_cost(double prb_target_total, int active_beams) {
    return prb_target_total / static_cast<double>(active_beams);
}

inline PrbAssignment cba_schedule(const std::vector<BeamAssignment>& atoms, const PrbRateFn& rates,
                                  const std::function<double(int)>& weight, const std::vector<double>& lambda_j,
                                  double prb_target_total) {
    PrbCostFn cost = [&](const PrbAssignment& a) {
        if (a.empty()) return 0.0;
        const double c = cba_beam_cost(prb_target_total, static_cast<int>(a.size()));
        double s = 0.0;
        for (const auto& e : a) s += lambda_j[e.beam] * c;
        return s;
    };
    return greedy_prb_schedule(atoms, rates, weight, cost);
}

// X update: once per TTI with each user's realized total over PRBs and beams.
inline void update_avg_rates(SchedulerState& st, const std::vector<double>& mu_totals, int num_prbs) {
    for (std::size_t i = 0; i < st.xbar.size(); ++i)
        st.xbar[i] = (1.0 - st.beta) * st.xbar[i] + st.beta * static_cast<double>(num_prbs) * mu_totals[i];
}

// Dual update per (j,b); inactive beams have zero cost.
inline void update_duals(SchedulerState& st, int j, int num_beams, const PrbAssignment& chosen,
                         const std::vector<double>& targets_j, double prb_target_total) {
    std::vector<double> c(num_beams, 0.0);
    if (!chosen.empty()) {
        const double share = cba_beam_cost(prb_target_total, static_cast<int>(chosen.size()));
        for (const auto& e : chosen) c[e.beam] = share;
    }
    for (int b = 0; b < num_beams; ++b) {
        auto& l = st.lambda[static_cast<std::size_t>(j) * num_beams + b];
        l = std::max(0.0, l + st.beta3 * (c[b] - targets_j[b]));
    }
}

// ---------------------------------------------------------------------------
// Greedy beam distance baseline (no coordination, 8-beam codebook).

struct GbdCandidate {
    int user = 0;
    int beam = 0;         // reported best beam
    double weighted_cqi = 0.0;
};

constexpr int kGbdMinBeamDistance = 3;

inline PrbAssignment gbd_schedule(std::vector<GbdCandidate> candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const GbdCandidate& a, const GbdCandidate& b) {
        if (a.weighted_cqi != b.weighted_cqi) return a.weighted_cqi > b.weighted_cqi;
        if (a.user != b.user) return a.user < b.user;
        return a.beam < b.beam;
    });
    PrbAssignment admitted;
    for (const auto& c : candidates) {
        bool ok = true;
        for (const auto& e : admitted)
            if (std::abs(e.beam - c.beam) < kGbdMinBeamDistance) ok = false;
        if (ok) admitted.push_back({c.beam, c.user});
    }
    return admitted;
}

}  // namespace vcoord
