#pragma once

#include "convexopt.hpp"
#include "realsched.hpp"

namespace vcoord {

// ---------------------------------------------------------------------------
// Sensitivity messages and the exchange transport

struct SensitivityMessage {
    int origin = 0;
    int target = 0;
    long epoch = 0;
    // per (j) in per-PRB mode, per (j * N + b) otherwise
    std::vector<double> payload;
};

struct MessageBus {
    int num_sectors = 0;
    // allowed recipients per origin; empty inner list means "all peers"
    std::vector<std::vector<int>> neighbors;
    double drop_probability = 0.0;
    Rng rng{0};

    explicit MessageBus(int sectors, std::uint64_t seed = 0)
        : num_sectors(sectors), neighbors(sectors), rng(mix_seed(seed, 0x627573ULL)) {}

    bool allowed(int origin, int target) const {
        if (neighbors[origin].empty()) return true;
        for (int t : neighbors[origin])
            if (t == target) return true;
        return false;
    }

    // synchronous epoch delivery; order independent within an epoch
    std::vector<std::vector<SensitivityMessage>> exchange(long epoch,
                                                          const std::vector<std::vector<SensitivityMessage>>& outgoing) {
        std::vector<std::vector<SensitivityMessage>> inbox(num_sectors);
        for (int o = 0; o < num_sectors; ++o)
            for (const auto& msg : outgoing[o]) {
                if (msg.origin != o) throw ProtocolError("exchange: message origin mismatch");
                if (msg.epoch != epoch) throw ProtocolError("exchange: message epoch mismatch");
                if (!allowed(o, msg.target)) continue;
                if (drop_probability > 0.0 && rng.uniform() < drop_probability) continue;
                inbox[msg.target].push_back(msg);
            }
        return inbox;
    }
};

// Sum of own and peer sensitivities for this sector's resources.
// Missing peers count as zero and are tallied; duplicate origins are an error.
struct AggregateResult {
    std::vector<double> d;
    int missing_peers = 0;
};

inline AggregateResult aggregate_sensitivities(int sector, int num_sectors, const std::vector<double>& own_for_self,
                                               const std::vector<SensitivityMessage>& inbox) {
    AggregateResult out;
    out.d = own_for_self;
    std::vector<char> seen(num_sectors, 0);
    seen[sector] = 1;
    long epoch = -1;
    for (const auto& msg : inbox) {
        if (msg.target != sector) throw ProtocolError("aggregate: message for another sector");
        if (seen[msg.origin]) throw ProtocolError("aggregate: duplicate origin in one epoch");
        if (epoch >= 0 && msg.epoch != epoch) throw ProtocolError("aggregate: mixed epochs");
        epoch = msg.epoch;
        seen[msg.origin] = 1;
        if (msg.payload.size() != out.d.size()) throw ProtocolError("aggregate: payload size mismatch");
        for (std::size_t k = 0; k < out.d.size(); ++k) {
            if (!std::isfinite(msg.payload[k])) throw ProtocolError("aggregate: non-finite payload");
            out.d[k] += msg.payload[k];
        }
    }
    for (int m = 0; m < num_sectors; ++m)
        if (!seen[m]) ++out.missing_peers;
    return out;
}

// ---------------------------------------------------------------------------
// Power adjustment: one decrease / increase / transfer event per call.

inline void adjust_powers(PowerAllocation& pa, const std::vector<double>& d, double delta, double pmax) {
    if (!(delta > 0.0)) throw ConfigError("adjust_powers: delta must be > 0");
    const std::size_t n = pa.values.size();
    if (d.size() != n) throw ConfigError("adjust_powers: sensitivity size mismatch");
    const double floor = pa.floor;

    // (1) decrease the most negative sensitivity with spendable power
    std::ptrdiff_t dec = -1;
    for (std::size_t k = 0; k < n; ++k)
        if (d[k] < 0.0 && pa.values[k] > floor + 1e-15)
            if (dec < 0 || d[k] < d[dec]) dec = static_cast<std::ptrdiff_t>(k);
    if (dec >= 0) pa.values[dec] = std::max(pa.values[dec] - delta, floor);

    const double total = pa.total();
    if (total < pmax - 1e-12) {
        // (2) top up the largest positive sensitivity within the budget
        std::ptrdiff_t inc = -1;
        for (std::size_t k = 0; k < n; ++k)
            if (d[k] > 0.0)
                if (inc < 0 || d[k] > d[inc]) inc = static_cast<std::ptrdiff_t>(k);
        if (inc >= 0) pa.values[inc] += std::min(delta, pmax - total);
    } else {
        // (3) full budget: transfer from the smallest positive-power
        // sensitivity to the largest one
        std::ptrdiff_t rec = -1;
        for (std::size_t k = 0; k < n; ++k)
            if (rec < 0 || d[k] > d[rec]) rec = static_cast<std::ptrdiff_t>(k);
        if (rec >= 0 && d[rec] > 0.0) {
            std::ptrdiff_t don = -1;
            for (std::size_t k = 0; k < n; ++k) {
                if (static_cast<std::ptrdiff_t>(k) == rec) continue;
                if (pa.values[k] > floor + 1e-15 && d[k] < d[rec])
                    if (don < 0 || d[k] < d[don]) don = static_cast<std::ptrdiff_t>(k);
            }
            if (don >= 0) {
                const double moved = std::min(delta, pa.values[don] - floor);
                pa.values[don] -= moved;
                pa.values[rec] += moved;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// OA virtual plane: per-PRB sensitivities via virtual scheduling.

struct OaParams {
    double beta1 = 0.01;
    double beta2 = 0.01;
    int n_v = 4;
};

struct OaVirtualState {
    std::vector<double> x;  // virtual average rates per local user
    std::vector<double> d;  // (m_hat * J + j)

    static OaVirtualState make(int num_local_users, int num_sectors, int num_prbs) {
        OaVirtualState s;
        s.x.assign(num_local_users, 1e-3);
        s.d.assign(static_cast<std::size_t>(num_sectors) * num_prbs, 0.0);
        return s;
    }
};

// Virtual decision on one PRB: local-user subset with distinct best beams.
using OaDecision = std::vector<int>;  // local user indices

// One virtual scheduling run over all PRBs: gradient decision, X update,
// sensitivity update. `frozen` (per PRB, local user indices) bypasses the
// decision step, which the gradient-fidelity tests rely on.
inline std::vector<OaDecision> oa_virtual_step(OaVirtualState& st, int sector, const std::vector<int>& users,
                                               const GainTensor& gt, const std::vector<std::vector<double>>& prb_powers,
                                               double noise, const OaParams& prm,
                                               const std::vector<OaDecision>* frozen = nullptr) {
    const int J = gt.num_prbs, M = gt.num_sectors;
    const int L = static_cast<int>(users.size());
    std::vector<OaDecision> decisions(J);

    for (int j = 0; j < J; ++j) {
        OaDecision chosen;
        if (frozen) {
            chosen = (*frozen)[j];
        } else {
            // greedy subset build with power re-split after each admission
            std::vector<BeamAssignment> atoms;
            for (int li = 0; li < L; ++li) atoms.push_back({gt.bstar(users[li], j, sector), li});
            PrbRateFn rfn = [&](const PrbAssignment& a) {
                std::vector<double> mu(a.size(), 0.0);
                for (std::size_t k = 0; k < a.size(); ++k)
                    mu[k] = rate(sinr_oa(gt, prb_powers, noise, users[a[k].user], j, sector,
                                         static_cast<int>(a.size())));
                return mu;
            };
            auto w = [&](int li) { return log_utility_grad(st.x[li]); };
            const auto a = greedy_prb_schedule(atoms, rfn, w);
            for (const auto& e : a) chosen.push_back(e.user);
        }
        decisions[j] = chosen;

        // rates under the chosen decision
        std::vector<double> r(L, 0.0);
        const int n_users = static_cast<int>(chosen.size());
        for (int li : chosen) r[li] = rate(sinr_oa(gt, prb_powers, noise, users[li], j, sector, n_users));

        for (int li = 0; li < L; ++li)
            st.x[li] = (1.0 - prm.beta1) * st.x[li] + prm.beta1 * static_cast<double>(J) * r[li];

        // sensitivity summands at the updated virtual rates
        for (int mh = 0; mh < M; ++mh) {
            double summand = 0.0;
            for (int li : chosen) {
                const int i = users[li];
                const double F = sinr_oa(gt, prb_powers, noise, i, j, sector, n_users);
                if (F <= 0.0) continue;
                const double w = log_utility_grad(st.x[li]);
                if (mh == sector) {
                    summand += w * rate_deriv(F) * F / prb_powers[sector][j];
                } else {
                    const double gown = gt.gstar(i, j, sector);
                    if (gown <= 0.0) continue;
                    const double pshare = prb_powers[sector][j] / static_cast<double>(n_users);
                    summand -= w * rate_deriv(F) * F * F / pshare * gt.gstar(i, j, mh) / gown;
                }
            }
            auto& cell = st.d[static_cast<std::size_t>(mh) * J + j];
            cell = (1.0 - prm.beta2) * cell + prm.beta2 * summand;
        }
    }
    return decisions;
}

// ---------------------------------------------------------------------------
// VSA virtual plane: explicit time fractions, direct sensitivities.

struct VsaParams {
    double eps = 0.01;
    double phi_tol = 1e-8;
};

struct VsaVirtualModel {
    std::vector<double> rates;  // local i x (j * N + b)
    std::vector<double> phi;    // same layout
    std::vector<double> x;      // per local user (plain-phi average)
};

inline VsaVirtualModel vsa_virtual_rates(int sector, const std::vector<int>& users, const GainTensor& gt,
                                         const std::vector<std::vector<double>>& beam_powers, double noise,
                                         const VsaParams& prm) {
    const int J = gt.num_prbs, N = gt.num_beams, R = J * N;
    const int L = static_cast<int>(users.size());
    VsaVirtualModel vm;
    vm.rates.assign(static_cast<std::size_t>(L) * R, 0.0);
    for (int li = 0; li < L; ++li)
        for (int j = 0; j < J; ++j)
            for (int b = 0; b < N; ++b)
                vm.rates[static_cast<std::size_t>(li) * R + j * N + b] =
                    rate(sinr_vsa(gt, beam_powers, noise, users[li], j, b, sector));

    PhiProblem pb;
    pb.num_users = L;
    pb.num_resources = R;
    pb.rates = vm.rates;
    pb.eps = prm.eps;
    pb.form = ConstraintForm::equality;
    pb.tol = prm.phi_tol;
    auto sol = solve_phi_problem(pb);
    vm.phi = std::move(sol.phi);

    vm.x.assign(L, 0.0);
    for (int li = 0; li < L; ++li)
        for (int r = 0; r < R; ++r)
            vm.x[li] += vm.phi[static_cast<std::size_t>(li) * R + r] * vm.rates[static_cast<std::size_t>(li) * R + r];
    return vm;
}

// D_{jb}^{(m_hat, m)} tables for all sectors; layout (m_hat * J * N + j * N + b).
inline std::vector<double> vsa_sensitivities(int sector, const std::vector<int>& users, const GainTensor& gt,
                                             const VsaVirtualModel& vm,
                                             const std::vector<std::vector<double>>& beam_powers, double noise,
                                             const VsaParams& prm) {
    const int J = gt.num_prbs, N = gt.num_beams, M = gt.num_sectors, R = J * N;
    const int L = static_cast<int>(users.size());
    std::vector<double> d(static_cast<std::size_t>(M) * R, 0.0);

    for (int li = 0; li < L; ++li) {
        const int i = users[li];
        const double w = log_utility_grad(vm.x[li]);
        for (int j = 0; j < J; ++j)
            for (int bp = 0; bp < N; ++bp) {
                const double F = sinr_vsa(gt, beam_powers, noise, i, j, bp, sector);
                if (F <= 0.0) continue;
                const double pw = beam_powers[sector][static_cast<std::size_t>(j) * N + bp];
                if (pw <= 0.0) continue;
                const double phi_w =
                    detail::phi_weight(vm.phi[static_cast<std::size_t>(li) * R + j * N + bp], prm.eps);
                if (phi_w <= 0.0) continue;
                const double rp = rate_deriv(F);
                const double gown = gt.at(i, j, bp, sector);
                // own-beam derivative
                d[static_cast<std::size_t>(sector) * R + j * N + bp] += w * phi_w * rp * F / pw;
                // cross terms (same sector, other beams)
                for (int b = 0; b < N; ++b) {
                    if (b == bp) continue;
                    const double gb = gt.at(i, j, b, sector);
                    if (gb <= 0.0) continue;
                    d[static_cast<std::size_t>(sector) * R + j * N + b] -= w * phi_w * rp * F * F / pw * gb / gown;
                }
                // other sectors
                for (int mh = 0; mh < M; ++mh) {
                    if (mh == sector) continue;
                    for (int b = 0; b < N; ++b) {
                        const double gb = gt.at(i, j, b, mh);
                        if (gb <= 0.0) continue;
                        d[static_cast<std::size_t>(mh) * R + j * N + b] -= w * phi_w * rp * F * F / pw * gb / gown;
                    }
                }
            }
    }
    return d;
}

// ---------------------------------------------------------------------------
// CBA virtual plane: cost-augmented virtual scheduling over target powers.

struct CbaParams {
    double beta1 = 0.01;
    double beta2 = 0.01;
    double beta3 = 0.05;
    int n_v = 4;
};

struct CbaVirtualState {
    std::vector<double> x;       // per local user
    std::vector<double> d;       // (m_hat * J * N + j * N + b)
    std::vector<double> lambda;  // virtual duals (j * N + b)

    static CbaVirtualState make(int num_local_users, int num_sectors, int num_prbs, int num_beams) {
        CbaVirtualState s;
        s.x.assign(num_local_users, 1e-3);
        s.d.assign(static_cast<std::size_t>(num_sectors) * num_prbs * num_beams, 0.0);
        s.lambda.assign(static_cast<std::size_t>(num_prbs) * num_beams, 0.0);
        return s;
    }
};

// alpha scaling for a decision: active beams share the PRB target total.
inline std::vector<double> cba_alpha_for(const PrbAssignment& a, const std::vector<double>& targets_j,
                                         double prb_total) {
    std::vector<double> alpha(targets_j.size(), 0.0);
    if (a.empty()) return alpha;
    const double share = prb_total / static_cast<double>(a.size());
    for (const auto& e : a)
        if (targets_j[e.beam] > 0.0) alpha[e.beam] = share / targets_j[e.beam];
    return alpha;
}

inline std::vector<PrbAssignment> cba_virtual_step(CbaVirtualState& st, int sector, const std::vector<int>& users,
                                                   const GainTensor& gt, const std::vector<std::vector<double>>& targets,
                                                   double noise, const CbaParams& prm,
                                                   const std::vector<PrbAssignment>* frozen = nullptr) {
    const int J = gt.num_prbs, N = gt.num_beams, M = gt.num_sectors;
    const int L = static_cast<int>(users.size());
    std::vector<PrbAssignment> decisions(J);

    for (int j = 0; j < J; ++j) {
        std::vector<double> targets_j(N);
        double prb_total = 0.0;
        for (int b = 0; b < N; ++b) {
            targets_j[b] = targets[sector][static_cast<std::size_t>(j) * N + b];
            prb_total += targets_j[b];
        }

        // full alpha table for rate evaluation under an assignment
        auto rates_under = [&](const PrbAssignment& a) {
            std::vector<double> alpha_full(static_cast<std::size_t>(J) * N, 0.0);
            const auto alpha_j = cba_alpha_for(a, targets_j, prb_total);
            for (int b = 0; b < N; ++b) alpha_full[static_cast<std::size_t>(j) * N + b] = alpha_j[b];
            std::vector<double> mu(a.size(), 0.0);
            for (std::size_t k = 0; k < a.size(); ++k)
                mu[k] = rate(sinr_cba(gt, targets, alpha_full, noise, users[a[k].user], j, a[k].beam, sector));
            return mu;
        };

        PrbAssignment chosen;
        if (frozen) {
            chosen = (*frozen)[j];
        } else {
            std::vector<BeamAssignment> atoms;
            for (int b = 0; b < N; ++b)
                for (int li = 0; li < L; ++li) atoms.push_back({b, li});
            std::vector<double> lambda_j(N);
            for (int b = 0; b < N; ++b) lambda_j[b] = st.lambda[static_cast<std::size_t>(j) * N + b];
            auto w = [&](int li) { return log_utility_grad(st.x[li]); };
            chosen = cba_schedule(atoms, rates_under, w, lambda_j, prb_total);
        }
        decisions[j] = chosen;

        const auto alpha_j = cba_alpha_for(chosen, targets_j, prb_total);
        std::vector<double> alpha_full(static_cast<std::size_t>(J) * N, 0.0);
        for (int b = 0; b < N; ++b) alpha_full[static_cast<std::size_t>(j) * N + b] = alpha_j[b];

        // X update with the realized virtual rates
        std::vector<double> r(L, 0.0);
        for (const auto& e : chosen)
            r[e.user] += rate(sinr_cba(gt, targets, alpha_full, noise, users[e.user], j, e.beam, sector));
        for (int li = 0; li < L; ++li)
            st.x[li] = (1.0 - prm.beta1) * st.x[li] + prm.beta1 * static_cast<double>(J) * r[li];

        // virtual dual update
        const double share = chosen.empty() ? 0.0 : cba_beam_cost(prb_total, static_cast<int>(chosen.size()));
        for (int b = 0; b < N; ++b) {
            double c = 0.0;
            for (const auto& e : chosen)
                if (e.beam == b) c = share;
            auto& l = st.lambda[static_cast<std::size_t>(j) * N + b];
            l = std::max(0.0, l + prm.beta3 * (c - targets_j[b]));
        }

        // sensitivity update, alpha-scaled derivative table
        for (int mh = 0; mh < M; ++mh)
            for (int b = 0; b < N; ++b) {
                double summand = 0.0;
                for (const auto& e : chosen) {
                    const int i = users[e.user];
                    const int bp = e.beam;
                    const double F = sinr_cba(gt, targets, alpha_full, noise, i, j, bp, sector);
                    if (F <= 0.0) continue;
                    const double w = log_utility_grad(st.x[e.user]);
                    const double rp = rate_deriv(F);
                    const double pbp = targets[sector][static_cast<std::size_t>(j) * N + bp];
                    if (mh == sector) {
                        if (b == bp) {
                            summand += w * rp * F / pbp;
                        } else {
                            const double num = gt.at(i, j, b, sector) * alpha_j[b];
                            const double den = gt.at(i, j, bp, sector) * alpha_j[bp];
                            if (num > 0.0 && den > 0.0) summand -= w * rp * F * F / pbp * num / den;
                        }
                    } else {
                        const double num = gt.at(i, j, b, mh);  // interferer alpha treated as 1
                        const double den = gt.at(i, j, bp, sector) * alpha_j[bp];
                        if (num > 0.0 && den > 0.0) summand -= w * rp * F * F / pbp * num / den;
                    }
                }
                auto& cell = st.d[(static_cast<std::size_t>(mh) * J + j) * N + b];
                cell = (1.0 - prm.beta2) * cell + prm.beta2 * summand;
            }
    }
    return decisions;
}

// ---------------------------------------------------------------------------
// Message assembly shared by the controllers.

inline std::vector<SensitivityMessage> make_messages(int sector, int num_sectors, long epoch,
                                                     const std::vector<double>& d, std::size_t resources) {
    std::vector<SensitivityMessage> out;
    for (int mh = 0; mh < num_sectors; ++mh) {
        if (mh == sector) continue;
        SensitivityMessage msg;
        msg.origin = sector;
        msg.target = mh;
        msg.epoch = epoch;
        msg.payload.assign(d.begin() + static_cast<std::ptrdiff_t>(mh * resources),
                           d.begin() + static_cast<std::ptrdiff_t>((mh + 1) * resources));
        out.push_back(std::move(msg));
    }
    return out;
}

inline std::vector<double> own_slice(int sector, const std::vector<double>& d, std::size_t resources) {
    return std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(sector * resources),
                               d.begin() + static_cast<std::ptrdiff_t>((sector + 1) * resources));
}

}  // namespace vcoord
