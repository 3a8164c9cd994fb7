#pragma once

#include <functional>

#include "model.hpp"

namespace vcoord {

// ---------------------------------------------------------------------------
// Generic projected concave maximizer (monotone accelerated PG with
// backtracking). proj must project onto the feasible set in-place.

struct PgResult {
    std::vector<double> x;
    double value = 0.0;
    double residual = 0.0;
    long iterations = 0;
};

template <class ValueFn, class GradFn, class ProjFn>
PgResult projected_gradient_max(ValueFn value, GradFn grad, ProjFn proj, std::vector<double> x0, double tol,
                                long max_iter, const std::function<bool(const std::vector<double>&)>& early_stop = {}) {
    proj(x0);
    const std::size_t n = x0.size();
    std::vector<double> x = x0, y = x0, x_prev = x0, g(n), cand(n);
    double fx = value(x);
    double eta = 1.0;
    double t = 1.0;
    double res = std::numeric_limits<double>::infinity();
    long it = 0;
    for (; it < max_iter; ++it) {
        grad(y, g);
        if (early_stop && it % 16 == 0 && early_stop(x)) break;
        // residual at x (standard projected-gradient fixed-point measure)
        if (it % 4 == 0) {
            std::vector<double> gx(n);
            grad(x, gx);
            cand = x;
            for (std::size_t k = 0; k < n; ++k) cand[k] += gx[k];
            proj(cand);
            res = 0.0;
            for (std::size_t k = 0; k < n; ++k) res = std::max(res, std::abs(cand[k] - x[k]));
            if (res <= tol) break;
        }
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            cand = y;
            for (std::size_t k = 0; k < n; ++k) cand[k] += eta * g[k];
            proj(cand);
            const double fc = value(cand);
            if (fc >= fx) {  // monotone safeguard
                x_prev = x;
                x = cand;
                fx = fc;
                accepted = true;
                eta *= 1.4;
                break;
            }
            eta *= 0.5;
            if (eta < 1e-18) break;
        }
        if (!accepted) {
            // momentum restart from the current point
            if (t > 1.0) {
                t = 1.0;
                y = x;
                eta = std::max(eta, 1e-12);
                continue;
            }
            break;  // no ascent direction at machine precision
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        for (std::size_t k = 0; k < n; ++k) y[k] = x[k] + beta * (x[k] - x_prev[k]);
        t = t_next;
    }
    // final residual
    std::vector<double> gx(n);
    grad(x, gx);
    cand = x;
    for (std::size_t k = 0; k < n; ++k) cand[k] += gx[k];
    proj(cand);
    res = 0.0;
    for (std::size_t k = 0; k < n; ++k) res = std::max(res, std::abs(cand[k] - x[k]));
    return {std::move(x), fx, res, it};
}

// ---------------------------------------------------------------------------
// Time-fraction problem: maximize sum_i U(sum_r phi_ir^(1-eps) R_ir) over
// per-resource blocks (sum_i phi_ir = 1 or <= 1, phi in [0,1]).

enum class ConstraintForm { equality, inequality };

struct PhiProblem {
    int num_users = 0;
    int num_resources = 0;
    std::vector<double> rates;  // i * num_resources + r
    double eps = 0.0;
    ConstraintForm form = ConstraintForm::equality;
    double tol = 1e-8;
    long max_iters = 100000;
};

struct PhiSolution {
    std::vector<double> phi;  // i * num_resources + r
    std::vector<double> x;    // per-user virtual rate
    double value = 0.0;
    double kkt_residual = 0.0;
    long iterations = 0;
};

namespace detail {

inline double phi_weight(double phi, double eps) {
    if (eps == 0.0) return phi;
    return phi <= 0.0 ? 0.0 : std::pow(phi, 1.0 - eps);
}

inline double phi_weight_grad(double phi, double eps) {
    if (eps == 0.0) return 1.0;
    const double p = std::max(phi, 1e-12);
    return (1.0 - eps) * std::pow(p, -eps);
}

// Optimal pairwise mass transfer within one resource block: find the t that
// maximizes the objective when moving t from coordinate b to coordinate a
// (either side may be the slack with rate 0). The directional derivative is
// non-increasing, so bisection is exact.
inline double pairwise_transfer(double phi_a, double phi_b, double rate_a, double rate_b, double x_a, double x_b,
                                double eps) {
    auto deriv = [&](double t) {
        const double xa = x_a - phi_weight(phi_a, eps) * rate_a + phi_weight(phi_a + t, eps) * rate_a;
        const double xb = x_b - phi_weight(phi_b, eps) * rate_b + phi_weight(phi_b - t, eps) * rate_b;
        return log_utility_grad(xa) * phi_weight_grad(phi_a + t, eps) * rate_a -
               log_utility_grad(xb) * phi_weight_grad(phi_b - t, eps) * rate_b;
    };
    double lo = -phi_a, hi = phi_b;
    if (deriv(hi) >= 0.0) return hi;
    if (deriv(lo) <= 0.0) return lo;
    for (int k = 0; k < 80; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (deriv(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline PhiSolution solve_phi_problem(const PhiProblem& pb) {
    const int I = pb.num_users, R = pb.num_resources;
    if (I < 1 || R < 1) throw ConfigError("phi problem: empty");
    if (pb.eps < 0.0 || pb.eps >= 1.0) throw ConfigError("phi problem: eps must be in [0,1)");
    const bool ineq = pb.form == ConstraintForm::inequality;

    auto user_rates = [&](const std::vector<double>& phi, std::vector<double>& x) {
        for (int i = 0; i < I; ++i) {
            double acc = 0.0;
            for (int r = 0; r < R; ++r) acc += detail::phi_weight(phi[i * R + r], pb.eps) * pb.rates[i * R + r];
            x[i] = acc;
        }
    };
    std::vector<double> xbuf(I);
    auto objective = [&](const std::vector<double>& phi) {
        user_rates(phi, xbuf);
        double u = 0.0;
        for (int i = 0; i < I; ++i) u += log_utility(xbuf[i]);
        return u;
    };
    auto gradient = [&](const std::vector<double>& phi, std::vector<double>& g) {
        user_rates(phi, xbuf);
        for (int i = 0; i < I; ++i) {
            const double w = log_utility_grad(xbuf[i]);
            for (int r = 0; r < R; ++r)
                g[i * R + r] = w * pb.rates[i * R + r] * detail::phi_weight_grad(phi[i * R + r], pb.eps);
        }
    };
    auto residual_of = [&](const std::vector<double>& phi, const std::vector<double>& g) {
        double res = 0.0;
        std::vector<double> col(I);
        for (int r = 0; r < R; ++r) {
            for (int i = 0; i < I; ++i) col[i] = phi[i * R + r] + g[i * R + r];
            if (ineq)
                project_simplex_ineq(col);
            else
                project_simplex(col);
            for (int i = 0; i < I; ++i) res = std::max(res, std::abs(col[i] - phi[i * R + r]));
        }
        return res;
    };
    // Frank-Wolfe gap: certifies the value distance to the optimum
    auto fw_gap_of = [&](const std::vector<double>& phi, const std::vector<double>& g) {
        double gap = 0.0;
        for (int r = 0; r < R; ++r) {
            double best = ineq ? 0.0 : -std::numeric_limits<double>::infinity();
            double cur = 0.0;
            for (int i = 0; i < I; ++i) {
                best = std::max(best, g[i * R + r]);
                cur += phi[i * R + r] * g[i * R + r];
            }
            gap += std::max(0.0, best - cur);
        }
        return gap;
    };

    // start uniform; keep a slack weight per block for the inequality form
    std::vector<double> phi(static_cast<std::size_t>(I) * R, ineq ? 1.0 / (I + 1.0) : 1.0 / I);
    std::vector<double> slack(R, ineq ? 1.0 / (I + 1.0) : 0.0);
    std::vector<double> g(phi.size());
    double fcur = objective(phi);
    double eta = 1.0;
    long it = 0;
    double res = std::numeric_limits<double>::infinity();

    std::vector<double> cand(phi.size()), cslack(R), col(I + 1);
    bool converged = false;
    for (; it < pb.max_iters; ++it) {
        gradient(phi, g);
        res = residual_of(phi, g);
        if (res <= pb.tol || fw_gap_of(phi, g) <= 1e-12 * (1.0 + std::abs(fcur))) {
            converged = true;
            break;
        }

        bool accepted = false;
        // entropic mirror step with backtracking
        for (int ls = 0; ls < 70 && !accepted; ++ls) {
            for (int r = 0; r < R; ++r) {
                double mx = ineq ? 0.0 : -std::numeric_limits<double>::infinity();
                for (int i = 0; i < I; ++i) mx = std::max(mx, eta * g[i * R + r]);
                double z = ineq ? std::exp(0.0 - mx) * std::max(slack[r], 1e-300) : 0.0;
                for (int i = 0; i < I; ++i) {
                    const double v = std::max(phi[i * R + r], 1e-300) * std::exp(eta * g[i * R + r] - mx);
                    cand[i * R + r] = v;
                    z += v;
                }
                if (ineq) cslack[r] = std::exp(0.0 - mx) * std::max(slack[r], 1e-300) / z;
                for (int i = 0; i < I; ++i) cand[i * R + r] /= z;
            }
            const double fc = objective(cand);
            if (fc > fcur) {
                phi.swap(cand);
                if (ineq) slack.swap(cslack);
                fcur = fc;
                eta *= 1.3;
                accepted = true;
            } else {
                eta *= 0.5;
                if (eta < 1e-16) break;
            }
        }
        if (!accepted) {
            // fallback: Euclidean projected-gradient step
            double step = 1.0;
            for (int ls = 0; ls < 60 && !accepted; ++ls) {
                for (int r = 0; r < R; ++r) {
                    for (int i = 0; i < I; ++i) col[i] = phi[i * R + r] + step * g[i * R + r];
                    col.resize(I);
                    if (ineq)
                        project_simplex_ineq(col);
                    else
                        project_simplex(col);
                    for (int i = 0; i < I; ++i) cand[i * R + r] = col[i];
                }
                const double fc = objective(cand);
                if (fc > fcur) {
                    phi.swap(cand);
                    if (ineq)
                        for (int r = 0; r < R; ++r) {
                            double s = 1.0;
                            for (int i = 0; i < I; ++i) s -= phi[i * R + r];
                            slack[r] = std::max(s, 0.0);
                        }
                    fcur = fc;
                    accepted = true;
                } else {
                    step *= 0.5;
                }
            }
            if (!accepted) break;  // stationary to machine precision
        }
    }

    // pairwise-exchange polish: exact 1-D transfers clean up the support and
    // push the residual to machine precision
    {
        std::vector<double> x(I);
        for (int sweep = 0; sweep < 200; ++sweep) {
            user_rates(phi, x);
            double moved = 0.0;
            for (int r = 0; r < R; ++r)
                for (int a = 0; a < I; ++a) {
                    const int bmax = ineq ? I : I - 1;
                    for (int b = a + 1; b <= bmax; ++b) {
                        const bool b_slack = b == I;
                        const double ra = pb.rates[a * R + r];
                        const double rb = b_slack ? 0.0 : pb.rates[b * R + r];
                        if (ra <= 0.0 && rb <= 0.0) continue;
                        double& pa = phi[a * R + r];
                        double& pbm = b_slack ? slack[r] : phi[b * R + r];
                        const double xb = b_slack ? 1.0 : x[b];
                        const double t = detail::pairwise_transfer(pa, pbm, ra, rb, x[a], xb, pb.eps);
                        if (t == 0.0) continue;
                        x[a] += detail::phi_weight(pa + t, pb.eps) * ra - detail::phi_weight(pa, pb.eps) * ra;
                        if (!b_slack) x[b] += detail::phi_weight(pbm - t, pb.eps) * rb - detail::phi_weight(pbm, pb.eps) * rb;
                        pa += t;
                        pbm -= t;
                        moved = std::max(moved, std::abs(t) * std::max(ra, rb));
                    }
                }
            if (moved < 1e-14) break;
        }
        fcur = objective(phi);
    }

    gradient(phi, g);
    res = residual_of(phi, g);
    // a small Frank-Wolfe gap certifies the value even when the iterate sits
    // at the line-search noise floor
    if (!converged && res > pb.tol && fw_gap_of(phi, g) > 1e-6 * (1.0 + std::abs(fcur)))
        throw SolverError("phi solver did not converge", res);

    PhiSolution sol;
    sol.phi = std::move(phi);
    sol.x.resize(I);
    user_rates(sol.phi, sol.x);
    sol.value = 0.0;
    for (int i = 0; i < I; ++i) sol.value += log_utility(sol.x[i]);
    sol.kkt_residual = res;
    sol.iterations = it;
    return sol;
}

// f_eps values along a decreasing smoothing sequence.
inline std::vector<double> smoothed_value_curve(const PhiProblem& base, const std::vector<double>& eps_sequence) {
    std::vector<double> vals;
    vals.reserve(eps_sequence.size());
    for (std::size_t k = 0; k < eps_sequence.size(); ++k) {
        if (k > 0 && !(eps_sequence[k] < eps_sequence[k - 1]))
            throw ConfigError("smoothed_value_curve: eps sequence must be strictly decreasing");
        PhiProblem pb = base;
        pb.eps = eps_sequence[k];
        vals.push_back(solve_phi_problem(pb).value);
    }
    return vals;
}

// ---------------------------------------------------------------------------
// Concave lower bound on the Shannon rate (log-domain SCA surrogate)

struct ScaBound {
    double alpha = 1.0;
    double beta = 0.0;
};

inline double concave_lower_bound(double sinr, const ScaBound& b) {
    return b.alpha * std::log(sinr) + b.beta;
}

inline ScaBound tighten(double sinr0) {
    if (!(sinr0 > 0.0)) throw DomainError("tighten: SINR must be > 0");
    ScaBound b;
    b.alpha = sinr0 / (1.0 + sinr0);
    b.beta = std::log1p(sinr0) - b.alpha * std::log(sinr0);
    return b;
}

// ---------------------------------------------------------------------------
// Virtual rates under the all-beams-on model (shared by VSA and AO)

// rates[i * (J*N) + (j*N + b)] for every user i (global index).
inline std::vector<double> virtual_rates_all_on(const GainTensor& gt,
                                                const std::vector<std::vector<double>>& beam_powers, double noise,
                                                const std::vector<int>& sector_of_user) {
    const int I = gt.num_users, J = gt.num_prbs, N = gt.num_beams;
    std::vector<double> rates(static_cast<std::size_t>(I) * J * N, 0.0);
    for (int i = 0; i < I; ++i) {
        const int m = sector_of_user[i];
        for (int j = 0; j < J; ++j)
            for (int b = 0; b < N; ++b)
                rates[(static_cast<std::size_t>(i) * J + j) * N + b] = rate(sinr_vsa(gt, beam_powers, noise, i, j, b, m));
    }
    return rates;
}

// Sum over sectors of the optimal time-fraction utility at fixed powers.
// This is the canonical scalar the optimizers and oracles compare.
struct NetworkUtility {
    double value = 0.0;
    std::vector<PhiSolution> per_sector;
};

inline NetworkUtility network_virtual_utility(const GainTensor& gt,
                                              const std::vector<std::vector<double>>& beam_powers, double noise,
                                              const std::vector<std::vector<int>>& users_by_sector,
                                              ConstraintForm form = ConstraintForm::inequality, double eps = 0.0,
                                              double tol = 1e-8) {
    const int J = gt.num_prbs, N = gt.num_beams;
    std::vector<int> sector_of_user(gt.num_users, 0);
    for (int m = 0; m < static_cast<int>(users_by_sector.size()); ++m)
        for (int i : users_by_sector[m]) sector_of_user[i] = m;
    const auto rates = virtual_rates_all_on(gt, beam_powers, noise, sector_of_user);
    NetworkUtility out;
    for (const auto& local : users_by_sector) {
        PhiProblem pb;
        pb.num_users = static_cast<int>(local.size());
        pb.num_resources = J * N;
        pb.rates.resize(static_cast<std::size_t>(pb.num_users) * pb.num_resources);
        for (int li = 0; li < pb.num_users; ++li)
            for (int r = 0; r < pb.num_resources; ++r)
                pb.rates[li * pb.num_resources + r] = rates[static_cast<std::size_t>(local[li]) * J * N + r];
        pb.form = form;
        pb.eps = eps;
        pb.tol = tol;
        auto sol = solve_phi_problem(pb);
        out.value += sol.value;
        out.per_sector.push_back(std::move(sol));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SCA power-allocation sub-problem (log-domain inner solver)

struct ScaOptions {
    double inner_tol = 1e-7;
    double alpha_tol = 1e-6;
    int max_outer = 200;
    long max_inner = 50000;
    double power_floor_frac = 1e-9;  // of max_power, per resource
};

struct ScaTraceRow {
    int outer = 0;
    double surrogate = 0.0;
    double true_objective = 0.0;
    double inner_residual = 0.0;
};

struct ScaResult {
    std::vector<std::vector<double>> powers;  // per sector, (j * N + b)
    std::vector<ScaTraceRow> trace;
    double true_objective = 0.0;
};

namespace detail {

struct ScaLink {
    int user_local = 0;  // index within sector user list
    int sector = 0;
    int j = 0, b = 0;
    double phi = 0.0;
    double alpha = 1.0, beta = 0.0;
};

}  // namespace detail

// Projection of Y (log powers of one sector) onto
// { sum exp(p) <= pmax, p >= lo } via the scalar dual.
inline void project_log_power(std::vector<double>& y, double pmax, double lo) {
    for (auto& v : y) v = std::max(v, lo);
    double total = 0.0;
    for (double v : y) total += std::exp(v);
    if (total <= pmax) return;
    auto mass = [&](double nu) {
        double s = 0.0;
        for (double v : y) {
            const double w = lambert_w0(nu * std::exp(v));
            const double p = std::max(lo, v - w);
            s += std::exp(p);
        }
        return s;
    };
    double nu_lo = 0.0, nu_hi = 1.0;
    while (mass(nu_hi) > pmax && nu_hi < 1e18) nu_hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (nu_lo + nu_hi);
        if (mass(mid) > pmax)
            nu_lo = mid;
        else
            nu_hi = mid;
        if (nu_hi - nu_lo < 1e-16 * (1.0 + nu_hi)) break;
    }
    const double nu = nu_hi;
    for (auto& v : y) v = std::max(lo, v - lambert_w0(nu * std::exp(v)));
}

inline ScaResult sca_power_allocation(const GainTensor& gt, const std::vector<std::vector<double>>& phi_by_sector,
                                      const std::vector<std::vector<int>>& users_by_sector, double noise, double pmax,
                                      const std::vector<std::vector<double>>& init_powers, const ScaOptions& opt = {}) {
    const int M = gt.num_sectors, J = gt.num_prbs, N = gt.num_beams;
    const int R = J * N;
    const double lo = std::log(opt.power_floor_frac * pmax);

    // active links: phi > 0 and positive gain
    std::vector<detail::ScaLink> links;
    for (int m = 0; m < M; ++m) {
        const auto& local = users_by_sector[m];
        for (int li = 0; li < static_cast<int>(local.size()); ++li)
            for (int j = 0; j < J; ++j)
                for (int b = 0; b < N; ++b) {
                    const double f = phi_by_sector[m][static_cast<std::size_t>(li) * R + j * N + b];
                    if (f > 1e-12 && gt.at(local[li], j, b, m) > 0.0) links.push_back({li, m, j, b, f, 1.0, 0.0});
                }
    }

    // flattened variables: sector-major (m * R + j * N + b), log domain
    auto var = [&](int m, int j, int b) { return static_cast<std::size_t>(m) * R + j * N + b; };
    std::vector<double> pt(static_cast<std::size_t>(M) * R);
    for (int m = 0; m < M; ++m)
        for (int r = 0; r < R; ++r) pt[var(m, 0, 0) + r] = std::log(std::max(init_powers[m][r], opt.power_floor_frac * pmax));

    auto linear_powers = [&](const std::vector<double>& x) {
        std::vector<std::vector<double>> p(M, std::vector<double>(R));
        for (int m = 0; m < M; ++m)
            for (int r = 0; r < R; ++r) p[m][r] = std::exp(x[static_cast<std::size_t>(m) * R + r]);
        return p;
    };

    auto link_sinr = [&](const detail::ScaLink& L, const std::vector<std::vector<double>>& p) {
        const int i = users_by_sector[L.sector][L.user_local];
        return sinr_vsa(gt, p, noise, i, L.j, L.b, L.sector);
    };

    auto true_objective = [&](const std::vector<std::vector<double>>& p) {
        std::vector<std::vector<double>> x(M);
        for (int m = 0; m < M; ++m) x[m].assign(users_by_sector[m].size(), 0.0);
        for (const auto& L : links) x[L.sector][L.user_local] += L.phi * rate(link_sinr(L, p));
        double u = 0.0;
        for (int m = 0; m < M; ++m)
            for (double v : x[m]) u += log_utility(v);
        return u;
    };

    // surrogate pieces: Ytilde_i = sum_links phi * (alpha * ln F + beta)
    std::vector<std::vector<double>> ybuf(M);
    for (int m = 0; m < M; ++m) ybuf[m].assign(users_by_sector[m].size(), 0.0);

    auto surrogate_value = [&](const std::vector<double>& x) {
        for (int m = 0; m < M; ++m) std::fill(ybuf[m].begin(), ybuf[m].end(), 0.0);
        const auto p = linear_powers(x);
        for (const auto& L : links) {
            const double F = link_sinr(L, p);
            const double r = L.alpha * std::log(std::max(F, 1e-300)) + L.beta;
            ybuf[L.sector][L.user_local] += L.phi * r;
        }
        double u = 0.0;
        for (int m = 0; m < M; ++m)
            for (double v : ybuf[m]) u += log_utility(v);
        return u;
    };

    auto surrogate_grad = [&](const std::vector<double>& x, std::vector<double>& g) {
        std::fill(g.begin(), g.end(), 0.0);
        const auto p = linear_powers(x);
        // user weights
        for (int m = 0; m < M; ++m) std::fill(ybuf[m].begin(), ybuf[m].end(), 0.0);
        for (const auto& L : links) {
            const double F = link_sinr(L, p);
            ybuf[L.sector][L.user_local] += L.phi * (L.alpha * std::log(std::max(F, 1e-300)) + L.beta);
        }
        std::vector<std::vector<double>> w(M);
        for (int m = 0; m < M; ++m) {
            w[m].resize(ybuf[m].size());
            for (std::size_t k = 0; k < ybuf[m].size(); ++k) w[m][k] = log_utility_grad(ybuf[m][k]);
        }
        for (const auto& L : links) {
            const int i = users_by_sector[L.sector][L.user_local];
            const double coef = w[L.sector][L.user_local] * L.phi * L.alpha;
            // own power term: d ln F / d pt_own = 1
            g[var(L.sector, L.j, L.b)] += coef;
            // interference terms: d ln F / d pt_q = -G_q e^{pt_q} / D
            double denom = noise;
            for (int bb = 0; bb < N; ++bb)
                if (bb != L.b) denom += gt.at(i, L.j, bb, L.sector) * p[L.sector][L.j * N + bb];
            for (int mm = 0; mm < M; ++mm) {
                if (mm == L.sector) continue;
                for (int bb = 0; bb < N; ++bb) denom += gt.at(i, L.j, bb, mm) * p[mm][L.j * N + bb];
            }
            for (int bb = 0; bb < N; ++bb) {
                if (bb == L.b) continue;
                const double gq = gt.at(i, L.j, bb, L.sector);
                if (gq > 0.0) g[var(L.sector, L.j, bb)] -= coef * gq * p[L.sector][L.j * N + bb] / denom;
            }
            for (int mm = 0; mm < M; ++mm) {
                if (mm == L.sector) continue;
                for (int bb = 0; bb < N; ++bb) {
                    const double gq = gt.at(i, L.j, bb, mm);
                    if (gq > 0.0) g[var(mm, L.j, bb)] -= coef * gq * p[mm][L.j * N + bb] / denom;
                }
            }
        }
    };

    auto proj = [&](std::vector<double>& x) {
        for (int m = 0; m < M; ++m) {
            std::vector<double> y(x.begin() + static_cast<std::ptrdiff_t>(m) * R,
                                  x.begin() + static_cast<std::ptrdiff_t>(m + 1) * R);
            project_log_power(y, pmax, lo);
            std::copy(y.begin(), y.end(), x.begin() + static_cast<std::ptrdiff_t>(m) * R);
        }
    };

    ScaResult out;
    double prev_surrogate = -std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        if (outer > 0) {
            // tighten at the current iterate
            const auto p = linear_powers(pt);
            double max_delta = 0.0;
            for (auto& L : links) {
                const double F = link_sinr(L, p);
                if (!(F > 0.0)) throw SolverError("sca: nonpositive SINR at tighten", F);
                const ScaBound nb = tighten(F);
                max_delta = std::max(max_delta, std::abs(nb.alpha - L.alpha));
                L.alpha = nb.alpha;
                L.beta = nb.beta;
            }
            if (max_delta <= opt.alpha_tol) break;
        }
        auto res = projected_gradient_max(surrogate_value, surrogate_grad, proj, pt, opt.inner_tol, opt.max_inner);
        pt = std::move(res.x);
        const double s = surrogate_value(pt);
        out.trace.push_back({outer, s, true_objective(linear_powers(pt)), res.residual});
        if (outer > 0 && s < prev_surrogate - 1e-7)
            throw SolverError("sca: surrogate decreased across outer iterations", prev_surrogate - s);
        prev_surrogate = s;
    }
    if (static_cast<int>(out.trace.size()) >= opt.max_outer)
        throw SolverError("sca: outer loop did not converge", out.trace.empty() ? 0.0 : out.trace.back().inner_residual);

    out.powers = linear_powers(pt);
    out.true_objective = true_objective(out.powers);
    return out;
}

// ---------------------------------------------------------------------------
// Alternating optimization driver

struct AoOptions {
    double objective_tol = 1e-6;
    int max_rounds = 100;
    double phi_tol = 1e-8;
    ScaOptions sca;
};

struct AoTraceRow {
    int round = 0;
    double objective = 0.0;
};

struct AoResult {
    std::vector<std::vector<double>> phi_by_sector;  // local user x (j*N+b)
    std::vector<std::vector<double>> powers;         // per sector
    std::vector<AoTraceRow> trace;
    double objective = 0.0;
};

inline AoResult ao_loop(const GainTensor& gt, const std::vector<std::vector<int>>& users_by_sector, double noise,
                        double pmax, const AoOptions& opt = {}) {
    const int M = gt.num_sectors, J = gt.num_prbs, N = gt.num_beams;
    const int R = J * N;
    std::vector<int> sector_of_user(gt.num_users, 0);
    for (int m = 0; m < M; ++m)
        for (int i : users_by_sector[m]) sector_of_user[i] = m;

    AoResult out;
    out.powers.assign(M, std::vector<double>(R, pmax / R));
    out.phi_by_sector.assign(M, {});

    auto phi_step = [&]() {
        const auto rates = virtual_rates_all_on(gt, out.powers, noise, sector_of_user);
        double total = 0.0;
        for (int m = 0; m < M; ++m) {
            const auto& local = users_by_sector[m];
            PhiProblem pb;
            pb.num_users = static_cast<int>(local.size());
            pb.num_resources = R;
            pb.rates.resize(static_cast<std::size_t>(pb.num_users) * R);
            for (int li = 0; li < pb.num_users; ++li)
                for (int r = 0; r < R; ++r) pb.rates[li * R + r] = rates[static_cast<std::size_t>(local[li]) * R + r];
            pb.form = ConstraintForm::inequality;
            pb.tol = opt.phi_tol;
            auto sol = solve_phi_problem(pb);
            out.phi_by_sector[m] = std::move(sol.phi);
            total += sol.value;
        }
        return total;
    };

    auto objective_at = [&](const std::vector<std::vector<double>>& powers) {
        const auto rates = virtual_rates_all_on(gt, powers, noise, sector_of_user);
        double u = 0.0;
        for (int m = 0; m < M; ++m) {
            const auto& local = users_by_sector[m];
            for (int li = 0; li < static_cast<int>(local.size()); ++li) {
                double x = 0.0;
                for (int r = 0; r < R; ++r)
                    x += out.phi_by_sector[m][static_cast<std::size_t>(li) * R + r] *
                         rates[static_cast<std::size_t>(local[li]) * R + r];
                u += log_utility(x);
            }
        }
        return u;
    };

    double prev = -std::numeric_limits<double>::infinity();
    for (int round = 0; round < opt.max_rounds; ++round) {
        phi_step();
        auto sca = sca_power_allocation(gt, out.phi_by_sector, users_by_sector, noise, pmax, out.powers, opt.sca);
        // keep-best safeguard: the high-SINR restart may move downhill
        if (objective_at(sca.powers) >= objective_at(out.powers)) out.powers = std::move(sca.powers);
        const double obj = objective_at(out.powers);
        out.trace.push_back({round, obj});
        if (std::abs(obj - prev) < opt.objective_tol) break;
        prev = obj;
    }
    out.objective = out.trace.empty() ? 0.0 : out.trace.back().objective;
    return out;
}

}  // namespace vcoord
