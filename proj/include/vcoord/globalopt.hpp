#pragma once

#include <queue>

#include "convexopt.hpp"
#include "virtlayer.hpp"

namespace vcoord {

// ---------------------------------------------------------------------------
// SISO instances (single antenna, desk scale)

struct SisoInstance {
    GainTensor gains;  // num_beams == 1
    std::vector<std::vector<int>> users_by_sector;
    double noise = 0.1;
    double pmax = 1.0;  // per sector

    int num_sectors() const { return gains.num_sectors; }
    int num_prbs() const { return gains.num_prbs; }

    void validate() const {
        if (gains.num_beams != 1) throw ConfigError("siso instance: single antenna only");
        if (num_sectors() != 2 || num_prbs() != 2)
            throw ConfigError("siso instance: solver supports the 2-sector / 2-PRB desk scale");
        for (const auto& local : users_by_sector)
            if (local.empty() || local.size() > 2) throw ConfigError("siso instance: 1 or 2 users per sector");
        if (!(noise > 0.0) || !(pmax > 0.0)) throw ConfigError("siso instance: noise and pmax must be > 0");
    }

    double g(int i, int j, int m) const { return gains.at(i, j, 0, m); }
};

enum class InterferenceRegime { weak, equal, strong };

inline SisoInstance make_siso_instance(int users_per_sector, InterferenceRegime regime, std::uint64_t seed) {
    SisoInstance inst;
    const int M = 2, J = 2;
    const int I = users_per_sector * M;
    Rng rng(mix_seed(seed, 0x7369736FULL));
    inst.gains.allocate(I, J, 1, M);
    inst.users_by_sector.assign(M, {});
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < users_per_sector; ++k) inst.users_by_sector[m].push_back(m * users_per_sector + k);
    for (int m = 0; m < M; ++m)
        for (int li = 0; li < users_per_sector; ++li) {
            const int i = inst.users_by_sector[m][li];
            for (int j = 0; j < J; ++j) {
                const double own = rng.uniform(0.8, 1.6);
                double ratio = 0.0;
                switch (regime) {
                    case InterferenceRegime::weak: ratio = rng.uniform(0.02, 0.10); break;
                    case InterferenceRegime::equal: ratio = rng.uniform(0.8, 1.25); break;
                    case InterferenceRegime::strong: ratio = rng.uniform(5.0, 10.0); break;
                }
                inst.gains.g[inst.gains.gidx(i, j, 0, m)] = own;
                inst.gains.g[inst.gains.gidx(i, j, 0, 1 - m)] = own * ratio;
            }
        }
    inst.gains.finalize();
    return inst;
}

// Utility of a power matrix under exact per-sector time fractions.
inline double siso_utility(const SisoInstance& inst, const std::vector<std::vector<double>>& powers,
                           double phi_tol = 1e-8) {
    return network_virtual_utility(inst.gains, powers, inst.noise, inst.users_by_sector, ConstraintForm::inequality,
                                   0.0, phi_tol)
        .value;
}

// ---------------------------------------------------------------------------
// DC decomposition

struct DcParts {
    const SisoInstance* inst = nullptr;

    // ln(noise + sum over all sectors of G * P_j)
    double f(int i, int j, int m, const std::vector<std::vector<double>>& p) const {
        double s = inst->noise;
        for (int mm = 0; mm < inst->num_sectors(); ++mm) s += inst->g(i, j, mm) * p[mm][j];
        (void)m;
        return std::log(s);
    }
    // ln(noise + interference only)
    double g_part(int i, int j, int m, const std::vector<std::vector<double>>& p) const {
        double s = inst->noise;
        for (int mm = 0; mm < inst->num_sectors(); ++mm)
            if (mm != m) s += inst->g(i, j, mm) * p[mm][j];
        return std::log(s);
    }
    double rate_of(int i, int j, int m, const std::vector<std::vector<double>>& p) const {
        return f(i, j, m, p) - g_part(i, j, m, p);
    }
};

inline DcParts dc_parts(const SisoInstance& inst) { return DcParts{&inst}; }

// phi * ln(sigma2 + weighted_sum / phi), extended with 0 at phi = 0.
inline double perspective_term(double phi, double weighted_sum, double sigma2) {
    if (phi <= 0.0) return 0.0;
    return phi * std::log(sigma2 + weighted_sum / phi);
}

// ---------------------------------------------------------------------------
// Convex envelope of a concave function over a small vertex set (<= 2 dims).
// Stored as the max over valid minorant planes; every plane is shifted to be
// a true minorant so gamma <= envelope holds by construction.

struct EnvelopePoint {
    double x = 0.0, y = 0.0, v = 0.0;
};

struct LowerEnvelope {
    std::vector<std::array<double, 3>> planes;  // v >= a*x + b*y + c

    double value(double x, double y) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& p : planes) best = std::max(best, p[0] * x + p[1] * y + p[2]);
        return best;
    }
    std::array<double, 2> grad(double x, double y) const {
        double best = -std::numeric_limits<double>::infinity();
        std::array<double, 2> g{0.0, 0.0};
        for (const auto& p : planes) {
            const double v = p[0] * x + p[1] * y + p[2];
            if (v > best) {
                best = v;
                g = {p[0], p[1]};
            }
        }
        return g;
    }

    static LowerEnvelope build(std::vector<EnvelopePoint> pts) {
        LowerEnvelope env;
        if (pts.empty()) throw ConfigError("envelope: no points");
        double vmin = pts[0].v, scale = 1.0;
        double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
        for (const auto& p : pts) {
            vmin = std::min(vmin, p.v);
            scale = std::max(scale, std::abs(p.v));
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        const double tol = 1e-12 * scale;
        auto add_plane = [&](double a, double b, double c) {
            double shift = 0.0;
            for (const auto& p : pts) shift = std::max(shift, a * p.x + b * p.y + c - p.v);
            env.planes.push_back({a, b, c - shift});
        };
        add_plane(0.0, 0.0, vmin);

        const bool flat_x = (xmax - xmin) < 1e-14;
        const bool flat_y = (ymax - ymin) < 1e-14;
        if (flat_x && flat_y) return env;
        if (flat_x || flat_y) {
            // 1-D lower hull over the varying coordinate
            for (std::size_t a = 0; a < pts.size(); ++a)
                for (std::size_t b = a + 1; b < pts.size(); ++b) {
                    const double ta = flat_x ? pts[a].y : pts[a].x;
                    const double tb = flat_x ? pts[b].y : pts[b].x;
                    if (std::abs(ta - tb) < 1e-14) continue;
                    const double slope = (pts[b].v - pts[a].v) / (tb - ta);
                    const double c = pts[a].v - slope * ta;
                    bool valid = true;
                    for (const auto& p : pts) {
                        const double t = flat_x ? p.y : p.x;
                        if (p.v < slope * t + c - tol) {
                            valid = false;
                            break;
                        }
                    }
                    if (valid) {
                        if (flat_x)
                            add_plane(0.0, slope, c);
                        else
                            add_plane(slope, 0.0, c);
                    }
                }
            return env;
        }
        // 2-D: planes through point triples that minorize every point
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b)
                for (std::size_t c = b + 1; c < pts.size(); ++c) {
                    const double ux = pts[b].x - pts[a].x, uy = pts[b].y - pts[a].y;
                    const double vx = pts[c].x - pts[a].x, vy = pts[c].y - pts[a].y;
                    const double det = ux * vy - uy * vx;
                    if (std::abs(det) < 1e-14) continue;
                    const double dv1 = pts[b].v - pts[a].v, dv2 = pts[c].v - pts[a].v;
                    const double pa = (dv1 * vy - dv2 * uy) / det;
                    const double pb = (dv2 * ux - dv1 * vx) / det;
                    const double pc = pts[a].v - pa * pts[a].x - pb * pts[a].y;
                    bool valid = true;
                    for (const auto& p : pts)
                        if (p.v < pa * p.x + pb * p.y + pc - tol) {
                            valid = false;
                            break;
                        }
                    if (valid) add_plane(pa, pb, pc);
                }
        return env;
    }
};

// Spec'd operation: envelope of a concave scalar/2-D function given vertex
// values, evaluated at a query point inside the hull.
inline double convex_envelope(const std::vector<EnvelopePoint>& vertex_values, double qx, double qy) {
    // verify hull membership on the coordinate box
    double xmin = vertex_values[0].x, xmax = xmin, ymin = vertex_values[0].y, ymax = ymin;
    for (const auto& p : vertex_values) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    if (qx < xmin - 1e-12 || qx > xmax + 1e-12 || qy < ymin - 1e-12 || qy > ymax + 1e-12)
        throw DomainError("convex_envelope: query outside the vertex hull");
    return LowerEnvelope::build(vertex_values).value(qx, qy);
}

// ---------------------------------------------------------------------------
// Branch-and-bound nodes: one simplex block per constraint pair.

struct BnbBlock {
    int dim = 2;
    std::vector<std::vector<double>> verts;  // dim + 1 vertices
};

struct BnbNode {
    std::vector<BnbBlock> blocks;  // [0..M): power blocks; then (m * J + j) phi blocks
    double upper = std::numeric_limits<double>::infinity();
    double lower = -std::numeric_limits<double>::infinity();
    std::vector<double> ub_coords;  // flattened block coordinates at the bound argmax
    int depth = 0;
    long id = 0;
};

namespace bnbdetail {

struct Layout {
    int M = 2, J = 2;
    std::vector<int> users_per_sector;
    std::vector<int> block_offset;  // flattened coord offset per block
    int total_coords = 0;

    int num_blocks() const { return static_cast<int>(block_offset.size()); }
    int power_block(int m) const { return m; }
    int phi_block(int m, int j) const { return M + m * J + j; }
    int power_coord(int m, int j) const { return block_offset[power_block(m)] + j; }
    int phi_coord(int m, int j, int li) const { return block_offset[phi_block(m, j)] + li; }
};

inline Layout make_layout(const SisoInstance& inst) {
    Layout L;
    L.M = inst.num_sectors();
    L.J = inst.num_prbs();
    for (const auto& u : inst.users_by_sector) L.users_per_sector.push_back(static_cast<int>(u.size()));
    int off = 0;
    for (int m = 0; m < L.M; ++m) {
        L.block_offset.push_back(off);
        off += L.J;
    }
    for (int m = 0; m < L.M; ++m)
        for (int j = 0; j < L.J; ++j) {
            L.block_offset.push_back(off);
            off += L.users_per_sector[m];
        }
    L.total_coords = off;
    return L;
}

inline BnbNode make_root(const SisoInstance& inst, const Layout& L) {
    BnbNode node;
    auto simplex_block = [](int dim, double scale) {
        BnbBlock b;
        b.dim = dim;
        b.verts.assign(dim + 1, std::vector<double>(dim, 0.0));
        for (int k = 0; k < dim; ++k) b.verts[k + 1][k] = scale;
        return b;
    };
    for (int m = 0; m < L.M; ++m) node.blocks.push_back(simplex_block(L.J, inst.pmax));
    for (int m = 0; m < L.M; ++m)
        for (int j = 0; j < L.J; ++j) node.blocks.push_back(simplex_block(L.users_per_sector[m], 1.0));
    node.id = 0;
    return node;
}

// map per-block barycentric weights to flattened coordinates
inline std::vector<double> lambda_to_coords(const BnbNode& node, const Layout& L, const std::vector<double>& lambda) {
    std::vector<double> x(L.total_coords, 0.0);
    std::size_t off = 0;
    for (int bk = 0; bk < L.num_blocks(); ++bk) {
        const auto& blk = node.blocks[bk];
        for (std::size_t v = 0; v < blk.verts.size(); ++v)
            for (int k = 0; k < blk.dim; ++k) x[L.block_offset[bk] + k] += lambda[off + v] * blk.verts[v][k];
        off += blk.verts.size();
    }
    return x;
}

// least-squares barycentric weights for a point, clipped to the simplex
inline std::vector<double> coords_to_lambda(const BnbNode& node, const Layout& L, const std::vector<double>& x) {
    std::vector<double> lambda;
    for (int bk = 0; bk < L.num_blocks(); ++bk) {
        const auto& blk = node.blocks[bk];
        const int nv = static_cast<int>(blk.verts.size());
        std::vector<double> w(nv, 1.0 / nv);
        // solve for weights on the affine hull: vertices v0..vd, w = affine coords
        // (dim x dim system in w1..wd with w0 = 1 - sum)
        const int d = blk.dim;
        std::vector<double> A(static_cast<std::size_t>(d) * d, 0.0), rhs(d, 0.0);
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) A[r * d + c] = blk.verts[c + 1][r] - blk.verts[0][r];
            rhs[r] = x[L.block_offset[bk] + r] - blk.verts[0][r];
        }
        // tiny Gaussian elimination
        std::vector<double> sol(d, 0.0);
        bool ok = true;
        for (int col = 0; col < d && ok; ++col) {
            int piv = col;
            for (int r = col + 1; r < d; ++r)
                if (std::abs(A[r * d + col]) > std::abs(A[piv * d + col])) piv = r;
            if (std::abs(A[piv * d + col]) < 1e-14) {
                ok = false;
                break;
            }
            for (int c = 0; c < d; ++c) std::swap(A[col * d + c], A[piv * d + c]);
            std::swap(rhs[col], rhs[piv]);
            for (int r = col + 1; r < d; ++r) {
                const double f = A[r * d + col] / A[col * d + col];
                for (int c = col; c < d; ++c) A[r * d + c] -= f * A[col * d + c];
                rhs[r] -= f * rhs[col];
            }
        }
        if (ok)
            for (int r = d - 1; r >= 0; --r) {
                double s = rhs[r];
                for (int c = r + 1; c < d; ++c) s -= A[r * d + c] * sol[c];
                sol[r] = s / A[r * d + r];
            }
        if (ok) {
            double w0 = 1.0;
            for (int k = 0; k < d; ++k) w0 -= sol[k];
            w[0] = w0;
            for (int k = 0; k < d; ++k) w[k + 1] = sol[k];
            project_simplex(w, 1.0);
        }
        lambda.insert(lambda.end(), w.begin(), w.end());
    }
    return lambda;
}

// Per-(m, li, j) bound ingredients on a node.
struct TermBound {
    double phi_lo = 0.0, phi_hi = 1.0;
    double w_lo = 0.0, w_hi = 0.0;  // range of f over the node
    LowerEnvelope gamma;            // envelope of phi * g over (phi, Q)
};

struct NodeBounds {
    std::vector<TermBound> terms;  // indexed term_index(m, li, j)
};

inline int term_index(const Layout& L, int m, int li, int j) {
    int base = 0;
    for (int mm = 0; mm < m; ++mm) base += L.users_per_sector[mm] * L.J;
    return base + li * L.J + j;
}

inline NodeBounds make_node_bounds(const SisoInstance& inst, const Layout& L, const BnbNode& node) {
    NodeBounds nb;
    int total = 0;
    for (int m = 0; m < L.M; ++m) total += L.users_per_sector[m] * L.J;
    nb.terms.resize(total);
    for (int m = 0; m < L.M; ++m) {
        const int mh = 1 - m;  // single interferer at desk scale
        for (int li = 0; li < L.users_per_sector[m]; ++li) {
            const int i = inst.users_by_sector[m][li];
            for (int j = 0; j < L.J; ++j) {
                TermBound tb;
                const auto& phiblk = node.blocks[L.phi_block(m, j)];
                tb.phi_lo = std::numeric_limits<double>::infinity();
                tb.phi_hi = -tb.phi_lo;
                for (const auto& v : phiblk.verts) {
                    tb.phi_lo = std::min(tb.phi_lo, v[li]);
                    tb.phi_hi = std::max(tb.phi_hi, v[li]);
                }
                // range of f over the node: f is increasing in both PRB powers
                double p_lo[2] = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
                double p_hi[2] = {0.0, 0.0};
                for (int mm = 0; mm < L.M; ++mm)
                    for (const auto& v : node.blocks[L.power_block(mm)].verts) {
                        p_lo[mm] = std::min(p_lo[mm], v[j]);
                        p_hi[mm] = std::max(p_hi[mm], v[j]);
                    }
                tb.w_lo = std::log(inst.noise + inst.g(i, j, 0) * p_lo[0] + inst.g(i, j, 1) * p_lo[1]);
                tb.w_hi = std::log(inst.noise + inst.g(i, j, 0) * p_hi[0] + inst.g(i, j, 1) * p_hi[1]);
                // envelope points: phi-block vertex coordinate x interferer power vertex
                std::vector<EnvelopePoint> pts;
                for (const auto& pv : phiblk.verts)
                    for (const auto& qv : node.blocks[L.power_block(mh)].verts) {
                        EnvelopePoint ep;
                        ep.x = pv[li];
                        ep.y = qv[j];
                        ep.v = ep.x * std::log(inst.noise + inst.g(i, j, mh) * ep.y);
                        pts.push_back(ep);
                    }
                tb.gamma = LowerEnvelope::build(std::move(pts));
                nb.terms[term_index(L, m, li, j)] = std::move(tb);
            }
        }
    }
    return nb;
}

// Exact concave bound objective and a valid supergradient in coordinates.
struct BoundEval {
    double value = 0.0;
    std::vector<double> grad;  // in flattened coordinates
};

inline BoundEval eval_bound(const SisoInstance& inst, const Layout& L, const NodeBounds& nb,
                            const std::vector<double>& x, bool want_grad, double smooth_tau = 0.0) {
    BoundEval out;
    if (want_grad) out.grad.assign(L.total_coords, 0.0);
    const double sigma2 = inst.noise;

    for (int m = 0; m < L.M; ++m) {
        const int mh = 1 - m;
        for (int li = 0; li < L.users_per_sector[m]; ++li) {
            const int i = inst.users_by_sector[m][li];
            double Y = 0.0;
            struct TermGrad {
                double dphi = 0.0, dp0 = 0.0, dp1 = 0.0, dq = 0.0;
            };
            std::vector<TermGrad> tg(L.J);
            for (int j = 0; j < L.J; ++j) {
                const auto& tb = nb.terms[term_index(L, m, li, j)];
                const double phi = x[L.phi_coord(m, j, li)];
                const double p0 = x[L.power_coord(0, j)];
                const double p1 = x[L.power_coord(1, j)];
                const double q = x[L.power_coord(mh, j)];
                const double S = inst.g(i, j, 0) * p0 + inst.g(i, j, 1) * p1;
                const double fS = std::log(sigma2 + S);
                // three concave overestimators of phi * f
                const double pers = perspective_term(phi, S, sigma2);
                const double a1 = tb.w_hi * phi + tb.phi_lo * fS - tb.phi_lo * tb.w_hi;
                const double a2 = tb.w_lo * phi + tb.phi_hi * fS - tb.phi_hi * tb.w_lo;
                double fhat;
                int active = 0;
                double soft_w[3] = {0.0, 0.0, 0.0};
                const double vals[3] = {a1, a2, pers};
                if (smooth_tau > 0.0) {
                    const double mn = std::min({a1, a2, pers});
                    double z = 0.0;
                    for (int k = 0; k < 3; ++k) {
                        soft_w[k] = std::exp(-(vals[k] - mn) / smooth_tau);
                        z += soft_w[k];
                    }
                    for (int k = 0; k < 3; ++k) soft_w[k] /= z;
                    fhat = mn - smooth_tau * std::log(z / 3.0);  // smin + tau*ln 3 >= min
                } else {
                    fhat = vals[0];
                    for (int k = 1; k < 3; ++k)
                        if (vals[k] < fhat) {
                            fhat = vals[k];
                            active = k;
                        }
                }
                const double gamma = tb.gamma.value(phi, q);
                Y += fhat - gamma;
                if (want_grad) {
                    TermGrad g;
                    auto add_piece = [&](int k, double wgt) {
                        if (k == 0) {  // a1
                            g.dphi += wgt * tb.w_hi;
                            g.dp0 += wgt * tb.phi_lo * inst.g(i, j, 0) / (sigma2 + S);
                            g.dp1 += wgt * tb.phi_lo * inst.g(i, j, 1) / (sigma2 + S);
                        } else if (k == 1) {  // a2
                            g.dphi += wgt * tb.w_lo;
                            g.dp0 += wgt * tb.phi_hi * inst.g(i, j, 0) / (sigma2 + S);
                            g.dp1 += wgt * tb.phi_hi * inst.g(i, j, 1) / (sigma2 + S);
                        } else {  // perspective; phi > 0 whenever it is strictly active
                            if (phi > 0.0) {
                                const double ratio = S / phi;
                                g.dphi += wgt * (std::log(sigma2 + ratio) - ratio / (sigma2 + ratio));
                                g.dp0 += wgt * inst.g(i, j, 0) / (sigma2 + ratio);
                                g.dp1 += wgt * inst.g(i, j, 1) / (sigma2 + ratio);
                            }
                        }
                    };
                    if (smooth_tau > 0.0)
                        for (int k = 0; k < 3; ++k) add_piece(k, soft_w[k]);
                    else
                        add_piece(active, 1.0);
                    const auto eg = tb.gamma.grad(phi, q);
                    g.dphi -= eg[0];
                    g.dq -= eg[1];
                    tg[j] = g;
                }
            }
            out.value += log_utility(Y);
            if (want_grad) {
                const double w = log_utility_grad(Y);
                for (int j = 0; j < L.J; ++j) {
                    out.grad[L.phi_coord(m, j, li)] += w * tg[j].dphi;
                    out.grad[L.power_coord(0, j)] += w * tg[j].dp0;
                    out.grad[L.power_coord(1, j)] += w * tg[j].dp1;
                    out.grad[L.power_coord(mh, j)] += w * tg[j].dq;
                }
            }
        }
    }
    return out;
}

}  // namespace bnbdetail

// ---------------------------------------------------------------------------
// Upper bound: maximize the concave relaxation over the node region. The
// returned value adds a Frank-Wolfe gap certificate so inexact solves can
// never under-report the bound.

struct UpperBoundResult {
    double value = 0.0;
    std::vector<double> coords;
    double solver_residual = 0.0;
};

struct BnbOptions {
    double eps_tol = 1e-2;
    long node_budget = 1000000;
    double ub_tol = 1e-7;
    long ub_max_iter = 4000;
    double smooth_tau = 1e-4;
    double phi_tol = 1e-8;
};

inline UpperBoundResult upper_bound(const SisoInstance& inst, const BnbNode& node, const BnbOptions& opt = {},
                                    const std::vector<double>* warm_coords = nullptr) {
    using namespace bnbdetail;
    const Layout L = make_layout(inst);
    const NodeBounds nb = make_node_bounds(inst, L, node);

    std::size_t nl = 0;
    for (const auto& blk : node.blocks) nl += blk.verts.size();

    auto value_fn = [&](const std::vector<double>& lambda) {
        const auto x = lambda_to_coords(node, L, lambda);
        return eval_bound(inst, L, nb, x, false, opt.smooth_tau).value;
    };
    auto grad_fn = [&](const std::vector<double>& lambda, std::vector<double>& g) {
        const auto x = lambda_to_coords(node, L, lambda);
        const auto be = eval_bound(inst, L, nb, x, true, opt.smooth_tau);
        std::fill(g.begin(), g.end(), 0.0);
        std::size_t off = 0;
        for (int bk = 0; bk < L.num_blocks(); ++bk) {
            const auto& blk = node.blocks[bk];
            for (std::size_t v = 0; v < blk.verts.size(); ++v) {
                double s = 0.0;
                for (int k = 0; k < blk.dim; ++k) s += be.grad[L.block_offset[bk] + k] * blk.verts[v][k];
                g[off + v] = s;
            }
            off += blk.verts.size();
        }
    };
    auto proj_fn = [&](std::vector<double>& lambda) {
        std::size_t off = 0;
        for (const auto& blk : node.blocks) {
            std::vector<double> w(lambda.begin() + static_cast<std::ptrdiff_t>(off),
                                  lambda.begin() + static_cast<std::ptrdiff_t>(off + blk.verts.size()));
            project_simplex(w, 1.0);
            std::copy(w.begin(), w.end(), lambda.begin() + static_cast<std::ptrdiff_t>(off));
            off += blk.verts.size();
        }
    };

    std::vector<double> lam0(nl, 0.0);
    if (warm_coords) {
        lam0 = coords_to_lambda(node, L, *warm_coords);
    } else {
        std::size_t off = 0;
        for (const auto& blk : node.blocks) {
            for (std::size_t v = 0; v < blk.verts.size(); ++v) lam0[off + v] = 1.0 / static_cast<double>(blk.verts.size());
            off += blk.verts.size();
        }
    }

    // exact Frank-Wolfe gap of the unsmoothed bound at lambda
    auto exact_fw_gap = [&](const std::vector<double>& lambda) {
        const auto xc = lambda_to_coords(node, L, lambda);
        const auto ev = eval_bound(inst, L, nb, xc, true, 0.0);
        double gap = 0.0;
        std::size_t off = 0;
        for (int bk = 0; bk < L.num_blocks(); ++bk) {
            const auto& blk = node.blocks[bk];
            double cur = 0.0, best = -std::numeric_limits<double>::infinity();
            for (std::size_t v = 0; v < blk.verts.size(); ++v) {
                double s = 0.0;
                for (int k = 0; k < blk.dim; ++k) s += ev.grad[L.block_offset[bk] + k] * blk.verts[v][k];
                cur += lambda[off + v] * s;
                best = std::max(best, s);
            }
            gap += std::max(0.0, best - cur);
            off += blk.verts.size();
        }
        return gap;
    };
    const double gap_target = std::max(1e-9, 0.05 * opt.eps_tol);
    auto early = [&](const std::vector<double>& lambda) { return exact_fw_gap(lambda) <= gap_target; };

    auto pg = projected_gradient_max(value_fn, grad_fn, proj_fn, lam0, opt.ub_tol, opt.ub_max_iter, early);

    // exact bound value and a valid supergradient at the solution
    const auto x = lambda_to_coords(node, L, pg.x);
    const auto exact = eval_bound(inst, L, nb, x, true, 0.0);

    // Frank-Wolfe gap over the blocks certifies sup <= value + gap
    double gap = 0.0;
    std::size_t off = 0;
    for (int bk = 0; bk < L.num_blocks(); ++bk) {
        const auto& blk = node.blocks[bk];
        double cur = 0.0, best = -std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < blk.verts.size(); ++v) {
            double s = 0.0;
            for (int k = 0; k < blk.dim; ++k) s += exact.grad[L.block_offset[bk] + k] * blk.verts[v][k];
            cur += pg.x[off + v] * s;
            best = std::max(best, s);
        }
        gap += std::max(0.0, best - cur);
        off += blk.verts.size();
    }

    UpperBoundResult out;
    out.value = exact.value + gap;
    out.coords = x;
    out.solver_residual = pg.residual;
    return out;
}

// ---------------------------------------------------------------------------
// Lower bound: exact objective at power vertices, at the bound argmax, and
// after a local Danskin ascent from the argmax.

struct LowerBoundResult {
    double value = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> powers;
};

inline std::vector<double> siso_utility_gradient(const SisoInstance& inst,
                                                 const std::vector<std::vector<double>>& powers,
                                                 const NetworkUtility& nu) {
    // Danskin: gradient at fixed optimal time fractions; layout (m * J + j)
    const int M = inst.num_sectors(), J = inst.num_prbs();
    std::vector<double> g(static_cast<std::size_t>(M) * J, 0.0);
    VsaParams prm;
    prm.eps = 0.0;
    for (int m = 0; m < M; ++m) {
        VsaVirtualModel vm;
        vm.rates.assign(inst.users_by_sector[m].size() * static_cast<std::size_t>(J), 0.0);
        vm.phi = nu.per_sector[m].phi;
        vm.x = nu.per_sector[m].x;
        const auto d = vsa_sensitivities(m, inst.users_by_sector[m], inst.gains, vm, powers, inst.noise, prm);
        for (int mh = 0; mh < M; ++mh)
            for (int j = 0; j < J; ++j) g[static_cast<std::size_t>(mh) * J + j] += d[static_cast<std::size_t>(mh) * J + j];
    }
    return g;
}

inline LowerBoundResult lower_bound(const SisoInstance& inst, const BnbNode& node,
                                    const std::vector<double>& ub_coords, const BnbOptions& opt = {},
                                    int ascent_iters = 40) {
    using namespace bnbdetail;
    const Layout L = make_layout(inst);
    const int M = L.M, J = L.J;

    LowerBoundResult best;
    auto consider = [&](const std::vector<std::vector<double>>& powers) {
        const double v = siso_utility(inst, powers, opt.phi_tol);
        if (v > best.value) {
            best.value = v;
            best.powers = powers;
        }
    };

    // (a) node power-vertex combinations, time fractions re-optimized exactly
    const auto& pb0 = node.blocks[L.power_block(0)];
    const auto& pb1 = node.blocks[L.power_block(1)];
    for (const auto& v0 : pb0.verts)
        for (const auto& v1 : pb1.verts) consider({v0, v1});

    // (b) the upper-bound argmax
    std::vector<std::vector<double>> pub(M, std::vector<double>(J, 0.0));
    for (int m = 0; m < M; ++m)
        for (int j = 0; j < J; ++j) pub[m][j] = ub_coords[L.power_coord(m, j)];
    consider(pub);

    // (c) projected-gradient ascent on the true objective from (b)
    if (ascent_iters > 0) {
        auto powers = pub;
        double cur = siso_utility(inst, powers, opt.phi_tol);
        double step = 0.25 * inst.pmax;
        for (int it = 0; it < ascent_iters; ++it) {
            const auto nu = network_virtual_utility(inst.gains, powers, inst.noise, inst.users_by_sector,
                                                    ConstraintForm::inequality, 0.0, opt.phi_tol);
            const auto grad = siso_utility_gradient(inst, powers, nu);
            bool improved = false;
            for (int ls = 0; ls < 14 && !improved; ++ls) {
                auto cand = powers;
                for (int m = 0; m < M; ++m) {
                    std::vector<double> pm(J);
                    for (int j = 0; j < J; ++j) pm[j] = powers[m][j] + step * grad[static_cast<std::size_t>(m) * J + j];
                    project_simplex_ineq(pm, inst.pmax);
                    cand[m] = pm;
                }
                const double v = siso_utility(inst, cand, opt.phi_tol);
                if (v > cur + 1e-12) {
                    powers = cand;
                    cur = v;
                    improved = true;
                    step *= 1.3;
                } else {
                    step *= 0.5;
                }
            }
            if (!improved) break;
        }
        consider(powers);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Branching: bisect the longest edge over all simplexes.

inline std::pair<BnbNode, BnbNode> branch(const BnbNode& node) {
    int best_block = -1, best_a = 0, best_b = 0;
    double best_len = 0.0;
    for (int bk = 0; bk < static_cast<int>(node.blocks.size()); ++bk) {
        const auto& blk = node.blocks[bk];
        for (std::size_t a = 0; a < blk.verts.size(); ++a)
            for (std::size_t b = a + 1; b < blk.verts.size(); ++b) {
                double len = 0.0;
                for (int k = 0; k < blk.dim; ++k) len += sq(blk.verts[a][k] - blk.verts[b][k]);
                if (len > best_len + 1e-15) {
                    best_len = len;
                    best_block = bk;
                    best_a = static_cast<int>(a);
                    best_b = static_cast<int>(b);
                }
            }
    }
    if (best_block < 0 || best_len <= 0.0) throw DomainError("branch: node region has no positive-length edge");
    std::vector<double> mid(node.blocks[best_block].dim);
    for (int k = 0; k < node.blocks[best_block].dim; ++k)
        mid[k] = 0.5 * (node.blocks[best_block].verts[best_a][k] + node.blocks[best_block].verts[best_b][k]);
    BnbNode c1 = node, c2 = node;
    c1.blocks[best_block].verts[best_b] = mid;
    c2.blocks[best_block].verts[best_a] = mid;
    c1.depth = c2.depth = node.depth + 1;
    return {c1, c2};
}

// ---------------------------------------------------------------------------
// Best-first search

struct BnbTraceRow {
    long node_id = 0;
    int depth = 0;
    double upper = 0.0;
    double lower = 0.0;
    double global_upper = 0.0;
    double global_lower = 0.0;
};

struct BnbResult {
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_powers;
    double global_upper = std::numeric_limits<double>::infinity();
    double global_lower = -std::numeric_limits<double>::infinity();
    bool certified = false;
    long nodes_explored = 0;
    std::vector<BnbTraceRow> trace;
};

inline BnbResult bnb_solve(const SisoInstance& inst, const BnbOptions& opt = {}) {
    inst.validate();
    if (!(opt.eps_tol > 0.0)) throw ConfigError("bnb_solve: eps_tol must be > 0");
    using namespace bnbdetail;
    const Layout L = make_layout(inst);

    BnbResult out;
    struct HeapEntry {
        double upper;
        long id;
    };
    auto cmp = [](const HeapEntry& a, const HeapEntry& b) {
        if (a.upper != b.upper) return a.upper < b.upper;
        return a.id > b.id;
    };
    std::priority_queue<HeapEntry, std::vector<HeapEntry>, decltype(cmp)> heap(cmp);
    std::vector<BnbNode> store;

    BnbNode root = make_root(inst, L);
    auto ub = upper_bound(inst, root, opt);
    root.upper = ub.value;
    root.ub_coords = ub.coords;
    auto lb = lower_bound(inst, root, ub.coords, opt);
    root.lower = lb.value;
    out.best_value = lb.value;
    out.best_powers = lb.powers;
    out.global_upper = root.upper;
    out.global_lower = root.lower;
    out.nodes_explored = 1;
    store.push_back(root);
    heap.push({root.upper, 0});
    out.trace.push_back({0, 0, root.upper, root.lower, out.global_upper, out.global_lower});

    long next_id = 1;
    while (!heap.empty()) {
        if (out.global_upper - out.global_lower <= opt.eps_tol) {
            out.certified = true;
            break;
        }
        if (out.nodes_explored >= opt.node_budget) break;
        const auto top = heap.top();
        heap.pop();
        const BnbNode node = store[top.id];
        if (node.upper <= out.global_lower + 1e-12) continue;  // pruned
        out.global_upper = std::min(out.global_upper, node.upper);

        auto [c1, c2] = branch(node);
        for (BnbNode* ch : {&c1, &c2}) {
            auto cub = upper_bound(inst, *ch, opt, &node.ub_coords);
            ch->upper = std::min(cub.value, node.upper);  // nested regions cannot loosen
            ch->ub_coords = cub.coords;
            // the full local ascent only pays off near the incumbent
            const bool promising = ch->upper > out.global_lower + 0.25 * opt.eps_tol &&
                                   ch->upper - out.global_lower < 0.5;
            auto clb = lower_bound(inst, *ch, cub.coords, opt, promising ? 25 : 0);
            ch->lower = clb.value;
            if (clb.value > out.global_lower) {
                out.global_lower = clb.value;
                out.best_value = clb.value;
                out.best_powers = clb.powers;
            }
            ++out.nodes_explored;
            ch->id = next_id++;
            if (ch->upper > out.global_lower + 1e-12) {
                if (static_cast<long>(store.size()) <= ch->id) store.resize(ch->id + 1);
                store[ch->id] = *ch;
                heap.push({ch->upper, ch->id});
            }
            out.trace.push_back({ch->id, ch->depth, ch->upper, ch->lower, out.global_upper, out.global_lower});
        }
    }
    if (!heap.empty() && !out.certified) {
        // global upper is the best open bound
        out.global_upper = std::min(out.global_upper, heap.top().upper);
    } else if (heap.empty()) {
        out.global_upper = out.global_lower;
        out.certified = out.global_upper - out.global_lower <= opt.eps_tol;
    }
    if (out.global_upper - out.global_lower <= opt.eps_tol) out.certified = true;
    return out;
}

// ---------------------------------------------------------------------------
// Exhaustive grid oracle (certified lower bound on the optimum)

inline double brute_force_oracle(const SisoInstance& inst, double grid_step, double phi_tol = 1e-8) {
    inst.validate();
    const int K = static_cast<int>(std::round(inst.pmax / grid_step));
    const long per_sector = static_cast<long>(K + 1) * (K + 2) / 2;
    if (per_sector * per_sector > 2000000L) throw ConfigError("brute_force_oracle: grid too large");
    double best = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> powers(2, std::vector<double>(2, 0.0));
    for (int a0 = 0; a0 <= K; ++a0)
        for (int b0 = 0; a0 + b0 <= K; ++b0) {
            powers[0][0] = a0 * grid_step;
            powers[0][1] = b0 * grid_step;
            for (int a1 = 0; a1 <= K; ++a1)
                for (int b1 = 0; a1 + b1 <= K; ++b1) {
                    powers[1][0] = a1 * grid_step;
                    powers[1][1] = b1 * grid_step;
                    best = std::max(best, siso_utility(inst, powers, phi_tol));
                }
        }
    return best;
}

}  // namespace vcoord
