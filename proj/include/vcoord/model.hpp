#pragma once

#include <complex>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "common.hpp"

namespace vcoord {

using cvec = std::vector<std::complex<double>>;

// squared magnitude of the inner product <h, u>
inline double beam_gain(const cvec& h, const cvec& u) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * std::conj(u[k]);
    return std::norm(acc);
}

// Gains below this are treated as zero (denormal noise guard).
constexpr double kGainFloor = 1e-15;

// ---------------------------------------------------------------------------
// Codebook

struct Codebook {
    int num_antennas = 1;
    std::vector<cvec> beams;

    int size() const { return static_cast<int>(beams.size()); }

    void validate() const {
        if (beams.empty()) throw ConfigError("codebook: no beams");
        for (const auto& u : beams) {
            if (static_cast<int>(u.size()) != num_antennas) throw ConfigError("codebook: beam dimension mismatch");
            double n2 = 0.0;
            for (const auto& c : u) n2 += std::norm(c);
            if (std::abs(n2 - 1.0) > 1e-12) throw ConfigError("codebook: beam not unit norm");
        }
    }

    // Oversampled DFT codebook; the usual fixed-grid choice.
    static Codebook dft(int n_t, int n_beams) {
        Codebook cb;
        cb.num_antennas = n_t;
        cb.beams.resize(n_beams);
        const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
        for (int b = 0; b < n_beams; ++b) {
            cvec u(n_t);
            for (int k = 0; k < n_t; ++k) {
                const double phase = 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(b) / static_cast<double>(n_beams);
                u[k] = std::polar(scale, phase);
            }
            cb.beams[b] = std::move(u);
        }
        return cb;
    }
};

// ---------------------------------------------------------------------------
// Scenario

struct UserInfo {
    int id = 0;
    int sector = 0;
};

enum class ChannelModel { explicit_gain_table, rayleigh };

struct FadingStateTable {
    int num_users = 0, num_prbs = 0, num_sectors = 0, num_antennas = 0;
    // states[l] holds channel vectors flattened over ((i * J + j) * M + m)
    std::vector<std::vector<cvec>> states;
    std::vector<double> probabilities;

    std::size_t idx(int i, int j, int m) const {
        return (static_cast<std::size_t>(i) * num_prbs + j) * num_sectors + m;
    }

    void validate() const {
        if (states.empty()) throw ConfigError("fading table: empty");
        if (states.size() != probabilities.size()) throw ConfigError("fading table: state/probability count mismatch");
        double total = 0.0;
        for (double p : probabilities) {
            if (p < 0.0) throw ConfigError("fading table: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw ConfigError("fading table: probabilities do not sum to 1");
        const std::size_t want = static_cast<std::size_t>(num_users) * num_prbs * num_sectors;
        for (const auto& st : states) {
            if (st.size() != want) throw ConfigError("fading table: state size mismatch");
            for (const auto& h : st)
                if (static_cast<int>(h.size()) != num_antennas) throw ConfigError("fading table: channel dimension mismatch");
        }
    }
};

struct NetworkScenario {
    int num_sectors = 1;
    int num_prbs = 1;
    int codebook_size = 1;
    int num_tx_antennas = 1;
    std::vector<UserInfo> users;
    double noise_power = 1.0;  // linear watts
    double max_power = 1.0;    // per sector
    ChannelModel channel_model = ChannelModel::rayleigh;
    bool hold_fading = false;  // freeze the tti-0 draw (static environment)
    std::uint64_t rng_seed = 1;
    std::vector<double> pathloss;    // I x M row-major (rayleigh mode)
    FadingStateTable fading_table;   // explicit mode

    int num_users() const { return static_cast<int>(users.size()); }

    double pl(int i, int m) const { return pathloss[static_cast<std::size_t>(i) * num_sectors + m]; }

    std::vector<std::vector<int>> users_by_sector() const {
        std::vector<std::vector<int>> by(num_sectors);
        for (const auto& u : users) by[u.sector].push_back(u.id);
        return by;
    }

    void validate() const {
        if (num_sectors < 1 || num_prbs < 1 || codebook_size < 1 || num_tx_antennas < 1)
            throw ConfigError("scenario: dimensions must be >= 1");
        if (noise_power <= 0.0) throw ConfigError("scenario: noise_power must be > 0");
        if (max_power <= 0.0) throw ConfigError("scenario: max_power must be > 0");
        for (int i = 0; i < num_users(); ++i) {
            if (users[i].id != i) throw ConfigError("scenario: user ids must be 0..I-1 in order");
            if (users[i].sector < 0 || users[i].sector >= num_sectors)
                throw ConfigError("scenario: user assigned to nonexistent sector");
        }
        if (channel_model == ChannelModel::rayleigh) {
            if (pathloss.size() != static_cast<std::size_t>(num_users()) * num_sectors)
                throw ConfigError("scenario: pathloss matrix must be I x M");
            for (double g : pathloss)
                if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("scenario: pathloss entries must be finite and >= 0");
        } else {
            fading_table.validate();
            if (fading_table.num_users != num_users() || fading_table.num_prbs != num_prbs ||
                fading_table.num_sectors != num_sectors || fading_table.num_antennas != num_tx_antennas)
                throw ConfigError("scenario: fading table dimensions mismatch");
        }
    }
};

// ---------------------------------------------------------------------------
// Channel realizations

struct ChannelRealization {
    long tti = 0;
    int num_users = 0, num_prbs = 0, num_sectors = 0, num_antennas = 0;
    std::vector<cvec> h;  // ((i * J + j) * M + m)

    const cvec& at(int i, int j, int m) const {
        return h[(static_cast<std::size_t>(i) * num_prbs + j) * num_sectors + m];
    }
};

inline ChannelRealization generate_channels(const NetworkScenario& sc, long tti) {
    if (tti < 0) throw ConfigError("generate_channels: tti must be >= 0");
    const long draw_tti = sc.hold_fading ? 0 : tti;
    Rng rng(mix_seed(sc.rng_seed, 0x6368616EULL + static_cast<std::uint64_t>(draw_tti)));

    ChannelRealization cr;
    cr.tti = tti;
    cr.num_users = sc.num_users();
    cr.num_prbs = sc.num_prbs;
    cr.num_sectors = sc.num_sectors;
    cr.num_antennas = sc.num_tx_antennas;

    if (sc.channel_model == ChannelModel::explicit_gain_table) {
        sc.fading_table.validate();
        const double x = rng.uniform();
        double acc = 0.0;
        std::size_t l = sc.fading_table.states.size() - 1;
        for (std::size_t k = 0; k < sc.fading_table.probabilities.size(); ++k) {
            acc += sc.fading_table.probabilities[k];
            if (x < acc) {
                l = k;
                break;
            }
        }
        cr.h = sc.fading_table.states[l];
        return cr;
    }

    cr.h.resize(static_cast<std::size_t>(cr.num_users) * cr.num_prbs * cr.num_sectors);
    for (int i = 0; i < cr.num_users; ++i)
        for (int j = 0; j < cr.num_prbs; ++j)
            for (int m = 0; m < cr.num_sectors; ++m) {
                cvec v(cr.num_antennas);
                const double amp = std::sqrt(sc.pl(i, m) / 2.0);
                for (int k = 0; k < cr.num_antennas; ++k) v[k] = std::complex<double>(amp * rng.gauss(), amp * rng.gauss());
                cr.h[(static_cast<std::size_t>(i) * cr.num_prbs + j) * cr.num_sectors + m] = std::move(v);
            }
    return cr;
}

// ---------------------------------------------------------------------------
// Long-term gains

struct GainTensor {
    int num_users = 0, num_prbs = 0, num_beams = 0, num_sectors = 0;
    std::vector<double> g;         // (((i * J + j) * N + b) * M + m)
    std::vector<int> best_beam;    // ((i * J + j) * M + m)
    std::vector<double> best_gain;

    std::size_t gidx(int i, int j, int b, int m) const {
        return ((static_cast<std::size_t>(i) * num_prbs + j) * num_beams + b) * num_sectors + m;
    }
    std::size_t sidx(int i, int j, int m) const {
        return (static_cast<std::size_t>(i) * num_prbs + j) * num_sectors + m;
    }

    double at(int i, int j, int b, int m) const { return g[gidx(i, j, b, m)]; }
    int bstar(int i, int j, int m) const { return best_beam[sidx(i, j, m)]; }
    double gstar(int i, int j, int m) const { return best_gain[sidx(i, j, m)]; }

    void allocate(int I, int J, int N, int M) {
        num_users = I;
        num_prbs = J;
        num_beams = N;
        num_sectors = M;
        g.assign(static_cast<std::size_t>(I) * J * N * M, 0.0);
        best_beam.assign(static_cast<std::size_t>(I) * J * M, 0);
        best_gain.assign(static_cast<std::size_t>(I) * J * M, 0.0);
    }

    // Clamp tiny gains and recompute per-(i,j,m) best-beam fields.
    void finalize() {
        for (auto& v : g)
            if (v < kGainFloor) v = 0.0;
        for (int i = 0; i < num_users; ++i)
            for (int j = 0; j < num_prbs; ++j)
                for (int m = 0; m < num_sectors; ++m) {
                    int bb = 0;
                    double bg = g[gidx(i, j, 0, m)];
                    for (int b = 1; b < num_beams; ++b) {
                        const double v = g[gidx(i, j, b, m)];
                        if (v > bg) {
                            bg = v;
                            bb = b;
                        }
                    }
                    best_beam[sidx(i, j, m)] = bb;
                    best_gain[sidx(i, j, m)] = bg;
                }
    }

    void validate() const {
        for (double v : g)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("gain tensor: entries must be finite and >= 0");
        for (int i = 0; i < num_users; ++i)
            for (int j = 0; j < num_prbs; ++j)
                for (int m = 0; m < num_sectors; ++m) {
                    double mx = 0.0;
                    for (int b = 0; b < num_beams; ++b) mx = std::max(mx, g[gidx(i, j, b, m)]);
                    if (std::abs(mx - best_gain[sidx(i, j, m)]) > 1e-12 * std::max(1.0, mx))
                        throw ConfigError("gain tensor: best_gain is not the row max");
                    if (std::abs(g[gidx(i, j, best_beam[sidx(i, j, m)], m)] - mx) > 1e-12 * std::max(1.0, mx))
                        throw ConfigError("gain tensor: best_beam does not attain the max");
                }
    }

    void to_csv(std::ostream& os) const {
        os << "i,j,b,m,gain\n";
        for (int i = 0; i < num_users; ++i)
            for (int j = 0; j < num_prbs; ++j)
                for (int b = 0; b < num_beams; ++b)
                    for (int m = 0; m < num_sectors; ++m)
                        os << i << ',' << j << ',' << b << ',' << m << ',' << format_double(at(i, j, b, m)) << '\n';
    }

    static GainTensor from_csv(std::istream& is) {
        std::string line;
        if (!std::getline(is, line) || line != "i,j,b,m,gain") throw IoError("gain csv: bad header");
        struct Row {
            int i, j, b, m;
            double v;
        };
        std::vector<Row> rows;
        int I = 0, J = 0, N = 0, M = 0;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string tok;
            Row r{};
            std::getline(ss, tok, ',');
            r.i = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.j = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.b = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.m = std::stoi(tok);
            std::getline(ss, tok, ',');
            r.v = parse_double(tok);
            I = std::max(I, r.i + 1);
            J = std::max(J, r.j + 1);
            N = std::max(N, r.b + 1);
            M = std::max(M, r.m + 1);
            rows.push_back(r);
        }
        GainTensor gt;
        gt.allocate(I, J, N, M);
        for (const auto& r : rows) gt.g[gt.gidx(r.i, r.j, r.b, r.m)] = r.v;
        gt.finalize();
        gt.validate();
        return gt;
    }
};

inline GainTensor long_term_gains(const std::vector<ChannelRealization>& history, const Codebook& cb) {
    if (history.empty()) throw ConfigError("long_term_gains: empty history");
    const auto& first = history.front();
    GainTensor gt;
    gt.allocate(first.num_users, first.num_prbs, cb.size(), first.num_sectors);
    const double inv = 1.0 / static_cast<double>(history.size());
    for (const auto& cr : history)
        for (int i = 0; i < gt.num_users; ++i)
            for (int j = 0; j < gt.num_prbs; ++j)
                for (int m = 0; m < gt.num_sectors; ++m) {
                    const cvec& h = cr.at(i, j, m);
                    for (int b = 0; b < gt.num_beams; ++b) gt.g[gt.gidx(i, j, b, m)] += inv * beam_gain(h, cb.beams[b]);
                }
    gt.finalize();
    return gt;
}

// Closed-form expected gains: table mode averages over the state distribution,
// Rayleigh mode gives pathloss * ||u||^2 per beam.
inline GainTensor long_term_gains_expected(const NetworkScenario& sc, const Codebook& cb) {
    GainTensor gt;
    gt.allocate(sc.num_users(), sc.num_prbs, cb.size(), sc.num_sectors);
    if (sc.channel_model == ChannelModel::explicit_gain_table) {
        const auto& ft = sc.fading_table;
        for (std::size_t l = 0; l < ft.states.size(); ++l) {
            const double p = ft.probabilities[l];
            for (int i = 0; i < gt.num_users; ++i)
                for (int j = 0; j < gt.num_prbs; ++j)
                    for (int m = 0; m < gt.num_sectors; ++m) {
                        const cvec& h = ft.states[l][ft.idx(i, j, m)];
                        for (int b = 0; b < gt.num_beams; ++b) gt.g[gt.gidx(i, j, b, m)] += p * beam_gain(h, cb.beams[b]);
                    }
        }
    } else if (sc.hold_fading) {
        // static environment: the single frozen draw is the long-term truth
        const auto cr = generate_channels(sc, 0);
        for (int i = 0; i < gt.num_users; ++i)
            for (int j = 0; j < gt.num_prbs; ++j)
                for (int m = 0; m < gt.num_sectors; ++m) {
                    const cvec& h = cr.at(i, j, m);
                    for (int b = 0; b < gt.num_beams; ++b) gt.g[gt.gidx(i, j, b, m)] = beam_gain(h, cb.beams[b]);
                }
    } else {
        for (int i = 0; i < gt.num_users; ++i)
            for (int j = 0; j < gt.num_prbs; ++j)
                for (int m = 0; m < gt.num_sectors; ++m)
                    for (int b = 0; b < gt.num_beams; ++b) gt.g[gt.gidx(i, j, b, m)] = sc.pl(i, m);
    }
    gt.finalize();
    return gt;
}

// ---------------------------------------------------------------------------
// Power allocations

struct PowerAllocation {
    enum class Mode { per_prb, per_beam };
    Mode mode = Mode::per_beam;
    int num_prbs = 1;
    int num_beams = 1;  // 1 in per_prb mode
    std::vector<double> values;
    double floor = 0.0;

    static PowerAllocation per_prb(int J, double init, double floor_ = 0.0) {
        PowerAllocation p;
        p.mode = Mode::per_prb;
        p.num_prbs = J;
        p.num_beams = 1;
        p.values.assign(J, init);
        p.floor = floor_;
        return p;
    }
    static PowerAllocation per_beam(int J, int N, double init, double floor_ = 0.0) {
        PowerAllocation p;
        p.mode = Mode::per_beam;
        p.num_prbs = J;
        p.num_beams = N;
        p.values.assign(static_cast<std::size_t>(J) * N, init);
        p.floor = floor_;
        return p;
    }

    double& at(int j, int b = 0) { return values[static_cast<std::size_t>(j) * num_beams + b]; }
    double at(int j, int b = 0) const { return values[static_cast<std::size_t>(j) * num_beams + b]; }

    double total() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }

    void validate(double pmax) const {
        for (double v : values)
            if (v < floor - 1e-12) throw ConfigError("power allocation: entry below floor");
        if (total() > pmax + 1e-9) throw ConfigError("power allocation: budget exceeded");
    }
};

// ---------------------------------------------------------------------------
// SINR and rate formulas

inline double rate(double sinr) {
    if (sinr < 0.0) throw DomainError("rate: SINR must be >= 0");
    return std::log1p(sinr);
}

inline double rate_deriv(double sinr) { return 1.0 / (1.0 + sinr); }

// Per-PRB model: PRB power split equally over scheduled users, interference
// from other sectors' total PRB power through their best-beam gain.
inline double sinr_oa(const GainTensor& gt, const std::vector<std::vector<double>>& prb_powers, double noise, int i,
                      int j, int m, int users_on_prb) {
    if (users_on_prb < 1) throw DomainError("sinr_oa: users_on_prb must be >= 1");
    double interf = 0.0;
    for (int mm = 0; mm < gt.num_sectors; ++mm)
        if (mm != m) interf += prb_powers[mm][j] * gt.gstar(i, j, mm);
    if (noise + interf <= 0.0) throw DomainError("sinr_oa: zero noise and zero interference");
    const double pshare = prb_powers[m][j] / static_cast<double>(users_on_prb);
    return gt.gstar(i, j, m) * pshare / (noise + interf);
}

// All beams on: own-beam power over noise + intra-sector + inter-sector terms.
// beam_powers[m] is flattened (j * N + b).
inline double sinr_vsa(const GainTensor& gt, const std::vector<std::vector<double>>& beam_powers, double noise, int i,
                       int j, int b, int m) {
    const int N = gt.num_beams;
    double denom = noise;
    for (int bb = 0; bb < N; ++bb)
        if (bb != b) denom += gt.at(i, j, bb, m) * beam_powers[m][static_cast<std::size_t>(j) * N + bb];
    for (int mm = 0; mm < gt.num_sectors; ++mm) {
        if (mm == m) continue;
        for (int bb = 0; bb < N; ++bb) denom += gt.at(i, j, bb, mm) * beam_powers[mm][static_cast<std::size_t>(j) * N + bb];
    }
    if (denom <= 0.0) throw DomainError("sinr_vsa: zero noise and zero interference");
    return gt.at(i, j, b, m) * beam_powers[m][static_cast<std::size_t>(j) * N + b] / denom;
}

// Target powers scaled by alpha in the own sector; inter-sector term uses
// unscaled targets. alpha is the own sector's (j * N + b) table.
inline double sinr_cba(const GainTensor& gt, const std::vector<std::vector<double>>& targets,
                       const std::vector<double>& alpha, double noise, int i, int j, int b, int m) {
    const int N = gt.num_beams;
    double denom = noise;
    for (int bb = 0; bb < N; ++bb)
        if (bb != b)
            denom += alpha[static_cast<std::size_t>(j) * N + bb] * gt.at(i, j, bb, m) *
                     targets[m][static_cast<std::size_t>(j) * N + bb];
    for (int mm = 0; mm < gt.num_sectors; ++mm) {
        if (mm == m) continue;
        for (int bb = 0; bb < N; ++bb) denom += gt.at(i, j, bb, mm) * targets[mm][static_cast<std::size_t>(j) * N + bb];
    }
    if (denom <= 0.0) throw DomainError("sinr_cba: zero noise and zero interference");
    return alpha[static_cast<std::size_t>(j) * N + b] * gt.at(i, j, b, m) *
           targets[m][static_cast<std::size_t>(j) * N + b] / denom;
}

// ---------------------------------------------------------------------------
// Instantaneous rates for realized scheduling decisions

struct BeamAssignment {
    int beam = 0;
    int user = 0;
};
using PrbAssignment = std::vector<BeamAssignment>;

inline void check_assignment(const PrbAssignment& a, int num_beams) {
    std::vector<char> used(num_beams, 0);
    for (const auto& e : a) {
        if (e.beam < 0 || e.beam >= num_beams) throw DomainError("assignment: beam out of range");
        if (used[e.beam]) throw DomainError("assignment: two users on one beam");
        used[e.beam] = 1;
    }
}

// Rates for the users assigned on PRB j of sector m. own_powers gives the
// instantaneous per-beam transmit powers of sector m on this PRB (length N,
// zero = beam off); peer_powers[m'] the other sectors' (j * N + b) powers.
// Returned values align with the assignment entries.
inline std::vector<double> instantaneous_rates_prb(const Codebook& cb, const ChannelRealization& cr, double noise,
                                                   int m, int j, const PrbAssignment& assignment,
                                                   const std::vector<double>& own_powers,
                                                   const std::vector<std::vector<double>>& peer_powers) {
    const int N = cb.size();
    check_assignment(assignment, N);
    std::vector<double> mu(assignment.size(), 0.0);
    for (std::size_t k = 0; k < assignment.size(); ++k) {
        const int i = assignment[k].user;
        const int b = assignment[k].beam;
        const cvec& h_own = cr.at(i, j, m);
        double denom = noise;
        for (int bb = 0; bb < N; ++bb) {
            if (bb == b || own_powers[bb] <= 0.0) continue;
            denom += beam_gain(h_own, cb.beams[bb]) * own_powers[bb];
        }
        for (int mm = 0; mm < cr.num_sectors; ++mm) {
            if (mm == m) continue;
            const cvec& h = cr.at(i, j, mm);
            for (int bb = 0; bb < N; ++bb) {
                const double p = peer_powers[mm][static_cast<std::size_t>(j) * N + bb];
                if (p > 0.0) denom += beam_gain(h, cb.beams[bb]) * p;
            }
        }
        if (denom <= 0.0) throw DomainError("instantaneous_rates: zero noise and zero interference");
        mu[k] = rate(beam_gain(h_own, cb.beams[b]) * own_powers[b] / denom);
    }
    return mu;
}

// ---------------------------------------------------------------------------
// Hex layout helper: cell centers on a 7-cell cluster with wrap-around,
// distance-based pathloss. One omni sector per cell.

struct HexLayout {
    double cell_radius = 250.0;
    double pathloss_exponent = 3.5;
    double reference_distance = 35.0;  // gain 1 at this distance
    double min_distance = 35.0;
};

inline std::vector<std::pair<double, double>> hex_cell_centers(int num_cells, double radius) {
    std::vector<std::pair<double, double>> c;
    const double d = std::sqrt(3.0) * radius;
    c.emplace_back(0.0, 0.0);
    for (int k = 0; k < 6 && static_cast<int>(c.size()) < num_cells; ++k) {
        const double ang = M_PI / 6.0 + k * M_PI / 3.0;
        c.emplace_back(d * std::cos(ang), d * std::sin(ang));
    }
    // second ring if needed
    for (int k = 0; static_cast<int>(c.size()) < num_cells; ++k) {
        const double ang = k * M_PI / 6.0;
        const double rr = (k % 2 == 0) ? 2.0 * d : std::sqrt(3.0) * d;
        c.emplace_back(rr * std::cos(ang), rr * std::sin(ang));
    }
    c.resize(num_cells);
    return c;
}

// Fills users (round-robin over sectors) and the I x M pathloss matrix.
inline void build_hex_scenario(NetworkScenario& sc, int users_per_sector, const HexLayout& hl) {
    const int M = sc.num_sectors;
    const auto centers = hex_cell_centers(M, hl.cell_radius);
    Rng rng(mix_seed(sc.rng_seed, 0x686578ULL));
    sc.users.clear();
    std::vector<std::pair<double, double>> pos;
    for (int m = 0; m < M; ++m)
        for (int k = 0; k < users_per_sector; ++k) {
            // rejection-sample a point in the hex cell (disc approximation)
            double x = 0.0, y = 0.0;
            do {
                const double r = hl.cell_radius * std::sqrt(rng.uniform());
                const double ang = 2.0 * M_PI * rng.uniform();
                x = r * std::cos(ang);
                y = r * std::sin(ang);
            } while (std::hypot(x, y) < hl.min_distance);
            sc.users.push_back({static_cast<int>(sc.users.size()), m});
            pos.emplace_back(centers[m].first + x, centers[m].second + y);
        }
    // wrap-around: consider the 7-cluster translation images
    const double d = std::sqrt(3.0) * hl.cell_radius;
    std::vector<std::pair<double, double>> shifts = {{0.0, 0.0}};
    for (int k = 0; k < 6; ++k) {
        const double ang = k * M_PI / 3.0;
        const double rr = d * std::sqrt(7.0);
        const double rot = std::atan2(std::sqrt(3.0) / 2.0, 2.5);
        shifts.emplace_back(rr * std::cos(ang + rot), rr * std::sin(ang + rot));
    }
    const int I = static_cast<int>(sc.users.size());
    sc.pathloss.assign(static_cast<std::size_t>(I) * M, 0.0);
    for (int i = 0; i < I; ++i)
        for (int m = 0; m < M; ++m) {
            double dist = std::numeric_limits<double>::max();
            for (const auto& s : shifts)
                dist = std::min(dist, std::hypot(pos[i].first - (centers[m].first + s.first),
                                                 pos[i].second - (centers[m].second + s.second)));
            dist = std::max(dist, hl.min_distance);
            sc.pathloss[static_cast<std::size_t>(i) * M + m] = std::pow(hl.reference_distance / dist, hl.pathloss_exponent);
        }
}

}  // namespace vcoord
