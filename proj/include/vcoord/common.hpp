#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace vcoord {

// ---------------------------------------------------------------------------
// Errors

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ProtocolError : std::runtime_error {
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SolverError : std::runtime_error {
    double residual;
    SolverError(const std::string& msg, double res)
        : std::runtime_error(msg + " (residual=" + std::to_string(res) + ")"), residual(res) {}
};

// ---------------------------------------------------------------------------
// Deterministic RNG.
// All randomness flows through this wrapper so that runs are reproducible
// across compilers (no implementation-defined std distributions).

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derive an independent stream from (seed, tag) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(splitmix64(seed) ^ splitmix64(tag * 0xD6E8FEB86659FD93ULL + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // index in [0, n)
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

    // standard normal via Box-Muller (explicit, platform independent)
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // avoid log(0)
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Formatting and hashing

// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) throw IoError("format_double failed");
    return std::string(buf.data(), ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("bad number: '" + s + "'");
    return v;
}

inline std::uint64_t fnv1a64(const std::string& data, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Small numeric helpers

inline double sq(double x) { return x * x; }

// Concave increasing log utility with a C^1 linear extension below `floor`.
// Equals ln(x) for x >= floor; keeps gradients finite for degenerate rates.
constexpr double kUtilityFloor = 1e-9;

inline double log_utility(double x, double floor = kUtilityFloor) {
    if (x >= floor) return std::log(x);
    return std::log(floor) + (x - floor) / floor;
}

inline double log_utility_grad(double x, double floor = kUtilityFloor) {
    if (x >= floor) return 1.0 / x;
    return 1.0 / floor;
}

// Projection of y onto the simplex {x >= 0, sum x = s}.
inline void project_simplex(std::vector<double>& y, double s = 1.0) {
    const std::size_t n = y.size();
    std::vector<double> u(y);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        css += u[i];
        const double t = (css - s) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) {
            tau = t;
            k = i + 1;
        }
    }
    (void)k;
    for (auto& v : y) v = std::max(0.0, v - tau);
}

// Projection onto {x >= 0, sum x <= s}.
inline void project_simplex_ineq(std::vector<double>& y, double s = 1.0) {
    double total = 0.0;
    for (auto& v : y) {
        if (v < 0.0) v = 0.0;
        total += v;
    }
    if (total <= s) return;
    project_simplex(y, s);
}

// Principal branch Lambert W on [0, inf): solves w * e^w = z.
inline double lambert_w0(double z) {
    if (z == 0.0) return 0.0;
    double w = z < 1.0 ? z : std::log(z) - std::log(std::max(std::log(z), 1e-300));
    if (!(w > -1.0)) w = 0.5;
    for (int it = 0; it < 64; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - z;
        const double d = ew * (w + 1.0) - f * (w + 2.0) / (2.0 * w + 2.0);  // Halley
        const double step = f / d;
        w -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(w))) break;
    }
    return w;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace vcoord
