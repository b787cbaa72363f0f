#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace coulgas {

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

namespace constants {
// zeta'(-1) = 1/12 - log A (A = Glaisher-Kinkelin); 30-digit value from mpmath.
inline constexpr double zeta_prime_minus_one = -0.165421143700450929213919660243;
inline constexpr double log_2pi = 1.83787706640934548356065947281;
inline constexpr double euler_gamma = 0.577215664901532860606512090082;
inline constexpr double pi = 3.14159265358979323846264338328;
}  // namespace constants

inline double log_factorial(long long n) {
    if (n < 0) throw std::domain_error("log_factorial: negative argument");
    return std::lgamma(static_cast<double>(n) + 1.0);
}

// ---------------------------------------------------------------------------
// Error types
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Argument outside the declared working range of an object.
struct DomainError : Error {
    using Error::Error;
};
// A quantity that must be strictly positive (Delta Q, d2, ...) is not.
struct SingularError : Error {
    using Error::Error;
};
// An adaptive integral failed to reach its tolerance.
struct QuadratureError : Error {
    using Error::Error;
};
// A self-check identity (sigma-moment gate, tail-mass gate, ...) failed.
struct IdentityError : Error {
    using Error::Error;
};
// Configuration / input validation failure.
struct ValidationError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Compensated summation (Neumaier variant).  Sums of n terms of size O(n)
// with an O(1) answer after cancellation need error-free transforms.
// ---------------------------------------------------------------------------

class CompensatedSum {
  public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// log-space helpers
// ---------------------------------------------------------------------------

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(const std::vector<double>& logs) {
    double m = neg_inf;
    for (double v : logs)
        if (v > m) m = v;
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : logs) s += std::exp(v - m);
    return m + std::log(s);
}

inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// ---------------------------------------------------------------------------
// Counter-based splittable RNG.  A stream is keyed by (seed, sample, slot);
// draws walk a splitmix64 sequence, so any (key -> stream) is reproducible
// independently of evaluation order or thread count.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t sample, std::uint64_t slot) {
        state_ = seed;
        (void)splitmix64_next(state_);
        state_ ^= 0xa0761d6478bd642fULL * (sample + 1);
        (void)splitmix64_next(state_);
        state_ ^= 0xe7037ed1a0b428dbULL * (slot + 1);
        (void)splitmix64_next(state_);
    }

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // uniform in (0,1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (platform-independent sequence)
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * constants::pi * u2);
    }

  private:
    std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Parallel map over an index range with deterministic output placement.
// ---------------------------------------------------------------------------

inline int effective_workers(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    int w = effective_workers(workers);
    if (w <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(w), count);
    std::vector<std::exception_ptr> errors(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < count; i += nthreads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Misc small numerics
// ---------------------------------------------------------------------------

// least-squares slope of y against x
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ValidationError("fit_slope: need >= 2 matching points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0) throw ValidationError("fit_slope: degenerate abscissae");
    return sxy / sxx;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double r) const { return r >= lo && r <= hi; }
};

}  // namespace coulgas
