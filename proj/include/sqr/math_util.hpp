#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace sqr {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

/// Streaming log-sum-exp accumulator for long series.
class LogSumAcc {
public:
    void add(double log_term) {
        if (log_term == kNegInf) return;
        if (log_term > max_) {
            if (max_ != kNegInf) sum_ *= std::exp(max_ - log_term);
            max_ = log_term;
            sum_ += 1.0;
        } else {
            sum_ += std::exp(log_term - max_);
        }
    }
    double value() const { return sum_ > 0.0 ? max_ + std::log(sum_) : kNegInf; }
    /// Sum rescaled so that the largest term is 1.
    double scaled_sum() const { return sum_; }
    double max_log() const { return max_; }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

/// Scaled complementary error function exp(v^2) * erfc(v) for v >= 0.
/// Direct evaluation below 8, asymptotic series above (the direct product
/// loses accuracy once erfc approaches the subnormal range).
inline double erfcx_pos(double v) {
    if (v < 8.0) return std::exp(v * v) * std::erfc(v);
    const double t = 1.0 / (2.0 * v * v);
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n <= 40; ++n) {
        term *= -static_cast<double>(2 * n - 1) * t;
        if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
        sum += term;
    }
    return sum / (v * kSqrtPi);
}

/// 1 - sqrt(pi) * v * erfcx(v) for v > 0, free of the cancellation that the
/// literal expression suffers for large v.
inline double one_minus_sqrtpi_v_erfcx(double v) {
    if (v < 8.0) return 1.0 - kSqrtPi * v * erfcx_pos(v);
    const double t = 1.0 / (2.0 * v * v);
    double c = 1.0;
    double r = 0.0;
    for (int n = 1; n <= 40; ++n) {
        c *= -static_cast<double>(2 * n - 1) * t;
        r -= c;
        if (std::fabs(c) < 1e-18 * std::fabs(r)) break;
    }
    return r;
}

/// SplitMix64 step; used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace sqr
