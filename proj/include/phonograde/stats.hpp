#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "phonograde/error.hpp"

namespace phonograde {

namespace detail {

// Continued fraction for the incomplete beta function, modified Lentz.
inline double beta_continued_fraction(double a, double b, double x)
{
    constexpr int kMaxIter = 1000;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double dm = m;
        const double m2 = 2.0 * dm;
        double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            break;
        }
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw Error("incomplete beta: arguments out of domain");
    }
    if (x == 0.0 || x == 1.0) {
        return x;
    }
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * detail::beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df)
{
    if (!(df > 0.0)) {
        throw Error("degrees of freedom must be positive");
    }
    if (std::isinf(t)) {
        return 0.0;
    }
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Pearson correlation; nullopt when either sequence has zero variance.
inline std::optional<double> pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw Error("pearson: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    const std::size_t n = a.size();
    if (n == 0) {
        return std::nullopt;
    }
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

struct CorrelationStats {
    double r = 0.0;
    std::size_t n = 0;
    double p = 1.0;
};

/// Two-sided p of a correlation r over n pairs: t = r sqrt((n-2)/(1-r^2)),
/// df = n - 2.
inline double correlation_p_value(double r, std::size_t n)
{
    if (n < 3) {
        throw Error("correlation test needs n >= 3, got " + std::to_string(n));
    }
    const double df = static_cast<double>(n - 2);
    if (std::fabs(r) >= 1.0) {
        return 0.0;
    }
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return student_t_two_sided_p(t, df);
}

inline CorrelationStats correlation_stats(std::span<const double> pred, std::span<const double> truth)
{
    if (pred.size() != truth.size()) {
        throw Error("correlation_stats: length mismatch");
    }
    if (pred.size() < 3) {
        throw Error("correlation test needs n >= 3, got " + std::to_string(pred.size()));
    }
    const auto r = pearson(pred, truth);
    if (!r) {
        throw DegenerateError("zero variance in correlation input");
    }
    return {*r, pred.size(), correlation_p_value(*r, pred.size())};
}

}  // namespace phonograde
