#pragma once

// High-order autoregressive spectral features. One Burg fit per phoneme
// instance; the fitted all-pole model is evaluated as a natural-log power
// spectrum on 64 uniformly spaced frequencies from 20 Hz to 6400 Hz.

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "phonograde/error.hpp"
#include "phonograde/signal.hpp"

namespace phonograde {

inline constexpr std::size_t kFeatureDim = 64;
inline constexpr double kGridLowHz = 20.0;
inline constexpr double kGridHighHz = 6400.0;

using FeatureGrid = std::array<double, kFeatureDim>;
using FeatureValues = std::array<double, kFeatureDim>;

/// The fixed analysis grid, endpoints inclusive (step 6380/63 Hz).
inline const FeatureGrid& feature_grid()
{
    static const FeatureGrid grid = [] {
        FeatureGrid g{};
        const double step = (kGridHighHz - kGridLowHz) / static_cast<double>(kFeatureDim - 1);
        for (std::size_t i = 0; i < kFeatureDim; ++i) {
            g[i] = kGridLowHz + step * static_cast<double>(i);
        }
        g.back() = kGridHighHz;
        return g;
    }();
    return grid;
}

/// All-pole model x[n] ~ -sum_k a_k x[n-k], innovation power `gain`.
struct ArModel {
    std::vector<double> coefficients;  ///< a_1 .. a_p
    std::vector<double> reflection;    ///< k_1 .. k_p from the lattice
    std::vector<double> error_power;   ///< prediction-error power after 0 .. p stages
    double gain = 0.0;
    double sample_rate = 1.0;

    [[nodiscard]] std::size_t order() const noexcept { return coefficients.size(); }
};

/// Burg's maximum entropy estimator. Each stage picks the reflection
/// coefficient minimizing the summed forward and backward prediction error
/// power; the resulting model is always stable (|k_m| <= 1).
inline ArModel fit_burg(std::span<const double> x, std::size_t order, double sample_rate = 1.0)
{
    const std::size_t n = x.size();
    if (n < 2 * (order + 1)) {
        throw Error("too few samples for AR order " + std::to_string(order) + ": need >=" +
                    std::to_string(2 * (order + 1)) + ", got " + std::to_string(n));
    }
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i])) {
            throw Error("non-finite sample at index " + std::to_string(i));
        }
        energy += x[i] * x[i];
    }
    if (energy == 0.0) {
        throw Error("zero-energy input");
    }

    ArModel model;
    model.sample_rate = sample_rate;
    model.coefficients.assign(order, 0.0);
    model.reflection.reserve(order);
    model.error_power.reserve(order + 1);

    std::vector<double> fwd(x.begin(), x.end());
    std::vector<double> bwd(x.begin(), x.end());
    std::vector<double> prev(order, 0.0);
    double power = energy / static_cast<double>(n);
    model.error_power.push_back(power);

    auto& a = model.coefficients;
    for (std::size_t m = 1; m <= order; ++m) {
        // Stage m pairs fwd[t] with bwd[t-1] for t in [m, n).
        double num = 0.0;
        double den = 0.0;
        for (std::size_t t = m; t < n; ++t) {
            num += fwd[t] * bwd[t - 1];
            den += fwd[t] * fwd[t] + bwd[t - 1] * bwd[t - 1];
        }
        double k = den > 0.0 ? -2.0 * num / den : 0.0;
        k = std::clamp(k, -1.0, 1.0);

        std::copy(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(m - 1), prev.begin());
        for (std::size_t i = 1; i < m; ++i) {
            a[i - 1] = prev[i - 1] + k * prev[m - i - 1];
        }
        a[m - 1] = k;

        // Walk downward so bwd[t-1] is still the previous stage's value.
        for (std::size_t t = n - 1; t >= m; --t) {
            const double f = fwd[t];
            const double b = bwd[t - 1];
            fwd[t] = f + k * b;
            bwd[t] = b + k * f;
        }
        power *= (1.0 - k * k);
        model.reflection.push_back(k);
        model.error_power.push_back(power);
    }
    model.gain = power;
    return model;
}

/// ln( gain / |1 + sum_k a_k e^{-i 2 pi f k / rate}|^2 ) at each frequency.
inline std::vector<double> log_spectrum(const ArModel& model, std::span<const double> grid)
{
    const double nyquist = model.sample_rate / 2.0;
    if (!(model.gain > 0.0) || !std::isfinite(model.gain)) {
        throw Error("AR model gain must be positive and finite");
    }
    std::vector<double> out;
    out.reserve(grid.size());
    const double log_gain = std::log(model.gain);
    for (double f : grid) {
        if (!(f >= 0.0) || f >= nyquist) {
            throw Error("grid frequency " + std::to_string(f) + " Hz at or above Nyquist " +
                        std::to_string(nyquist) + " Hz");
        }
        // Horner in z^-1: A = 1 + z^-1 (a_1 + z^-1 (a_2 + ...)).
        const std::complex<double> zinv = std::polar(1.0, -2.0 * std::numbers::pi * f / model.sample_rate);
        std::complex<double> acc = 0.0;
        for (std::size_t k = model.coefficients.size(); k-- > 0;) {
            acc = (acc + model.coefficients[k]) * zinv;
        }
        acc += 1.0;
        out.push_back(log_gain - std::log(std::norm(acc)));
    }
    return out;
}

struct FeatureConfig {
    double sample_rate = kDefaultSampleRate;
    std::size_t order = 128;

    [[nodiscard]] std::size_t min_samples() const noexcept { return 2 * (order + 1); }
};

struct Provenance {
    std::string recording_id;
    std::string speaker_id;
    std::string phoneme;
    double start = 0.0;
    double dur = 0.0;
};

struct FeatureVector {
    FeatureValues values{};
    Provenance provenance;
};

/// Thrown by segment_features when the segment cannot support the AR order.
class SegmentTooShortError : public Error {
public:
    SegmentTooShortError(std::size_t need, std::size_t got)
        : Error("segment too short: need ≥" + std::to_string(need) + " samples, got " + std::to_string(got)),
          required(need), actual(got)
    {
    }
    std::size_t required;
    std::size_t actual;
};

/// Feature values for one phoneme instance: one Burg fit over the whole
/// segment, evaluated on the fixed grid.
inline FeatureValues segment_features(const AudioBuffer& seg, const FeatureConfig& config)
{
    if (seg.samples.size() < config.min_samples()) {
        throw SegmentTooShortError(config.min_samples(), seg.samples.size());
    }
    const ArModel model = fit_burg(seg.samples, config.order, seg.sample_rate);
    const auto spec = log_spectrum(model, feature_grid());
    FeatureValues values{};
    std::copy(spec.begin(), spec.end(), values.begin());
    return values;
}

/// CSV export: provenance columns then f00..f63, 9 significant digits.
inline void write_features_csv(std::ostream& out, std::span<const FeatureVector> rows)
{
    out << "recording_id,speaker_id,phoneme,start_s,dur_s";
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
        char name[8];
        std::snprintf(name, sizeof name, ",f%02zu", i);
        out << name;
    }
    out << '\n';
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return buf;
    };
    for (const auto& row : rows) {
        const auto& p = row.provenance;
        out << p.recording_id << ',' << p.speaker_id << ',' << p.phoneme << ',' << num(p.start);
        out << ',' << num(p.dur);
        for (double v : row.values) {
            out << ',' << num(v);
        }
        out << '\n';
    }
}

}  // namespace phonograde
