#pragma once

// Test helpers: scratch directories, seeded AR processes and small
// independent oracles (DFT peak search, polynomial roots).

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "phonograde/rng.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
    {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("phonograde-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& body)
{
    std::ofstream out(p, std::ios::binary);
    out << body;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// x[n] = sum_k phi[k] x[n-1-k] + e[n] with seeded unit-variance Gaussian e,
/// after a 1000-sample burn-in.
inline std::vector<double> ar_process(const std::vector<double>& phi, std::size_t n, std::uint64_t seed)
{
    phonograde::SplitMix64 rng(seed);
    const std::size_t burn = 1000;
    std::vector<double> x(n + burn, 0.0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        double v = rng.normal();
        for (std::size_t k = 0; k < phi.size() && k < t; ++k) {
            v += phi[k] * x[t - 1 - k];
        }
        x[t] = v;
    }
    return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

/// AR polynomial (phi form) with the given conjugate pole pairs.
inline std::vector<double> phi_from_poles(const std::vector<std::pair<double, double>>& radius_freq, double rate)
{
    // Build prod (1 - 2 r cos w z^-1 + r^2 z^-2) as coefficients of z^-k.
    std::vector<double> poly{1.0};
    for (const auto& [r, f] : radius_freq) {
        const double w = 2.0 * std::numbers::pi * f / rate;
        const std::vector<double> quad{1.0, -2.0 * r * std::cos(w), r * r};
        std::vector<double> next(poly.size() + 2, 0.0);
        for (std::size_t i = 0; i < poly.size(); ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                next[i + j] += poly[i] * quad[j];
            }
        }
        poly = next;
    }
    std::vector<double> phi;
    for (std::size_t k = 1; k < poly.size(); ++k) {
        phi.push_back(-poly[k]);
    }
    return phi;
}

/// Roots of z^p + c[0] z^(p-1) + ... + c[p-1] by Durand-Kerner iteration.
inline std::vector<std::complex<double>> poly_roots(const std::vector<double>& c)
{
    const std::size_t p = c.size();
    std::vector<std::complex<double>> z(p);
    for (std::size_t i = 0; i < p; ++i) {
        z[i] = std::pow(std::complex<double>(0.4, 0.9), static_cast<double>(i));
    }
    auto eval = [&](std::complex<double> x) {
        std::complex<double> acc = 1.0;
        for (double ck : c) {
            acc = acc * x + ck;
        }
        return acc;
    };
    for (int iter = 0; iter < 2000; ++iter) {
        for (std::size_t i = 0; i < p; ++i) {
            std::complex<double> denom = 1.0;
            for (std::size_t j = 0; j < p; ++j) {
                if (j != i) {
                    denom *= z[i] - z[j];
                }
            }
            z[i] -= eval(z[i]) / denom;
        }
    }
    return z;
}

/// Frequency of the largest |DFT| bin over [lo, hi] Hz, scanning in 0.1 Hz
/// steps with a direct (Goertzel-style) sum.
inline double dft_peak_hz(const std::vector<double>& x, double rate, double lo, double hi, double step = 0.1)
{
    double best_f = lo;
    double best = -1.0;
    for (double f = lo; f <= hi; f += step) {
        const double w = 2.0 * std::numbers::pi * f / rate;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            re += x[n] * std::cos(w * static_cast<double>(n));
            im -= x[n] * std::sin(w * static_cast<double>(n));
        }
        const double mag = re * re + im * im;
        if (mag > best) {
            best = mag;
            best_f = f;
        }
    }
    return best_f;
}

inline std::vector<double> tone(double freq, double rate, std::size_t n, double amp = 0.5)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / rate);
    }
    return x;
}

}  // namespace testing_support
