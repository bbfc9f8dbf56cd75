#pragma once

// Mono PCM audio: WAV (RIFF) reading and writing, windowed-sinc polyphase
// resampling, and time-span slicing.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "phonograde/error.hpp"

namespace phonograde {

inline constexpr double kDefaultSampleRate = 16000.0;

/// Mono signal with amplitudes in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    double sample_rate = kDefaultSampleRate;

    [[nodiscard]] double duration() const noexcept
    {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

enum class WavEncoding { Pcm8, Pcm16, Float32 };

namespace detail {

inline std::uint32_t read_le32(const unsigned char* p) noexcept
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_le16(const unsigned char* p) noexcept
{
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_le32(std::vector<unsigned char>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
    }
}

inline void put_le16(std::vector<unsigned char>& out, std::uint16_t v)
{
    out.push_back(static_cast<unsigned char>(v & 0xFF));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

inline double bessel_i0(double x) { return std::cyl_bessel_i(0.0, x); }

}  // namespace detail

/// Decodes a mono WAV image held in memory. Integer PCM is divided by its
/// full-scale magnitude (128 for 8-bit, 32768 for 16-bit); float data is
/// taken as-is.
inline AudioBuffer decode_wav(std::span<const unsigned char> bytes, const std::string& name = "<memory>")
{
    using detail::read_le16;
    using detail::read_le32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw Error(name + ": not a RIFF/WAVE file");
    }

    bool have_fmt = false;
    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* chunk = bytes.data() + pos;
        const std::uint32_t size = read_le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) {
                throw Error(name + ": truncated fmt chunk");
            }
            format_tag = read_le16(chunk + 8);
            channels = read_le16(chunk + 10);
            rate = read_le32(chunk + 12);
            bits = read_le16(chunk + 22);
            if (format_tag == 0xFFFE && avail >= 26) {
                // WAVE_FORMAT_EXTENSIBLE: the real tag leads the sub-format GUID.
                format_tag = read_le16(chunk + 8 + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = avail;
        }
        pos = body + size + (size & 1U);
    }

    if (!have_fmt) {
        throw Error(name + ": missing fmt chunk");
    }
    if (format_tag != 1 && format_tag != 3) {
        throw Error(name + ": unsupported encoding: non-PCM format tag " + std::to_string(format_tag));
    }
    if (channels != 1) {
        throw Error(name + ": multi-channel unsupported (" + std::to_string(channels) + " channels)");
    }
    if (rate == 0) {
        throw Error(name + ": sample rate is zero");
    }
    const bool ok_depth = (format_tag == 1 && (bits == 8 || bits == 16)) || (format_tag == 3 && bits == 32);
    if (!ok_depth) {
        throw Error(name + ": unsupported bit depth " + std::to_string(bits) +
                    (format_tag == 3 ? " for float data" : " for integer PCM"));
    }
    if (data == nullptr) {
        throw Error(name + ": missing data chunk");
    }

    const std::size_t width = bits / 8U;
    const std::size_t count = data_size / width;
    if (count == 0) {
        throw Error(name + ": zero-length audio");
    }

    AudioBuffer buf;
    buf.sample_rate = static_cast<double>(rate);
    buf.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = data + i * width;
        double v = 0.0;
        if (bits == 8) {
            v = (static_cast<double>(p[0]) - 128.0) / 128.0;
        } else if (bits == 16) {
            v = static_cast<double>(static_cast<std::int16_t>(read_le16(p))) / 32768.0;
        } else {
            v = static_cast<double>(std::bit_cast<float>(read_le32(p)));
            if (!std::isfinite(v)) {
                throw Error(name + ": non-finite sample at index " + std::to_string(i));
            }
        }
        buf.samples[i] = v;
    }
    return buf;
}

/// Encodes `buf` as a mono WAV image. Integer encodings clip to full scale.
inline std::vector<unsigned char> encode_wav(const AudioBuffer& buf, WavEncoding encoding = WavEncoding::Float32)
{
    using detail::put_le16;
    using detail::put_le32;
    const std::uint16_t bits = encoding == WavEncoding::Pcm8 ? 8 : encoding == WavEncoding::Pcm16 ? 16 : 32;
    const std::uint16_t tag = encoding == WavEncoding::Float32 ? 3 : 1;
    const auto rate = static_cast<std::uint32_t>(std::lround(buf.sample_rate));
    const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * (bits / 8U));

    std::vector<unsigned char> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_le32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_le32(out, 16);
    put_le16(out, tag);
    put_le16(out, 1);
    put_le32(out, rate);
    put_le32(out, rate * (bits / 8U));
    put_le16(out, static_cast<std::uint16_t>(bits / 8U));
    put_le16(out, bits);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_le32(out, data_bytes);
    for (double s : buf.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        switch (encoding) {
        case WavEncoding::Pcm8:
            out.push_back(static_cast<unsigned char>(std::clamp(std::lround(c * 128.0 + 128.0), 0L, 255L)));
            break;
        case WavEncoding::Pcm16:
            put_le16(out, static_cast<std::uint16_t>(
                              static_cast<std::int16_t>(std::clamp(std::lround(c * 32768.0), -32768L, 32767L))));
            break;
        case WavEncoding::Float32:
            put_le32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
            break;
        }
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      WavEncoding encoding = WavEncoding::Float32)
{
    const auto bytes = encode_wav(buf, encoding);
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Rational-ratio resampler: Kaiser-windowed sinc evaluated as a polyphase
/// table. One phase per output position modulo the upsampling factor; each
/// phase holds 64 taps when upsampling (the support widens by the decimation
/// factor when downsampling, so the transition band scales with the cutoff).
class PolyphaseResampler {
public:
    static constexpr int kTapsPerPhase = 64;
    static constexpr double kKaiserBeta = 8.0;

    PolyphaseResampler(long source_rate, long target_rate)
    {
        if (source_rate <= 0 || target_rate <= 0) {
            throw Error("resampler rates must be positive");
        }
        const long g = std::gcd(source_rate, target_rate);
        up_ = target_rate / g;
        down_ = source_rate / g;
        const long wide = std::max(up_, down_);
        half_width_ = static_cast<long>(kTapsPerPhase / 2) * wide;
        const double cutoff = 0.5 / static_cast<double>(wide);  // cycles per upsampled sample

        phases_.resize(static_cast<std::size_t>(up_));
        for (long phase = 0; phase < up_; ++phase) {
            // Input offset d = base - j contributes at upsampled distance t = phase + d*up.
            Phase& ph = phases_[static_cast<std::size_t>(phase)];
            ph.d_min = ceil_div(-half_width_ + 1 - phase, up_);
            const long d_max = floor_div(half_width_ - 1 - phase, up_);
            double sum = 0.0;
            for (long d = ph.d_min; d <= d_max; ++d) {
                const double t = static_cast<double>(phase + d * up_);
                const double x = 2.0 * cutoff * t;
                const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
                const double r = t / static_cast<double>(half_width_);
                const double window = detail::bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                                      detail::bessel_i0(kKaiserBeta);
                ph.taps.push_back(sinc * window);
                sum += ph.taps.back();
            }
            for (double& w : ph.taps) {
                w /= sum;  // unity DC gain per phase
            }
        }
    }

    [[nodiscard]] long up() const noexcept { return up_; }
    [[nodiscard]] long down() const noexcept { return down_; }

    /// Output length round(n * up / down).
    [[nodiscard]] std::size_t output_length(std::size_t n) const noexcept
    {
        return static_cast<std::size_t>(std::llround(static_cast<double>(n) * static_cast<double>(up_) /
                                                     static_cast<double>(down_)));
    }

    [[nodiscard]] std::vector<double> process(std::span<const double> in) const
    {
        const std::size_t n_out = output_length(in.size());
        std::vector<double> out(n_out, 0.0);
        const auto n_in = static_cast<long long>(in.size());
        for (std::size_t m = 0; m < n_out; ++m) {
            const long long center = static_cast<long long>(m) * down_;
            const long long base = center / up_;
            const Phase& ph = phases_[static_cast<std::size_t>(center % up_)];
            double acc = 0.0;
            for (std::size_t k = 0; k < ph.taps.size(); ++k) {
                const long long j = base - (ph.d_min + static_cast<long long>(k));
                if (j >= 0 && j < n_in) {
                    acc += ph.taps[k] * in[static_cast<std::size_t>(j)];
                }
            }
            out[m] = acc;
        }
        return out;
    }

private:
    struct Phase {
        long d_min = 0;
        std::vector<double> taps;
    };

    static long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
    static long ceil_div(long a, long b) { return -floor_div(-a, b); }

    long up_ = 1;
    long down_ = 1;
    long half_width_ = 0;
    std::vector<Phase> phases_;
};

/// Resamples to `target_rate`; identity when the rates already match.
inline AudioBuffer resample(const AudioBuffer& buf, double target_rate)
{
    if (!(target_rate > 0.0)) {
        throw Error("target rate must be positive");
    }
    if (buf.sample_rate == target_rate) {
        return buf;
    }
    const PolyphaseResampler rs(std::lround(buf.sample_rate), std::lround(target_rate));
    return AudioBuffer{rs.process(buf.samples), target_rate};
}

/// Reads a mono WAV file and brings it to `target_rate`.
inline AudioBuffer load_audio(const std::filesystem::path& path, double target_rate = kDefaultSampleRate)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("missing audio file: " + path.string());
    }
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return resample(decode_wav(bytes, path.string()), target_rate);
}

/// Samples in [round(start*rate), round((start+dur)*rate)). The end may
/// overshoot the buffer by at most one sample's worth of time.
inline AudioBuffer slice_segment(const AudioBuffer& buf, double start, double dur)
{
    if (!(dur > 0.0)) {
        throw Error("non-positive duration " + std::to_string(dur));
    }
    if (!(start >= 0.0)) {
        throw Error("negative start " + std::to_string(start));
    }
    const double rate = buf.sample_rate;
    if (start + dur > buf.duration() + 1.0 / rate) {
        throw Error("span exceeds buffer: [" + std::to_string(start) + ", " + std::to_string(start + dur) +
                    ") vs duration " + std::to_string(buf.duration()));
    }
    const auto n = static_cast<long long>(buf.samples.size());
    const long long first = std::min(std::llround(start * rate), n);
    const long long last = std::min(std::llround((start + dur) * rate), n);
    AudioBuffer out;
    out.sample_rate = rate;
    out.samples.assign(buf.samples.begin() + first, buf.samples.begin() + std::max(first, last));
    return out;
}

}  // namespace phonograde
