#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "phonograde/signal.hpp"
#include "support.hpp"

using namespace phonograde;
using testing_support::ScratchDir;

namespace {

AudioBuffer ramp(std::size_t n, double rate)
{
    AudioBuffer b;
    b.sample_rate = rate;
    for (std::size_t i = 0; i < n; ++i) {
        b.samples.push_back(std::sin(0.01 * static_cast<double>(i)) * 0.8);
    }
    return b;
}

std::string error_of(const std::vector<unsigned char>& bytes)
{
    try {
        (void)decode_wav(bytes);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Wav, Float32RoundTripIsExactForFloatValues)
{
    AudioBuffer b = ramp(1000, 16000);
    for (double& v : b.samples) {
        v = static_cast<float>(v);
    }
    const AudioBuffer back = decode_wav(encode_wav(b, WavEncoding::Float32));
    EXPECT_EQ(back.sample_rate, 16000);
    EXPECT_EQ(back.samples, b.samples);
}

TEST(Wav, IntegerPcmNormalizedByFullScale)
{
    AudioBuffer b;
    b.sample_rate = 8000;
    b.samples = {0.0, 0.5, -0.5, -1.0};
    const AudioBuffer p16 = decode_wav(encode_wav(b, WavEncoding::Pcm16));
    EXPECT_DOUBLE_EQ(p16.samples[1], 16384.0 / 32768.0);
    EXPECT_DOUBLE_EQ(p16.samples[3], -1.0);
    const AudioBuffer p8 = decode_wav(encode_wav(b, WavEncoding::Pcm8));
    EXPECT_DOUBLE_EQ(p8.samples[0], 0.0);
    EXPECT_DOUBLE_EQ(p8.samples[1], 64.0 / 128.0);
    EXPECT_DOUBLE_EQ(p8.samples[3], -1.0);
}

TEST(Wav, RejectsStereo)
{
    AudioBuffer b = ramp(10, 16000);
    auto bytes = encode_wav(b, WavEncoding::Pcm16);
    bytes[22] = 2;  // channel count in the fmt chunk
    EXPECT_NE(error_of(bytes).find("multi-channel unsupported"), std::string::npos);
}

TEST(Wav, RejectsNonPcmFormatTag)
{
    auto bytes = encode_wav(ramp(10, 16000), WavEncoding::Pcm16);
    bytes[20] = 2;  // ADPCM
    EXPECT_NE(error_of(bytes).find("non-PCM"), std::string::npos);
}

TEST(Wav, RejectsZeroLength)
{
    AudioBuffer empty;
    EXPECT_NE(error_of(encode_wav(empty, WavEncoding::Pcm16)).find("zero-length audio"), std::string::npos);
}

TEST(Wav, RejectsTruncatedHeader)
{
    std::vector<unsigned char> junk{'R', 'I', 'F', 'F', 0, 0};
    EXPECT_THROW((void)decode_wav(junk), Error);
}

TEST(LoadAudio, MissingFile)
{
    try {
        (void)load_audio("/nonexistent/x.wav");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("missing audio file"), std::string::npos);
    }
}

TEST(LoadAudio, IdentityAtMatchingRate)
{
    ScratchDir dir("signal");
    AudioBuffer b = ramp(16000, 16000);
    for (double& v : b.samples) {
        v = static_cast<float>(v);
    }
    write_wav(dir / "a.wav", b);
    const AudioBuffer got = load_audio(dir / "a.wav", 16000);
    EXPECT_EQ(got.samples.size(), 16000u);
    EXPECT_EQ(got.sample_rate, 16000);
    EXPECT_EQ(got.samples, b.samples);
}

TEST(Resample, EightToSixteenKhzLength)
{
    AudioBuffer b = ramp(8000, 8000);
    const AudioBuffer up = resample(b, 16000);
    EXPECT_NEAR(static_cast<double>(up.samples.size()), 16000.0, 1.0);
    EXPECT_EQ(up.sample_rate, 16000);
}

// Interior samples of an upsampled 440 Hz tone agree with the analytic tone
// evaluated at the new sample instants.
TEST(Resample, ToneMatchesAnalyticSignal)
{
    const auto x = testing_support::tone(440.0, 8000.0, 8000);
    const PolyphaseResampler rs(8000, 16000);
    const auto y = rs.process(x);
    const auto ref = testing_support::tone(440.0, 16000.0, y.size());
    double worst = 0.0;
    for (std::size_t i = 200; i + 200 < y.size(); ++i) {
        worst = std::max(worst, std::fabs(y[i] - ref[i]));
    }
    EXPECT_LT(worst, 1e-3);
}

TEST(Resample, TonePeakPreservedWithinOneHz)
{
    for (auto [src, dst] : {std::pair{8000L, 16000L}, std::pair{44100L, 16000L}, std::pair{22050L, 16000L}}) {
        const auto x = testing_support::tone(440.0, static_cast<double>(src), static_cast<std::size_t>(src));
        const auto y = PolyphaseResampler(src, dst).process(x);
        const double peak = testing_support::dft_peak_hz(y, static_cast<double>(dst), 430.0, 450.0);
        EXPECT_NEAR(peak, 440.0, 1.0) << src << " -> " << dst;
    }
}

TEST(Resample, DcGainIsUnity)
{
    const std::vector<double> ones(2000, 1.0);
    const auto y = PolyphaseResampler(44100, 16000).process(ones);
    for (std::size_t i = 100; i + 100 < y.size(); ++i) {
        ASSERT_NEAR(y[i], 1.0, 1e-12);
    }
}

TEST(Slice, FullSpanIsIdentity)
{
    const AudioBuffer b = ramp(16000, 16000);
    EXPECT_EQ(slice_segment(b, 0.0, b.duration()).samples, b.samples);
}

TEST(Slice, ArithmeticFromRoundedBounds)
{
    const AudioBuffer b = ramp(16000, 16000);
    const AudioBuffer s = slice_segment(b, 0.25, 0.050);
    ASSERT_EQ(s.samples.size(), 800u);
    EXPECT_EQ(s.samples.front(), b.samples[4000]);
    EXPECT_EQ(s.sample_rate, 16000);
}

TEST(Slice, PartitionReconstructsSignal)
{
    const AudioBuffer b = ramp(16000, 16000);
    std::vector<double> joined;
    const double cuts[] = {0.0, 0.1234, 0.5, 0.77777, 1.0};
    for (std::size_t i = 0; i + 1 < std::size(cuts); ++i) {
        const auto s = slice_segment(b, cuts[i], cuts[i + 1] - cuts[i]);
        joined.insert(joined.end(), s.samples.begin(), s.samples.end());
    }
    EXPECT_EQ(joined, b.samples);
}

TEST(Slice, Errors)
{
    const AudioBuffer b = ramp(16000, 16000);
    auto message = [&](double start, double dur) -> std::string {
        try {
            (void)slice_segment(b, start, dur);
        } catch (const Error& e) {
            return e.what();
        }
        return "";
    };
    EXPECT_NE(message(0.9, 0.2).find("span exceeds buffer"), std::string::npos);
    EXPECT_NE(message(0.1, 0.0).find("non-positive duration"), std::string::npos);
    EXPECT_NE(message(0.1, -0.1).find("non-positive duration"), std::string::npos);
    EXPECT_NE(message(-0.1, 0.05).find("negative start"), std::string::npos);
    // within one sample of the end is tolerated
    EXPECT_NO_THROW((void)slice_segment(b, 0.5, 0.5 + 0.5 / 16000.0));
}
