#pragma once

// Synthetic corpora with planted phoneme-symptom relationships.
//
// Every phoneme has a fixed three-resonance template. An instance is noise
// (unvoiced) or a pulse train plus noise (voiced) passed through the
// template's all-pole filter. For each planted (symptom, phoneme) pair the
// resonance centers move by strength * (rating - range midpoint) * shift_hz,
// so only the spectral envelope carries the effect. Ratings of every other
// symptom are drawn independently of the audio.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonograde/corpus.hpp"
#include "phonograde/error.hpp"
#include "phonograde/phonetics.hpp"
#include "phonograde/rng.hpp"
#include "phonograde/scales.hpp"
#include "phonograde/signal.hpp"
#include "phonograde/text.hpp"

namespace phonograde {

struct PlantedEffect {
    std::string symptom;
    std::vector<std::string> phonemes;
    double strength = 1.0;
};

/// Default synthetic inventory: the 24 consonants followed by the 10 fillers.
inline std::vector<std::string> default_analysis_phonemes()
{
    auto out = labels_of_kind(PhonemeKind::Consonant);
    const auto fillers = labels_of_kind(PhonemeKind::Filler);
    out.insert(out.end(), fillers.begin(), fillers.end());
    return out;
}

struct SynthConfig {
    std::size_t n_speakers = 16;
    std::size_t segments_per_phoneme = 40;
    std::vector<PlantedEffect> planted;
    std::uint64_t seed = 0;
    double sample_rate = kDefaultSampleRate;
    std::vector<std::string> phonemes = default_analysis_phonemes();
    double shift_hz_per_step = 40.0;
    double formant_jitter_hz = 15.0;
    double min_dur = 0.060;
    double max_dur = 0.110;

    void validate(std::size_t min_segment_samples = FeatureConfig{}.min_samples()) const
    {
        if (n_speakers < 2) {
            throw UsageError("synth: need at least 2 speakers");
        }
        if (segments_per_phoneme == 0) {
            throw UsageError("synth: segments per phoneme must be positive");
        }
        if (phonemes.empty()) {
            throw UsageError("synth: empty phoneme list");
        }
        for (const auto& p : phonemes) {
            if (find_phoneme(p) == nullptr) {
                throw UsageError("synth: unknown phoneme label: " + p);
            }
        }
        const auto& registry = load_scale_registry();
        for (const auto& e : planted) {
            if (registry.find(e.symptom) == nullptr) {
                throw UsageError("synth: unknown symptom code: " + e.symptom);
            }
            if (!(e.strength >= 0.0 && e.strength <= 1.0)) {
                throw UsageError("synth: effect strength must be in [0, 1]");
            }
            if (e.phonemes.empty()) {
                throw UsageError("synth: planted effect on " + e.symptom + " has no phonemes");
            }
            for (const auto& p : e.phonemes) {
                if (find_phoneme(p) == nullptr) {
                    throw UsageError("synth: unknown phoneme label: " + p);
                }
            }
        }
        if (!(sample_rate > 2.0 * kGridHighHz)) {
            throw UsageError("synth: sample rate must exceed " + text::format_g(2.0 * kGridHighHz) + " Hz");
        }
        if (!(min_dur > 0.0) || max_dur < min_dur ||
            std::floor(min_dur * sample_rate) < static_cast<double>(min_segment_samples)) {
            throw UsageError("synth: segment durations must cover at least " + std::to_string(min_segment_samples) +
                             " samples");
        }
    }
};

struct RatingRow {
    std::string speaker_id;
    std::string symptom;
    int rating = 0;
};

struct SynthCorpus {
    std::vector<std::pair<std::string, AudioBuffer>> recordings;  ///< (recording id, audio)
    std::vector<SegmentRecord> segments;
    std::vector<RatingRow> ratings;
    nlohmann::json manifest;
};

struct PhonemeTemplate {
    std::array<double, 3> center_hz{};
    std::array<double, 3> bandwidth_hz{};
    bool voiced = false;
};

/// Fixed per-label template; independent of the corpus seed.
inline PhonemeTemplate phoneme_template(std::string_view label)
{
    SplitMix64 rng = SplitMix64::keyed(0, "synth|template|" + std::string(label));
    PhonemeTemplate t;
    t.center_hz = {rng.uniform(300.0, 900.0), rng.uniform(1100.0, 2400.0), rng.uniform(2700.0, 4500.0)};
    t.bandwidth_hz = {rng.uniform(60.0, 120.0), rng.uniform(80.0, 160.0), rng.uniform(120.0, 220.0)};
    const PhonemeClass& cls = classify_phoneme(label);
    t.voiced = cls.voicing == Voicing::Voiced || label == "UH" || label == "UM" || label == "LAUGH";
    return t;
}

namespace detail {

inline std::string speaker_name(std::size_t i, std::size_t total)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%0*zu", total >= 100 ? 3 : 2, i + 1);
    return buf;
}

/// One instance: excitation through a cascade of two-pole resonators.
inline std::vector<double> synth_instance(const PhonemeTemplate& tpl, double shift_hz, double jitter_hz,
                                          std::size_t n, double rate, SplitMix64& rng)
{
    constexpr std::size_t kWarmup = 512;
    std::array<double, 3> centers{};
    for (std::size_t k = 0; k < 3; ++k) {
        centers[k] = std::clamp(tpl.center_hz[k] + shift_hz + jitter_hz * rng.normal(), 100.0, 0.45 * rate);
    }
    const double f0 = rng.uniform(100.0, 150.0);
    const double period = rate / f0;
    double next_pulse = rng.uniform(0.0, period);

    std::vector<double> x(n + kWarmup);
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = rng.normal();
        if (tpl.voiced) {
            e *= 0.1;
            if (static_cast<double>(i) >= next_pulse) {
                e += 1.0;
                next_pulse += period;
            }
        }
        x[i] = e;
    }
    for (std::size_t k = 0; k < 3; ++k) {
        const double radius = std::exp(-std::numbers::pi * tpl.bandwidth_hz[k] / rate);
        const double theta = 2.0 * std::numbers::pi * centers[k] / rate;
        const double a1 = -2.0 * radius * std::cos(theta);
        const double a2 = radius * radius;
        double y1 = 0.0;
        double y2 = 0.0;
        for (double& v : x) {
            const double y = v - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = y;
            v = y;
        }
    }
    std::vector<double> out(x.begin() + kWarmup, x.end());
    double power = 0.0;
    for (double v : out) {
        power += v * v;
    }
    const double rms = std::sqrt(power / static_cast<double>(n));
    const double gain = rng.uniform(0.05, 0.2) / (rms > 0.0 ? rms : 1.0);
    for (double& v : out) {
        v = std::clamp(v * gain, -1.0, 1.0);
    }
    return out;
}

}  // namespace detail

/// Builds the whole corpus in memory; deterministic in `config`.
inline SynthCorpus generate_corpus(const SynthConfig& config)
{
    config.validate();
    const ScaleRegistry& registry = load_scale_registry();
    SynthCorpus corpus;

    std::vector<std::string> phonemes;
    for (const auto& p : config.phonemes) {
        phonemes.emplace_back(classify_phoneme(p).label);
    }
    std::vector<PhonemeTemplate> templates;
    for (const auto& p : phonemes) {
        templates.push_back(phoneme_template(p));
    }

    for (std::size_t s = 0; s < config.n_speakers; ++s) {
        const std::string speaker = detail::speaker_name(s, config.n_speakers);
        const std::string recording = "rec_" + speaker;

        SplitMix64 rating_rng = SplitMix64::keyed(config.seed, "synth|ratings|" + speaker);
        std::map<std::string, int> ratings;
        for (const auto& spec : registry.symptoms()) {
            const auto span = static_cast<std::uint64_t>(spec.max_rating - spec.min_rating + 1);
            const int value = spec.min_rating + static_cast<int>(rating_rng.below(span));
            ratings[spec.code] = value;
            corpus.ratings.push_back({speaker, spec.code, value});
        }

        std::vector<double> shift(phonemes.size(), 0.0);
        for (const auto& effect : config.planted) {
            const SymptomSpec& spec = registry.at(effect.symptom);
            const double mid = 0.5 * (spec.min_rating + spec.max_rating);
            const double delta = effect.strength * (ratings[effect.symptom] - mid) * config.shift_hz_per_step;
            for (const auto& target : effect.phonemes) {
                const std::string label(classify_phoneme(target).label);
                for (std::size_t p = 0; p < phonemes.size(); ++p) {
                    if (phonemes[p] == label) {
                        shift[p] += delta;
                    }
                }
            }
        }

        SplitMix64 rng = SplitMix64::keyed(config.seed, "synth|audio|" + speaker);
        std::vector<std::size_t> order;
        for (std::size_t p = 0; p < phonemes.size(); ++p) {
            order.insert(order.end(), config.segments_per_phoneme, p);
        }
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }

        AudioBuffer audio;
        audio.sample_rate = config.sample_rate;
        for (std::size_t p : order) {
            const auto gap = static_cast<std::size_t>(std::lround(rng.uniform(0.010, 0.030) * config.sample_rate));
            audio.samples.insert(audio.samples.end(), gap, 0.0);
            const auto n = static_cast<std::size_t>(
                std::floor(rng.uniform(config.min_dur, config.max_dur) * config.sample_rate));
            const std::size_t first = audio.samples.size();
            const auto seg = detail::synth_instance(templates[p], shift[p], config.formant_jitter_hz, n,
                                                    config.sample_rate, rng);
            audio.samples.insert(audio.samples.end(), seg.begin(), seg.end());
            // Times are written with 6 decimals; round(t * rate) still recovers the sample index.
            const double start = static_cast<double>(first) / config.sample_rate;
            const double dur = static_cast<double>(n) / config.sample_rate;
            corpus.segments.push_back({recording, speaker, start, dur, phonemes[p]});
        }
        audio.samples.insert(audio.samples.end(), static_cast<std::size_t>(0.02 * config.sample_rate), 0.0);
        corpus.recordings.emplace_back(recording, std::move(audio));
    }

    nlohmann::json planted = nlohmann::json::array();
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& e : config.planted) {
        planted.push_back({{"symptom", e.symptom}, {"phonemes", e.phonemes}, {"effect_strength", e.strength}});
        for (const auto& p : e.phonemes) {
            pairs.push_back({e.symptom, std::string(classify_phoneme(p).label)});
        }
    }
    corpus.manifest = {{"schema", "phonograde-synth/1"},
                       {"seed", config.seed},
                       {"n_speakers", config.n_speakers},
                       {"segments_per_phoneme", config.segments_per_phoneme},
                       {"sample_rate", config.sample_rate},
                       {"phonemes", phonemes},
                       {"shift_hz_per_step", config.shift_hz_per_step},
                       {"formant_jitter_hz", config.formant_jitter_hz},
                       {"planted", planted},
                       {"planted_pairs", pairs}};
    return corpus;
}

inline std::string segmentation_tsv(const std::vector<SegmentRecord>& segments)
{
    std::string out(kSegmentationHeader);
    out += '\n';
    char buf[64];
    for (const auto& s : segments) {
        std::snprintf(buf, sizeof buf, "\t%.6f\t%.6f\t", s.start, s.dur);
        out += s.recording_id + '\t' + s.speaker_id + buf + s.label + '\n';
    }
    return out;
}

inline std::string ratings_csv(const std::vector<RatingRow>& rows)
{
    std::string out = "speaker_id,symptom_code,rating\n";
    for (const auto& r : rows) {
        out += r.speaker_id + ',' + r.symptom + ',' + std::to_string(r.rating) + '\n';
    }
    return out;
}

/// Writes `dir/audio/<recording>.wav`, `dir/segments.tsv`, `dir/ratings.csv`
/// and `dir/manifest.json`.
inline void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "audio");
    for (const auto& [id, audio] : corpus.recordings) {
        write_wav(dir / "audio" / (id + ".wav"), audio);
    }
    auto put = [&](const std::string& name, const std::string& body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw Error("cannot write " + (dir / name).string());
        }
        out << body;
    };
    put("segments.tsv", segmentation_tsv(corpus.segments));
    put("ratings.csv", ratings_csv(corpus.ratings));
    put("manifest.json", corpus.manifest.dump(2) + "\n");
}

/// In-memory view of a corpus as the pipeline would ingest it.
struct LoadedCorpus {
    std::vector<SegmentRecord> segments;
    RatingTable ratings;
};

inline LoadedCorpus as_pipeline_input(const SynthCorpus& corpus, AudioStore& store)
{
    LoadedCorpus out;
    for (const auto& [id, audio] : corpus.recordings) {
        // Float32 round trip, matching what a written corpus holds.
        AudioBuffer copy = audio;
        for (double& v : copy.samples) {
            v = static_cast<double>(static_cast<float>(v));
        }
        store.put(id, std::move(copy));
    }
    std::istringstream tsv(segmentation_tsv(corpus.segments));
    out.segments = parse_segmentation(tsv, ParseMode::Strict).records;
    std::istringstream csv(ratings_csv(corpus.ratings));
    out.ratings = parse_ratings(csv, load_scale_registry());
    return out;
}

}  // namespace phonograde
