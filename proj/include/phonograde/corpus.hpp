#pragma once

// Corpus ingestion: phoneme segmentation TSV, a recording store, per-segment
// feature extraction, and assembly of per-(symptom, phoneme) datasets.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "phonograde/error.hpp"
#include "phonograde/features.hpp"
#include "phonograde/parallel.hpp"
#include "phonograde/phonetics.hpp"
#include "phonograde/scales.hpp"
#include "phonograde/signal.hpp"
#include "phonograde/text.hpp"

namespace phonograde {

struct SegmentRecord {
    std::string recording_id;
    std::string speaker_id;
    double start = 0.0;
    double dur = 0.0;
    std::string label;  ///< canonical (upper-case) registry label
};

enum class ParseMode { Strict, Lenient };

struct Segmentation {
    std::vector<SegmentRecord> records;
    /// Lenient mode only: skipped-row count per reason.
    std::map<std::string, std::size_t> skipped;
};

inline constexpr std::string_view kSegmentationHeader = "recording_id\tspeaker_id\tstart_s\tdur_s\tlabel";

inline Segmentation parse_segmentation(std::istream& in, ParseMode mode)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("segmentation: empty file");
    }
    const auto header = text::split(text::strip_cr(line), '\t');
    const auto expected = text::split(kSegmentationHeader, '\t');
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= header.size() || text::trim(header[i]) != expected[i]) {
            throw Error("segmentation: missing column " + std::string(expected[i]) + " in header");
        }
    }

    Segmentation out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = text::strip_cr(line);
        if (text::trim(row).empty()) {
            continue;
        }
        std::string reason;
        std::string detail;
        SegmentRecord rec;
        const auto f = text::split(row, '\t');
        if (f.size() < 5) {
            reason = "missing_column";
            detail = "missing column";
        } else {
            rec.recording_id = std::string(text::trim(f[0]));
            rec.speaker_id = std::string(text::trim(f[1]));
            const auto start = text::parse_double(f[2]);
            const auto dur = text::parse_double(f[3]);
            const PhonemeClass* cls = find_phoneme(text::trim(f[4]));
            if (rec.recording_id.empty() || rec.speaker_id.empty()) {
                reason = "missing_column";
                detail = "empty id";
            } else if (!start || !dur || !std::isfinite(*start) || !std::isfinite(*dur)) {
                reason = "unparsable_number";
                detail = "unparsable number";
            } else if (*dur < 0.0) {
                reason = "negative_duration";
                detail = "negative duration";
            } else if (*dur == 0.0) {
                reason = "zero_duration";
                detail = "zero duration";
            } else if (*start < 0.0) {
                reason = "negative_start";
                detail = "negative start";
            } else if (cls == nullptr) {
                reason = "unknown_label";
                detail = "unknown phoneme label " + std::string(text::trim(f[4]));
            } else {
                rec.start = *start;
                rec.dur = *dur;
                rec.label = std::string(cls->label);
            }
        }
        if (reason.empty()) {
            out.records.push_back(std::move(rec));
        } else if (mode == ParseMode::Strict) {
            throw Error(detail + " at line " + std::to_string(lineno));
        } else {
            ++out.skipped[reason];
        }
    }
    return out;
}

inline Segmentation load_segmentation(const std::filesystem::path& path, ParseMode mode)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("missing segmentation file: " + path.string());
    }
    return parse_segmentation(in, mode);
}

/// Recordings by id, loaded lazily from `<dir>/<recording_id>.wav` and
/// resampled to the pipeline rate. Thread-safe.
class AudioStore {
public:
    AudioStore() = default;
    AudioStore(std::filesystem::path dir, double rate) : dir_(std::move(dir)), rate_(rate) {}

    void put(const std::string& recording_id, AudioBuffer buf)
    {
        const std::lock_guard lock(mutex_);
        cache_[recording_id] = std::make_shared<const AudioBuffer>(resample(buf, rate_));
    }

    std::shared_ptr<const AudioBuffer> get(const std::string& recording_id)
    {
        {
            const std::lock_guard lock(mutex_);
            if (auto it = cache_.find(recording_id); it != cache_.end()) {
                return it->second;
            }
        }
        if (dir_.empty()) {
            throw Error("unknown recording " + recording_id);
        }
        auto buf = std::make_shared<const AudioBuffer>(load_audio(dir_ / (recording_id + ".wav"), rate_));
        const std::lock_guard lock(mutex_);
        return cache_.emplace(recording_id, std::move(buf)).first->second;
    }

    [[nodiscard]] double rate() const noexcept { return rate_; }

private:
    std::filesystem::path dir_;
    double rate_ = kDefaultSampleRate;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const AudioBuffer>> cache_;
};

enum class SkipReason { None, TooShort, Degenerate };

struct ExtractedSegment {
    SegmentRecord record;
    std::optional<FeatureVector> features;
    SkipReason skip = SkipReason::None;
};

/// Features for every segment, in input order. Segments too short for the AR
/// order, or with zero energy, are kept with a skip reason instead.
inline std::vector<ExtractedSegment> extract_features(std::span<const SegmentRecord> segments, AudioStore& store,
                                                      const FeatureConfig& config, std::size_t jobs = 1)
{
    std::vector<ExtractedSegment> out(segments.size());
    parallel_for(segments.size(), jobs, [&](std::size_t i) {
        const SegmentRecord& rec = segments[i];
        ExtractedSegment& dst = out[i];
        dst.record = rec;
        const auto audio = store.get(rec.recording_id);
        AudioBuffer seg;
        try {
            seg = slice_segment(*audio, rec.start, rec.dur);
        } catch (const Error& e) {
            throw Error("segment " + rec.recording_id + "@" + text::exact(rec.start) + ": " + e.what());
        }
        if (seg.samples.size() < config.min_samples()) {
            dst.skip = SkipReason::TooShort;
            return;
        }
        if (std::all_of(seg.samples.begin(), seg.samples.end(), [](double v) { return v == 0.0; })) {
            dst.skip = SkipReason::Degenerate;
            return;
        }
        FeatureVector fv;
        fv.values = segment_features(seg, config);
        fv.provenance = {rec.recording_id, rec.speaker_id, rec.label, rec.start, rec.dur};
        dst.features = std::move(fv);
    });
    return out;
}

struct Instance {
    FeatureVector features;
    int rating = 0;
    std::string speaker_id;
};

/// Canonical instance order: (speaker, recording, start, duration).
inline bool canonical_less(const Instance& a, const Instance& b)
{
    const auto& pa = a.features.provenance;
    const auto& pb = b.features.provenance;
    return std::tie(a.speaker_id, pa.recording_id, pa.start, pa.dur, a.rating) <
           std::tie(b.speaker_id, pb.recording_id, pb.start, pb.dur, b.rating);
}

struct Dataset {
    std::string symptom;
    std::string phoneme;
    std::vector<Instance> instances;

    [[nodiscard]] std::vector<std::string> speakers() const
    {
        std::set<std::string> s;
        for (const auto& inst : instances) {
            s.insert(inst.speaker_id);
        }
        return {s.begin(), s.end()};
    }
};

struct AssemblyResult {
    Dataset dataset;
    std::vector<std::string> dropped_speakers;  ///< had segments but no rating
    std::size_t skipped_too_short = 0;
    std::size_t skipped_degenerate = 0;
};

/// Joins extracted segments of `phoneme` with each speaker's rating for
/// `symptom`. Instances come out in canonical order. Throws
/// InsufficientDataError when nothing usable remains or fewer than two
/// speakers are left.
inline AssemblyResult assemble_dataset(std::span<const ExtractedSegment> segments, const RatingTable& ratings,
                                       const std::string& symptom, const std::string& phoneme)
{
    AssemblyResult out;
    out.dataset.symptom = symptom;
    out.dataset.phoneme = phoneme;
    std::set<std::string> dropped;
    for (const auto& seg : segments) {
        if (seg.record.label != phoneme) {
            continue;
        }
        const auto rating = ratings.get(seg.record.speaker_id, symptom);
        if (!rating) {
            dropped.insert(seg.record.speaker_id);
            continue;
        }
        if (seg.skip == SkipReason::TooShort) {
            ++out.skipped_too_short;
            continue;
        }
        if (seg.skip == SkipReason::Degenerate || !seg.features) {
            ++out.skipped_degenerate;
            continue;
        }
        out.dataset.instances.push_back({*seg.features, *rating, seg.record.speaker_id});
    }
    out.dropped_speakers.assign(dropped.begin(), dropped.end());
    std::sort(out.dataset.instances.begin(), out.dataset.instances.end(), canonical_less);

    if (out.dataset.instances.empty()) {
        std::string msg = "0 usable instances (" + std::to_string(out.skipped_too_short) + " skipped: too short";
        if (out.skipped_degenerate > 0) {
            msg += ", " + std::to_string(out.skipped_degenerate) + " skipped: degenerate";
        }
        throw InsufficientDataError(msg + ")");
    }
    const auto n_speakers = out.dataset.speakers().size();
    if (n_speakers < 2) {
        throw InsufficientDataError("fewer than 2 speakers for (" + symptom + ", " + phoneme + "): " +
                                    std::to_string(n_speakers));
    }
    return out;
}

/// Convenience form that extracts features on the fly.
inline AssemblyResult assemble_dataset(std::span<const SegmentRecord> segments, AudioStore& store,
                                       const RatingTable& ratings, const std::string& symptom,
                                       const std::string& phoneme, const FeatureConfig& config)
{
    std::vector<SegmentRecord> mine;
    for (const auto& s : segments) {
        if (s.label == phoneme) {
            mine.push_back(s);
        }
    }
    const auto extracted = extract_features(mine, store, config);
    return assemble_dataset(extracted, ratings, symptom, phoneme);
}

}  // namespace phonograde
