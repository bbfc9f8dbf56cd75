#pragma once

// End-to-end orchestration: configuration, feature extraction over a
// corpus, the (symptom, phoneme) evaluation grid, selection and reports.

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonograde/corpus.hpp"
#include "phonograde/error.hpp"
#include "phonograde/eval.hpp"
#include "phonograde/features.hpp"
#include "phonograde/parallel.hpp"
#include "phonograde/phonetics.hpp"
#include "phonograde/report.hpp"
#include "phonograde/scales.hpp"
#include "phonograde/select.hpp"

namespace phonograde {

struct RunConfig {
    std::filesystem::path audio_dir;
    std::filesystem::path segmentation;
    std::filesystem::path ratings;
    std::filesystem::path out_dir;
    FeatureConfig features;
    EvalConfig eval;
    Thresholds thresholds;
    std::size_t jobs = 1;
    std::vector<std::string> phonemes;  ///< empty: consonants + fillers (+ vowels if asked)
    bool include_vowels = false;
    std::vector<std::string> symptoms;  ///< empty: all 66

    /// Resolved phoneme filter in registry order, canonical labels.
    [[nodiscard]] std::vector<std::string> phoneme_filter() const
    {
        std::set<std::string> wanted;
        for (const auto& p : phonemes) {
            wanted.insert(std::string(classify_phoneme(p).label));
        }
        std::vector<std::string> out;
        for (const auto& cls : phoneme_registry()) {
            const bool pick = phonemes.empty() ? (cls.kind != PhonemeKind::Vowel || include_vowels)
                                               : wanted.count(std::string(cls.label)) > 0;
            if (pick) {
                out.emplace_back(cls.label);
            }
        }
        return out;
    }

    /// Symptom codes in registry order.
    [[nodiscard]] std::vector<std::string> symptom_filter() const
    {
        const auto& registry = load_scale_registry();
        std::set<std::string> wanted;
        for (const auto& s : symptoms) {
            wanted.insert(registry.at(s).code);
        }
        std::vector<std::string> out;
        for (const auto& s : registry.symptoms()) {
            if (symptoms.empty() || wanted.count(s.code)) {
                out.push_back(s.code);
            }
        }
        return out;
    }

    /// Checks everything that can be checked before work starts. With
    /// `need_inputs`, the audio, segmentation and ratings paths must exist.
    void validate(bool need_inputs) const
    {
        auto in_open_unit = [](double v) { return v > 0.0 && v < 1.0; };
        if (!(thresholds.r > 0.0 && thresholds.r <= 1.0)) {
            throw UsageError("r threshold must be in (0, 1]");
        }
        if (!in_open_unit(thresholds.p_select) || !in_open_unit(thresholds.p_category)) {
            throw UsageError("p thresholds must be in (0, 1)");
        }
        if (!(features.sample_rate > 2.0 * kGridHighHz)) {
            throw UsageError("sample rate must exceed " + text::format_g(2.0 * kGridHighHz) + " Hz");
        }
        if (features.order == 0) {
            throw UsageError("AR order must be positive");
        }
        eval.rf.validate();
        if (jobs == 0) {
            throw UsageError("jobs must be >= 1");
        }
        try {
            (void)phoneme_filter();
            (void)symptom_filter();
        } catch (const UsageError&) {
            throw;
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (need_inputs) {
            auto require = [](const std::filesystem::path& p, const char* flag, bool dir) {
                if (p.empty()) {
                    throw UsageError(std::string("missing required option ") + flag);
                }
                if (dir ? !std::filesystem::is_directory(p) : !std::filesystem::is_regular_file(p)) {
                    throw UsageError(std::string(flag) + ": no such " + (dir ? "directory" : "file") + ": " +
                                     p.string());
                }
            };
            require(audio_dir, "--audio", true);
            require(segmentation, "--seg", false);
            require(ratings, "--ratings", false);
        }
    }

    /// The part of the configuration that determines evaluation results.
    /// Paths, thresholds and the parallelism degree are left out.
    [[nodiscard]] nlohmann::json evaluation_json() const
    {
        nlohmann::json rf = {{"n_trees", eval.rf.n_trees},
                             {"max_features", eval.rf.max_features},
                             {"min_leaf_size", eval.rf.min_leaf_size},
                             {"max_depth", eval.rf.max_depth ? nlohmann::json(*eval.rf.max_depth) : nlohmann::json()},
                             {"seed", eval.rf.seed}};
        return {{"features", {{"sample_rate", features.sample_rate},
                              {"order", features.order},
                              {"grid", {{"low_hz", kGridLowHz}, {"high_hz", kGridHighHz}, {"points", kFeatureDim}}}}},
                {"rf", rf},
                {"min_instances", eval.min_instances},
                {"phonemes", phoneme_filter()},
                {"symptoms", symptom_filter()}};
    }
};

/// Applies a JSON config object on top of `cfg`. Keys are the long flag
/// names without the leading dashes, e.g. {"trees": 50, "p-select": 0.001}.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw UsageError("config: top level must be an object");
    }
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "audio") {
                cfg.audio_dir = v.get<std::string>();
            } else if (key == "seg") {
                cfg.segmentation = v.get<std::string>();
            } else if (key == "ratings") {
                cfg.ratings = v.get<std::string>();
            } else if (key == "out") {
                cfg.out_dir = v.get<std::string>();
            } else if (key == "rate") {
                cfg.features.sample_rate = v.get<double>();
            } else if (key == "order") {
                cfg.features.order = v.get<std::size_t>();
            } else if (key == "trees") {
                cfg.eval.rf.n_trees = v.get<std::size_t>();
            } else if (key == "max-features") {
                cfg.eval.rf.max_features = v.get<std::size_t>();
            } else if (key == "min-leaf") {
                cfg.eval.rf.min_leaf_size = v.get<std::size_t>();
            } else if (key == "max-depth") {
                cfg.eval.rf.max_depth = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
            } else if (key == "r-threshold") {
                cfg.thresholds.r = v.get<double>();
            } else if (key == "p-select") {
                cfg.thresholds.p_select = v.get<double>();
            } else if (key == "p-category") {
                cfg.thresholds.p_category = v.get<double>();
            } else if (key == "min-instances") {
                cfg.eval.min_instances = v.get<std::size_t>();
            } else if (key == "jobs") {
                cfg.jobs = v.get<std::size_t>();
            } else if (key == "seed") {
                cfg.eval.rf.seed = v.get<std::uint64_t>();
            } else if (key == "phonemes") {
                cfg.phonemes = v.get<std::vector<std::string>>();
            } else if (key == "include-vowels") {
                cfg.include_vowels = v.get<bool>();
            } else if (key == "symptoms") {
                cfg.symptoms = v.get<std::vector<std::string>>();
            } else {
                throw UsageError("config: unknown key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

/// Called once per finished pair, from whichever worker finished it.
using ProgressFn = std::function<void(std::size_t done, std::size_t total, const PairResult&)>;

/// Evaluates every (symptom, phoneme) pair, symptom-major in the given
/// orders. Pairs run on a pool of `jobs` workers; each pair is itself
/// deterministic, so the result does not depend on scheduling.
inline std::vector<PairResult> evaluate_grid(std::span<const ExtractedSegment> segments, const RatingTable& ratings,
                                             const std::vector<std::string>& symptoms,
                                             const std::vector<std::string>& phonemes, const EvalConfig& config,
                                             std::size_t jobs, const ProgressFn& progress = {})
{
    std::map<std::string, std::vector<ExtractedSegment>> by_phoneme;
    for (const auto& p : phonemes) {
        by_phoneme[p];
    }
    for (const auto& seg : segments) {
        if (auto it = by_phoneme.find(seg.record.label); it != by_phoneme.end()) {
            it->second.push_back(seg);
        }
    }
    const std::size_t total = symptoms.size() * phonemes.size();
    std::vector<PairResult> out(total);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(total, jobs, [&](std::size_t i) {
        const auto& symptom = symptoms[i / phonemes.size()];
        const auto& phoneme = phonemes[i % phonemes.size()];
        out[i] = evaluate_pair(symptom, phoneme, by_phoneme.at(phoneme), ratings, config);
        const std::size_t finished = ++done;
        if (progress) {
            const std::lock_guard lock(progress_mutex);
            progress(finished, total, out[i]);
        }
    });
    return out;
}

/// Corpus ingestion and feature extraction for a run. Features are computed
/// once per segment and shared by every symptom.
struct PreparedCorpus {
    std::vector<ExtractedSegment> segments;
    RatingTable ratings;
    std::map<std::string, std::size_t> skipped_rows;   ///< lenient-parse skips by reason
    std::vector<std::string> unrated_speakers;          ///< have segments but no ratings at all
    std::size_t too_short = 0;
    std::size_t degenerate = 0;
};

inline PreparedCorpus prepare_corpus(const RunConfig& cfg, std::ostream* log = nullptr)
{
    PreparedCorpus pc;
    const Segmentation seg = load_segmentation(cfg.segmentation, ParseMode::Lenient);
    pc.skipped_rows = seg.skipped;
    pc.ratings = load_ratings(cfg.ratings, load_scale_registry());

    const auto filter = cfg.phoneme_filter();
    const std::set<std::string> wanted(filter.begin(), filter.end());
    std::vector<SegmentRecord> records;
    for (const auto& r : seg.records) {
        if (wanted.count(r.label)) {
            records.push_back(r);
        }
    }
    const auto rated = pc.ratings.speakers();
    std::set<std::string> unrated;
    for (const auto& r : records) {
        if (!rated.count(r.speaker_id)) {
            unrated.insert(r.speaker_id);
        }
    }
    pc.unrated_speakers.assign(unrated.begin(), unrated.end());

    AudioStore store(cfg.audio_dir, cfg.features.sample_rate);
    pc.segments = extract_features(records, store, cfg.features, cfg.jobs);
    for (const auto& s : pc.segments) {
        pc.too_short += s.skip == SkipReason::TooShort;
        pc.degenerate += s.skip == SkipReason::Degenerate;
    }
    if (log) {
        for (const auto& [reason, count] : pc.skipped_rows) {
            *log << "warning: skipped " << count << " segmentation row(s): " << reason << '\n';
        }
        for (const auto& s : pc.unrated_speakers) {
            *log << "warning: speaker " << s << " has segments but no ratings; dropped\n";
        }
        *log << "features: " << pc.segments.size() << " segment(s), " << pc.too_short << " too short, "
             << pc.degenerate << " degenerate\n";
    }
    return pc;
}

inline std::vector<PairResult> evaluate_corpus(const RunConfig& cfg, const PreparedCorpus& pc,
                                               std::ostream* log = nullptr)
{
    ProgressFn progress;
    if (log) {
        progress = [log](std::size_t done, std::size_t total, const PairResult& r) {
            *log << "[" << done << "/" << total << "] " << r.symptom << " " << r.phoneme << " "
                 << to_string(r.status);
            if (r.r) {
                *log << " r=" << text::format_g(*r.r, 4);
            }
            *log << '\n';
        };
    }
    return evaluate_grid(pc.segments, pc.ratings, cfg.symptom_filter(), cfg.phoneme_filter(), cfg.eval, cfg.jobs,
                         progress);
}

/// One human-readable line per symptom.
inline std::string summary_line(const SelectionReport& rep)
{
    std::string line = rep.symptom + ":";
    if (rep.selected.entries.empty()) {
        return line + " " + std::string(kNoPredictive);
    }
    for (const auto& e : rep.selected.entries) {
        line += " " + e.phoneme + "(r=" + text::format_g(e.r, 3) + ")";
    }
    const auto places = reported_places(rep);
    if (!places.empty()) {
        line += " | place:";
        for (const auto* c : places) {
            line += " " + c->category;
        }
    }
    return line;
}

inline nlohmann::json selection_json(const RunMetadata& meta, std::span<const SelectionReport> selections,
                                     const Thresholds& th)
{
    auto doc = report_json(meta, {}, selections, th);
    doc.erase("pairs");
    doc.erase("chart");
    return doc;
}

}  // namespace phonograde
