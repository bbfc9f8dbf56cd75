#pragma once

// Leave-one-speaker-out evaluation of per-(symptom, phoneme) predictors.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phonograde/corpus.hpp"
#include "phonograde/error.hpp"
#include "phonograde/model.hpp"
#include "phonograde/stats.hpp"

namespace phonograde {

enum class PairStatus { Evaluated, InsufficientData, Degenerate };

constexpr std::string_view to_string(PairStatus s) noexcept
{
    switch (s) {
    case PairStatus::Evaluated: return "evaluated";
    case PairStatus::InsufficientData: return "insufficient-data";
    case PairStatus::Degenerate: return "degenerate";
    }
    return "?";
}

inline PairStatus parse_pair_status(std::string_view s)
{
    for (auto st : {PairStatus::Evaluated, PairStatus::InsufficientData, PairStatus::Degenerate}) {
        if (to_string(st) == s) {
            return st;
        }
    }
    throw Error("unknown pair status: " + std::string(s));
}

/// Mean held-out prediction over one speaker's instances.
struct SpeakerMean {
    std::string speaker_id;
    double mean_prediction = 0.0;
    int rating = 0;
    std::size_t n = 0;
};

struct PairResult {
    std::string symptom;
    std::string phoneme;
    std::size_t n = 0;
    std::optional<double> r;
    std::optional<double> p;
    std::optional<double> per_speaker_r;  ///< speaker-mean predictions vs ratings
    PairStatus status = PairStatus::InsufficientData;
    std::vector<SpeakerMean> speaker_means;  ///< sorted by speaker id
};

struct Fold {
    std::string test_speaker;
    std::vector<std::size_t> train;  ///< indices into the dataset's instances
    std::vector<std::size_t> test;
};

struct LosoResult {
    std::vector<double> predictions;  ///< aligned with the dataset's instances
    std::vector<Fold> folds;          ///< lexicographic speaker order
};

/// Fold partition only: one fold per distinct speaker.
inline std::vector<Fold> loso_folds(const Dataset& data)
{
    const auto speakers = data.speakers();
    if (speakers.size() < 2) {
        throw InsufficientDataError("LOSO requires ≥2 speakers, got " + std::to_string(speakers.size()));
    }
    std::vector<Fold> folds;
    folds.reserve(speakers.size());
    for (const auto& s : speakers) {
        Fold fold{s, {}, {}};
        for (std::size_t i = 0; i < data.instances.size(); ++i) {
            (data.instances[i].speaker_id == s ? fold.test : fold.train).push_back(i);
        }
        folds.push_back(std::move(fold));
    }
    return folds;
}

/// Fold k trains on every speaker but the k-th and predicts the k-th.
inline LosoResult run_loso(const Dataset& data, const RfConfig& config, std::size_t jobs = 1)
{
    LosoResult out;
    out.folds = loso_folds(data);
    out.predictions.assign(data.instances.size(), 0.0);
    const std::string key = data.symptom + "|" + data.phoneme;
    for (const auto& fold : out.folds) {
        std::vector<Instance> train;
        train.reserve(fold.train.size());
        for (std::size_t i : fold.train) {
            train.push_back(data.instances[i]);
        }
        const Forest forest = train_forest(train, config, key, jobs);
        for (std::size_t i : fold.test) {
            out.predictions[i] = forest.predict(data.instances[i].features);
        }
    }
    return out;
}

struct EvalConfig {
    RfConfig rf;
    std::size_t min_instances = 20;
};

/// LOSO on an assembled dataset, then pooled and speaker-mean correlations.
inline PairResult evaluate_dataset(const Dataset& data, const EvalConfig& config, std::size_t jobs = 1)
{
    PairResult res;
    res.symptom = data.symptom;
    res.phoneme = data.phoneme;
    res.n = data.instances.size();
    if (res.n < config.min_instances || res.n < 3) {
        res.status = PairStatus::InsufficientData;
        return res;
    }
    const LosoResult loso = run_loso(data, config.rf, jobs);

    std::vector<double> truth;
    truth.reserve(res.n);
    std::map<std::string, SpeakerMean> by_speaker;
    for (std::size_t i = 0; i < res.n; ++i) {
        const auto& inst = data.instances[i];
        truth.push_back(static_cast<double>(inst.rating));
        auto& sm = by_speaker[inst.speaker_id];
        sm.speaker_id = inst.speaker_id;
        sm.rating = inst.rating;
        sm.mean_prediction += loso.predictions[i];
        ++sm.n;
    }
    std::vector<double> means;
    std::vector<double> ratings;
    for (auto& [speaker, sm] : by_speaker) {
        sm.mean_prediction /= static_cast<double>(sm.n);
        means.push_back(sm.mean_prediction);
        ratings.push_back(sm.rating);
        res.speaker_means.push_back(sm);
    }
    if (means.size() >= 3) {
        res.per_speaker_r = pearson(means, ratings);
    }

    const auto r = pearson(loso.predictions, truth);
    if (!r) {
        res.status = PairStatus::Degenerate;
        return res;
    }
    res.r = *r;
    res.p = correlation_p_value(*r, res.n);
    res.status = PairStatus::Evaluated;
    return res;
}

/// Assembles the (symptom, phoneme) dataset from extracted segments and
/// evaluates it. Missing or thin data yields a status, never an exception.
inline PairResult evaluate_pair(const std::string& symptom, const std::string& phoneme,
                                std::span<const ExtractedSegment> segments, const RatingTable& ratings,
                                const EvalConfig& config, std::size_t jobs = 1)
{
    try {
        const AssemblyResult assembled = assemble_dataset(segments, ratings, symptom, phoneme);
        return evaluate_dataset(assembled.dataset, config, jobs);
    } catch (const InsufficientDataError&) {
        PairResult res;
        res.symptom = symptom;
        res.phoneme = phoneme;
        res.status = PairStatus::InsufficientData;
        return res;
    }
}

inline PairResult evaluate_pair(const std::string& symptom, const std::string& phoneme,
                                std::span<const SegmentRecord> segments, AudioStore& store,
                                const RatingTable& ratings, const FeatureConfig& features, const EvalConfig& config)
{
    std::vector<SegmentRecord> mine;
    for (const auto& s : segments) {
        if (s.label == phoneme) {
            mine.push_back(s);
        }
    }
    const auto extracted = extract_features(mine, store, features);
    return evaluate_pair(symptom, phoneme, extracted, ratings, config);
}

}  // namespace phonograde
