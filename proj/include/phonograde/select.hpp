#pragma once

// Threshold-gated phoneme selection and articulatory-category aggregation.

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "phonograde/error.hpp"
#include "phonograde/eval.hpp"
#include "phonograde/phonetics.hpp"
#include "phonograde/stats.hpp"
#include "phonograde/text.hpp"

namespace phonograde {

struct Thresholds {
    double r = 0.2;              ///< a phoneme must correlate strictly above this
    double p_select = 0.001;     ///< selection report gate
    double p_category = 0.0001;  ///< gate for members of category aggregates
};

struct SelectedPhoneme {
    std::string phoneme;
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

struct Selection {
    std::string symptom;
    double r_threshold = 0.2;
    double p_threshold = 0.001;
    std::vector<SelectedPhoneme> entries;  ///< r descending, ties by label

    [[nodiscard]] bool contains(std::string_view phoneme) const
    {
        return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.phoneme == phoneme; });
    }
};

inline void check_single_symptom(std::span<const PairResult> results)
{
    for (const auto& r : results) {
        if (r.symptom != results.front().symptom) {
            throw Error("mixed-symptom input: " + results.front().symptom + " and " + r.symptom);
        }
    }
}

/// Evaluated results with r > r_threshold and p <= p_threshold.
inline Selection select_phonemes(std::span<const PairResult> results, double r_threshold, double p_threshold)
{
    Selection sel;
    sel.r_threshold = r_threshold;
    sel.p_threshold = p_threshold;
    if (results.empty()) {
        return sel;
    }
    check_single_symptom(results);
    sel.symptom = results.front().symptom;
    for (const auto& res : results) {
        if (res.status != PairStatus::Evaluated || !res.r || !res.p) {
            continue;
        }
        if (*res.r > r_threshold && *res.p <= p_threshold) {
            sel.entries.push_back({res.phoneme, *res.r, *res.p, res.n});
        }
    }
    std::sort(sel.entries.begin(), sel.entries.end(), [](const auto& a, const auto& b) {
        if (a.r != b.r) {
            return a.r > b.r;
        }
        return a.phoneme < b.phoneme;
    });
    return sel;
}

struct CategoryAggregate {
    Axis axis = Axis::Place;
    std::string category;
    std::vector<std::string> members;  ///< consonants that passed the gate
    double r = 0.0;
    double p = 1.0;
    std::size_t n_speakers = 0;
    std::vector<SpeakerMean> speaker_means;  ///< mean over members, per speaker
};

/// Speaker-level aggregate for one articulatory category. For each speaker,
/// averages the per-phoneme mean LOSO predictions over the category members
/// that pass (r > r_threshold, p <= p_gate), then correlates those
/// averages with the speakers' ratings.
inline CategoryAggregate aggregate_category(std::span<const PairResult> results, Axis axis,
                                            const std::string& category, double r_threshold, double p_gate)
{
    const auto members = members_of_category(axis, category);
    if (!results.empty()) {
        check_single_symptom(results);
    }
    const Selection passing = select_phonemes(results, r_threshold, p_gate);

    CategoryAggregate agg;
    agg.axis = axis;
    agg.category = category;
    struct Acc {
        double sum = 0.0;
        std::size_t count = 0;
        int rating = 0;
    };
    std::map<std::string, Acc> per_speaker;
    for (const auto& res : results) {
        if (!passing.contains(res.phoneme) ||
            std::find(members.begin(), members.end(), res.phoneme) == members.end()) {
            continue;
        }
        agg.members.push_back(res.phoneme);
        for (const auto& sm : res.speaker_means) {
            auto& acc = per_speaker[sm.speaker_id];
            acc.sum += sm.mean_prediction;
            ++acc.count;
            acc.rating = sm.rating;
        }
    }
    if (agg.members.empty()) {
        throw Error("category not dominant: no member of " + category + " passes p ≤ " + text::format_g(p_gate));
    }
    std::sort(agg.members.begin(), agg.members.end());
    if (per_speaker.size() < 3) {
        throw Error("too few speakers for category " + category + ": " + std::to_string(per_speaker.size()));
    }
    std::vector<double> means;
    std::vector<double> ratings;
    for (const auto& [speaker, acc] : per_speaker) {
        const double mean = acc.sum / static_cast<double>(acc.count);
        agg.speaker_means.push_back({speaker, mean, acc.rating, acc.count});
        means.push_back(mean);
        ratings.push_back(acc.rating);
    }
    const auto stats = correlation_stats(means, ratings);
    agg.r = stats.r;
    agg.p = stats.p;
    agg.n_speakers = per_speaker.size();
    return agg;
}

/// Every computable category along `axis`, aggregate r descending (ties by
/// category name). Categories without a passing member, or whose aggregate
/// is undefined, are left out.
inline std::vector<CategoryAggregate> rank_categories(std::span<const PairResult> results, Axis axis,
                                                      double r_threshold, double p_gate)
{
    std::vector<CategoryAggregate> out;
    for (auto category : axis_categories(axis)) {
        try {
            out.push_back(aggregate_category(results, axis, std::string(category), r_threshold, p_gate));
        } catch (const Error&) {
            // not dominant, too few speakers, or degenerate
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.r != b.r) {
            return a.r > b.r;
        }
        return a.category < b.category;
    });
    return out;
}

struct SelectionReport {
    std::string run_id;
    std::string symptom;
    Thresholds thresholds;
    Selection selected;         ///< at p_select
    Selection selected_strict;  ///< at p_category
    std::map<Axis, std::vector<CategoryAggregate>> category_rankings;
};

inline SelectionReport build_selection_report(std::span<const PairResult> results, const std::string& symptom,
                                              const Thresholds& th, const std::string& run_id = {})
{
    SelectionReport rep;
    rep.run_id = run_id;
    rep.symptom = symptom;
    rep.thresholds = th;
    rep.selected = select_phonemes(results, th.r, th.p_select);
    rep.selected_strict = select_phonemes(results, th.r, th.p_category);
    rep.selected.symptom = rep.selected_strict.symptom = symptom;
    for (Axis axis : kAxes) {
        rep.category_rankings[axis] = rank_categories(results, axis, th.r, th.p_category);
    }
    return rep;
}

/// One report per symptom in `symptoms`, grouping `results` by symptom.
inline std::vector<SelectionReport> build_selection_reports(std::span<const PairResult> results,
                                                            const std::vector<std::string>& symptoms,
                                                            const Thresholds& th, const std::string& run_id = {})
{
    std::map<std::string, std::vector<PairResult>> by_symptom;
    for (const auto& r : results) {
        by_symptom[r.symptom].push_back(r);
    }
    std::vector<SelectionReport> out;
    out.reserve(symptoms.size());
    for (const auto& s : symptoms) {
        out.push_back(build_selection_report(by_symptom[s], s, th, run_id));
    }
    return out;
}

}  // namespace phonograde
