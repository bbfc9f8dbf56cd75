#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "phonograde/select.hpp"

using namespace phonograde;

namespace {

PairResult pair(const std::string& symptom, const std::string& phoneme, std::optional<double> r,
                std::optional<double> p, PairStatus status = PairStatus::Evaluated)
{
    PairResult res;
    res.symptom = symptom;
    res.phoneme = phoneme;
    res.n = 100;
    res.r = r;
    res.p = p;
    res.status = status;
    return res;
}

double plain_pearson(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Select, GatesOnBothRAndP)
{
    const std::vector<PairResult> results{
        pair("B6", "F", 0.45, 1e-5),
        pair("B6", "V", 0.18, 1e-6),   // r too small
        pair("B6", "S", 0.30, 0.01),   // p too large
        pair("B6", "K", 0.2, 1e-9),    // r must be strictly above
        pair("B6", "P", 0.31, 0.001),  // p may equal the threshold
        pair("B6", "T", std::nullopt, std::nullopt, PairStatus::InsufficientData),
    };
    const Selection sel = select_phonemes(results, 0.2, 0.001);
    ASSERT_EQ(sel.entries.size(), 2u);
    EXPECT_EQ(sel.entries[0].phoneme, "F");
    EXPECT_EQ(sel.entries[1].phoneme, "P");
    EXPECT_EQ(sel.symptom, "B6");
}

TEST(Select, OrderByRThenLabel)
{
    const std::vector<PairResult> results{pair("B6", "Z", 0.5, 1e-5), pair("B6", "B", 0.5, 1e-5),
                                          pair("B6", "F", 0.7, 1e-5)};
    const Selection sel = select_phonemes(results, 0.2, 0.001);
    ASSERT_EQ(sel.entries.size(), 3u);
    EXPECT_EQ(sel.entries[0].phoneme, "F");
    EXPECT_EQ(sel.entries[1].phoneme, "B");
    EXPECT_EQ(sel.entries[2].phoneme, "Z");
}

TEST(Select, EmptyAndMixedInput)
{
    EXPECT_TRUE(select_phonemes(std::vector<PairResult>{}, 0.2, 0.001).entries.empty());
    const std::vector<PairResult> mixed{pair("B6", "F", 0.5, 1e-5), pair("B7", "F", 0.5, 1e-5)};
    try {
        (void)select_phonemes(mixed, 0.2, 0.001);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "mixed-symptom input: B6 and B7");
    }
}

// Tightening p can only shrink the selection.
TEST(Select, SubsetPropertyRandomized)
{
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> ur(-0.3, 0.9);
    std::uniform_real_distribution<double> ulogp(-9.0, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<PairResult> results;
        for (const auto& label : labels_of_kind(PhonemeKind::Consonant)) {
            results.push_back(pair("M1", label, ur(gen), std::pow(10.0, ulogp(gen))));
        }
        const double p1 = std::pow(10.0, ulogp(gen));
        const double p2 = p1 * std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        const Selection loose = select_phonemes(results, 0.2, p1);
        const Selection strict = select_phonemes(results, 0.2, p2);
        for (const auto& e : strict.entries) {
            EXPECT_TRUE(loose.contains(e.phoneme));
        }
    }
}

TEST(Aggregate, AveragesPassingMembersPerSpeaker)
{
    // F and V are labiodental; P (bilabial) must be ignored for this category.
    auto f = pair("B6", "F", 0.6, 1e-6);
    auto v = pair("B6", "V", 0.5, 1e-5);
    auto p = pair("B6", "P", 0.9, 1e-9);
    const std::vector<std::string> speakers{"A", "B", "C", "D"};
    const std::vector<int> ratings{1, 3, 2, 6};
    const std::vector<double> fm{1.0, 2.5, 2.0, 5.0};
    const std::vector<double> vm{2.0, 2.0, 1.0, 6.5};
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        f.speaker_means.push_back({speakers[i], fm[i], ratings[i], 10});
        v.speaker_means.push_back({speakers[i], vm[i], ratings[i], 12});
        p.speaker_means.push_back({speakers[i], 0.0, ratings[i], 9});
    }
    const std::vector<PairResult> results{f, v, p};
    const auto agg = aggregate_category(results, Axis::Place, "labiodental", 0.2, 1e-4);
    EXPECT_EQ(agg.members, (std::vector<std::string>{"F", "V"}));
    ASSERT_EQ(agg.n_speakers, 4u);
    std::vector<double> avg;
    std::vector<double> rat;
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        avg.push_back((fm[i] + vm[i]) / 2.0);
        rat.push_back(ratings[i]);
        EXPECT_DOUBLE_EQ(agg.speaker_means[i].mean_prediction, avg.back());
    }
    EXPECT_NEAR(agg.r, plain_pearson(avg, rat), 1e-12);
    EXPECT_NEAR(agg.p, correlation_p_value(agg.r, 4), 1e-12);
}

TEST(Aggregate, CategoryNotDominant)
{
    const std::vector<PairResult> results{pair("B6", "F", 0.6, 1e-3)};  // fails the 1e-4 gate
    try {
        (void)aggregate_category(results, Axis::Place, "labiodental", 0.2, 1e-4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("category not dominant"), std::string::npos);
    }
    EXPECT_TRUE(rank_categories(results, Axis::Place, 0.2, 1e-4).empty());
}

TEST(Aggregate, UnknownCategory)
{
    EXPECT_THROW((void)aggregate_category(std::vector<PairResult>{}, Axis::Place, "retroflex", 0.2, 1e-4), Error);
}

TEST(SelectionReport, StrictIsSubsetOfLoose)
{
    const std::vector<PairResult> results{pair("B6", "F", 0.6, 1e-6), pair("B6", "V", 0.5, 5e-4)};
    const auto rep = build_selection_report(results, "B6", Thresholds{});
    EXPECT_EQ(rep.selected.entries.size(), 2u);
    ASSERT_EQ(rep.selected_strict.entries.size(), 1u);
    EXPECT_EQ(rep.selected_strict.entries[0].phoneme, "F");
}

TEST(SelectionReport, GroupsBySymptom)
{
    const std::vector<PairResult> results{pair("B6", "F", 0.6, 1e-6), pair("B7", "V", 0.5, 1e-6)};
    const auto reps = build_selection_reports(results, {"B6", "B7", "M1"}, Thresholds{});
    ASSERT_EQ(reps.size(), 3u);
    EXPECT_TRUE(reps[0].selected.contains("F"));
    EXPECT_TRUE(reps[1].selected.contains("V"));
    EXPECT_TRUE(reps[2].selected.entries.empty());
    EXPECT_EQ(reps[2].symptom, "M1");
}
