#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "phonograde/eval.hpp"
#include "phonograde/model.hpp"
#include "phonograde/rng.hpp"

using namespace phonograde;

namespace {

Instance make_instance(const std::string& speaker, std::size_t idx, int rating, const FeatureValues& values)
{
    Instance inst;
    inst.features.values = values;
    inst.features.provenance = {"rec_" + speaker, speaker, "F", static_cast<double>(idx) * 0.1, 0.05};
    inst.rating = rating;
    inst.speaker_id = speaker;
    return inst;
}

/// Ratings 1-7 with feature 0 carrying the rating (plus jitter); the other
/// features are noise. Instances alternate between `n_speakers` speakers.
std::vector<Instance> identity_task(std::size_t n, std::size_t n_speakers, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    std::vector<Instance> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int rating = 1 + static_cast<int>(rng.below(7));
        FeatureValues v{};
        for (double& x : v) {
            x = rng.normal();
        }
        v[0] = rating + rng.uniform(-0.4, 0.4);
        out.push_back(make_instance("S" + std::to_string(i % n_speakers), i, rating, v));
    }
    return out;
}

std::vector<double> predict_all(const Forest& f, const std::vector<Instance>& probe)
{
    std::vector<double> out;
    for (const auto& inst : probe) {
        out.push_back(f.predict(inst.features));
    }
    return out;
}

}  // namespace

TEST(Rng, SplitMix64ReferenceOutputs)
{
    SplitMix64 r(1234567);
    EXPECT_EQ(r.next(), 6457827717110365317ULL);
    EXPECT_EQ(r.next(), 3203168211198807973ULL);
    EXPECT_EQ(r.next(), 9817491932198370423ULL);
}

TEST(Rng, TreeSeedUsesFnv1aOfKey)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("B6|F|tree:3"), 10672172671723125018ULL);
    EXPECT_EQ(tree_seed(42, "B6|F", 3), 42ULL ^ 10672172671723125018ULL);
}

TEST(Rng, BelowStaysInRange)
{
    SplitMix64 r(5);
    for (int i = 0; i < 10000; ++i) {
        ASSERT_LT(r.below(7), 7u);
    }
}

TEST(Forest, ConstantTargetsGiveExactPredictions)
{
    auto data = identity_task(60, 3, 1);
    for (auto& inst : data) {
        inst.rating = 4;
    }
    const Forest f = train_forest(data, RfConfig{}, "k");
    for (double p : predict_all(f, identity_task(20, 2, 9))) {
        EXPECT_EQ(p, 4.0);
    }
}

TEST(Forest, LearnsPlantedIdentityUnderSpeakerSplit)
{
    Dataset d;
    d.symptom = "B6";
    d.phoneme = "F";
    d.instances = identity_task(500, 2, 7);
    std::sort(d.instances.begin(), d.instances.end(), canonical_less);
    const LosoResult loso = run_loso(d, RfConfig{});
    std::vector<double> truth;
    for (const auto& inst : d.instances) {
        truth.push_back(inst.rating);
    }
    EXPECT_GT(*pearson(loso.predictions, truth), 0.95);
}

TEST(Forest, DeterministicForSameSeed)
{
    const auto data = identity_task(200, 4, 3);
    const auto probe = identity_task(30, 2, 99);
    RfConfig cfg;
    cfg.seed = 17;
    EXPECT_EQ(predict_all(train_forest(data, cfg, "k"), probe), predict_all(train_forest(data, cfg, "k"), probe));
    EXPECT_EQ(predict_all(train_forest(data, cfg, "k", 1), probe),
              predict_all(train_forest(data, cfg, "k", 3), probe));
    cfg.seed = 18;
    EXPECT_NE(predict_all(train_forest(data, RfConfig{}, "k"), probe), predict_all(train_forest(data, cfg, "k"), probe));
}

TEST(Forest, InputOrderInvariant)
{
    const auto data = identity_task(200, 4, 3);
    auto shuffled = data;
    std::mt19937 gen(1);
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto probe = identity_task(30, 2, 99);
    EXPECT_EQ(predict_all(train_forest(data, RfConfig{}, "k"), probe),
              predict_all(train_forest(shuffled, RfConfig{}, "k"), probe));
}

TEST(Forest, PredictionsWithinTrainingRange)
{
    auto data = identity_task(150, 3, 4);
    for (auto& inst : data) {
        inst.rating = 2 + inst.rating % 4;  // 2..5
    }
    const Forest f = train_forest(data, RfConfig{}, "k");
    EXPECT_EQ(f.target_min(), 2.0);
    EXPECT_EQ(f.target_max(), 5.0);
    SplitMix64 rng(8);
    for (int i = 0; i < 200; ++i) {
        FeatureValues v{};
        for (double& x : v) {
            x = 5.0 * rng.normal();
        }
        const double p = f.predict(v);
        ASSERT_GE(p, 2.0);
        ASSERT_LE(p, 5.0);
    }
    for (const auto& t : f.trees()) {
        for (const auto& n : t.nodes()) {
            if (n.feature < 0) {
                ASSERT_GE(n.value, 2.0);
                ASSERT_LE(n.value, 5.0);
            }
        }
    }
}

TEST(Forest, SingleInstanceIsConstant)
{
    const auto data = identity_task(1, 1, 2);
    const Forest f = train_forest(data, RfConfig{}, "k");
    for (double p : predict_all(f, identity_task(10, 2, 3))) {
        EXPECT_EQ(p, data[0].rating);
    }
}

TEST(Forest, AveragesTreeOutputs)
{
    using Node = RegressionTree::Node;
    const auto leaf = [](double v) {
        Node n;
        n.value = v;
        return n;
    };
    Node split;
    split.feature = 0;
    split.threshold = 0.0;
    split.left = 1;
    split.right = 2;
    const RegressionTree t1 = RegressionTree::from_nodes({split, leaf(3.0), leaf(6.0)});
    const RegressionTree t2 = RegressionTree::from_nodes({leaf(5.0)});
    const Forest single({t1}, RfConfig{}, 1, 7);
    FeatureValues x{};
    x[0] = -1.0;
    EXPECT_EQ(single.predict(x), 3.0);
    x[0] = 0.0;  // x <= threshold goes left
    EXPECT_EQ(single.predict(x), 3.0);
    x[0] = 0.5;
    EXPECT_EQ(single.predict(x), 6.0);
    const RegressionTree t0 = RegressionTree::from_nodes({leaf(2.0)});
    const Forest pair({t0, t2}, RfConfig{}, 1, 7);
    EXPECT_EQ(pair.predict(x), 3.5);
}

TEST(Forest, DimensionMismatch)
{
    const Forest f = train_forest(identity_task(30, 2, 1), RfConfig{}, "k");
    const std::vector<double> wrong(63, 0.0);
    EXPECT_THROW((void)f.predict(wrong), Error);
}

TEST(Forest, EmptyDatasetAndBadConfig)
{
    EXPECT_THROW((void)train_forest(std::vector<Instance>{}, RfConfig{}, "k"), Error);
    RfConfig bad;
    bad.max_features = 65;
    EXPECT_THROW((void)train_forest(identity_task(10, 2, 1), bad, "k"), UsageError);
    bad = RfConfig{};
    bad.n_trees = 0;
    EXPECT_THROW(bad.validate(), UsageError);
}

// Features 3 and 10 are identical and the rest constant, so every split
// score ties between them; the lower index wins and the threshold sits at
// the midpoint of the straddling values.
TEST(Tree, TiesGoToLowerFeatureAndMidpointThreshold)
{
    std::vector<Instance> data;
    for (int i = 0; i < 40; ++i) {
        FeatureValues v{};
        const int rating = i < 20 ? 1 : 7;
        v[3] = v[10] = i < 20 ? 1.0 : 2.0;
        data.push_back(make_instance("S", static_cast<std::size_t>(i), rating, v));
    }
    RfConfig cfg;
    cfg.n_trees = 5;
    cfg.max_features = 64;
    cfg.min_leaf_size = 1;
    const Forest f = train_forest(data, cfg, "k");
    for (const auto& t : f.trees()) {
        const auto& root = t.nodes().at(0);
        ASSERT_EQ(root.feature, 3);
        EXPECT_EQ(root.threshold, 1.5);
    }
}

TEST(Tree, MaxDepthCapsGrowth)
{
    RfConfig cfg;
    cfg.n_trees = 3;
    cfg.max_depth = 0;
    const Forest stumps = train_forest(identity_task(100, 2, 1), cfg, "k");
    for (const auto& t : stumps.trees()) {
        EXPECT_EQ(t.nodes().size(), 1u);
    }
}

// Variance-reduction sanity: 4x the trees never costs more than 10% MSE.
TEST(Forest, MoreTreesDoNotHurt)
{
    const auto train = identity_task(300, 3, 21);
    const auto test = identity_task(200, 2, 22);
    auto mse = [&](std::size_t trees) {
        RfConfig cfg;
        cfg.n_trees = trees;
        const Forest f = train_forest(train, cfg, "k");
        double s = 0.0;
        for (const auto& inst : test) {
            const double e = f.predict(inst.features) - inst.rating;
            s += e * e;
        }
        return s / static_cast<double>(test.size());
    };
    EXPECT_LE(mse(400), 1.10 * mse(100));
}
