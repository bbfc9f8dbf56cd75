#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "phonograde/cli.hpp"
#include "support.hpp"

using namespace phonograde;
using testing_support::ScratchDir;
using testing_support::read_file;
using testing_support::write_file;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args)
{
    args.insert(args.begin(), "phonograde");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Outcome o;
    o.code = cli::run_command(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

/// Small planted corpus shared by the end-to-end tests.
class CliCorpus : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir_ = new ScratchDir("cli-corpus");
        const auto o = invoke({"synth", "--out", corpus().string(), "--speakers", "5", "--segments", "6", "--phonemes",
                            "F,V,S", "--plant", "B6:F,V:1.0", "--seed", "3"});
        ASSERT_EQ(o.code, 0) << o.err;
    }
    static void TearDownTestSuite()
    {
        delete dir_;
        dir_ = nullptr;
    }
    static std::filesystem::path corpus() { return dir_->path(); }

    static std::vector<std::string> inputs()
    {
        return {"--audio", (corpus() / "audio").string(), "--seg", (corpus() / "segments.tsv").string(),
                "--ratings", (corpus() / "ratings.csv").string(), "--trees", "8", "--symptoms", "B6,B7"};
    }

    static Outcome run_into(const std::filesystem::path& out, std::vector<std::string> extra = {},
                            const std::string& cmd = "run")
    {
        std::vector<std::string> args{cmd, "--out", out.string()};
        const auto in = inputs();
        args.insert(args.end(), in.begin(), in.end());
        args.insert(args.end(), extra.begin(), extra.end());
        return invoke(args);
    }

    static ScratchDir* dir_;
};

ScratchDir* CliCorpus::dir_ = nullptr;

std::set<std::string> selected_phonemes(const std::filesystem::path& selection_json, const std::string& symptom)
{
    const auto j = nlohmann::json::parse(read_file(selection_json));
    std::set<std::string> out;
    for (const auto& s : j.at("symptoms")) {
        if (s.at("symptom") == symptom) {
            for (const auto& e : s.at("selected")) {
                out.insert(e.at("phoneme").get<std::string>());
            }
        }
    }
    return out;
}

}  // namespace

TEST(Cli, UsageErrorsExitOne)
{
    EXPECT_EQ(invoke({"run", "--bogus"}).code, 1);
    EXPECT_EQ(invoke({"nosuchcommand"}).code, 1);
    EXPECT_EQ(invoke({"synth"}).code, 1);
    EXPECT_EQ(invoke({"evaluate", "--out", "/tmp/x"}).code, 1);
    EXPECT_EQ(invoke({"run", "--out", "/tmp/x", "--audio", "/nonexistent", "--seg", "/nonexistent.tsv", "--ratings",
                   "/nonexistent.csv"})
                  .code,
              1);
    EXPECT_EQ(invoke({"select", "--out", "/tmp/x", "--p-select", "2"}).code, 1);
    EXPECT_EQ(invoke({"select", "--out", "/tmp/x", "--jobs", "0"}).code, 1);
    EXPECT_EQ(invoke({"synth", "--out", "/tmp/x", "--plant", "B6:F"}).code, 1);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Cli, DataErrorsExitTwo)
{
    ScratchDir empty("cli-empty");
    const auto o = invoke({"select", "--out", empty.path().string()});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("missing"), std::string::npos);
}

TEST(Cli, ParsePlant)
{
    const auto e = cli::parse_plant("B6:F,V:0.5");
    EXPECT_EQ(e.symptom, "B6");
    EXPECT_EQ(e.phonemes, (std::vector<std::string>{"F", "V"}));
    EXPECT_EQ(e.strength, 0.5);
    EXPECT_THROW((void)cli::parse_plant("B6"), UsageError);
    EXPECT_THROW((void)cli::parse_plant("B6:F:x"), UsageError);
}

TEST(Cli, ConfigFilePrecedence)
{
    ScratchDir dir("cli-config");
    write_file(dir.path() / "cfg.json", R"({"trees": 3, "seed": 5, "p-select": 0.01})");
    cli::Flags f;
    f.config = (dir.path() / "cfg.json").string();
    f.seed = 7;
    f.jobs = 2;
    const RunConfig cfg = cli::resolve_config(f);
    EXPECT_EQ(cfg.eval.rf.n_trees, 3u);
    EXPECT_EQ(cfg.eval.rf.seed, 7u);
    EXPECT_EQ(cfg.thresholds.p_select, 0.01);
    EXPECT_EQ(cfg.thresholds.r, 0.2);
    EXPECT_EQ(cfg.jobs, 2u);

    write_file(dir.path() / "bad.json", R"({"tres": 3})");
    f.config = (dir.path() / "bad.json").string();
    EXPECT_THROW((void)cli::resolve_config(f), UsageError);
}

TEST(Cli, JobsFromEnvironment)
{
    cli::Flags f;
    ::setenv("PHONOGRADE_JOBS", "3", 1);
    EXPECT_EQ(cli::resolve_config(f).jobs, 3u);
    f.jobs = 1;
    EXPECT_EQ(cli::resolve_config(f).jobs, 1u);
    f.jobs.reset();
    ::setenv("PHONOGRADE_JOBS", "zero", 1);
    EXPECT_THROW((void)cli::resolve_config(f), UsageError);
    ::unsetenv("PHONOGRADE_JOBS");
    EXPECT_GE(cli::resolve_config(f).jobs, 1u);
}

TEST_F(CliCorpus, RunWritesAllArtifacts)
{
    ScratchDir out("cli-run");
    const auto o = run_into(out.path());
    ASSERT_EQ(o.code, 0) << o.err;
    for (const char* name : {"pairs.csv", "speaker_means.csv", "run.json", "selection.json", "report.json",
                             "report.md", "chart.json"}) {
        EXPECT_TRUE(std::filesystem::exists(out.path() / name)) << name;
    }
    EXPECT_NE(o.out.find("B6:"), std::string::npos);
    EXPECT_NE(o.out.find("B7:"), std::string::npos);
}

TEST_F(CliCorpus, JobsDoNotChangeReport)
{
    ScratchDir a("cli-j1");
    ScratchDir b("cli-j3");
    ASSERT_EQ(run_into(a.path(), {"--jobs", "1"}).code, 0);
    ASSERT_EQ(run_into(b.path(), {"--jobs", "3"}).code, 0);
    EXPECT_EQ(read_file(a.path() / "report.json"), read_file(b.path() / "report.json"));
    EXPECT_EQ(read_file(a.path() / "pairs.csv"), read_file(b.path() / "pairs.csv"));
}

TEST_F(CliCorpus, StagedCommandsMatchRun)
{
    ScratchDir whole("cli-whole");
    ScratchDir staged("cli-staged");
    ASSERT_EQ(run_into(whole.path()).code, 0);
    ASSERT_EQ(run_into(staged.path(), {}, "evaluate").code, 0);
    EXPECT_FALSE(std::filesystem::exists(staged.path() / "selection.json"));
    ASSERT_EQ(invoke({"select", "--out", staged.path().string()}).code, 0);
    ASSERT_EQ(invoke({"report", "--out", staged.path().string()}).code, 0);
    for (const char* name : {"selection.json", "report.json", "report.md", "chart.json"}) {
        EXPECT_EQ(read_file(whole.path() / name), read_file(staged.path() / name)) << name;
    }
}

TEST_F(CliCorpus, StricterPSelectsSubset)
{
    ScratchDir out("cli-p");
    ASSERT_EQ(run_into(out.path(), {}, "evaluate").code, 0);
    std::set<std::string> previous;
    bool first = true;
    for (const char* p : {"0.5", "0.01", "0.001", "1e-6", "1e-12"}) {
        ASSERT_EQ(invoke({"select", "--out", out.path().string(), "--p-select", p}).code, 0);
        const auto now = selected_phonemes(out.path() / "selection.json", "B6");
        if (!first) {
            for (const auto& ph : now) {
                EXPECT_TRUE(previous.count(ph)) << ph << " at p " << p;
            }
        }
        previous = now;
        first = false;
    }
}

TEST_F(CliCorpus, StaleSelectionIsRejected)
{
    ScratchDir a("cli-stale-a");
    ScratchDir b("cli-stale-b");
    ASSERT_EQ(run_into(a.path()).code, 0);
    ASSERT_EQ(run_into(b.path(), {"--seed", "9"}, "evaluate").code, 0);
    std::filesystem::copy_file(a.path() / "selection.json", b.path() / "selection.json");
    const auto o = invoke({"report", "--out", b.path().string()});
    EXPECT_EQ(o.code, 2);
    EXPECT_NE(o.err.find("inconsistent run ids"), std::string::npos);
}

TEST_F(CliCorpus, FeaturesCommand)
{
    ScratchDir out("cli-features");
    const auto o = invoke({"features", "--out", out.path().string(), "--audio", (corpus() / "audio").string(), "--seg",
                        (corpus() / "segments.tsv").string(), "--phonemes", "F"});
    ASSERT_EQ(o.code, 0) << o.err;
    const auto csv = read_file(out.path() / "features.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 5 * 6);
}
