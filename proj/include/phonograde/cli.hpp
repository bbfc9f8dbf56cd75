#pragma once

// Command-line front end: synth, features, evaluate, select, report, run.
// Exit status 0 on success, 1 on usage errors, 2 on data errors.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phonograde/corpus.hpp"
#include "phonograde/error.hpp"
#include "phonograde/features.hpp"
#include "phonograde/pipeline.hpp"
#include "phonograde/report.hpp"
#include "phonograde/select.hpp"
#include "phonograde/synth.hpp"
#include "phonograde/text.hpp"

namespace phonograde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Flags as given on the command line; unset ones fall through to the
/// config file, then to defaults.
struct Flags {
    std::optional<std::string> audio, seg, ratings, out, config;
    std::optional<double> rate, r_threshold, p_select, p_category;
    std::optional<std::size_t> order, trees, max_features, min_leaf, max_depth, min_instances, jobs;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> phonemes, symptoms;
    bool include_vowels = false;

    // synth only
    std::optional<std::size_t> speakers, segments;
    std::vector<std::string> plants;
};

/// "B6:F,V:1.0" -> symptom B6, phonemes {F, V}, strength 1.0.
inline PlantedEffect parse_plant(const std::string& spec)
{
    const auto parts = text::split(spec, ':');
    if (parts.size() != 3) {
        throw UsageError("--plant expects SYMPTOM:PH[,PH...]:STRENGTH, got '" + spec + "'");
    }
    PlantedEffect e;
    e.symptom = std::string(text::trim(parts[0]));
    for (auto p : text::split(parts[1], ',')) {
        if (!text::trim(p).empty()) {
            e.phonemes.emplace_back(text::trim(p));
        }
    }
    const auto strength = text::parse_double(parts[2]);
    if (!strength) {
        throw UsageError("--plant: bad strength '" + std::string(parts[2]) + "'");
    }
    e.strength = *strength;
    return e;
}

inline std::vector<std::string> split_list(const std::vector<std::string>& items)
{
    std::vector<std::string> out;
    for (const auto& item : items) {
        for (auto part : text::split(item, ',')) {
            if (!text::trim(part).empty()) {
                out.emplace_back(text::trim(part));
            }
        }
    }
    return out;
}

inline std::size_t env_jobs()
{
    if (const char* env = std::getenv("PHONOGRADE_JOBS")) {
        const auto v = text::parse_int(env);
        if (!v || *v < 1) {
            throw UsageError("PHONOGRADE_JOBS must be a positive integer");
        }
        return static_cast<std::size_t>(*v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Defaults, then the JSON config file, then command-line flags.
inline RunConfig resolve_config(const Flags& f)
{
    RunConfig cfg;
    cfg.jobs = 0;  // unset marker; resolved below
    if (f.config) {
        std::ifstream in(*f.config);
        if (!in) {
            throw UsageError("--config: cannot read " + *f.config);
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("--config: " + std::string(e.what()));
        }
        apply_config_json(cfg, j);
        if (cfg.jobs == 0 && j.contains("jobs")) {
            throw UsageError("jobs must be >= 1");
        }
    }
    auto set = [](auto& dst, const auto& src) {
        if (src) {
            dst = *src;
        }
    };
    set(cfg.audio_dir, f.audio);
    set(cfg.segmentation, f.seg);
    set(cfg.ratings, f.ratings);
    set(cfg.out_dir, f.out);
    set(cfg.features.sample_rate, f.rate);
    set(cfg.features.order, f.order);
    set(cfg.eval.rf.n_trees, f.trees);
    set(cfg.eval.rf.max_features, f.max_features);
    set(cfg.eval.rf.min_leaf_size, f.min_leaf);
    if (f.max_depth) {
        cfg.eval.rf.max_depth = *f.max_depth;
    }
    set(cfg.thresholds.r, f.r_threshold);
    set(cfg.thresholds.p_select, f.p_select);
    set(cfg.thresholds.p_category, f.p_category);
    set(cfg.eval.min_instances, f.min_instances);
    set(cfg.eval.rf.seed, f.seed);
    if (!f.phonemes.empty()) {
        cfg.phonemes = split_list(f.phonemes);
    }
    if (!f.symptoms.empty()) {
        cfg.symptoms = split_list(f.symptoms);
    }
    if (f.include_vowels) {
        cfg.include_vowels = true;
    }
    if (f.jobs) {
        if (*f.jobs == 0) {
            throw UsageError("--jobs must be >= 1");
        }
        cfg.jobs = *f.jobs;
    }
    if (cfg.jobs == 0) {
        cfg.jobs = env_jobs();
    }
    return cfg;
}

inline void require_out(const RunConfig& cfg)
{
    if (cfg.out_dir.empty()) {
        throw UsageError("missing required option --out");
    }
}

inline std::vector<SelectionReport> selections_for(const Evaluation& ev, const Thresholds& th)
{
    return build_selection_reports(ev.results, symptoms_in(ev.results), th, ev.meta.run_id);
}

inline Evaluation do_evaluate(const RunConfig& cfg, std::ostream& err)
{
    cfg.validate(true);
    require_out(cfg);
    Evaluation ev;
    ev.meta = make_run_metadata(cfg.evaluation_json());
    const PreparedCorpus corpus = prepare_corpus(cfg, &err);
    ev.results = evaluate_corpus(cfg, corpus, &err);
    write_evaluation(ev.meta, ev.results, cfg.out_dir);
    // Any earlier selection now describes other results.
    std::error_code ec;
    std::filesystem::remove(cfg.out_dir / "selection.json", ec);
    return ev;
}

inline void do_select(const Evaluation& ev, const RunConfig& cfg, std::ostream& out)
{
    const auto selections = selections_for(ev, cfg.thresholds);
    detail::write_text(cfg.out_dir / "selection.json",
                       dump_canonical(selection_json(ev.meta, selections, cfg.thresholds)));
    for (const auto& rep : selections) {
        out << summary_line(rep) << '\n';
    }
}

inline void do_report(const Evaluation& ev, const RunConfig& cfg)
{
    // A selection written by an earlier `select` must belong to this run.
    if (std::ifstream sel(cfg.out_dir / "selection.json"); sel) {
        try {
            const auto j = nlohmann::json::parse(sel);
            const auto id = j.at("run").at("run_id").get<std::string>();
            if (id != ev.meta.run_id) {
                throw Error("inconsistent run ids: pairs.csv from " + ev.meta.run_id + ", selection.json from " + id);
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("selection.json: ") + e.what());
        }
    }
    const auto selections = selections_for(ev, cfg.thresholds);
    emit_report(ev.meta, ev.results, selections, cfg.thresholds, ReportFormat::Json, cfg.out_dir);
    emit_report(ev.meta, ev.results, selections, cfg.thresholds, ReportFormat::Markdown, cfg.out_dir);
}

inline void do_features(const RunConfig& cfg, std::ostream& err)
{
    cfg.validate(false);
    require_out(cfg);
    if (cfg.audio_dir.empty() || cfg.segmentation.empty()) {
        throw UsageError("features needs --audio and --seg");
    }
    const Segmentation seg = load_segmentation(cfg.segmentation, ParseMode::Lenient);
    const auto filter = cfg.phoneme_filter();
    std::vector<SegmentRecord> records;
    for (const auto& r : seg.records) {
        if (std::find(filter.begin(), filter.end(), r.label) != filter.end()) {
            records.push_back(r);
        }
    }
    AudioStore store(cfg.audio_dir, cfg.features.sample_rate);
    const auto extracted = extract_features(records, store, cfg.features, cfg.jobs);
    std::vector<FeatureVector> rows;
    for (const auto& e : extracted) {
        if (e.features) {
            rows.push_back(*e.features);
        }
    }
    std::filesystem::create_directories(cfg.out_dir);
    std::ostringstream csv;
    write_features_csv(csv, rows);
    detail::write_text(cfg.out_dir / "features.csv", csv.str());
    err << "features: wrote " << rows.size() << " of " << extracted.size() << " segment(s)\n";
}

inline void do_synth(const Flags& f, std::ostream& err)
{
    if (!f.out) {
        throw UsageError("missing required option --out");
    }
    SynthConfig sc;
    if (f.speakers) {
        sc.n_speakers = *f.speakers;
    }
    if (f.segments) {
        sc.segments_per_phoneme = *f.segments;
    }
    if (f.seed) {
        sc.seed = *f.seed;
    }
    if (f.rate) {
        sc.sample_rate = *f.rate;
    }
    if (!f.phonemes.empty()) {
        sc.phonemes = split_list(f.phonemes);
    }
    for (const auto& p : f.plants) {
        sc.planted.push_back(parse_plant(p));
    }
    FeatureConfig fc;
    if (f.order) {
        fc.order = *f.order;
    }
    sc.validate(fc.min_samples());
    const SynthCorpus corpus = generate_corpus(sc);
    write_corpus(corpus, *f.out);
    err << "synth: " << corpus.recordings.size() << " recording(s), " << corpus.segments.size()
        << " segment(s) written to " << *f.out << '\n';
}

inline void add_common(CLI::App& app, Flags& f)
{
    app.add_option("--config", f.config, "JSON config file (flags take precedence)");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--jobs", f.jobs, "worker threads (fallback: PHONOGRADE_JOBS)");
    app.add_option("--r-threshold", f.r_threshold, "selection requires r above this (default 0.2)");
    app.add_option("--p-select", f.p_select, "selection p threshold (default 0.001)");
    app.add_option("--p-category", f.p_category, "category-member p threshold (default 0.0001)");
}

inline void add_inputs(CLI::App& app, Flags& f)
{
    app.add_option("--audio", f.audio, "directory of <recording_id>.wav files");
    app.add_option("--seg", f.seg, "phoneme segmentation TSV");
    app.add_option("--ratings", f.ratings, "ratings CSV");
    app.add_option("--rate", f.rate, "analysis sample rate in Hz (default 16000)");
    app.add_option("--order", f.order, "AR model order (default 128)");
    app.add_option("--phonemes", f.phonemes, "comma-separated phoneme filter")->delimiter(',');
    app.add_flag("--include-vowels", f.include_vowels, "add vowels to the default filter");
}

inline void add_model(CLI::App& app, Flags& f)
{
    app.add_option("--trees", f.trees, "trees per forest (default 100)");
    app.add_option("--max-features", f.max_features, "candidate features per split (default 22)");
    app.add_option("--min-leaf", f.min_leaf, "minimum instances per leaf (default 5)");
    app.add_option("--max-depth", f.max_depth, "maximum tree depth (default unlimited)");
    app.add_option("--min-instances", f.min_instances, "instances needed to evaluate a pair (default 20)");
    app.add_option("--seed", f.seed, "master seed (default 0)");
    app.add_option("--symptoms", f.symptoms, "comma-separated symptom codes (default all 66)")->delimiter(',');
}

inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"phonograde: phoneme-level acoustic predictors of psychiatric symptom ratings", "phonograde"};
    app.require_subcommand(1);
    Flags f;

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted effects");
    synth->add_option("--out", f.out, "output directory")->required();
    synth->add_option("--speakers", f.speakers, "number of speakers (default 16)");
    synth->add_option("--segments", f.segments, "segments per phoneme per speaker (default 40)");
    synth->add_option("--plant", f.plants, "planted effect SYMPTOM:PH[,PH...]:STRENGTH (repeatable)");
    synth->add_option("--seed", f.seed, "seed (default 0)");
    synth->add_option("--rate", f.rate, "sample rate in Hz (default 16000)");
    synth->add_option("--order", f.order, "AR order the segments must support (default 128)");
    synth->add_option("--phonemes", f.phonemes, "comma-separated phoneme inventory")->delimiter(',');

    auto* features = app.add_subcommand("features", "extract per-segment AR log-spectrum features");
    add_common(*features, f);
    add_inputs(*features, f);

    auto* evaluate = app.add_subcommand("evaluate", "LOSO evaluation of every (symptom, phoneme) pair");
    add_common(*evaluate, f);
    add_inputs(*evaluate, f);
    add_model(*evaluate, f);

    auto* select = app.add_subcommand("select", "threshold-gated phoneme selection over an evaluation");
    add_common(*select, f);

    auto* report = app.add_subcommand("report", "write report.json, report.md and chart.json");
    add_common(*report, f);

    auto* run = app.add_subcommand("run", "evaluate, select and report in one go");
    add_common(*run, f);
    add_inputs(*run, f);
    add_model(*run, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        (void)e;
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e, out, err);
        }
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (synth->parsed()) {
            do_synth(f, err);
            return kExitOk;
        }
        const RunConfig cfg = resolve_config(f);
        if (features->parsed()) {
            do_features(cfg, err);
        } else if (evaluate->parsed()) {
            const Evaluation ev = do_evaluate(cfg, err);
            err << "evaluate: " << ev.results.size() << " pair(s), run " << ev.meta.run_id << '\n';
        } else if (select->parsed() || report->parsed()) {
            cfg.validate(false);
            require_out(cfg);
            const Evaluation ev = read_evaluation(cfg.out_dir);
            if (select->parsed()) {
                do_select(ev, cfg, out);
            } else {
                do_report(ev, cfg);
            }
        } else if (run->parsed()) {
            const Evaluation ev = do_evaluate(cfg, err);
            do_select(ev, cfg, out);
            do_report(ev, cfg);
        }
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

}  // namespace phonograde::cli
