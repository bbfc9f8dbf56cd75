#pragma once

// Run artifacts: the pairs.csv / speaker_means.csv evaluation export, run
// metadata, and the report.json / report.md / chart.json views.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonograde/error.hpp"
#include "phonograde/eval.hpp"
#include "phonograde/phonetics.hpp"
#include "phonograde/rng.hpp"
#include "phonograde/scales.hpp"
#include "phonograde/select.hpp"
#include "phonograde/text.hpp"

namespace phonograde {

inline constexpr std::string_view kReportSchema = "phonograde/1";
inline constexpr std::string_view kNoPredictive = "no predictive phonemes";
inline constexpr std::string_view kPairsHeader = "symptom,phoneme,n,r,p,per_speaker_r,status";
inline constexpr std::string_view kSpeakerMeansHeader = "symptom,phoneme,speaker_id,mean_prediction,rating,n";
inline constexpr std::string_view kAggregationNote =
    "category aggregate = Pearson r over speakers of the mean, across member consonants passing "
    "r > r_threshold and p <= p_category, of each member's per-speaker mean LOSO prediction";

/// Identity of a run. `config` is the effective evaluation config; it is
/// what the run id hashes, so it must not hold paths, thresholds or the
/// parallelism degree.
struct RunMetadata {
    std::string run_id;
    nlohmann::json config = nlohmann::json::object();
};

inline std::string compute_run_id(const nlohmann::json& config)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "run-%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

inline RunMetadata make_run_metadata(nlohmann::json config)
{
    RunMetadata meta;
    meta.run_id = compute_run_id(config);
    meta.config = std::move(config);
    return meta;
}

namespace detail {

inline std::string opt_exact(const std::optional<double>& v) { return v ? text::exact(*v) : std::string(); }

inline std::optional<double> opt_parse(std::string_view field, const std::string& at)
{
    if (text::trim(field).empty()) {
        return std::nullopt;
    }
    const auto v = text::parse_double(field);
    if (!v) {
        throw Error("malformed number '" + std::string(text::trim(field)) + "'" + at);
    }
    return v;
}

inline std::size_t size_field(std::string_view field, const std::string& at)
{
    const auto v = text::parse_int(field);
    if (!v || *v < 0) {
        throw Error("malformed count '" + std::string(text::trim(field)) + "'" + at);
    }
    return static_cast<std::size_t>(*v);
}

inline void expect_header(std::istream& in, std::string_view header, const char* what)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != header) {
        throw Error(std::string(what) + ": expected header '" + std::string(header) + "'");
    }
}

inline double sig(double v) { return text::round_sig(v, 6); }

inline nlohmann::json sig_or_null(const std::optional<double>& v)
{
    return v ? nlohmann::json(sig(*v)) : nlohmann::json(nullptr);
}

}  // namespace detail

// ---- pairs.csv / speaker_means.csv: exact floats, lossless round trip ----

inline void write_pairs_csv(std::ostream& out, std::span<const PairResult> results)
{
    out << kPairsHeader << '\n';
    for (const auto& r : results) {
        out << r.symptom << ',' << r.phoneme << ',' << r.n << ',' << detail::opt_exact(r.r) << ','
            << detail::opt_exact(r.p) << ',' << detail::opt_exact(r.per_speaker_r) << ',' << to_string(r.status)
            << '\n';
    }
}

inline void write_speaker_means_csv(std::ostream& out, std::span<const PairResult> results)
{
    out << kSpeakerMeansHeader << '\n';
    for (const auto& r : results) {
        for (const auto& sm : r.speaker_means) {
            out << r.symptom << ',' << r.phoneme << ',' << sm.speaker_id << ',' << text::exact(sm.mean_prediction)
                << ',' << sm.rating << ',' << sm.n << '\n';
        }
    }
}

inline std::vector<PairResult> read_pairs_csv(std::istream& in)
{
    detail::expect_header(in, kPairsHeader, "pairs.csv");
    std::vector<PairResult> out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = text::strip_cr(line);
        if (text::trim(row).empty()) {
            continue;
        }
        const std::string at = " at line " + std::to_string(lineno);
        const auto f = text::split(row, ',');
        if (f.size() != 7) {
            throw Error("pairs.csv: malformed row" + at);
        }
        PairResult r;
        r.symptom = std::string(text::trim(f[0]));
        r.phoneme = std::string(text::trim(f[1]));
        r.n = detail::size_field(f[2], at);
        r.r = detail::opt_parse(f[3], at);
        r.p = detail::opt_parse(f[4], at);
        r.per_speaker_r = detail::opt_parse(f[5], at);
        r.status = parse_pair_status(text::trim(f[6]));
        out.push_back(std::move(r));
    }
    return out;
}

/// Attaches speaker means read from CSV to the matching pair results.
inline void read_speaker_means_csv(std::istream& in, std::vector<PairResult>& results)
{
    detail::expect_header(in, kSpeakerMeansHeader, "speaker_means.csv");
    std::map<std::pair<std::string, std::string>, PairResult*> index;
    for (auto& r : results) {
        index[{r.symptom, r.phoneme}] = &r;
    }
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = text::strip_cr(line);
        if (text::trim(row).empty()) {
            continue;
        }
        const std::string at = " at line " + std::to_string(lineno);
        const auto f = text::split(row, ',');
        if (f.size() != 6) {
            throw Error("speaker_means.csv: malformed row" + at);
        }
        const auto it = index.find({std::string(text::trim(f[0])), std::string(text::trim(f[1]))});
        if (it == index.end()) {
            throw Error("speaker_means.csv: no pair result for row" + at);
        }
        SpeakerMean sm;
        sm.speaker_id = std::string(text::trim(f[2]));
        const auto mean = text::parse_double(f[3]);
        const auto rating = text::parse_int(f[4]);
        if (!mean || !rating) {
            throw Error("speaker_means.csv: malformed number" + at);
        }
        sm.mean_prediction = *mean;
        sm.rating = static_cast<int>(*rating);
        sm.n = detail::size_field(f[5], at);
        it->second->speaker_means.push_back(std::move(sm));
    }
}

inline nlohmann::json run_json(const RunMetadata& meta)
{
    return {{"schema", kReportSchema}, {"run_id", meta.run_id}, {"config", meta.config}};
}

inline RunMetadata parse_run_json(const nlohmann::json& j)
{
    if (j.value("schema", "") != kReportSchema) {
        throw Error("run.json: unsupported schema");
    }
    RunMetadata meta;
    meta.run_id = j.at("run_id").get<std::string>();
    meta.config = j.at("config");
    if (compute_run_id(meta.config) != meta.run_id) {
        throw Error("run.json: run id does not match its config");
    }
    return meta;
}

// ---- report.json ----

namespace detail {

inline nlohmann::json selection_json(const Selection& sel)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : sel.entries) {
        arr.push_back({{"phoneme", e.phoneme}, {"r", sig(e.r)}, {"p", sig(e.p)}, {"n", e.n}});
    }
    return arr;
}

inline nlohmann::json categories_json(const std::vector<CategoryAggregate>& ranking)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : ranking) {
        arr.push_back({{"category", c.category},
                       {"members", c.members},
                       {"r", sig(c.r)},
                       {"p", sig(c.p)},
                       {"n_speakers", c.n_speakers}});
    }
    return arr;
}

}  // namespace detail

inline nlohmann::json thresholds_json(const Thresholds& th)
{
    return {{"r", th.r}, {"p_select", th.p_select}, {"p_category", th.p_category}};
}

/// Consonant chart keyed "manner|place|voicing", then consonant, then
/// p threshold, listing the symptoms the consonant is selected for.
inline nlohmann::json chart_json(std::span<const SelectionReport> selections, const Thresholds& th)
{
    const std::string loose = text::format_g(th.p_select);
    const std::string strict = text::format_g(th.p_category);
    nlohmann::json chart = nlohmann::json::object();
    for (const auto& cls : phoneme_registry()) {
        if (cls.kind != PhonemeKind::Consonant) {
            continue;
        }
        const std::string label(cls.label);
        nlohmann::json at_loose = nlohmann::json::array();
        nlohmann::json at_strict = nlohmann::json::array();
        for (const auto& rep : selections) {
            if (rep.selected.contains(label)) {
                at_loose.push_back(rep.symptom);
            }
            if (rep.selected_strict.contains(label)) {
                at_strict.push_back(rep.symptom);
            }
        }
        chart[chart_key(cls)][label] = {{loose, at_loose}, {strict, at_strict}};
    }
    return chart;
}

inline void check_run_ids(const RunMetadata& meta, std::span<const SelectionReport> selections)
{
    for (const auto& s : selections) {
        if (s.run_id != meta.run_id) {
            throw Error("inconsistent run ids: results from " + meta.run_id + ", selection for " + s.symptom +
                        " from " + (s.run_id.empty() ? "<none>" : s.run_id));
        }
    }
}

/// Canonical report document: object keys sorted, floats at 6 significant
/// digits, symptoms in the order given.
inline nlohmann::json report_json(const RunMetadata& meta, std::span<const PairResult> results,
                                  std::span<const SelectionReport> selections, const Thresholds& th)
{
    check_run_ids(meta, selections);
    const auto& registry = load_scale_registry();
    nlohmann::json symptoms = nlohmann::json::array();
    for (const auto& rep : selections) {
        nlohmann::json s = {{"symptom", rep.symptom},
                            {"selected", detail::selection_json(rep.selected)},
                            {"selected_strict", detail::selection_json(rep.selected_strict)}};
        if (const auto* spec = registry.find(rep.symptom)) {
            s["description"] = spec->description;
            s["scale"] = to_string(spec->scale);
        }
        if (rep.selected.entries.empty()) {
            s["marker"] = kNoPredictive;
        }
        nlohmann::json cats = nlohmann::json::object();
        for (const auto& [axis, ranking] : rep.category_rankings) {
            cats[std::string(to_string(axis))] = detail::categories_json(ranking);
        }
        s["categories"] = std::move(cats);
        symptoms.push_back(std::move(s));
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& r : results) {
        pairs.push_back({{"symptom", r.symptom},
                         {"phoneme", r.phoneme},
                         {"n", r.n},
                         {"r", detail::sig_or_null(r.r)},
                         {"p", detail::sig_or_null(r.p)},
                         {"per_speaker_r", detail::sig_or_null(r.per_speaker_r)},
                         {"status", to_string(r.status)}});
    }
    return {{"schema", kReportSchema},
            {"run", {{"run_id", meta.run_id},
                     {"config", meta.config},
                     {"thresholds", thresholds_json(th)},
                     {"aggregation", kAggregationNote}}},
            {"symptoms", std::move(symptoms)},
            {"pairs", std::move(pairs)},
            {"chart", chart_json(selections, th)}};
}

inline std::string dump_canonical(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---- report.md ----

/// Place categories whose aggregate p is below p_select, in ranking order.
inline std::vector<const CategoryAggregate*> reported_places(const SelectionReport& rep)
{
    std::vector<const CategoryAggregate*> out;
    if (const auto it = rep.category_rankings.find(Axis::Place); it != rep.category_rankings.end()) {
        for (const auto& c : it->second) {
            if (c.p < rep.thresholds.p_select) {
                out.push_back(&c);
            }
        }
    }
    return out;
}

inline std::string report_markdown(const RunMetadata& meta, std::span<const SelectionReport> selections,
                                   const Thresholds& th)
{
    check_run_ids(meta, selections);
    const auto& registry = load_scale_registry();
    std::ostringstream md;
    md << "# Phoneme selection report\n\n";
    md << "Run `" << meta.run_id << "`. A phoneme is selected when r > " << text::format_g(th.r)
       << " and p <= " << text::format_g(th.p_select) << "; category members must pass p <= "
       << text::format_g(th.p_category) << ".\n\n";

    md << "## Place categories by symptom\n\n";
    md << "Categories with aggregate p < " << text::format_g(th.p_select)
       << ", in decreasing order of correlation.\n\n";
    md << "| Symptom | Place categories |\n|---|---|\n";
    for (const auto& rep : selections) {
        const auto places = reported_places(rep);
        md << "| " << rep.symptom << " | ";
        if (places.empty()) {
            md << "—";
        }
        for (std::size_t i = 0; i < places.size(); ++i) {
            md << (i ? ", " : "") << places[i]->category;
        }
        md << " |\n";
    }

    md << "\n## Selected phonemes\n\n";
    md << "| Symptom | Description | Phonemes (r, p) |\n|---|---|---|\n";
    for (const auto& rep : selections) {
        const auto* spec = registry.find(rep.symptom);
        md << "| " << rep.symptom << " | " << (spec ? spec->description : std::string()) << " | ";
        if (rep.selected.entries.empty()) {
            md << "— " << kNoPredictive;
        }
        for (std::size_t i = 0; i < rep.selected.entries.size(); ++i) {
            const auto& e = rep.selected.entries[i];
            md << (i ? ", " : "") << e.phoneme << " (" << text::format_g(e.r, 3) << ", "
               << text::format_g(e.p, 3) << ")";
        }
        md << " |\n";
    }
    return md.str();
}

// ---- emission ----

enum class ReportFormat { Json, Markdown };

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& body)
{
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << body) || !out.flush()) {
        throw Error("cannot write " + path.string());
    }
}

}  // namespace detail

/// Writes report.json (plus chart.json) or report.md into `out_dir`.
inline void emit_report(const RunMetadata& meta, std::span<const PairResult> results,
                        std::span<const SelectionReport> selections, const Thresholds& th, ReportFormat format,
                        const std::filesystem::path& out_dir)
{
    check_run_ids(meta, selections);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (format == ReportFormat::Json) {
        const auto doc = report_json(meta, results, selections, th);
        detail::write_text(out_dir / "report.json", dump_canonical(doc));
        detail::write_text(out_dir / "chart.json", dump_canonical(doc.at("chart")));
    } else {
        detail::write_text(out_dir / "report.md", report_markdown(meta, selections, th));
    }
}

/// Writes the evaluation export: pairs.csv, speaker_means.csv and run.json.
inline void write_evaluation(const RunMetadata& meta, std::span<const PairResult> results,
                             const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ostringstream pairs;
    write_pairs_csv(pairs, results);
    detail::write_text(out_dir / "pairs.csv", pairs.str());
    std::ostringstream means;
    write_speaker_means_csv(means, results);
    detail::write_text(out_dir / "speaker_means.csv", means.str());
    detail::write_text(out_dir / "run.json", dump_canonical(run_json(meta)));
}

struct Evaluation {
    RunMetadata meta;
    std::vector<PairResult> results;
};

inline Evaluation read_evaluation(const std::filesystem::path& dir)
{
    auto open = [&](const char* name) {
        std::ifstream in(dir / name);
        if (!in) {
            throw Error("missing " + (dir / name).string());
        }
        return in;
    };
    Evaluation ev;
    auto run = open("run.json");
    try {
        ev.meta = parse_run_json(nlohmann::json::parse(run));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("run.json: ") + e.what());
    }
    auto pairs = open("pairs.csv");
    ev.results = read_pairs_csv(pairs);
    auto means = open("speaker_means.csv");
    read_speaker_means_csv(means, ev.results);
    return ev;
}

/// Symptoms in registry order that occur in `results`.
inline std::vector<std::string> symptoms_in(std::span<const PairResult> results)
{
    std::set<std::string> present;
    for (const auto& r : results) {
        present.insert(r.symptom);
    }
    std::vector<std::string> out;
    for (const auto& s : load_scale_registry().symptoms()) {
        if (present.count(s.code)) {
            out.push_back(s.code);
        }
    }
    return out;
}

}  // namespace phonograde
