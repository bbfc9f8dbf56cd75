#pragma once

// Psychiatric rating scales (BPRS, MADRS, PANSS): the 66-symptom registry,
// rating validation and ratings CSV ingestion.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonograde/error.hpp"
#include "phonograde/text.hpp"

namespace phonograde {

enum class Scale { BPRS, MADRS, PANSS };

constexpr std::string_view to_string(Scale s) noexcept
{
    switch (s) {
    case Scale::BPRS: return "BPRS";
    case Scale::MADRS: return "MADRS";
    case Scale::PANSS: return "PANSS";
    }
    return "?";
}

struct SymptomSpec {
    std::string code;
    Scale scale = Scale::BPRS;
    std::string description;
    int min_rating = 1;
    int max_rating = 7;
    bool is_total = false;
};

struct RatingViolation {
    std::string code;
    long long value = 0;
    int min_rating = 0;
    int max_rating = 0;

    [[nodiscard]] std::string message() const
    {
        return code + " allows " + std::to_string(min_rating) + "–" + std::to_string(max_rating) + ", got " +
               std::to_string(value);
    }
};

/// ok (nullopt) iff min_rating <= value <= max_rating.
inline std::optional<RatingViolation> validate_rating(const SymptomSpec& spec, long long value)
{
    if (value >= spec.min_rating && value <= spec.max_rating) {
        return std::nullopt;
    }
    return RatingViolation{spec.code, value, spec.min_rating, spec.max_rating};
}

class ScaleRegistry {
public:
    explicit ScaleRegistry(std::vector<SymptomSpec> symptoms) : symptoms_(std::move(symptoms))
    {
        for (std::size_t i = 0; i < symptoms_.size(); ++i) {
            if (!index_.emplace(symptoms_[i].code, i).second) {
                throw Error("duplicate symptom code " + symptoms_[i].code);
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return symptoms_.size(); }
    [[nodiscard]] const std::vector<SymptomSpec>& symptoms() const noexcept { return symptoms_; }

    [[nodiscard]] const SymptomSpec* find(std::string_view code) const
    {
        const auto it = index_.find(std::string(code));
        return it == index_.end() ? nullptr : &symptoms_[it->second];
    }

    [[nodiscard]] const SymptomSpec& at(std::string_view code) const
    {
        if (const auto* s = find(code)) {
            return *s;
        }
        throw Error("unknown symptom code: " + std::string(code));
    }

    [[nodiscard]] std::vector<const SymptomSpec*> of_scale(Scale scale) const
    {
        std::vector<const SymptomSpec*> out;
        for (const auto& s : symptoms_) {
            if (s.scale == scale) {
                out.push_back(&s);
            }
        }
        return out;
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : symptoms_) {
            arr.push_back({{"code", s.code},
                           {"scale", to_string(s.scale)},
                           {"description", s.description},
                           {"min", s.min_rating},
                           {"max", s.max_rating},
                           {"is_total", s.is_total}});
        }
        return arr;
    }

private:
    std::vector<SymptomSpec> symptoms_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// The 66 symptoms: BPRS B1-B24, MADRS M1-M10, PANSS P01/P02 totals plus
/// P1-P7, N1-N7 and G1-G16. Totals take the summed item ranges: P02 over
/// the seven positive items (7-49), P01 over the sixteen general items
/// (16-112).
inline const ScaleRegistry& load_scale_registry()
{
    static const ScaleRegistry registry = [] {
        std::vector<SymptomSpec> v;
        auto add = [&v](Scale scale, std::string code, std::string desc, int lo, int hi, bool total = false) {
            v.push_back({std::move(code), scale, std::move(desc), lo, hi, total});
        };
        const char* bprs[] = {"Somatic concerns",
                              "Anxiety",
                              "Depression",
                              "Suicidality",
                              "Guilt",
                              "Hostility",
                              "Elated Mood",
                              "Grandiosity",
                              "Suspiciousness",
                              "Hallucinations",
                              "Unusual thought content",
                              "Bizarre behavior",
                              "Self-neglect",
                              "Disorientation",
                              "Conceptual disorganization",
                              "Blunted affect",
                              "Emotional withdrawal",
                              "Motor retardation",
                              "Tension",
                              "Uncooperativeness",
                              "Excitement",
                              "Distractability",
                              "Motor hyperactivity",
                              "Mannerisms and posturing"};
        for (int i = 0; i < 24; ++i) {
            add(Scale::BPRS, "B" + std::to_string(i + 1), bprs[i], 1, 7);
        }
        const char* madrs[] = {"Apparent sadness",
                               "Reported sadness",
                               "Inner tension",
                               "Reduced sleep",
                               "Reduced appetite",
                               "Concentration difficulties",
                               "Lassitude",
                               "Inability to feel",
                               "Pessimistic thoughts",
                               "Suicidal thoughts"};
        for (int i = 0; i < 10; ++i) {
            add(Scale::MADRS, "M" + std::to_string(i + 1), madrs[i], 0, 6);
        }
        add(Scale::PANSS, "P01", "General scale total", 16, 112, true);
        add(Scale::PANSS, "P02", "Positive scale total", 7, 49, true);
        const char* positive[] = {"Delusions",  "Conceptual disorganization", "Hallucinatory behavior",
                                  "Excitement", "Grandiosity",                "Suspiciousness/persecution",
                                  "Hostility"};
        for (int i = 0; i < 7; ++i) {
            add(Scale::PANSS, "P" + std::to_string(i + 1), positive[i], 1, 7);
        }
        const char* negative[] = {"Blunted affect",
                                  "Emotional withdrawal",
                                  "Poor rapport",
                                  "Passive/apathetic social withdrawal",
                                  "Difficulty in abstract thinking",
                                  "Lack of spontaneity/conversation flow",
                                  "Stereotyped thinking"};
        for (int i = 0; i < 7; ++i) {
            add(Scale::PANSS, "N" + std::to_string(i + 1), negative[i], 1, 7);
        }
        const char* general[] = {"Somatic concern",
                                 "Anxiety",
                                 "Guilt feelings",
                                 "Tension",
                                 "Mannerisms and posturing",
                                 "Depression",
                                 "Motor retardation",
                                 "Uncooperativeness",
                                 "Unusual thought content",
                                 "Disorientation",
                                 "Poor attention",
                                 "Lack of judgment and insight",
                                 "Disturbance of volition",
                                 "Poor impulse control",
                                 "Preoccupation",
                                 "Active social avoidance"};
        for (int i = 0; i < 16; ++i) {
            add(Scale::PANSS, "G" + std::to_string(i + 1), general[i], 1, 7);
        }
        return ScaleRegistry(std::move(v));
    }();
    return registry;
}

/// Clinician ratings keyed by (speaker, symptom code).
class RatingTable {
public:
    using Key = std::pair<std::string, std::string>;

    /// Inserts after validation; throws on range violation or duplicate key.
    void add(const ScaleRegistry& registry, const std::string& speaker, const std::string& code, long long value)
    {
        const SymptomSpec& spec = registry.at(code);
        if (auto v = validate_rating(spec, value)) {
            throw Error("rating " + std::to_string(value) + " out of range " + std::to_string(v->min_rating) + "–" +
                        std::to_string(v->max_rating) + " for " + code);
        }
        if (!ratings_.emplace(Key{speaker, code}, static_cast<int>(value)).second) {
            throw Error("duplicate rating for (" + speaker + ", " + code + ")");
        }
    }

    [[nodiscard]] std::optional<int> get(std::string_view speaker, std::string_view code) const
    {
        const auto it = ratings_.find(Key{std::string(speaker), std::string(code)});
        if (it == ratings_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::size_t size() const noexcept { return ratings_.size(); }
    [[nodiscard]] const std::map<Key, int>& entries() const noexcept { return ratings_; }

    [[nodiscard]] std::set<std::string> speakers() const
    {
        std::set<std::string> out;
        for (const auto& [key, value] : ratings_) {
            out.insert(key.first);
        }
        return out;
    }

private:
    std::map<Key, int> ratings_;
};

/// Parses `speaker_id,symptom_code,rating` CSV. Errors carry 1-based line
/// numbers (the header is line 1).
inline RatingTable parse_ratings(std::istream& in, const ScaleRegistry& registry)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "speaker_id,symptom_code,rating") {
        throw Error("ratings: expected header 'speaker_id,symptom_code,rating'");
    }
    RatingTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto row = text::strip_cr(line);
        if (text::trim(row).empty()) {
            continue;
        }
        const auto at = " at line " + std::to_string(lineno);
        const auto fields = text::split(row, ',');
        if (fields.size() != 3) {
            throw Error("malformed row" + at + ": expected 3 fields, got " + std::to_string(fields.size()));
        }
        const std::string speaker(text::trim(fields[0]));
        const std::string code(text::trim(fields[1]));
        if (speaker.empty()) {
            throw Error("malformed row" + at + ": empty speaker_id");
        }
        const SymptomSpec* spec = registry.find(code);
        if (spec == nullptr) {
            throw Error("unknown symptom code " + code + at);
        }
        const auto value = text::parse_int(fields[2]);
        if (!value) {
            throw Error("malformed row" + at + ": rating '" + std::string(text::trim(fields[2])) +
                        "' is not an integer");
        }
        if (validate_rating(*spec, *value)) {
            throw Error("rating " + std::to_string(*value) + " out of range " + std::to_string(spec->min_rating) +
                        "–" + std::to_string(spec->max_rating) + " for " + code + at);
        }
        table.add(registry, speaker, code, *value);
    }
    return table;
}

inline RatingTable load_ratings(const std::filesystem::path& path, const ScaleRegistry& registry)
{
    std::ifstream in(path);
    if (!in) {
        throw Error("missing ratings file: " + path.string());
    }
    return parse_ratings(in, registry);
}

}  // namespace phonograde
