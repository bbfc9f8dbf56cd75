#pragma once

// Phoneme inventory: 24 ARPAbet consonants with voicing/manner/place,
// 10 filler sounds, and 16 vowel labels (accepted, unclassified).

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "phonograde/error.hpp"

namespace phonograde {

enum class PhonemeKind { Consonant, Vowel, Filler };
enum class Voicing { NotApplicable, Voiced, Unvoiced };
enum class Manner { NotApplicable, Plosive, Fricative, Affricate, Nasal, Liquid, Glide };
enum class Place { NotApplicable, Bilabial, Labiodental, Interdental, Alveolar, Palatal, Velar, Glottal };
enum class Axis { Voicing, Manner, Place };

struct PhonemeClass {
    std::string_view label;
    PhonemeKind kind = PhonemeKind::Consonant;
    Voicing voicing = Voicing::NotApplicable;
    Manner manner = Manner::NotApplicable;
    Place place = Place::NotApplicable;

    [[nodiscard]] bool is_consonant() const noexcept { return kind == PhonemeKind::Consonant; }
};

constexpr std::string_view to_string(PhonemeKind k) noexcept
{
    switch (k) {
    case PhonemeKind::Consonant: return "consonant";
    case PhonemeKind::Vowel: return "vowel";
    case PhonemeKind::Filler: return "filler";
    }
    return "?";
}

constexpr std::string_view to_string(Voicing v) noexcept
{
    switch (v) {
    case Voicing::Voiced: return "voiced";
    case Voicing::Unvoiced: return "unvoiced";
    case Voicing::NotApplicable: break;
    }
    return "n/a";
}

constexpr std::string_view to_string(Manner m) noexcept
{
    switch (m) {
    case Manner::Plosive: return "plosive";
    case Manner::Fricative: return "fricative";
    case Manner::Affricate: return "affricate";
    case Manner::Nasal: return "nasal";
    case Manner::Liquid: return "liquid";
    case Manner::Glide: return "glide";
    case Manner::NotApplicable: break;
    }
    return "n/a";
}

constexpr std::string_view to_string(Place p) noexcept
{
    switch (p) {
    case Place::Bilabial: return "bilabial";
    case Place::Labiodental: return "labiodental";
    case Place::Interdental: return "interdental";
    case Place::Alveolar: return "alveolar";
    case Place::Palatal: return "palatal";
    case Place::Velar: return "velar";
    case Place::Glottal: return "glottal";
    case Place::NotApplicable: break;
    }
    return "n/a";
}

constexpr std::string_view to_string(Axis a) noexcept
{
    switch (a) {
    case Axis::Voicing: return "voicing";
    case Axis::Manner: return "manner";
    case Axis::Place: return "place";
    }
    return "?";
}

inline constexpr std::array kAxes{Axis::Voicing, Axis::Manner, Axis::Place};

/// Legal category values along an axis, in chart order.
inline std::vector<std::string_view> axis_categories(Axis axis)
{
    switch (axis) {
    case Axis::Voicing: return {"voiced", "unvoiced"};
    case Axis::Manner: return {"plosive", "fricative", "affricate", "nasal", "liquid", "glide"};
    case Axis::Place:
        return {"bilabial", "labiodental", "interdental", "alveolar", "palatal", "velar", "glottal"};
    }
    return {};
}

inline Axis parse_axis(std::string_view name)
{
    for (Axis a : kAxes) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw Error("unknown axis: " + std::string(name));
}

namespace detail {

inline constexpr auto Voiced = Voicing::Voiced;
inline constexpr auto Unvoiced = Voicing::Unvoiced;
inline constexpr auto Plosive = Manner::Plosive;
inline constexpr auto Fricative = Manner::Fricative;
inline constexpr auto Affricate = Manner::Affricate;
inline constexpr auto Nasal = Manner::Nasal;
inline constexpr auto Liquid = Manner::Liquid;
inline constexpr auto Glide = Manner::Glide;
inline constexpr auto Bilabial = Place::Bilabial;
inline constexpr auto Labiodental = Place::Labiodental;
inline constexpr auto Interdental = Place::Interdental;
inline constexpr auto Alveolar = Place::Alveolar;
inline constexpr auto Palatal = Place::Palatal;
inline constexpr auto Velar = Place::Velar;
inline constexpr auto Glottal = Place::Glottal;

constexpr PhonemeClass consonant(std::string_view l, Voicing v, Manner m, Place p)
{
    return {l, PhonemeKind::Consonant, v, m, p};
}
constexpr PhonemeClass filler(std::string_view l) { return {l, PhonemeKind::Filler, {}, {}, {}}; }
constexpr PhonemeClass vowel(std::string_view l) { return {l, PhonemeKind::Vowel, {}, {}, {}}; }

// R is filed as alveolar and W as bilabial (primary constriction).
inline constexpr std::array<PhonemeClass, 50> kRegistry{
    consonant("B", Voiced, Plosive, Bilabial),
    consonant("CH", Unvoiced, Affricate, Palatal),
    consonant("D", Voiced, Plosive, Alveolar),
    consonant("DH", Voiced, Fricative, Interdental),
    consonant("F", Unvoiced, Fricative, Labiodental),
    consonant("G", Voiced, Plosive, Velar),
    consonant("HH", Unvoiced, Fricative, Glottal),
    consonant("JH", Voiced, Affricate, Palatal),
    consonant("K", Unvoiced, Plosive, Velar),
    consonant("L", Voiced, Liquid, Alveolar),
    consonant("M", Voiced, Nasal, Bilabial),
    consonant("N", Voiced, Nasal, Alveolar),
    consonant("NG", Voiced, Nasal, Velar),
    consonant("P", Unvoiced, Plosive, Bilabial),
    consonant("R", Voiced, Liquid, Alveolar),
    consonant("S", Unvoiced, Fricative, Alveolar),
    consonant("SH", Unvoiced, Fricative, Palatal),
    consonant("T", Unvoiced, Plosive, Alveolar),
    consonant("TH", Unvoiced, Fricative, Interdental),
    consonant("V", Voiced, Fricative, Labiodental),
    consonant("W", Voiced, Glide, Bilabial),
    consonant("Y", Voiced, Glide, Palatal),
    consonant("Z", Voiced, Fricative, Alveolar),
    consonant("ZH", Voiced, Fricative, Palatal),
    filler("BR"),
    filler("UH"),
    filler("UM"),
    filler("COUGH"),
    filler("THROATCLEAR"),
    filler("LAUGH"),
    filler("SIGH"),
    filler("SMACK"),
    filler("NOISE"),
    filler("SIL"),
    vowel("AA"),
    vowel("AE"),
    vowel("AH"),
    vowel("AO"),
    vowel("AW"),
    vowel("AX"),
    vowel("AY"),
    vowel("EH"),
    vowel("ER"),
    vowel("EY"),
    vowel("IH"),
    vowel("IX"),
    vowel("IY"),
    vowel("OW"),
    vowel("OY"),
    vowel("UW"),
};

inline std::string upper(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

}  // namespace detail

/// Every registered phoneme: consonants, then fillers, then vowels.
inline std::span<const PhonemeClass> phoneme_registry() noexcept { return detail::kRegistry; }

inline const PhonemeClass* find_phoneme(std::string_view label) noexcept
{
    const std::string key = detail::upper(label);
    for (const auto& p : detail::kRegistry) {
        if (p.label == key) {
            return &p;
        }
    }
    return nullptr;
}

/// Case-insensitive registry lookup.
inline const PhonemeClass& classify_phoneme(std::string_view label)
{
    if (const auto* p = find_phoneme(label)) {
        return *p;
    }
    throw Error("unknown phoneme label: " + std::string(label));
}

inline std::vector<std::string> labels_of_kind(PhonemeKind kind)
{
    std::vector<std::string> out;
    for (const auto& p : detail::kRegistry) {
        if (p.kind == kind) {
            out.emplace_back(p.label);
        }
    }
    return out;
}

/// Category value of a phoneme along `axis` ("n/a" for non-consonants).
inline std::string_view category_of(const PhonemeClass& p, Axis axis) noexcept
{
    switch (axis) {
    case Axis::Voicing: return to_string(p.voicing);
    case Axis::Manner: return to_string(p.manner);
    case Axis::Place: return to_string(p.place);
    }
    return "n/a";
}

/// Consonants whose class on `axis` equals `value`, sorted by label.
inline std::vector<std::string> members_of_category(Axis axis, std::string_view value)
{
    const auto legal = axis_categories(axis);
    if (std::find(legal.begin(), legal.end(), value) == legal.end()) {
        throw Error("unknown category: " + std::string(value) + " on axis " + std::string(to_string(axis)));
    }
    std::vector<std::string> out;
    for (const auto& p : detail::kRegistry) {
        if (p.is_consonant() && category_of(p, axis) == value) {
            out.emplace_back(p.label);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// `{manner}|{place}|{voicing}` chart key for a consonant.
inline std::string chart_key(const PhonemeClass& p)
{
    return std::string(to_string(p.manner)) + "|" + std::string(to_string(p.place)) + "|" +
           std::string(to_string(p.voicing));
}

inline nlohmann::json phoneme_registry_json()
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : detail::kRegistry) {
        arr.push_back({{"label", p.label},
                       {"kind", to_string(p.kind)},
                       {"voicing", to_string(p.voicing)},
                       {"manner", to_string(p.manner)},
                       {"place", to_string(p.place)}});
    }
    return arr;
}

}  // namespace phonograde
