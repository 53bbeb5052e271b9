#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>

namespace scd {

// Closed axis vocabularies shared across the toolkit. File formats and
// identifiers always use the lowercase snake_case tags; mapping is
// exact-match only so typos fail fast.

enum class BiasDimension : std::uint8_t {
    Ability,
    Age,
    BodyType,
    Characteristics,
    Culture,
    GenderAndSex,
    Nationality,
    Nonce,
    PoliticalIdeologies,
    RaceEthnicity,
    Religion,
    SexualOrientation,
    SocioeconomicClass,
};

enum class Principle : std::uint8_t {
    EqualGroupStatus,
    CommonGoals,
    IntergroupCooperation,
    SupportOfAuthorities,
    ExtendedContact,
    VirtualContact,
};

enum class Scenario : std::uint8_t {
    Education,
    Workplace,
    Sports,
    Community,
    Healthcare,
};

enum class Scale : std::uint8_t {
    Certainty,
    Likelihood,
    Frequency,
};

enum class ContactType : std::uint8_t {
    NoContact,
    PositiveContact,
    NegativeContact,
};

enum class ActionPolarity : std::uint8_t {
    PositiveAction,
    NegativeAction,
};

inline constexpr std::size_t kDimensionCount = 13;
inline constexpr std::size_t kPrincipleCount = 6;
inline constexpr std::size_t kScenarioCount = 5;
inline constexpr std::size_t kScaleCount = 3;
inline constexpr std::size_t kContactCount = 3;
inline constexpr std::size_t kActionCount = 2;

const std::array<BiasDimension, kDimensionCount>& all_dimensions();
const std::array<Principle, kPrincipleCount>& all_principles();
const std::array<Scenario, kScenarioCount>& all_scenarios();
const std::array<Scale, kScaleCount>& all_scales();
const std::array<ContactType, kContactCount>& all_contacts();
const std::array<ActionPolarity, kActionCount>& all_actions();

std::string_view tag(BiasDimension);
std::string_view tag(Principle);
std::string_view tag(Scenario);
std::string_view tag(Scale);
std::string_view tag(ContactType);
std::string_view tag(ActionPolarity);

std::optional<BiasDimension> dimension_from_tag(std::string_view);
std::optional<Principle> principle_from_tag(std::string_view);
std::optional<Scenario> scenario_from_tag(std::string_view);
std::optional<Scale> scale_from_tag(std::string_view);
std::optional<ContactType> contact_from_tag(std::string_view);
std::optional<ActionPolarity> action_from_tag(std::string_view);

// Binary answer vocabulary per scale.
std::string_view engage_token(Scale);
std::string_view decline_token(Scale);

// Short contact tag used in instance identifiers ("none" / "pos" / "neg").
std::string_view contact_id_suffix(ContactType);

}  // namespace scd
