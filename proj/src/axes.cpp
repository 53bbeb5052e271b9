#include "axes.hpp"

namespace scd {

namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<E, N>& values, std::string_view t) {
    for (E v : values) {
        if (tag(v) == t) {
            return v;
        }
    }
    return std::nullopt;
}

}  // namespace

const std::array<BiasDimension, kDimensionCount>& all_dimensions() {
    static const std::array<BiasDimension, kDimensionCount> values = {
        BiasDimension::Ability,
        BiasDimension::Age,
        BiasDimension::BodyType,
        BiasDimension::Characteristics,
        BiasDimension::Culture,
        BiasDimension::GenderAndSex,
        BiasDimension::Nationality,
        BiasDimension::Nonce,
        BiasDimension::PoliticalIdeologies,
        BiasDimension::RaceEthnicity,
        BiasDimension::Religion,
        BiasDimension::SexualOrientation,
        BiasDimension::SocioeconomicClass,
    };
    return values;
}

const std::array<Principle, kPrincipleCount>& all_principles() {
    static const std::array<Principle, kPrincipleCount> values = {
        Principle::EqualGroupStatus,     Principle::CommonGoals,
        Principle::IntergroupCooperation, Principle::SupportOfAuthorities,
        Principle::ExtendedContact,      Principle::VirtualContact,
    };
    return values;
}

const std::array<Scenario, kScenarioCount>& all_scenarios() {
    static const std::array<Scenario, kScenarioCount> values = {
        Scenario::Education, Scenario::Workplace, Scenario::Sports,
        Scenario::Community, Scenario::Healthcare,
    };
    return values;
}

const std::array<Scale, kScaleCount>& all_scales() {
    static const std::array<Scale, kScaleCount> values = {
        Scale::Certainty, Scale::Likelihood, Scale::Frequency,
    };
    return values;
}

const std::array<ContactType, kContactCount>& all_contacts() {
    static const std::array<ContactType, kContactCount> values = {
        ContactType::NoContact, ContactType::PositiveContact,
        ContactType::NegativeContact,
    };
    return values;
}

const std::array<ActionPolarity, kActionCount>& all_actions() {
    static const std::array<ActionPolarity, kActionCount> values = {
        ActionPolarity::PositiveAction, ActionPolarity::NegativeAction,
    };
    return values;
}

std::string_view tag(BiasDimension d) {
    switch (d) {
        case BiasDimension::Ability: return "ability";
        case BiasDimension::Age: return "age";
        case BiasDimension::BodyType: return "body_type";
        case BiasDimension::Characteristics: return "characteristics";
        case BiasDimension::Culture: return "culture";
        case BiasDimension::GenderAndSex: return "gender_and_sex";
        case BiasDimension::Nationality: return "nationality";
        case BiasDimension::Nonce: return "nonce";
        case BiasDimension::PoliticalIdeologies: return "political_ideologies";
        case BiasDimension::RaceEthnicity: return "race_ethnicity";
        case BiasDimension::Religion: return "religion";
        case BiasDimension::SexualOrientation: return "sexual_orientation";
        case BiasDimension::SocioeconomicClass: return "socioeconomic_class";
    }
    return "";
}

std::string_view tag(Principle p) {
    switch (p) {
        case Principle::EqualGroupStatus: return "equal_group_status";
        case Principle::CommonGoals: return "common_goals";
        case Principle::IntergroupCooperation: return "intergroup_cooperation";
        case Principle::SupportOfAuthorities: return "support_of_authorities";
        case Principle::ExtendedContact: return "extended_contact";
        case Principle::VirtualContact: return "virtual_contact";
    }
    return "";
}

std::string_view tag(Scenario s) {
    switch (s) {
        case Scenario::Education: return "education";
        case Scenario::Workplace: return "workplace";
        case Scenario::Sports: return "sports";
        case Scenario::Community: return "community";
        case Scenario::Healthcare: return "healthcare";
    }
    return "";
}

std::string_view tag(Scale s) {
    switch (s) {
        case Scale::Certainty: return "certainty";
        case Scale::Likelihood: return "likelihood";
        case Scale::Frequency: return "frequency";
    }
    return "";
}

std::string_view tag(ContactType c) {
    switch (c) {
        case ContactType::NoContact: return "no_contact";
        case ContactType::PositiveContact: return "positive_contact";
        case ContactType::NegativeContact: return "negative_contact";
    }
    return "";
}

std::string_view tag(ActionPolarity a) {
    switch (a) {
        case ActionPolarity::PositiveAction: return "positive_action";
        case ActionPolarity::NegativeAction: return "negative_action";
    }
    return "";
}

std::optional<BiasDimension> dimension_from_tag(std::string_view t) {
    return lookup(all_dimensions(), t);
}
std::optional<Principle> principle_from_tag(std::string_view t) {
    return lookup(all_principles(), t);
}
std::optional<Scenario> scenario_from_tag(std::string_view t) {
    return lookup(all_scenarios(), t);
}
std::optional<Scale> scale_from_tag(std::string_view t) {
    return lookup(all_scales(), t);
}
std::optional<ContactType> contact_from_tag(std::string_view t) {
    return lookup(all_contacts(), t);
}
std::optional<ActionPolarity> action_from_tag(std::string_view t) {
    return lookup(all_actions(), t);
}

std::string_view engage_token(Scale s) {
    switch (s) {
        case Scale::Certainty: return "yes";
        case Scale::Likelihood: return "likely";
        case Scale::Frequency: return "mostly";
    }
    return "";
}

std::string_view decline_token(Scale s) {
    switch (s) {
        case Scale::Certainty: return "no";
        case Scale::Likelihood: return "unlikely";
        case Scale::Frequency: return "rarely";
    }
    return "";
}

std::string_view contact_id_suffix(ContactType c) {
    switch (c) {
        case ContactType::NoContact: return "none";
        case ContactType::PositiveContact: return "pos";
        case ContactType::NegativeContact: return "neg";
    }
    return "";
}

}  // namespace scd
