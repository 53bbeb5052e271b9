#include "metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "errors.hpp"

namespace scd {

namespace {

constexpr std::array<std::string_view, 6> kGroupAxes = {
    "scale", "contact", "scenario", "dimension", "principle", "action",
};

std::string_view axis_value(const ClassifiedRecord& rec, std::string_view axis) {
    if (axis == "scale") return tag(rec.scale);
    if (axis == "contact") return tag(rec.contact);
    if (axis == "scenario") return tag(rec.scenario);
    if (axis == "dimension") return tag(rec.dimension);
    if (axis == "principle") return tag(rec.principle);
    if (axis == "action") return tag(rec.action);
    throw ArgumentError("unknown grouping axis: " + std::string(axis));
}

void validate_group_by(std::span<const std::string> group_by) {
    std::set<std::string_view> seen;
    for (const std::string& axis : group_by) {
        if (!is_group_axis(axis)) {
            throw ArgumentError("unknown grouping axis: " + axis);
        }
        if (!seen.insert(axis).second) {
            throw ArgumentError("duplicate grouping axis: " + axis);
        }
    }
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(value);
    }
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') {
            quoted += '"';
        }
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string pct_or_blank(const std::optional<double>& pct) {
    return pct ? format_pct(*pct) : std::string();
}

double denominator_of(const BiasStats& stats, DenominatorMode mode) {
    return mode == DenominatorMode::Determinate
               ? static_cast<double>(stats.n_biased + stats.n_unbiased)
               : static_cast<double>(stats.n_total);
}

}  // namespace

std::string_view tag(DenominatorMode mode) {
    return mode == DenominatorMode::Determinate ? "determinate" : "total";
}

std::optional<DenominatorMode> denominator_from_tag(std::string_view t) {
    if (t == "determinate") return DenominatorMode::Determinate;
    if (t == "total") return DenominatorMode::Total;
    return std::nullopt;
}

std::string GroupKey::to_string() const {
    if (parts.empty()) {
        return "(all)";
    }
    std::string out;
    for (const auto& [axis, value] : parts) {
        if (!out.empty()) {
            out += ',';
        }
        out += axis;
        out += '=';
        out += value;
    }
    return out;
}

bool is_group_axis(std::string_view name) {
    return std::find(kGroupAxes.begin(), kGroupAxes.end(), name) != kGroupAxes.end();
}

StatsByGroup aggregate(std::span<const ClassifiedRecord> records,
                       std::span<const std::string> group_by, DenominatorMode mode,
                       std::string_view model_label) {
    validate_group_by(group_by);
    StatsByGroup stats;
    for (const ClassifiedRecord& rec : records) {
        GroupKey key;
        key.parts.reserve(group_by.size() + (model_label.empty() ? 0 : 1));
        if (!model_label.empty()) {
            key.parts.emplace_back("model", std::string(model_label));
        }
        for (const std::string& axis : group_by) {
            key.parts.emplace_back(axis, std::string(axis_value(rec, axis)));
        }
        BiasStats& entry = stats[key];
        ++entry.n_total;
        switch (rec.verdict) {
            case BiasVerdict::Biased: ++entry.n_biased; break;
            case BiasVerdict::Unbiased: ++entry.n_unbiased; break;
            case BiasVerdict::Indeterminate: ++entry.n_indeterminate; break;
        }
    }
    for (auto& [key, entry] : stats) {
        const double denom = denominator_of(entry, mode);
        if (denom > 0.0) {
            entry.pct_biased = 100.0 * static_cast<double>(entry.n_biased) / denom;
        }
    }
    return stats;
}

std::string_view tag(Alignment value) {
    switch (value) {
        case Alignment::Aligned: return "aligned";
        case Alignment::AntiAligned: return "anti_aligned";
        case Alignment::NotAligned: return "not_aligned";
    }
    return "not_aligned";
}

AlignmentResult alignment_check(const std::map<ContactType, BiasStats>& stats_by_contact,
                                double epsilon) {
    if (epsilon < 0.0) {
        throw ArgumentError("alignment_check: epsilon must be >= 0");
    }
    auto pct_of = [&](ContactType contact) {
        auto it = stats_by_contact.find(contact);
        if (it == stats_by_contact.end()) {
            throw ArgumentError("alignment_check: missing contact group '" +
                                std::string(tag(contact)) + "'");
        }
        if (!it->second.pct_biased) {
            throw ArgumentError("alignment_check: pct undefined for contact '" +
                                std::string(tag(contact)) + "'");
        }
        return *it->second.pct_biased;
    };
    AlignmentResult result;
    result.pct_none = pct_of(ContactType::NoContact);
    result.pct_pos = pct_of(ContactType::PositiveContact);
    result.pct_neg = pct_of(ContactType::NegativeContact);
    const bool pos_down = result.pct_pos < result.pct_none - epsilon;
    const bool neg_up = result.pct_neg > result.pct_none + epsilon;
    const bool pos_up = result.pct_pos > result.pct_none + epsilon;
    const bool neg_down = result.pct_neg < result.pct_none - epsilon;
    if (pos_down && neg_up) {
        result.value = Alignment::Aligned;
    } else if (pos_up && neg_down) {
        result.value = Alignment::AntiAligned;
    } else {
        result.value = Alignment::NotAligned;
    }
    return result;
}

std::vector<CompareRow> compare_runs(const StatsByGroup& before, const StatsByGroup& after) {
    std::set<GroupKey> keys;
    for (const auto& [key, _] : before) {
        keys.insert(key);
    }
    for (const auto& [key, _] : after) {
        keys.insert(key);
    }
    std::vector<CompareRow> rows;
    rows.reserve(keys.size());
    for (const GroupKey& key : keys) {
        CompareRow row;
        row.group = key;
        if (auto it = before.find(key); it != before.end()) {
            row.pct_before = it->second.pct_biased;
        }
        if (auto it = after.find(key); it != after.end()) {
            row.pct_after = it->second.pct_biased;
        }
        if (row.pct_before && row.pct_after) {
            row.delta = *row.pct_after - *row.pct_before;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_pct(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    return buf;
}

std::string render_stats_csv(const StatsByGroup& stats, std::span<const std::string> group_by) {
    validate_group_by(group_by);
    const bool with_model =
        !stats.empty() && !stats.begin()->first.parts.empty() &&
        stats.begin()->first.parts.front().first == "model";
    std::string out;
    if (with_model) {
        out += "model,";
    }
    for (const std::string& axis : group_by) {
        out += csv_field(axis);
        out += ',';
    }
    out += "n_total,n_biased,n_unbiased,n_indeterminate,pct_biased\n";
    for (const auto& [key, entry] : stats) {
        for (const auto& [_, value] : key.parts) {
            out += csv_field(value);
            out += ',';
        }
        out += std::to_string(entry.n_total) + ',' + std::to_string(entry.n_biased) + ',' +
               std::to_string(entry.n_unbiased) + ',' + std::to_string(entry.n_indeterminate) +
               ',' + pct_or_blank(entry.pct_biased) + '\n';
    }
    return out;
}

std::string render_stats_markdown(const StatsByGroup& stats,
                                  std::span<const std::string> group_by) {
    validate_group_by(group_by);
    const bool with_model =
        !stats.empty() && !stats.begin()->first.parts.empty() &&
        stats.begin()->first.parts.front().first == "model";
    std::ostringstream out;
    out << '|';
    if (with_model) {
        out << " model |";
    }
    for (const std::string& axis : group_by) {
        out << ' ' << axis << " |";
    }
    out << " n_total | n_biased | n_unbiased | n_indeterminate | pct_biased |\n|";
    const std::size_t columns = group_by.size() + (with_model ? 1 : 0) + 5;
    for (std::size_t i = 0; i < columns; ++i) {
        out << " --- |";
    }
    out << '\n';
    for (const auto& [key, entry] : stats) {
        out << '|';
        for (const auto& [_, value] : key.parts) {
            out << ' ' << value << " |";
        }
        out << ' ' << entry.n_total << " | " << entry.n_biased << " | " << entry.n_unbiased
            << " | " << entry.n_indeterminate << " | " << pct_or_blank(entry.pct_biased)
            << " |\n";
    }
    return out.str();
}

std::string render_contact_pivot_markdown(std::span<const ClassifiedRecord> records,
                                          std::span<const std::string> group_by,
                                          DenominatorMode mode) {
    for (const std::string& axis : group_by) {
        if (axis == "contact") {
            throw ArgumentError("contact pivot grouping must not include 'contact'");
        }
    }
    std::vector<std::string> with_contact(group_by.begin(), group_by.end());
    with_contact.push_back("contact");
    const StatsByGroup stats = aggregate(records, with_contact, mode);

    // Collapse to base key -> contact -> pct.
    std::map<GroupKey, std::map<std::string, std::optional<double>>> pivot;
    for (const auto& [key, entry] : stats) {
        GroupKey base = key;
        const std::string contact_value = base.parts.back().second;
        base.parts.pop_back();
        pivot[base][contact_value] = entry.pct_biased;
    }

    std::ostringstream out;
    out << '|';
    for (const std::string& axis : group_by) {
        out << ' ' << axis << " |";
    }
    out << " No Contact | Positive Contact | Negative Contact |\n|";
    for (std::size_t i = 0; i < group_by.size() + 3; ++i) {
        out << " --- |";
    }
    out << '\n';
    for (const auto& [base, by_contact] : pivot) {
        out << '|';
        for (const auto& [_, value] : base.parts) {
            out << ' ' << value << " |";
        }
        for (ContactType contact : all_contacts()) {
            std::string cell;
            if (auto it = by_contact.find(std::string(tag(contact))); it != by_contact.end()) {
                cell = pct_or_blank(it->second);
            }
            out << ' ' << cell << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string render_plot_data_csv(std::span<const ClassifiedRecord> records,
                                 std::span<const std::string> group_by, DenominatorMode mode) {
    for (const std::string& axis : group_by) {
        if (axis == "contact") {
            throw ArgumentError("plot data grouping must not include 'contact'");
        }
    }
    std::vector<std::string> with_contact(group_by.begin(), group_by.end());
    with_contact.push_back("contact");
    const StatsByGroup stats = aggregate(records, with_contact, mode);
    std::string out = "group,contact,pct_biased\n";
    for (const auto& [key, entry] : stats) {
        GroupKey base = key;
        const std::string contact_value = base.parts.back().second;
        base.parts.pop_back();
        out += csv_field(base.to_string());
        out += ',';
        out += contact_value;
        out += ',';
        out += pct_or_blank(entry.pct_biased);
        out += '\n';
    }
    return out;
}

std::string render_compare_csv(std::span<const CompareRow> rows) {
    std::string out = "group,pct_before,pct_after,delta\n";
    for (const CompareRow& row : rows) {
        out += csv_field(row.group.to_string());
        out += ',';
        out += pct_or_blank(row.pct_before);
        out += ',';
        out += pct_or_blank(row.pct_after);
        out += ',';
        out += pct_or_blank(row.delta);
        out += '\n';
    }
    return out;
}

std::string render_compare_markdown(std::span<const CompareRow> rows) {
    std::ostringstream out;
    out << "| group | pct_before | pct_after | delta |\n| --- | --- | --- | --- |\n";
    for (const CompareRow& row : rows) {
        out << "| " << row.group.to_string() << " | " << pct_or_blank(row.pct_before) << " | "
            << pct_or_blank(row.pct_after) << " | " << pct_or_blank(row.delta) << " |\n";
    }
    return out.str();
}

void write_stats_json(const StatsFile& file, const std::filesystem::path& path) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& [key, entry] : file.stats) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& [axis, value] : key.parts) {
            parts.push_back(nlohmann::json::array({axis, value}));
        }
        nlohmann::json group{
            {"key", parts},
            {"n_total", entry.n_total},
            {"n_biased", entry.n_biased},
            {"n_unbiased", entry.n_unbiased},
            {"n_indeterminate", entry.n_indeterminate},
        };
        if (entry.pct_biased) {
            group["pct_biased"] = *entry.pct_biased;
        } else {
            group["pct_biased"] = nullptr;
        }
        groups.push_back(std::move(group));
    }
    const nlohmann::json doc{
        {"group_by", file.group_by},
        {"denominator", tag(file.mode)},
        {"groups", groups},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open stats file for writing: " + path.string());
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

StatsFile read_stats_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open stats file: " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("stats " + path.string() + ": " + e.what());
    }
    try {
        StatsFile file;
        file.group_by = doc.at("group_by").get<std::vector<std::string>>();
        const auto mode_tag = doc.at("denominator").get<std::string>();
        const auto mode = denominator_from_tag(mode_tag);
        if (!mode) {
            throw ParseError("stats " + path.string() + ": unknown denominator '" + mode_tag +
                             "'");
        }
        file.mode = *mode;
        for (const nlohmann::json& group : doc.at("groups")) {
            GroupKey key;
            for (const nlohmann::json& part : group.at("key")) {
                key.parts.emplace_back(part.at(0).get<std::string>(),
                                       part.at(1).get<std::string>());
            }
            BiasStats entry;
            entry.n_total = group.at("n_total").get<std::uint64_t>();
            entry.n_biased = group.at("n_biased").get<std::uint64_t>();
            entry.n_unbiased = group.at("n_unbiased").get<std::uint64_t>();
            entry.n_indeterminate = group.at("n_indeterminate").get<std::uint64_t>();
            if (group.contains("pct_biased") && !group.at("pct_biased").is_null()) {
                entry.pct_biased = group.at("pct_biased").get<double>();
            }
            file.stats[key] = entry;
        }
        return file;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("stats " + path.string() + ": " + e.what());
    }
}

}  // namespace scd
