#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "classify.hpp"

namespace scd {

enum class DenominatorMode : std::uint8_t { Determinate, Total };

std::string_view tag(DenominatorMode);
std::optional<DenominatorMode> denominator_from_tag(std::string_view);

// Concrete grouping values in the caller's group_by order, e.g.
// {("scale", "certainty"), ("contact", "no_contact")}. An empty key is the
// whole-run group.
struct GroupKey {
    std::vector<std::pair<std::string, std::string>> parts;
    auto operator<=>(const GroupKey&) const = default;
    std::string to_string() const;
};

struct BiasStats {
    std::uint64_t n_total = 0;
    std::uint64_t n_biased = 0;
    std::uint64_t n_unbiased = 0;
    std::uint64_t n_indeterminate = 0;
    // 100 * n_biased / denominator; absent when the denominator is zero.
    std::optional<double> pct_biased;
};

using StatsByGroup = std::map<GroupKey, BiasStats>;

// Valid group_by axis names, besides the implicit model label.
bool is_group_axis(std::string_view name);

// Partitions records by the named axes and computes bias percentages with the
// selected denominator (Determinate = biased + unbiased; Total = all).
// A non-empty model_label is prefixed to every key as ("model", label).
StatsByGroup aggregate(std::span<const ClassifiedRecord> records,
                       std::span<const std::string> group_by,
                       DenominatorMode mode = DenominatorMode::Determinate,
                       std::string_view model_label = "");

enum class Alignment : std::uint8_t { Aligned, AntiAligned, NotAligned };

std::string_view tag(Alignment);

struct AlignmentResult {
    Alignment value = Alignment::NotAligned;
    double pct_pos = 0.0;
    double pct_none = 0.0;
    double pct_neg = 0.0;
};

// Contact-Hypothesis direction test at full precision:
//   Aligned     iff pct(pos) < pct(none) - epsilon and pct(neg) > pct(none) + epsilon
//   AntiAligned iff both inequalities hold reversed
//   NotAligned  otherwise.
AlignmentResult alignment_check(const std::map<ContactType, BiasStats>& stats_by_contact,
                                double epsilon = 0.0);

struct CompareRow {
    GroupKey group;
    std::optional<double> pct_before;
    std::optional<double> pct_after;
    std::optional<double> delta;  // pct_after - pct_before when both defined
};

// Union of the two key sets, sorted; sides missing a key render blank.
std::vector<CompareRow> compare_runs(const StatsByGroup& before, const StatsByGroup& after);

// Percent rendering used by every table: two decimals, full precision kept
// elsewhere.
std::string format_pct(double value);

std::string render_stats_csv(const StatsByGroup& stats, std::span<const std::string> group_by);
std::string render_stats_markdown(const StatsByGroup& stats,
                                  std::span<const std::string> group_by);

// One row per group (grouping must not include "contact"), pct columns in
// No Contact / Positive Contact / Negative Contact order.
std::string render_contact_pivot_markdown(std::span<const ClassifiedRecord> records,
                                          std::span<const std::string> group_by,
                                          DenominatorMode mode = DenominatorMode::Determinate);

// Long-form plot data: group, contact, pct.
std::string render_plot_data_csv(std::span<const ClassifiedRecord> records,
                                 std::span<const std::string> group_by,
                                 DenominatorMode mode = DenominatorMode::Determinate);

std::string render_compare_csv(std::span<const CompareRow> rows);
std::string render_compare_markdown(std::span<const CompareRow> rows);

// Machine-readable stats file, the input format of run comparison.
struct StatsFile {
    std::vector<std::string> group_by;
    DenominatorMode mode = DenominatorMode::Determinate;
    StatsByGroup stats;
};

void write_stats_json(const StatsFile& file, const std::filesystem::path& path);
StatsFile read_stats_json(const std::filesystem::path& path);

}  // namespace scd
