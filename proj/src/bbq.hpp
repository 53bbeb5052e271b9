#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probe.hpp"

namespace scd {

struct BBQItem {
    std::string item_id;
    std::string category;
    std::string context;
    std::string question;
    std::array<std::string, 3> options;
    int gold_index = 0;
    std::string context_condition;  // "ambig" / "disambig", carried through
};

struct BBQLoadResult {
    std::vector<BBQItem> items;
    std::vector<std::string> line_errors;  // tolerated malformed lines, with line numbers
};

// BBQ release format: newline-delimited JSON records with fields
// context, question, ans0..ans2, label, category (extras ignored).
// Malformed records are reported per line; more than 1% malformed aborts.
BBQLoadResult load_bbq(const std::filesystem::path& path);

enum class BBQFilter : std::uint8_t { AmbiguousOnly, DisambiguatedOnly, All };

std::string_view tag(BBQFilter);
std::optional<BBQFilter> bbq_filter_from_tag(std::string_view);

// AmbiguousOnly keeps records not marked "disambig" (the common BBQ tag),
// so files without a context_condition field pass through unchanged.
std::vector<BBQItem> filter_bbq(std::span<const BBQItem> items, BBQFilter filter);

enum class BBQMode : std::uint8_t { LetterChoice, OptionScore };

std::string_view tag(BBQMode);
std::optional<BBQMode> bbq_mode_from_tag(std::string_view);

// The letter-choice prompt: context, question, the three lettered options,
// and a single-letter answer instruction.
std::string render_bbq_prompt(const BBQItem& item);

// First standalone A/B/C (case-insensitive, word-boundary) in the reply;
// nullopt when none occurs. "Both A and B" selects A.
std::optional<int> parse_letter_choice(std::string_view text);

struct BBQCategoryStats {
    std::uint64_t n = 0;
    std::uint64_t n_correct = 0;
    double accuracy = 0.0;
};

struct BBQResult {
    std::map<std::string, BBQCategoryStats> per_category;
    BBQCategoryStats overall;
};

// LetterChoice probes the responder through the bounded-concurrency runner;
// unparseable or failed replies count as incorrect. OptionScore requires a
// scorer (argmax over per-option continuation scores, ties to the lowest
// index) and raises a capability error before any request when absent.
BBQResult evaluate_bbq(std::span<const BBQItem> items, Responder& responder, BBQMode mode,
                       const ProbeOptions& options = {}, OptionScorer* scorer = nullptr);

// Fixed column layout: All first, then the eleven BBQ categories under their
// short display names, then any unrecognized categories.
std::string display_category(std::string_view raw);
std::string format_accuracy(double value);  // three decimals, trailing zeros trimmed

std::string render_bbq_markdown(std::span<const std::pair<std::string, BBQResult>> rows);
std::string render_bbq_csv(std::span<const std::pair<std::string, BBQResult>> rows);

// Scripted responders for offline evaluation.
std::unique_ptr<Responder> make_gold_letter_responder(std::span<const BBQItem> items);
std::unique_ptr<Responder> make_uniform_letter_responder(std::uint64_t seed);

}  // namespace scd
