#include "catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "errors.hpp"

namespace scd {

namespace {

std::string trimmed(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_space(s[begin])) ++begin;
    while (end > begin && is_space(s[end - 1])) --end;
    return std::string(s.substr(begin, end - begin));
}

}  // namespace

std::string descriptor_slug(std::string_view term) {
    std::string slug;
    slug.reserve(term.size());
    bool pending_hyphen = false;
    for (unsigned char c : term) {
        if (std::isspace(c)) {
            pending_hyphen = !slug.empty();
            continue;
        }
        if (pending_hyphen) {
            slug.push_back('-');
            pending_hyphen = false;
        }
        slug.push_back(static_cast<char>(std::tolower(c)));
    }
    return slug;
}

Catalog load_descriptor_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open catalog file: " + path.string());
    }
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("catalog " + path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ValidationError("catalog " + path.string() +
                              ": top level must be an object of dimension -> terms");
    }

    Catalog catalog;
    catalog.source = path.string();
    std::set<std::pair<std::string, BiasDimension>> seen;
    std::vector<std::string> duplicates;
    for (const auto& [key, value] : doc.items()) {
        auto dim = dimension_from_tag(key);
        if (!dim) {
            throw ValidationError("catalog " + path.string() +
                                  ": unknown dimension key \"" + key + "\"");
        }
        if (!value.is_array()) {
            throw ValidationError("catalog " + path.string() + ": dimension \"" + key +
                                  "\" must map to an array of terms");
        }
        for (const auto& item : value) {
            if (!item.is_string()) {
                throw ValidationError("catalog " + path.string() + ": dimension \"" + key +
                                      "\" contains a non-string term");
            }
            std::string term = trimmed(item.get<std::string>());
            if (term.empty()) {
                throw ValidationError("catalog " + path.string() + ": dimension \"" + key +
                                      "\" contains an empty term");
            }
            if (!seen.insert({term, *dim}).second) {
                duplicates.push_back(term + " (" + key + ")");
                continue;
            }
            catalog.descriptors.push_back(
                Descriptor{term, descriptor_slug(term), *dim});
        }
    }
    if (!duplicates.empty()) {
        std::ostringstream msg;
        msg << "catalog " << path.string() << ": duplicate (term, dimension) pairs:";
        for (const auto& d : duplicates) msg << ' ' << d << ';';
        throw ValidationError(msg.str());
    }
    if (catalog.descriptors.empty()) {
        catalog.warnings.push_back("catalog contains no descriptors");
    }
    return catalog;
}

Catalog filter_by_dimension(const Catalog& catalog, const std::set<BiasDimension>& dims) {
    if (dims.empty()) {
        throw ArgumentError("filter_by_dimension: dimension set must not be empty");
    }
    Catalog out;
    out.source = catalog.source;
    for (const auto& d : catalog.descriptors) {
        if (dims.contains(d.dimension)) {
            out.descriptors.push_back(d);
        }
    }
    return out;
}

}  // namespace scd
