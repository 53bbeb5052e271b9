#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "axes.hpp"

namespace scd {

struct Descriptor {
    std::string term;
    std::string slug;
    BiasDimension dimension = BiasDimension::Ability;

    bool operator==(const Descriptor&) const = default;
};

// Ordered descriptor list; iteration order is the file order.
// Immutable after load, safe to share across threads.
struct Catalog {
    std::vector<Descriptor> descriptors;
    std::string source;
    std::vector<std::string> warnings;

    std::size_t size() const { return descriptors.size(); }
    bool empty() const { return descriptors.empty(); }
};

// Lowercase, spaces collapsed to single hyphens.
std::string descriptor_slug(std::string_view term);

// Catalog file: JSON object mapping dimension tag -> array of descriptor
// strings, e.g. {"ability": ["deaf", "blind"], "age": ["elderly"]}.
Catalog load_descriptor_catalog(const std::filesystem::path& path);

// Keeps exactly the descriptors whose dimension is in `dims`, original order.
Catalog filter_by_dimension(const Catalog& catalog, const std::set<BiasDimension>& dims);

}  // namespace scd
