#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cogpipe {

// Ordered, named real-valued features. The name order is part of the model contract.
struct FeatureVector {
    std::vector<std::string> names;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }

    void push(std::string name, double value) {
        names.push_back(std::move(name));
        values.push_back(value);
    }

    // Appends every feature of `other`, prefixing its names.
    void append(const FeatureVector& other, const std::string& prefix = {});

    // Throws when lengths differ or a name repeats.
    void validate() const;

    double at(const std::string& name) const;
};

// FNV-1a over the newline-joined names.
std::uint64_t schema_hash(const std::vector<std::string>& names) noexcept;

}  // namespace cogpipe
