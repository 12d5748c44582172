#include "cogpipe/feature_vector.hpp"

#include <unordered_set>

#include "cogpipe/common.hpp"

namespace cogpipe {

void FeatureVector::append(const FeatureVector& other, const std::string& prefix) {
    names.reserve(names.size() + other.names.size());
    for (const auto& n : other.names) names.push_back(prefix + n);
    values.insert(values.end(), other.values.begin(), other.values.end());
}

void FeatureVector::validate() const {
    if (names.size() != values.size()) throw Error("FeatureVector: names/values length mismatch");
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) throw Error("FeatureVector: duplicate feature name '" + n + "'");
    }
}

double FeatureVector::at(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw Error("FeatureVector: no feature named '" + name + "'");
}

std::uint64_t schema_hash(const std::vector<std::string>& names) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 0x100000001B3ULL;
    };
    for (const auto& n : names) {
        for (unsigned char c : n) mix(c);
        mix('\n');
    }
    return h;
}

}  // namespace cogpipe
