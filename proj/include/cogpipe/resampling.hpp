#pragma once

#include <cstdint>
#include <vector>

#include "cogpipe/common.hpp"

namespace cogpipe {

struct LabeledMatrix {
    Matrix X;
    std::vector<int> y;  // +1 / -1
};

// Provenance of one synthetic row: x_base + lambda * (x_neighbor - x_base).
struct SyntheticOrigin {
    std::size_t base = 0;
    std::size_t neighbor = 0;
    double lambda = 0.0;
};

struct SmoteResult {
    Matrix samples;
    std::vector<SyntheticOrigin> origins;
};

inline constexpr int kDefaultSmoteNeighbors = 5;

// Indices of the k nearest rows to `row` (Euclidean, ties by lower index), excluding itself.
std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::size_t row, std::size_t k);

// SMOTE. Base rows are taken cyclically (0, 1, ..., m-1, 0, ...) so per-base counts differ
// by at most one; the neighbor is drawn uniformly from the min(k, m-1) nearest, and
// lambda uniformly from [0, 1]. Throws InputError when m < 2 or k < 1.
SmoteResult smote_detailed(const Matrix& minority, std::size_t n_synthetic, int k_neighbors,
                           std::uint64_t seed);

Matrix smote(const Matrix& minority, std::size_t n_synthetic, int k_neighbors, std::uint64_t seed);

// Oversamples the minority class until both classes have equal counts. Original rows
// come first, in input order, followed by the synthetic minority rows.
LabeledMatrix balance_binary(const LabeledMatrix& data, std::uint64_t seed,
                             int k_neighbors = kDefaultSmoteNeighbors);

}  // namespace cogpipe
