#include "cogpipe/resampling.hpp"

#include <algorithm>
#include <numeric>

namespace cogpipe {

std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::size_t row, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(points.rows());
    const auto a = points.row(row);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        if (i == row) continue;
        const auto b = points.row(i);
        double d2 = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) d2 += (a[c] - b[c]) * (a[c] - b[c]);
        dist.emplace_back(d2, i);
    }
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

SmoteResult smote_detailed(const Matrix& minority, std::size_t n_synthetic, int k_neighbors,
                           std::uint64_t seed) {
    const std::size_t m = minority.rows();
    if (m < 2) throw InputError("smote: need at least 2 minority samples");
    if (k_neighbors < 1) throw InputError("smote: k_neighbors must be >= 1");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), m - 1);

    std::vector<std::vector<std::size_t>> neighbors(m);
    const std::size_t bases_used = std::min(m, n_synthetic);
    for (std::size_t i = 0; i < bases_used; ++i) neighbors[i] = nearest_neighbors(minority, i, k);

    SplitMix64 rng(seed);
    SmoteResult out;
    out.samples = Matrix(n_synthetic, minority.cols());
    out.origins.reserve(n_synthetic);
    for (std::size_t s = 0; s < n_synthetic; ++s) {
        const std::size_t base = s % m;
        const std::size_t nn = neighbors[base][rng.below(k)];
        const double lambda = rng.uniform_closed();
        const auto xb = minority.row(base);
        const auto xn = minority.row(nn);
        auto dst = out.samples.row(s);
        for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = xb[c] + lambda * (xn[c] - xb[c]);
        out.origins.push_back({base, nn, lambda});
    }
    return out;
}

Matrix smote(const Matrix& minority, std::size_t n_synthetic, int k_neighbors, std::uint64_t seed) {
    return smote_detailed(minority, n_synthetic, k_neighbors, seed).samples;
}

LabeledMatrix balance_binary(const LabeledMatrix& data, std::uint64_t seed, int k_neighbors) {
    if (data.X.rows() != data.y.size()) throw InputError("balance_binary: row/label count mismatch");
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < data.y.size(); ++i) (data.y[i] > 0 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw InputError("balance_binary: both classes must be present");
    if (pos.size() == neg.size()) return data;

    const bool pos_minority = pos.size() < neg.size();
    const auto& minority_idx = pos_minority ? pos : neg;
    const std::size_t deficit = (pos_minority ? neg.size() : pos.size()) - minority_idx.size();
    const Matrix minority = data.X.select_rows(minority_idx);
    const Matrix synthetic = smote(minority, deficit, k_neighbors, seed);

    LabeledMatrix out = data;
    const int label = pos_minority ? +1 : -1;
    for (std::size_t r = 0; r < synthetic.rows(); ++r) {
        out.X.append_row(synthetic.row(r));
        out.y.push_back(label);
    }
    return out;
}

}  // namespace cogpipe
