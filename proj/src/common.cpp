#include "cogpipe/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

namespace cogpipe {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m;
    if (rows.empty()) return m;
    m.cols_ = rows.front().size();
    for (const auto& r : rows) m.append_row(r);
    return m;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw Error("Matrix::append_row: width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(0, cols_);
    out.data_.reserve(indices.size() * cols_);
    for (std::size_t i : indices) out.append_row(row(i));
    return out;
}

std::uint64_t SplitMix64::below(std::uint64_t n) {
    if (n == 0) throw Error("SplitMix64::below: empty range");
    const std::uint64_t limit = ~0ULL - (~0ULL % n);
    for (;;) {
        const std::uint64_t v = next();
        if (v < limit) return v % n;
    }
}

double SplitMix64::normal() {
    // Box-Muller; 1 - uniform() keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 g(seed ^ (stream * 0xD1B54A32D192ED03ULL));
    g.next();
    return g.next();
}

std::string format_double(double value) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw Error("format_double failed");
    return std::string(buf.data(), ptr);
}

}  // namespace cogpipe
