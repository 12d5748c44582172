#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cogpipe {

// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, violated preconditions. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
};

class FormatError : public InputError {
public:
    using InputError::InputError;
};

class SchemaMismatch : public InputError {
public:
    using InputError::InputError;
};

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values);
    Matrix select_rows(std::span<const std::size_t> indices) const;

    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// SplitMix64. Every stochastic step in the pipeline draws from this generator so that
// results are reproducible bit-for-bit across platforms and standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0, 1].
    double uniform_closed() noexcept {
        return static_cast<double>(next() >> 11) / static_cast<double>((1ULL << 53) - 1);
    }

    // Uniform integer in [0, n), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n);

    double normal();

private:
    std::uint64_t state_;
};

// Derives an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

}  // namespace cogpipe
