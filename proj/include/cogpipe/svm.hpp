#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cogpipe/common.hpp"

namespace cogpipe {

enum class KernelKind { Linear, Rbf };

struct Kernel {
    KernelKind kind = KernelKind::Linear;
    double gamma = 0.0;  // rbf only, > 0

    double operator()(std::span<const double> a, std::span<const double> b) const;
};

// Kernel choice before the data is seen. An empty gamma selects the "scale"
// convention, gamma = 1 / (d * var(X)), resolved on the training matrix.
struct KernelSpec {
    KernelKind kind = KernelKind::Linear;
    std::optional<double> gamma;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

Kernel resolve_kernel(const KernelSpec& spec, const Matrix& X);

// Per-column z-scoring. Zero-variance columns keep std = 1 and map to 0.
struct Scaler {
    std::vector<double> means;
    std::vector<double> stds;

    static Scaler identity(std::size_t dim);
    std::size_t dim() const noexcept { return means.size(); }
    std::vector<double> apply(std::span<const double> x) const;
};

Scaler fit_scaler(const Matrix& X);
Matrix apply_scaler(const Scaler& scaler, const Matrix& X);

struct SolverOptions {
    double tol = 1e-3;     // stop when the maximal KKT violation falls below this
    int max_passes = 200;  // iteration budget, in units of max(n_variables, 100) updates
    std::uint64_t seed = 0;
};

struct TrainStats {
    long iterations = 0;
    bool converged = false;
    double dual_objective = 0.0;  // maximization form of the dual
};

// Alphas at or below this are dropped from the support set.
inline constexpr double kSupportThreshold = 1e-8;

struct SvcModel {
    Matrix support_vectors;          // in scaled space
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;
    Kernel kernel;
    Scaler scaler;
    double C = 1.0;
    std::vector<std::size_t> support_indices;  // rows of the training matrix
    TrainStats stats;
};

struct SvrModel {
    Matrix support_vectors;
    std::vector<double> dual_coefs;  // alpha_i - alpha*_i
    double bias = 0.0;
    Kernel kernel;
    Scaler scaler;
    double C = 1.0;
    double epsilon = 0.1;
    std::vector<std::size_t> support_indices;
    TrainStats stats;
};

// Fits a scaler on X, then trains on the scaled data.
SvcModel train_svc(const Matrix& X, const std::vector<int>& y, double C, const KernelSpec& kernel,
                   const SolverOptions& opts = {});

// Trains on X as given; `scaler` is stored in the model and must describe how X was produced.
SvcModel train_svc_scaled(const Matrix& X, const std::vector<int>& y, double C,
                          const KernelSpec& kernel, const SolverOptions& opts, Scaler scaler);

SvrModel train_svr(const Matrix& X, const std::vector<double>& y, double C, double epsilon,
                   const KernelSpec& kernel, const SolverOptions& opts = {});

SvrModel train_svr_scaled(const Matrix& X, const std::vector<double>& y, double C, double epsilon,
                          const KernelSpec& kernel, const SolverOptions& opts, Scaler scaler);

// f(x) = sum_i coef_i K(sv_i, scale(x)) + bias. Throws InputError on dimension mismatch.
double decision_value(const SvcModel& model, std::span<const double> x);
// +1 iff f(x) >= 0.
int predict_svc(const SvcModel& model, std::span<const double> x);
double predict_svr(const SvrModel& model, std::span<const double> x);

}  // namespace cogpipe
