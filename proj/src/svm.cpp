#include "cogpipe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cogpipe {

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
    if (kind == KernelKind::Linear) {
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
        return dot;
    }
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-gamma * d2);
}

Kernel resolve_kernel(const KernelSpec& spec, const Matrix& X) {
    Kernel k{spec.kind, 0.0};
    if (spec.kind == KernelKind::Linear) return k;
    if (spec.gamma) {
        if (!(*spec.gamma > 0.0)) throw InputError("rbf kernel: gamma must be positive");
        k.gamma = *spec.gamma;
        return k;
    }
    const auto& v = X.data();
    const double d = static_cast<double>(std::max<std::size_t>(X.cols(), 1));
    double var = 0.0;
    if (!v.empty()) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (double x : v) var += (x - m) * (x - m);
        var /= static_cast<double>(v.size());
    }
    k.gamma = var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
    return k;
}

Scaler Scaler::identity(std::size_t dim) {
    return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

std::vector<double> Scaler::apply(std::span<const double> x) const {
    if (x.size() != means.size()) {
        throw InputError("scaler: expected " + std::to_string(means.size()) + " features, got " +
                         std::to_string(x.size()));
    }
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - means[j]) / stds[j];
    return out;
}

Scaler fit_scaler(const Matrix& X) {
    if (X.rows() == 0) throw InputError("fit_scaler: no rows");
    const std::size_t d = X.cols();
    const double n = static_cast<double>(X.rows());
    Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t j = 0; j < d; ++j) s.means[j] += X(r, j);
    }
    for (double& m : s.means) m /= n;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dev = X(r, j) - s.means[j];
            s.stds[j] += dev * dev;
        }
    }
    for (double& v : s.stds) {
        v = std::sqrt(v / n);
        if (!(v > 1e-12)) v = 1.0;
    }
    return s;
}

Matrix apply_scaler(const Scaler& scaler, const Matrix& X) {
    if (X.cols() != scaler.dim()) throw InputError("apply_scaler: dimension mismatch");
    Matrix out(X.rows(), X.cols());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t j = 0; j < X.cols(); ++j) {
            out(r, j) = (X(r, j) - scaler.means[j]) / scaler.stds[j];
        }
    }
    return out;
}

namespace {

constexpr double kTau = 1e-12;

// min 0.5 a'Qa + p'a  s.t.  y'a = 0, 0 <= a <= C, with y in {+1,-1} and Q already
// carrying the label signs. SMO with second-order working-set selection.
struct DualSolution {
    std::vector<double> alpha;
    double rho = 0.0;
    long iterations = 0;
    bool converged = false;
    double objective = 0.0;  // minimization form
};

class SmoSolver {
public:
    SmoSolver(std::vector<double> Q, std::vector<double> p, std::vector<int> y, double C,
              const SolverOptions& opts)
        : n_(p.size()), Q_(std::move(Q)), p_(std::move(p)), y_(std::move(y)), C_(C), opts_(opts) {}

    DualSolution solve() {
        alpha_.assign(n_, 0.0);
        G_ = p_;
        // The seed fixes the scan order, which decides ties during working-set selection.
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), 0);
        SplitMix64 rng(opts_.seed);
        for (std::size_t i = n_; i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);

        const long budget = static_cast<long>(std::max(opts_.max_passes, 1)) *
                            static_cast<long>(std::max<std::size_t>(n_, 100));
        DualSolution sol;
        while (sol.iterations < budget) {
            std::size_t i = 0;
            std::size_t j = 0;
            if (!select_working_set(i, j)) {
                sol.converged = true;
                break;
            }
            update_pair(i, j);
            ++sol.iterations;
        }
        if (!sol.converged) {
            std::size_t i = 0;
            std::size_t j = 0;
            sol.converged = !select_working_set(i, j);
        }

        double obj = 0.0;
        for (std::size_t t = 0; t < n_; ++t) obj += alpha_[t] * (G_[t] + p_[t]);
        sol.objective = 0.5 * obj;
        sol.rho = compute_rho();
        sol.alpha = alpha_;
        return sol;
    }

private:
    double q(std::size_t i, std::size_t j) const { return Q_[i * n_ + j]; }
    bool at_upper(std::size_t t) const { return alpha_[t] >= C_; }
    bool at_lower(std::size_t t) const { return alpha_[t] <= 0.0; }

    bool select_working_set(std::size_t& out_i, std::size_t& out_j) const {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t gmax_idx = -1;
        std::ptrdiff_t gmin_idx = -1;
        double obj_diff_min = std::numeric_limits<double>::infinity();

        for (std::size_t t : order_) {
            if (y_[t] == +1) {
                if (!at_upper(t) && -G_[t] >= gmax) {
                    gmax = -G_[t];
                    gmax_idx = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!at_lower(t) && G_[t] >= gmax) {
                gmax = G_[t];
                gmax_idx = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (gmax_idx < 0) return false;
        const auto i = static_cast<std::size_t>(gmax_idx);

        for (std::size_t t : order_) {
            double grad_diff = 0.0;
            double quad = 0.0;
            if (y_[t] == +1) {
                if (at_lower(t)) continue;
                grad_diff = gmax + G_[t];
                gmax2 = std::max(gmax2, G_[t]);
                quad = q(i, i) + q(t, t) - 2.0 * y_[i] * q(i, t);
            } else {
                if (at_upper(t)) continue;
                grad_diff = gmax - G_[t];
                gmax2 = std::max(gmax2, -G_[t]);
                quad = q(i, i) + q(t, t) + 2.0 * y_[i] * q(i, t);
            }
            if (grad_diff > 0.0) {
                const double obj_diff = -(grad_diff * grad_diff) / (quad > 0.0 ? quad : kTau);
                if (obj_diff <= obj_diff_min) {
                    obj_diff_min = obj_diff;
                    gmin_idx = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        if (gmax + gmax2 < opts_.tol || gmin_idx < 0) return false;
        out_i = i;
        out_j = static_cast<std::size_t>(gmin_idx);
        return true;
    }

    void update_pair(std::size_t i, std::size_t j) {
        const double old_i = alpha_[i];
        const double old_j = alpha_[j];
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (y_[i] != y_[j]) {
            double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G_[i] - G_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) { aj = 0.0; ai = diff; }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C_) { ai = C_; aj = C_ - diff; }
            } else if (aj > C_) {
                aj = C_;
                ai = C_ + diff;
            }
        } else {
            double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (G_[i] - G_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C_) {
                if (ai > C_) { ai = C_; aj = sum - C_; }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > C_) {
                if (aj > C_) { aj = C_; ai = sum - C_; }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }
        const double di = ai - old_i;
        const double dj = aj - old_j;
        for (std::size_t t = 0; t < n_; ++t) G_[t] += q(i, t) * di + q(j, t) * dj;
    }

    double compute_rho() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < n_; ++t) {
            const double yg = y_[t] * G_[t];
            if (at_upper(t)) {
                if (y_[t] == -1) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (at_lower(t)) {
                if (y_[t] == +1) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        return n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    }

    std::size_t n_;
    std::vector<double> Q_;
    std::vector<double> p_;
    std::vector<int> y_;
    double C_;
    SolverOptions opts_;
    std::vector<double> alpha_;
    std::vector<double> G_;
    std::vector<std::size_t> order_;
};

std::vector<double> gram(const Matrix& X, const Kernel& k) {
    const std::size_t n = X.rows();
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = k(X.row(i), X.row(j));
            K[i * n + j] = v;
            K[j * n + i] = v;
        }
    }
    return K;
}

void check_training_input(const Matrix& X, std::size_t n_targets, double C) {
    if (X.rows() != n_targets) throw InputError("svm: row/target count mismatch");
    if (!(C > 0.0)) throw InputError("svm: C must be positive");
    for (double v : X.data()) {
        if (!std::isfinite(v)) throw InputError("svm: non-finite feature value");
    }
}

}  // namespace

SvcModel train_svc_scaled(const Matrix& X, const std::vector<int>& y, double C,
                          const KernelSpec& kernel, const SolverOptions& opts, Scaler scaler) {
    check_training_input(X, y.size(), C);
    const bool has_pos = std::any_of(y.begin(), y.end(), [](int v) { return v == +1; });
    const bool has_neg = std::any_of(y.begin(), y.end(), [](int v) { return v == -1; });
    if (!has_pos || !has_neg || std::any_of(y.begin(), y.end(), [](int v) { return v != 1 && v != -1; })) {
        throw InputError("train_svc: labels must be +1/-1 with both classes present");
    }
    const std::size_t n = X.rows();
    const Kernel k = resolve_kernel(kernel, X);
    std::vector<double> Q = gram(X, k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) Q[i * n + j] *= y[i] * y[j];
    }
    SmoSolver solver(std::move(Q), std::vector<double>(n, -1.0), y, C, opts);
    const DualSolution sol = solver.solve();

    SvcModel m;
    m.kernel = k;
    m.scaler = std::move(scaler);
    m.C = C;
    m.bias = -sol.rho;
    m.support_vectors = Matrix(0, X.cols());
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.alpha[i] > kSupportThreshold) {
            m.support_vectors.append_row(X.row(i));
            m.dual_coefs.push_back(sol.alpha[i] * y[i]);
            m.support_indices.push_back(i);
        }
    }
    m.stats = {sol.iterations, sol.converged, -sol.objective};
    return m;
}

SvcModel train_svc(const Matrix& X, const std::vector<int>& y, double C, const KernelSpec& kernel,
                   const SolverOptions& opts) {
    Scaler s = fit_scaler(X);
    const Matrix Z = apply_scaler(s, X);
    return train_svc_scaled(Z, y, C, kernel, opts, std::move(s));
}

SvrModel train_svr_scaled(const Matrix& X, const std::vector<double>& y, double C, double epsilon,
                          const KernelSpec& kernel, const SolverOptions& opts, Scaler scaler) {
    check_training_input(X, y.size(), C);
    if (X.rows() < 2) throw InputError("train_svr: need at least 2 samples");
    if (!(epsilon >= 0.0)) throw InputError("train_svr: epsilon must be nonnegative");
    for (double v : y) {
        if (!std::isfinite(v)) throw InputError("train_svr: non-finite target");
    }
    const std::size_t n = X.rows();
    const Kernel k = resolve_kernel(kernel, X);
    const std::vector<double> K = gram(X, k);

    // Variables [alpha; alpha*] with signs [+1; -1].
    const std::size_t m2 = 2 * n;
    std::vector<int> sign(m2);
    std::vector<double> p(m2);
    for (std::size_t i = 0; i < n; ++i) {
        sign[i] = +1;
        sign[i + n] = -1;
        p[i] = epsilon - y[i];
        p[i + n] = epsilon + y[i];
    }
    std::vector<double> Q(m2 * m2);
    for (std::size_t a = 0; a < m2; ++a) {
        for (std::size_t b = 0; b < m2; ++b) {
            Q[a * m2 + b] = sign[a] * sign[b] * K[(a % n) * n + (b % n)];
        }
    }
    SmoSolver solver(std::move(Q), std::move(p), sign, C, opts);
    const DualSolution sol = solver.solve();

    SvrModel m;
    m.kernel = k;
    m.scaler = std::move(scaler);
    m.C = C;
    m.epsilon = epsilon;
    m.bias = -sol.rho;
    m.support_vectors = Matrix(0, X.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double coef = sol.alpha[i] - sol.alpha[i + n];
        if (std::abs(coef) > kSupportThreshold) {
            m.support_vectors.append_row(X.row(i));
            m.dual_coefs.push_back(coef);
            m.support_indices.push_back(i);
        }
    }
    m.stats = {sol.iterations, sol.converged, -sol.objective};
    return m;
}

SvrModel train_svr(const Matrix& X, const std::vector<double>& y, double C, double epsilon,
                   const KernelSpec& kernel, const SolverOptions& opts) {
    Scaler s = fit_scaler(X);
    const Matrix Z = apply_scaler(s, X);
    return train_svr_scaled(Z, y, C, epsilon, kernel, opts, std::move(s));
}

namespace {

template <typename Model>
double kernel_expansion(const Model& model, std::span<const double> x) {
    const std::vector<double> z = model.scaler.apply(x);
    double f = model.bias;
    for (std::size_t i = 0; i < model.dual_coefs.size(); ++i) {
        f += model.dual_coefs[i] * model.kernel(model.support_vectors.row(i), z);
    }
    return f;
}

}  // namespace

double decision_value(const SvcModel& model, std::span<const double> x) {
    return kernel_expansion(model, x);
}

int predict_svc(const SvcModel& model, std::span<const double> x) {
    return decision_value(model, x) >= 0.0 ? +1 : -1;
}

double predict_svr(const SvrModel& model, std::span<const double> x) {
    return kernel_expansion(model, x);
}

}  // namespace cogpipe
