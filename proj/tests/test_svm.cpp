#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "cogpipe/common.hpp"
#include "cogpipe/svm.hpp"
#include "support/qp_oracle.hpp"

using namespace cogpipe;

namespace {

const KernelSpec kLinear{KernelKind::Linear, std::nullopt};
KernelSpec rbf(double g) { return {KernelKind::Rbf, g}; }

Matrix random_matrix(SplitMix64& g, std::size_t n, std::size_t d, double scale = 1.0) {
    Matrix X(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X(i, j) = scale * g.normal();
    }
    return X;
}

std::vector<int> random_labels(SplitMix64& g, std::size_t n) {
    std::vector<int> y(n);
    for (auto& v : y) v = g.below(2) ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    return y;
}

template <typename Model>
void check_feasible(const Model& m) {
    const double sum = std::accumulate(m.dual_coefs.begin(), m.dual_coefs.end(), 0.0);
    CHECK(std::abs(sum) <= 1e-6);
    for (double c : m.dual_coefs) CHECK(std::abs(c) <= m.C + 1e-9);
}

}  // namespace

TEST_CASE("two-point z-score") {
    const Scaler s = fit_scaler(Matrix::from_rows({{0}, {2}}));
    CHECK(s.means[0] == 1.0);
    CHECK(s.stds[0] == 1.0);
    const Matrix z = apply_scaler(s, Matrix::from_rows({{0}, {2}}));
    CHECK(z(0, 0) == -1.0);
    CHECK(z(1, 0) == 1.0);
}

TEST_CASE("zero-variance column maps to zero") {
    const Matrix X = Matrix::from_rows({{3, 1}, {3, 2}, {3, 6}});
    const Scaler s = fit_scaler(X);
    CHECK(s.stds[0] == 1.0);
    const Matrix z = apply_scaler(s, X);
    for (std::size_t i = 0; i < 3; ++i) CHECK(z(i, 0) == 0.0);
}

TEST_CASE("scaled fit data has zero column means") {
    SplitMix64 g(3);
    const Matrix X = random_matrix(g, 40, 6, 25.0);
    const Matrix z = apply_scaler(fit_scaler(X), X);
    for (std::size_t j = 0; j < 6; ++j) {
        double m = 0, v = 0;
        for (std::size_t i = 0; i < 40; ++i) m += z(i, j);
        m /= 40;
        for (std::size_t i = 0; i < 40; ++i) v += (z(i, j) - m) * (z(i, j) - m);
        CHECK(std::abs(m) <= 1e-12);
        CHECK(v / 40 == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(apply_scaler(fit_scaler(X), Matrix(2, 3)), InputError);
    CHECK_THROWS_AS(fit_scaler(Matrix(0, 3)), InputError);
}

TEST_CASE("symmetric 1-D problem gives f(x) = x") {
    const Matrix X = Matrix::from_rows({{-1}, {1}});
    const std::vector<int> y{-1, 1};
    const SvcModel m = train_svc(X, y, 10.0, kLinear);
    REQUIRE(m.dual_coefs.size() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(std::abs(m.dual_coefs[s]) == doctest::Approx(0.5).epsilon(1e-6));
    }
    CHECK(m.bias == doctest::Approx(0.0).epsilon(1e-9));
    for (double x : {-3.0, -1.0, 0.5, 2.0}) {
        const std::vector<double> in{x};
        CHECK(decision_value(m, in) == doctest::Approx(x).epsilon(1e-6));
    }
    // the oracle agrees on this 2-variable dual
    const auto sol = testsupport::solve_qp(testsupport::svc_dual(X, y, 10.0, m.kernel));
    CHECK(sol.z[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(sol.z[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("decision tie maps to +1") {
    const SvcModel m = train_svc(Matrix::from_rows({{-1}, {1}}), {-1, 1}, 10.0, kLinear);
    const std::vector<double> zero{0.0};
    CHECK(std::abs(decision_value(m, zero)) < 1e-9);
    SvcModel exact = m;
    exact.bias = -(decision_value(m, zero) - m.bias);  // force f(0) == 0 exactly
    CHECK(predict_svc(exact, zero) == 1);
    const std::vector<double> two{2.0};
    CHECK(predict_svc(m, two) == 1);
    CHECK(decision_value(m, two) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("xor with rbf is fit exactly") {
    const Matrix X = Matrix::from_rows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
    const std::vector<int> y{-1, -1, 1, 1};
    const SvcModel m = train_svc_scaled(X, y, 10.0, rbf(1.0), {}, Scaler::identity(2));
    for (std::size_t i = 0; i < 4; ++i) CHECK(predict_svc(m, X.row(i)) == y[i]);
    const auto sol = testsupport::solve_qp(testsupport::svc_dual(X, y, 10.0, m.kernel));
    CHECK(testsupport::svc_model_objective(m, X, y) >= -sol.objective - 1e-4);
}

TEST_CASE("trained classifiers are dual feasible") {
    SplitMix64 g(31);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 4 + g.below(40);
        const Matrix X = random_matrix(g, n, 3);
        const auto y = random_labels(g, n);
        const double C = std::pow(10.0, static_cast<double>(g.below(4)) - 1.0);
        const SvcModel m = train_svc(X, y, C, trial % 2 ? rbf(0.5) : kLinear, {1e-3, 200, g.next()});
        check_feasible(m);
        for (std::size_t s = 0; s < m.support_indices.size(); ++s) {
            const double alpha = m.dual_coefs[s] * y[m.support_indices[s]];
            CHECK(alpha > kSupportThreshold);
            CHECK(alpha <= C + 1e-9);
        }
    }
}

TEST_CASE("separable toy sets are classified correctly") {
    SplitMix64 g(5);
    Matrix X(0, 2);
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        const int label = i % 2 ? 1 : -1;
        const std::vector<double> row{label * 3.0 + g.normal() * 0.5, g.normal()};
        X.append_row(row);
        y.push_back(label);
    }
    for (const auto& k : {kLinear, rbf(0.5), KernelSpec{KernelKind::Rbf, std::nullopt}}) {
        const SvcModel m = train_svc(X, y, 10.0, k);
        for (std::size_t i = 0; i < X.rows(); ++i) CHECK(predict_svc(m, X.row(i)) == y[i]);
        CHECK(m.stats.converged);
    }
}

TEST_CASE("single-class labels are rejected") {
    const Matrix X = Matrix::from_rows({{0}, {1}});
    CHECK_THROWS_AS(train_svc(X, {1, 1}, 1.0, kLinear), InputError);
    CHECK_THROWS_AS(train_svc(X, {1, 0}, 1.0, kLinear), InputError);
    CHECK_THROWS_AS(train_svc(X, {1, -1}, 0.0, kLinear), InputError);
    CHECK_THROWS_AS(train_svc(X, {1}, 1.0, kLinear), InputError);
}

TEST_CASE("dimension mismatch at inference") {
    const SvcModel m = train_svc(Matrix::from_rows({{0, 1}, {1, 0}}), {1, -1}, 1.0, kLinear);
    const std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(decision_value(m, wrong), InputError);
}

TEST_CASE("svr recovers a noise-free line") {
    const Matrix X = Matrix::from_rows({{0}, {1}, {2}, {3}});
    const std::vector<double> y{1, 3, 5, 7};
    const SvrModel m = train_svr(X, y, 100.0, 0.1, kLinear);
    const std::vector<double> q{1.5};
    CHECK(std::abs(predict_svr(m, q) - 4.0) <= 0.1 + 0.05);
    check_feasible(m);
    // compare with the 8-variable oracle on the same scaled inputs
    const Matrix Z = apply_scaler(m.scaler, X);
    const auto sol = testsupport::solve_qp(testsupport::svr_dual(Z, y, 100.0, 0.1, m.kernel));
    CHECK(testsupport::svr_model_objective(m, Z, y) >= -sol.objective - 1e-4);
}

TEST_CASE("constant targets give a flat prediction inside the tube") {
    SplitMix64 g(9);
    const Matrix X = random_matrix(g, 15, 2);
    const std::vector<double> y(15, 4.2);
    const SvrModel m = train_svr(X, y, 10.0, 0.3, rbf(0.5));
    for (std::size_t i = 0; i < X.rows(); ++i) CHECK(std::abs(predict_svr(m, X.row(i)) - 4.2) <= 0.3 + 1e-9);
    check_feasible(m);
}

TEST_CASE("trained regressors are dual feasible") {
    SplitMix64 g(44);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + g.below(30);
        const Matrix X = random_matrix(g, n, 2);
        std::vector<double> y(n);
        for (auto& v : y) v = 10.0 * g.normal();
        const SvrModel m = train_svr(X, y, 5.0, 0.5, trial % 2 ? rbf(1.0) : kLinear, {1e-3, 200, g.next()});
        check_feasible(m);
    }
    CHECK_THROWS_AS(train_svr(Matrix::from_rows({{1}}), {1.0}, 1.0, 0.1, kLinear), InputError);
    CHECK_THROWS_AS(train_svr(Matrix::from_rows({{1}, {2}}), {1.0, 2.0}, 1.0, -0.1, kLinear), InputError);
}

TEST_CASE("duplicating a non-support point leaves predictions unchanged") {
    SplitMix64 g(13);
    Matrix X(0, 2);
    std::vector<int> y;
    for (int i = 0; i < 20; ++i) {
        const int label = i % 2 ? 1 : -1;
        const std::vector<double> row{label * 2.0 + g.normal() * 0.4, g.normal()};
        X.append_row(row);
        y.push_back(label);
    }
    const Scaler id = Scaler::identity(2);
    const SvcModel m = train_svc_scaled(X, y, 1.0, kLinear, {}, id);
    std::vector<bool> is_sv(X.rows(), false);
    for (std::size_t i : m.support_indices) is_sv[i] = true;
    std::size_t far = 0;
    while (is_sv[far]) ++far;

    Matrix X2 = X;
    X2.append_row(X.row(far));
    std::vector<int> y2 = y;
    y2.push_back(y[far]);
    const SvcModel m2 = train_svc_scaled(X2, y2, 1.0, kLinear, {}, id);
    SplitMix64 q(77);
    for (int t = 0; t < 50; ++t) {
        const std::vector<double> p{3.0 * q.normal(), 3.0 * q.normal()};
        CHECK(decision_value(m2, p) == doctest::Approx(decision_value(m, p)).epsilon(1e-3));
        CHECK(predict_svc(m2, p) == predict_svc(m, p));
    }
}

TEST_CASE("rbf kernel identity, symmetry and positive semidefinite Gram") {
    SplitMix64 g(17);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + g.below(30);
        const Matrix X = random_matrix(g, n, 1 + g.below(5), 2.0);
        const Kernel k{KernelKind::Rbf, 0.01 + g.uniform() * 3.0};
        const Eigen::MatrixXd K = testsupport::gram(X, k);
        for (std::size_t i = 0; i < n; ++i) CHECK(K(i, i) == 1.0);
        CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K, Eigen::EigenvaluesOnly);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("scale gamma is 1/(d var(X))") {
    const Matrix X = Matrix::from_rows({{0, 2}, {2, 4}});
    // entries {0,2,2,4}: mean 2, variance 2
    const Kernel k = resolve_kernel({KernelKind::Rbf, std::nullopt}, X);
    CHECK(k.gamma == doctest::Approx(1.0 / (2 * 2.0)));
    const Kernel flat = resolve_kernel({KernelKind::Rbf, std::nullopt}, Matrix(3, 4, 1.0));
    CHECK(flat.gamma == doctest::Approx(0.25));
    CHECK(resolve_kernel(rbf(0.3), X).gamma == 0.3);
    CHECK_THROWS_AS(resolve_kernel(rbf(0.0), X), InputError);
}

TEST_CASE("solver seed does not change the optimum") {
    SplitMix64 g(23);
    const Matrix X = random_matrix(g, 25, 3);
    const auto y = random_labels(g, 25);
    const SvcModel a = train_svc(X, y, 1.0, rbf(0.7), {1e-3, 200, 1});
    const SvcModel b = train_svc(X, y, 1.0, rbf(0.7), {1e-3, 200, 2});
    CHECK(a.stats.dual_objective == doctest::Approx(b.stats.dual_objective).epsilon(1e-3));
    const SvcModel c = train_svc(X, y, 1.0, rbf(0.7), {1e-3, 200, 1});
    CHECK(a.dual_coefs == c.dual_coefs);
    CHECK(a.bias == c.bias);
}

TEST_CASE("reported objective matches the coefficients") {
    SplitMix64 g(29);
    const Matrix X = random_matrix(g, 8, 2);
    const auto y = random_labels(g, 8);
    const SvcModel m = train_svc_scaled(X, y, 2.0, rbf(1.0), {}, Scaler::identity(2));
    CHECK(m.stats.dual_objective == doctest::Approx(testsupport::svc_model_objective(m, X, y)).epsilon(1e-9));
    std::vector<double> t(8);
    for (auto& v : t) v = g.normal();
    const SvrModel r = train_svr_scaled(X, t, 2.0, 0.2, rbf(1.0), {}, Scaler::identity(2));
    CHECK(r.stats.dual_objective == doctest::Approx(testsupport::svr_model_objective(r, X, t)).epsilon(1e-9));
}
