#include "proxyhedge/quadrature.hpp"

#include "proxyhedge/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace proxyhedge {

namespace {

// Zero-diagonal Jacobi matrix with the given off-diagonal and total weight mass.
QuadratureRule golub_welsch(int n, const std::function<double(int)>& off_diagonal, double mass) {
    if (n < 1) throw ConfigError("quadrature: need at least one node");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd off(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) off[k - 1] = off_diagonal(k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw NumericalError("quadrature", "Jacobi eigen-solve failed");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double v0 = es.eigenvectors()(0, k);
        rule.nodes[static_cast<std::size_t>(k)] = es.eigenvalues()[k];
        rule.weights[static_cast<std::size_t>(k)] = mass * v0 * v0;
    }
    return rule;
}

} // namespace

QuadratureRule gauss_hermite(int n) {
    return golub_welsch(n, [](int k) { return std::sqrt(0.5 * k); }, std::sqrt(std::numbers::pi));
}

QuadratureRule gauss_legendre(int n) {
    return golub_welsch(n, [](int k) { return k / std::sqrt(4.0 * k * k - 1.0); }, 2.0);
}

double normal_expectation(const QuadratureRule& hermite, const std::function<double(double)>& f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < hermite.nodes.size(); ++k) {
        acc += hermite.weights[k] * f(std::numbers::sqrt2 * hermite.nodes[k]);
    }
    return acc / std::sqrt(std::numbers::pi);
}

double integrate(const QuadratureRule& rule, const std::function<double(double)>& f, double a, double b,
                 int panels) {
    if (panels < 1) throw ConfigError("integrate: need at least one panel");
    const double w = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * w;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * f(mid + 0.5 * w * rule.nodes[k]);
    }
    return 0.5 * w * acc;
}

double normal_expectation_split(const std::function<double(double)>& f, double tail, double kink, int nodes) {
    constexpr double kLower = -12.0;
    constexpr int kPanelNodes = 20;
    double acc = tail * 0.5 * std::erfc(kink / std::numbers::sqrt2);
    if (kink > kLower) {
        static const QuadratureRule rule = gauss_legendre(kPanelNodes);
        const int panels = std::max(1, (nodes + kPanelNodes - 1) / kPanelNodes);
        const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        acc += integrate(rule, [&](double x) { return f(x) * norm * std::exp(-0.5 * x * x); }, kLower, kink, panels);
    }
    return acc;
}

} // namespace proxyhedge
