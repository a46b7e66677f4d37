#pragma once

#include <functional>
#include <vector>

namespace proxyhedge {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Both rules use the Golub-Welsch construction from the symmetric Jacobi matrix.
/// Physicists' Gauss-Hermite: integral of exp(-x^2) f(x) ~ sum_k w_k f(x_k).
QuadratureRule gauss_hermite(int n);
/// Gauss-Legendre on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// E[f(xi)] for xi ~ N(0, 1) with a Gauss-Hermite rule.
double normal_expectation(const QuadratureRule& hermite, const std::function<double(double)>& f);

/// Composite rule: `panels` equal panels on [a, b], each with `rule`.
double integrate(const QuadratureRule& rule, const std::function<double(double)>& f, double a, double b,
                 int panels = 1);

/// E[f(xi) 1{xi < kink} + tail 1{xi >= kink}] for xi ~ N(0, 1). The smooth part is integrated
/// over [-12, kink] with 20-point panels, about `nodes` points in total.
double normal_expectation_split(const std::function<double(double)>& f, double tail, double kink, int nodes = 200);

} // namespace proxyhedge
