#pragma once

#include "proxyhedge/grid_field.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace proxyhedge {

/// Sum v(t_j) = sum_k w_k exp(-(t_j - s_k)^2 / h^2).
struct GaussTransformSpec {
    std::vector<double> sources;
    std::vector<double> weights;
    std::vector<double> targets;
    double bandwidth = 1.0;
    int order = 8;               // Taylor terms kept per cluster
    double cluster_radius = 0.15; // in units of the bandwidth
    double cutoff = 6.0;          // interaction range beyond the cluster, in bandwidths

    void validate() const;
};

std::vector<double> direct_gauss_1d(const GaussTransformSpec& spec);
std::vector<double> ifgt_1d(const GaussTransformSpec& spec);

/// Worst-case error of ifgt_1d per unit of absolute source weight in range.
double ifgt_error_bound(int order, double cluster_radius, double cutoff = 6.0);

/// Number of d-variate monomials of total degree <= p - 1, i.e. C(p - 1 + d, d).
std::uint64_t taylor_term_count(int d, int p);

/// Precomputed IFGT geometry for fixed source/target sets; apply() is linear in the weights.
class Ifgt1dPlan {
public:
    Ifgt1dPlan(std::span<const double> sources, std::span<const double> targets, double bandwidth, int order,
               double cluster_radius = 0.15, double cutoff = 6.0);

    void apply(std::span<const double> weights, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> weights) const;

    std::size_t source_count() const { return source_cluster_.size(); }
    std::size_t target_count() const { return target_first_.size(); }
    int cluster_count() const { return clusters_; }

private:
    int order_;
    int clusters_;
    std::vector<int> source_cluster_;
    std::vector<double> source_terms_; // per source: order entries
    std::vector<int> target_first_;
    std::vector<int> target_last_;
    std::vector<std::size_t> target_offset_;
    std::vector<double> target_terms_; // per (target, near cluster): order entries
};

/// d-variate transforms over row-major point arrays (n x d).
std::vector<double> direct_gauss_nd(int d, std::span<const double> sources, std::span<const double> weights,
                                    std::span<const double> targets, double bandwidth);
/// Box-clustered d-variate IFGT with taylor_term_count(d, order) terms per cluster.
std::vector<double> ifgt_nd(int d, std::span<const double> sources, std::span<const double> weights,
                            std::span<const double> targets, double bandwidth, int order,
                            double cluster_radius = 0.15, double cutoff = 6.0);

enum class KernelMethod { Auto, Stencil, Ifgt };

struct KernelOptions {
    KernelMethod method = KernelMethod::Auto;
    int order = 8;
    double cluster_radius = 0.15;
    double pad_bandwidths = 6.0; // constant-extension padding at each edge
    int threads = 1;
    int auto_ifgt_halfwidth = 48; // Auto switches to IFGT above this stencil half-width
};

/// Exact heat propagation of u_t = 1/2 p u_xx for time dt along one axis, as a
/// normalized Gaussian convolution (bandwidth sqrt(2 p dt)) with constant
/// extension past the edges.
class AxisHeatKernel {
public:
    AxisHeatKernel(const GridAxis& axis, double coefficient, double dt, const KernelOptions& opts);

    /// in and out may alias.
    void apply(std::span<const double> in, std::span<double> out, std::vector<double>& scratch) const;

    double bandwidth() const { return h_; }
    int padding() const { return pad_; }
    bool uses_ifgt() const { return !plan_.empty(); }

private:
    int m_;
    int pad_;
    double h_;
    std::vector<double> stencil_;
    double stencil_mass_ = 0.0;
    std::vector<Ifgt1dPlan> plan_; // empty or one element
    std::vector<double> plan_mass_;
};

/// Applies kernel along every fiber of `axis`.
void apply_along_axis(GridField& field, int axis, const AxisHeatKernel& kernel, int threads);

/// Heat step with per-axis coefficients over the selected axes, sequentially.
GridField heat_step_separable(const GridField& field, std::span<const double> coefficients, double dt,
                              std::span<const int> axes, const KernelOptions& opts = {});
void heat_step_separable_inplace(GridField& field, std::span<const double> coefficients, double dt,
                                 std::span<const int> axes, const KernelOptions& opts = {});

} // namespace proxyhedge
