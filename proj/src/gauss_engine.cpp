#include "proxyhedge/gauss_engine.hpp"

#include "proxyhedge/errors.hpp"
#include "proxyhedge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace proxyhedge {

void GaussTransformSpec::validate() const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw NumericalError("gauss", "bandwidth must be > 0");
    if (order < 1) throw NumericalError("gauss", "truncation order must be >= 1");
    if (!(cluster_radius > 0.0)) throw NumericalError("gauss", "cluster radius must be > 0");
    if (sources.size() != weights.size()) throw NumericalError("gauss", "sources and weights differ in length");
    for (double w : weights) {
        if (!std::isfinite(w)) throw NumericalError("gauss", "non-finite weight");
    }
}

std::vector<double> direct_gauss_1d(const GaussTransformSpec& spec) {
    spec.validate();
    const double inv_h2 = 1.0 / (spec.bandwidth * spec.bandwidth);
    std::vector<double> out(spec.targets.size(), 0.0);
    for (std::size_t j = 0; j < spec.targets.size(); ++j) {
        double acc = 0.0;
        const double t = spec.targets[j];
        for (std::size_t k = 0; k < spec.sources.size(); ++k) {
            const double d = t - spec.sources[k];
            acc += spec.weights[k] * std::exp(-d * d * inv_h2);
        }
        out[j] = acc;
    }
    return out;
}

std::vector<double> ifgt_1d(const GaussTransformSpec& spec) {
    spec.validate();
    if (spec.sources.empty()) return std::vector<double>(spec.targets.size(), 0.0);
    Ifgt1dPlan plan(spec.sources, spec.targets, spec.bandwidth, spec.order, spec.cluster_radius, spec.cutoff);
    return plan.apply(spec.weights);
}

double ifgt_error_bound(int order, double cluster_radius, double cutoff) {
    // Remainder of exp(2ab) after `order` terms, damped by exp(-a^2 - b^2):
    // (2|ab|)^p / p! * exp(-(|a| - |b|)^2), |b| <= rx, |a| <= rx + cutoff.
    double worst = 0.0;
    const double log_fact = std::lgamma(order + 1.0);
    const int na = 2000;
    const int nb = 50;
    for (int ib = 1; ib <= nb; ++ib) {
        const double b = cluster_radius * ib / nb;
        for (int ia = 1; ia <= na; ++ia) {
            const double a = (cluster_radius + cutoff) * ia / na;
            const double lg = order * std::log(2.0 * a * b) - log_fact - (a - b) * (a - b);
            worst = std::max(worst, std::exp(lg));
        }
    }
    return worst + std::exp(-cutoff * cutoff);
}

std::uint64_t taylor_term_count(int d, int p) {
    if (d < 1 || p < 1) throw NumericalError("gauss", "taylor_term_count needs d >= 1 and p >= 1");
    // C(p - 1 + d, d) evaluated incrementally; each partial product is an exact binomial.
    std::uint64_t c = 1;
    for (int k = 1; k <= d; ++k) c = c * static_cast<std::uint64_t>(p - 1 + k) / static_cast<std::uint64_t>(k);
    return c;
}

Ifgt1dPlan::Ifgt1dPlan(std::span<const double> sources, std::span<const double> targets, double bandwidth,
                       int order, double cluster_radius, double cutoff)
    : order_(order) {
    if (!(bandwidth > 0.0) || order < 1 || !(cluster_radius > 0.0)) {
        throw NumericalError("gauss", "invalid IFGT parameters");
    }
    const double h = bandwidth;
    const double width = 2.0 * cluster_radius * h;
    double lo = 0.0;
    double hi = 0.0;
    if (!sources.empty()) {
        auto [mn, mx] = std::minmax_element(sources.begin(), sources.end());
        lo = *mn;
        hi = *mx;
    }
    clusters_ = static_cast<int>(std::floor((hi - lo) / width)) + 1;

    // Boxes of the given width; each expansion is centered on the midpoint of its sources' span,
    // which keeps every source within cluster_radius * h of its center.
    source_cluster_.resize(sources.size());
    std::vector<double> span_lo(static_cast<std::size_t>(clusters_), std::numeric_limits<double>::infinity());
    std::vector<double> span_hi(static_cast<std::size_t>(clusters_), -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const int k = std::clamp(static_cast<int>(std::floor((sources[s] - lo) / width)), 0, clusters_ - 1);
        source_cluster_[s] = k;
        span_lo[static_cast<std::size_t>(k)] = std::min(span_lo[static_cast<std::size_t>(k)], sources[s]);
        span_hi[static_cast<std::size_t>(k)] = std::max(span_hi[static_cast<std::size_t>(k)], sources[s]);
    }
    std::vector<double> centers(static_cast<std::size_t>(clusters_));
    for (int k = 0; k < clusters_; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        centers[kk] = span_lo[kk] <= span_hi[kk] ? 0.5 * (span_lo[kk] + span_hi[kk]) : lo + (k + 0.5) * width;
    }
    auto center = [&](int k) { return centers[static_cast<std::size_t>(k)]; };

    source_terms_.resize(sources.size() * static_cast<std::size_t>(order));
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const int k = source_cluster_[s];
        const double delta = (sources[s] - center(k)) / h;
        double* t = &source_terms_[s * static_cast<std::size_t>(order)];
        t[0] = std::exp(-delta * delta);
        for (int n = 1; n < order; ++n) t[n] = t[n - 1] * 2.0 * delta / n;
    }

    const double reach = cluster_radius * h + cutoff * h;
    target_first_.resize(targets.size());
    target_last_.resize(targets.size());
    target_offset_.resize(targets.size());
    std::size_t offset = 0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const double t = targets[j];
        int k0 = static_cast<int>(std::ceil((t - reach - lo) / width - 0.5));
        int k1 = static_cast<int>(std::floor((t + reach - lo) / width - 0.5));
        k0 = std::max(k0, 0);
        k1 = std::min(k1, clusters_ - 1);
        target_first_[j] = k0;
        target_last_[j] = k1;
        target_offset_[j] = offset;
        if (k1 >= k0) offset += static_cast<std::size_t>(k1 - k0 + 1) * static_cast<std::size_t>(order);
    }
    target_terms_.resize(offset);
    for (std::size_t j = 0; j < targets.size(); ++j) {
        double* t = target_terms_.data() + target_offset_[j];
        for (int k = target_first_[j]; k <= target_last_[j]; ++k, t += order) {
            const double delta = (targets[j] - center(k)) / h;
            t[0] = std::exp(-delta * delta);
            for (int n = 1; n < order; ++n) t[n] = t[n - 1] * delta;
        }
    }
}

void Ifgt1dPlan::apply(std::span<const double> weights, std::span<double> out) const {
    const auto p = static_cast<std::size_t>(order_);
    std::vector<double> coeff(static_cast<std::size_t>(clusters_) * p, 0.0);
    for (std::size_t s = 0; s < source_cluster_.size(); ++s) {
        const double w = weights[s];
        const double* t = &source_terms_[s * p];
        double* c = &coeff[static_cast<std::size_t>(source_cluster_[s]) * p];
        for (std::size_t n = 0; n < p; ++n) c[n] += w * t[n];
    }
    for (std::size_t j = 0; j < target_first_.size(); ++j) {
        double acc = 0.0;
        const double* t = target_terms_.data() + target_offset_[j];
        for (int k = target_first_[j]; k <= target_last_[j]; ++k, t += p) {
            const double* c = &coeff[static_cast<std::size_t>(k) * p];
            for (std::size_t n = 0; n < p; ++n) acc += c[n] * t[n];
        }
        out[j] = acc;
    }
}

std::vector<double> Ifgt1dPlan::apply(std::span<const double> weights) const {
    std::vector<double> out(target_first_.size());
    apply(weights, out);
    return out;
}

std::vector<double> direct_gauss_nd(int d, std::span<const double> sources, std::span<const double> weights,
                                    std::span<const double> targets, double bandwidth) {
    const auto dd = static_cast<std::size_t>(d);
    const std::size_t ns = sources.size() / dd;
    const std::size_t nt = targets.size() / dd;
    const double inv_h2 = 1.0 / (bandwidth * bandwidth);
    std::vector<double> out(nt, 0.0);
    for (std::size_t j = 0; j < nt; ++j) {
        double acc = 0.0;
        for (std::size_t s = 0; s < ns; ++s) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < dd; ++k) {
                const double diff = targets[j * dd + k] - sources[s * dd + k];
                r2 += diff * diff;
            }
            acc += weights[s] * std::exp(-r2 * inv_h2);
        }
        out[j] = acc;
    }
    return out;
}

namespace {

struct MultiIndexSet {
    std::vector<std::vector<int>> alpha;
    std::vector<int> parent; // alpha minus one unit in `axis`
    std::vector<int> axis;
    std::vector<double> factor; // 2^|alpha| / alpha!
};

MultiIndexSet graded_multi_indices(int d, int order) {
    MultiIndexSet set;
    set.alpha.push_back(std::vector<int>(static_cast<std::size_t>(d), 0));
    set.parent.push_back(-1);
    set.axis.push_back(-1);
    set.factor.push_back(1.0);
    // Degree-by-degree growth; each new index extends a parent along an axis at or after its last used axis.
    std::vector<int> last_axis{0};
    std::size_t begin = 0;
    for (int deg = 1; deg < order; ++deg) {
        const std::size_t end = set.alpha.size();
        for (std::size_t q = begin; q < end; ++q) {
            for (int k = last_axis[q]; k < d; ++k) {
                auto a = set.alpha[q];
                a[static_cast<std::size_t>(k)] += 1;
                set.alpha.push_back(a);
                set.parent.push_back(static_cast<int>(q));
                set.axis.push_back(k);
                set.factor.push_back(set.factor[q] * 2.0 / a[static_cast<std::size_t>(k)]);
                last_axis.push_back(k);
            }
        }
        begin = end;
    }
    return set;
}

} // namespace

std::vector<double> ifgt_nd(int d, std::span<const double> sources, std::span<const double> weights,
                            std::span<const double> targets, double bandwidth, int order, double cluster_radius,
                            double cutoff) {
    if (d < 1 || !(bandwidth > 0.0) || order < 1) throw NumericalError("gauss", "invalid d-variate IFGT parameters");
    const auto dd = static_cast<std::size_t>(d);
    const std::size_t ns = sources.size() / dd;
    const std::size_t nt = targets.size() / dd;
    const double h = bandwidth;
    const double width = 2.0 * cluster_radius * h;

    std::vector<double> lo(dd, 0.0), hi(dd, 0.0);
    std::vector<std::int64_t> boxes(dd, 1);
    for (std::size_t k = 0; k < dd && ns > 0; ++k) {
        lo[k] = hi[k] = sources[k];
        for (std::size_t s = 0; s < ns; ++s) {
            lo[k] = std::min(lo[k], sources[s * dd + k]);
            hi[k] = std::max(hi[k], sources[s * dd + k]);
        }
        boxes[k] = static_cast<std::int64_t>(std::floor((hi[k] - lo[k]) / width)) + 1;
    }

    const MultiIndexSet mi = graded_multi_indices(d, order);
    const std::size_t nterms = mi.alpha.size();
    std::unordered_map<std::int64_t, std::size_t> slot;
    std::vector<double> coeff;
    std::vector<double> mono(nterms);
    std::vector<double> delta(dd);
    std::vector<std::int64_t> cell(dd);

    for (std::size_t s = 0; s < ns; ++s) {
        std::int64_t id = 0;
        double r2 = 0.0;
        for (std::size_t k = 0; k < dd; ++k) {
            cell[k] = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor((sources[s * dd + k] - lo[k]) / width)), 0, boxes[k] - 1);
            id = id * boxes[k] + cell[k];
            delta[k] = (sources[s * dd + k] - (lo[k] + (cell[k] + 0.5) * width)) / h;
            r2 += delta[k] * delta[k];
        }
        auto [it, inserted] = slot.try_emplace(id, coeff.size());
        if (inserted) coeff.resize(coeff.size() + nterms, 0.0);
        mono[0] = 1.0;
        for (std::size_t q = 1; q < nterms; ++q) {
            mono[q] = mono[static_cast<std::size_t>(mi.parent[q])] * delta[static_cast<std::size_t>(mi.axis[q])];
        }
        const double e = weights[s] * std::exp(-r2);
        double* c = &coeff[it->second];
        for (std::size_t q = 0; q < nterms; ++q) c[q] += e * mi.factor[q] * mono[q];
    }

    const double reach = cluster_radius * h + cutoff * h;
    std::vector<double> out(nt, 0.0);
    std::vector<std::int64_t> c0(dd), c1(dd);
    for (std::size_t j = 0; j < nt; ++j) {
        bool empty = false;
        for (std::size_t k = 0; k < dd; ++k) {
            const double t = targets[j * dd + k];
            c0[k] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil((t - reach - lo[k]) / width - 0.5)));
            c1[k] = std::min<std::int64_t>(boxes[k] - 1,
                                           static_cast<std::int64_t>(std::floor((t + reach - lo[k]) / width - 0.5)));
            if (c1[k] < c0[k]) empty = true;
        }
        if (empty) continue;
        double acc = 0.0;
        cell = c0;
        while (true) {
            std::int64_t id = 0;
            for (std::size_t k = 0; k < dd; ++k) id = id * boxes[k] + cell[k];
            if (auto it = slot.find(id); it != slot.end()) {
                double r2 = 0.0;
                for (std::size_t k = 0; k < dd; ++k) {
                    delta[k] = (targets[j * dd + k] - (lo[k] + (cell[k] + 0.5) * width)) / h;
                    r2 += delta[k] * delta[k];
                }
                if (r2 <= (reach / h) * (reach / h)) {
                    mono[0] = 1.0;
                    for (std::size_t q = 1; q < nterms; ++q) {
                        mono[q] = mono[static_cast<std::size_t>(mi.parent[q])] *
                                  delta[static_cast<std::size_t>(mi.axis[q])];
                    }
                    const double* c = &coeff[it->second];
                    double sum = 0.0;
                    for (std::size_t q = 0; q < nterms; ++q) sum += c[q] * mono[q];
                    acc += std::exp(-r2) * sum;
                }
            }
            std::size_t k = dd;
            while (k-- > 0) {
                if (++cell[k] <= c1[k]) break;
                cell[k] = c0[k];
            }
            if (k == static_cast<std::size_t>(-1)) break;
        }
        out[j] = acc;
    }
    return out;
}

AxisHeatKernel::AxisHeatKernel(const GridAxis& axis, double coefficient, double dt, const KernelOptions& opts)
    : m_(axis.count) {
    if (!(coefficient > 0.0) || !std::isfinite(coefficient)) {
        throw NumericalError("heat_step", "diffusion coefficient must be > 0");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalError("heat_step", "time step must be > 0");
    h_ = std::sqrt(2.0 * coefficient * dt);
    pad_ = static_cast<int>(std::ceil(opts.pad_bandwidths * h_ / axis.step));
    const bool ifgt = opts.method == KernelMethod::Ifgt ||
                      (opts.method == KernelMethod::Auto && pad_ > opts.auto_ifgt_halfwidth);
    if (!ifgt) {
        stencil_.resize(static_cast<std::size_t>(2 * pad_ + 1));
        for (int m = -pad_; m <= pad_; ++m) {
            const double x = m * axis.step / h_;
            stencil_[static_cast<std::size_t>(m + pad_)] = std::exp(-x * x);
        }
        stencil_mass_ = 0.0;
        for (double w : stencil_) stencil_mass_ += w;
        return;
    }
    std::vector<double> src(static_cast<std::size_t>(m_ + 2 * pad_));
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = axis.origin + (static_cast<double>(i) - pad_) * axis.step;
    const std::vector<double> tgt = axis.nodes();
    plan_.emplace_back(src, tgt, h_, opts.order, opts.cluster_radius, opts.pad_bandwidths);
    plan_mass_ = plan_.front().apply(std::vector<double>(src.size(), 1.0));
}

void AxisHeatKernel::apply(std::span<const double> in, std::span<double> out, std::vector<double>& scratch) const {
    const auto m = static_cast<std::size_t>(m_);
    const auto pad = static_cast<std::size_t>(pad_);
    scratch.resize(m + 2 * pad);
    std::fill(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(pad), in[0]);
    std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(m), scratch.begin() + static_cast<std::ptrdiff_t>(pad));
    std::fill(scratch.begin() + static_cast<std::ptrdiff_t>(pad + m), scratch.end(), in[m - 1]);
    if (!plan_.empty()) {
        plan_.front().apply(scratch, out);
        for (std::size_t j = 0; j < m; ++j) out[j] /= plan_mass_[j];
        return;
    }
    const std::size_t width = stencil_.size();
    for (std::size_t j = 0; j < m; ++j) {
        const double* g = &scratch[j];
        double acc = 0.0;
        for (std::size_t q = 0; q < width; ++q) acc += stencil_[q] * g[q];
        out[j] = acc / stencil_mass_;
    }
}

void apply_along_axis(GridField& field, int axis, const AxisHeatKernel& kernel, int threads) {
    const auto m = static_cast<std::size_t>(field.axis(axis).count);
    const std::size_t stride = field.stride(axis);
    const std::size_t fibers = field.size() / m;
    std::span<double> v = field.values();
    parallel_for(fibers, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> fiber(m);
        std::vector<double> scratch;
        for (std::size_t f = begin; f < end; ++f) {
            const std::size_t base = (f / stride) * stride * m + f % stride;
            for (std::size_t j = 0; j < m; ++j) fiber[j] = v[base + j * stride];
            kernel.apply(fiber, fiber, scratch);
            for (std::size_t j = 0; j < m; ++j) v[base + j * stride] = fiber[j];
        }
    });
}

void heat_step_separable_inplace(GridField& field, std::span<const double> coefficients, double dt,
                                 std::span<const int> axes, const KernelOptions& opts) {
    for (int k : axes) {
        if (k < 0 || k >= field.dims()) throw NumericalError("heat_step", "axis out of range");
        AxisHeatKernel kernel(field.axis(k), coefficients[static_cast<std::size_t>(k)], dt, opts);
        apply_along_axis(field, k, kernel, opts.threads);
    }
}

GridField heat_step_separable(const GridField& field, std::span<const double> coefficients, double dt,
                              std::span<const int> axes, const KernelOptions& opts) {
    GridField out = field;
    heat_step_separable_inplace(out, coefficients, dt, axes, opts);
    return out;
}

} // namespace proxyhedge
