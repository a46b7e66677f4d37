#include "proxyhedge/nelder_mead.hpp"

#include "proxyhedge/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace proxyhedge {

namespace {

class CachedObjective {
public:
    CachedObjective(const std::function<double(const Eigen::VectorXd&)>& f, const NelderMeadOptions& opts,
                    NelderMeadResult& res)
        : f_(f), opts_(opts), res_(res) {}

    bool exhausted() const { return res_.evaluations >= opts_.max_evaluations; }

    double operator()(const Eigen::VectorXd& x) {
        std::vector<long long> key(static_cast<std::size_t>(x.size()));
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            key[static_cast<std::size_t>(i)] = std::llround(x[i] / opts_.cache_resolution);
        }
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        const double v = f_(x);
        ++res_.evaluations;
        res_.trace.push_back({x, v});
        if (v < res_.f || res_.x.size() == 0) {
            res_.f = v;
            res_.x = x;
        }
        cache_.emplace(std::move(key), v);
        return v;
    }

private:
    const std::function<double(const Eigen::VectorXd&)>& f_;
    const NelderMeadOptions& opts_;
    NelderMeadResult& res_;
    std::map<std::vector<long long>, double> cache_;
};

Eigen::VectorXd project(Eigen::VectorXd x, const NelderMeadOptions& o) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], o.lower, o.upper);
    return x;
}

// One simplex run from `start`; returns true on convergence.
bool run(CachedObjective& f, const Eigen::VectorXd& start, const NelderMeadOptions& o) {
    const Eigen::Index n = start.size();
    std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(n + 1), start);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd& p = v[static_cast<std::size_t>(i + 1)];
        p[i] += (start[i] + o.initial_step <= o.upper) ? o.initial_step : -o.initial_step;
        p = project(p, o);
    }
    std::vector<double> fv(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) fv[k] = f(v[k]);
    std::vector<std::size_t> order(v.size());

    while (!f.exhausted()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> sv;
        std::vector<double> sf;
        for (std::size_t k : order) {
            sv.push_back(v[k]);
            sf.push_back(fv[k]);
        }
        v = std::move(sv);
        fv = std::move(sf);

        double diameter = 0.0;
        for (std::size_t k = 1; k < v.size(); ++k) diameter = std::max(diameter, (v[k] - v[0]).lpNorm<Eigen::Infinity>());
        if (diameter <= o.x_tolerance && fv.back() - fv.front() <= o.f_tolerance * std::max(1.0, std::abs(fv.front()))) {
            return true;
        }
        if (diameter <= 0.01 * o.x_tolerance) return true;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k) centroid += v[static_cast<std::size_t>(k)];
        centroid /= static_cast<double>(n);
        const Eigen::VectorXd& worst = v.back();

        const Eigen::VectorXd xr = project(centroid + (centroid - worst), o);
        const double fr = f(xr);
        if (fr < fv.front()) {
            const Eigen::VectorXd xe = project(centroid + 2.0 * (centroid - worst), o);
            const double fe = f(xe);
            if (fe < fr) {
                v.back() = xe;
                fv.back() = fe;
            } else {
                v.back() = xr;
                fv.back() = fr;
            }
            continue;
        }
        if (fr < fv[fv.size() - 2]) {
            v.back() = xr;
            fv.back() = fr;
            continue;
        }
        const bool outside = fr < fv.back();
        const Eigen::VectorXd xc =
            outside ? project(centroid + 0.5 * (xr - centroid), o) : project(centroid + 0.5 * (worst - centroid), o);
        const double fc = f(xc);
        if (fc < (outside ? fr : fv.back())) {
            v.back() = xc;
            fv.back() = fc;
            continue;
        }
        for (std::size_t k = 1; k < v.size(); ++k) {
            v[k] = project(v[0] + 0.5 * (v[k] - v[0]), o);
            fv[k] = f(v[k]);
        }
    }
    return false;
}

} // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
    if (x0.size() < 1) throw ConfigError("nelder_mead: empty starting point");
    if (!(opts.lower < opts.upper)) throw ConfigError("nelder_mead: empty search box");
    if (opts.max_evaluations < static_cast<int>(x0.size()) + 1) {
        throw ConfigError("nelder_mead: evaluation budget below simplex size");
    }
    NelderMeadResult res;
    CachedObjective obj(f, opts, res);
    bool converged = run(obj, project(x0, opts), opts);
    for (int r = 0; r < opts.restarts && converged && !obj.exhausted(); ++r) {
        const double before = res.f;
        const Eigen::VectorXd from = res.x;
        converged = run(obj, from, opts);
        if (res.f >= before) break;
    }
    res.converged = converged;
    return res;
}

} // namespace proxyhedge
