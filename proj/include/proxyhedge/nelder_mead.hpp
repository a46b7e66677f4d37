#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace proxyhedge {

struct NelderMeadOptions {
    double lower = -5.0;
    double upper = 5.0;
    double initial_step = 0.5;
    int max_evaluations = 200;
    double x_tolerance = 1e-4;  // simplex diameter
    double f_tolerance = 1e-10; // spread of vertex values
    int restarts = 1;
    double cache_resolution = 1e-12; // points closer than this share a cached value
};

struct NelderMeadTracePoint {
    Eigen::VectorXd x;
    double f = 0.0;
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double f = 0.0;
    int evaluations = 0; // distinct objective calls, cache hits excluded
    bool converged = false;
    std::vector<NelderMeadTracePoint> trace;
};

/// Box-projected Nelder-Mead minimization with memoized objective calls.
NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

} // namespace proxyhedge
