#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace proxyhedge {

/// Uniform node set origin + i * step, i = 0..count-1.
struct GridAxis {
    double origin = 0.0;
    double step = 1.0;
    int count = 0;

    double node(int i) const { return origin + step * i; }
    double back() const { return node(count - 1); }
    std::vector<double> nodes() const;
};

/// Samples on a tensor-product grid, row-major with the last axis contiguous.
class GridField {
public:
    GridField() = default;
    explicit GridField(std::vector<GridAxis> axes, double fill = 1.0, double tau = 0.0);

    int dims() const { return static_cast<int>(axes_.size()); }
    std::size_t size() const { return values_.size(); }
    const std::vector<GridAxis>& axes() const { return axes_; }
    const GridAxis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
    std::size_t stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Multi-index of flat position `flat`.
    std::vector<int> index_of(std::size_t flat) const;
    std::size_t flat_of(std::span<const int> index) const;
    /// Node coordinates of flat position `flat`.
    void coordinates(std::size_t flat, std::span<double> out) const;

    double tau = 0.0;

private:
    std::vector<GridAxis> axes_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

} // namespace proxyhedge
