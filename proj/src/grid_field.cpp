#include "proxyhedge/grid_field.hpp"

#include "proxyhedge/errors.hpp"

namespace proxyhedge {

std::vector<double> GridAxis::nodes() const {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = node(i);
    return out;
}

GridField::GridField(std::vector<GridAxis> axes, double fill, double tau_)
    : tau(tau_), axes_(std::move(axes)), strides_(axes_.size()) {
    std::size_t total = 1;
    for (std::size_t k = axes_.size(); k-- > 0;) {
        if (axes_[k].count < 1 || !(axes_[k].step > 0.0)) {
            throw NumericalError("grid", "axes need at least one node and a positive step");
        }
        strides_[k] = total;
        total *= static_cast<std::size_t>(axes_[k].count);
    }
    values_.assign(total, fill);
}

std::vector<int> GridField::index_of(std::size_t flat) const {
    std::vector<int> idx(axes_.size());
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        idx[k] = static_cast<int>(flat / strides_[k]);
        flat %= strides_[k];
    }
    return idx;
}

std::size_t GridField::flat_of(std::span<const int> index) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < axes_.size(); ++k) flat += static_cast<std::size_t>(index[k]) * strides_[k];
    return flat;
}

void GridField::coordinates(std::size_t flat, std::span<double> out) const {
    for (std::size_t k = 0; k < axes_.size(); ++k) {
        out[k] = axes_[k].node(static_cast<int>(flat / strides_[k]));
        flat %= strides_[k];
    }
}

} // namespace proxyhedge
