#include "tat/grid.hpp"

#include <string>

namespace tat {

GridSpec GridSpec::square(double lo, double hi, int cells) {
    GridSpec g;
    g.origin = Point(lo, lo);
    g.spacing = Eigen::Vector2d::Constant((hi - lo) / cells);
    g.dims = Index2::Constant(cells);
    g.validate();
    return g;
}

void GridSpec::validate() const {
    if (!(spacing.x() > 0.0) || !(spacing.y() > 0.0) || !spacing.allFinite())
        throw std::invalid_argument("grid spacing must be positive");
    if (dims.x() < 8 || dims.y() < 8)
        throw std::invalid_argument("grid needs at least 8 cells per axis, got " + std::to_string(dims.x()) +
                                    " x " + std::to_string(dims.y()));
    if (!origin.allFinite()) throw std::invalid_argument("grid origin must be finite");
}

Index2 GridSpec::nearest_node(const Point& p) const {
    const Eigen::Vector2d q = to_index(p);
    return {std::clamp(int(std::lround(q.x())), 0, dims.x()), std::clamp(int(std::lround(q.y())), 0, dims.y())};
}

BilinearStencil bilinear_stencil(const GridSpec& grid, const Point& p) {
    const Eigen::Vector2d q = grid.to_index(p);
    const double qx = std::clamp(q.x(), 0.0, double(grid.dims.x()));
    const double qy = std::clamp(q.y(), 0.0, double(grid.dims.y()));
    BilinearStencil s;
    s.i = std::min(int(std::floor(qx)), grid.dims.x() - 1);
    s.j = std::min(int(std::floor(qy)), grid.dims.y() - 1);
    const double fx = qx - s.i;
    const double fy = qy - s.j;
    s.w00 = (1 - fx) * (1 - fy);
    s.w10 = fx * (1 - fy);
    s.w01 = (1 - fx) * fy;
    s.w11 = fx * fy;
    return s;
}

}  // namespace tat
