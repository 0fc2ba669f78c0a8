#ifndef TAT_GRID_HPP
#define TAT_GRID_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace tat {

template <typename Scalar>
using GridArray = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Node-valued data on a GridSpec. Index (i, j) is (x1 index, x2 index).
using Field = GridArray<double>;
using Mask = GridArray<bool>;
using LabelField = GridArray<int>;

using Point = Eigen::Vector2d;
using Index2 = Eigen::Array2i;

/// Uniform node-centred rectangular grid. `dims` counts cells, so each axis
/// carries dims + 1 nodes and node (i, j) sits at origin + (i, j) * spacing.
struct GridSpec {
    Point origin = Point::Zero();
    Eigen::Vector2d spacing = Eigen::Vector2d::Constant(1.0);
    Index2 dims = Index2::Constant(8);

    static constexpr int dimension = 2;

    /// Grid covering [lo, hi] on both axes with `cells` cells per axis.
    static GridSpec square(double lo, double hi, int cells);

    void validate() const;

    int nx() const { return dims.x() + 1; }
    int ny() const { return dims.y() + 1; }
    Eigen::Index node_count() const { return Eigen::Index(nx()) * ny(); }

    /// Largest spacing; the resolution `h` used in all tolerances.
    double h() const { return spacing.maxCoeff(); }

    Point node(int i, int j) const {
        return {origin.x() + i * spacing.x(), origin.y() + j * spacing.y()};
    }
    Point upper() const { return node(dims.x(), dims.y()); }

    /// Continuous index coordinates of a point.
    Eigen::Vector2d to_index(const Point& p) const {
        return (p - origin).cwiseQuotient(spacing);
    }

    bool contains(const Point& p, double slack = 1e-12) const {
        const Point hi = upper();
        return p.x() >= origin.x() - slack && p.y() >= origin.y() - slack &&
               p.x() <= hi.x() + slack && p.y() <= hi.y() + slack;
    }

    bool is_interior(int i, int j) const { return i > 0 && j > 0 && i < dims.x() && j < dims.y(); }

    Index2 nearest_node(const Point& p) const;

    template <typename Scalar = double>
    GridArray<Scalar> make_array(Scalar fill = Scalar{}) const {
        return GridArray<Scalar>::Constant(nx(), ny(), fill);
    }

    bool operator==(const GridSpec& other) const {
        return origin == other.origin && spacing == other.spacing && (dims == other.dims).all();
    }
    bool operator!=(const GridSpec& other) const { return !(*this == other); }
};

/// Bilinear interpolation of node data; points outside the grid are clamped
/// to the edge, i.e. values extend constantly beyond it.
template <typename Derived>
typename Derived::Scalar sample_bilinear(const GridSpec& grid, const Eigen::ArrayBase<Derived>& values,
                                         const Point& p) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Vector2d q = grid.to_index(p);
    const double qx = std::clamp(q.x(), 0.0, double(grid.dims.x()));
    const double qy = std::clamp(q.y(), 0.0, double(grid.dims.y()));
    const int i = std::min(int(std::floor(qx)), grid.dims.x() - 1);
    const int j = std::min(int(std::floor(qy)), grid.dims.y() - 1);
    const Scalar fx = Scalar(qx - i);
    const Scalar fy = Scalar(qy - j);
    const auto& v = values.derived();
    return (Scalar(1) - fx) * (Scalar(1) - fy) * v(i, j) + fx * (Scalar(1) - fy) * v(i + 1, j) +
           (Scalar(1) - fx) * fy * v(i, j + 1) + fx * fy * v(i + 1, j + 1);
}

/// Cell corner indices and bilinear weights for a point inside the grid.
struct BilinearStencil {
    int i = 0;
    int j = 0;
    double w00 = 0, w10 = 0, w01 = 0, w11 = 0;
};

BilinearStencil bilinear_stencil(const GridSpec& grid, const Point& p);

}  // namespace tat

#endif  // TAT_GRID_HPP
