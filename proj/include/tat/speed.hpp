#ifndef TAT_SPEED_HPP
#define TAT_SPEED_HPP

#include <memory>
#include <optional>

#include "tat/grid.hpp"

namespace tat {

/// Sound speed c(x) on a grid, bounded as 1/M < c < M. Values are shared and
/// immutable, so copies are cheap.
class SpeedField {
public:
    /// Throws std::invalid_argument if any value is non-finite or outside
    /// (1/bound, bound). Without an explicit bound, M = 1.25 max(c_max, 1/c_min, 1).
    SpeedField(const GridSpec& grid, Field values, std::optional<double> bound = std::nullopt);

    static SpeedField constant(const GridSpec& grid, double c, std::optional<double> bound = std::nullopt);

    /// c = below for x2 < interface, above for x2 >= interface, joined by a C1
    /// smoothstep of total width `width` centred on the interface.
    static SpeedField layered(const GridSpec& grid, double below, double above, double interface,
                              double width, std::optional<double> bound = std::nullopt);

    /// background + (peak - background) (1 - r^2/radius^2)^2 inside the disk.
    static SpeedField radial(const GridSpec& grid, const Point& center, double radius, double background,
                             double peak, std::optional<double> bound = std::nullopt);

    const GridSpec& grid() const { return grid_; }
    const Field& values() const { return *values_; }
    double bound() const { return bound_; }
    double max() const { return max_; }
    double min() const { return min_; }

    double operator()(int i, int j) const { return (*values_)(i, j); }
    /// Bilinear sample with constant extension outside the grid.
    double at(const Point& p) const { return sample_bilinear(grid_, *values_, p); }

    bool is_constant() const { return max_ == min_; }

private:
    GridSpec grid_;
    std::shared_ptr<const Field> values_;
    double bound_ = 1.0;
    double max_ = 0.0;
    double min_ = 0.0;
};

/// C1 smoothstep on [0, 1].
inline double smoothstep(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * (3.0 - 2.0 * s);
}

}  // namespace tat

#endif  // TAT_SPEED_HPP
