#include "tat/speed.hpp"

#include <sstream>

namespace tat {

SpeedField::SpeedField(const GridSpec& grid, Field values, std::optional<double> bound) : grid_(grid) {
    grid_.validate();
    if (values.rows() != grid.nx() || values.cols() != grid.ny())
        throw std::invalid_argument("speed values do not match the grid");
    if (!values.allFinite()) throw std::invalid_argument("speed values must be finite");
    min_ = values.minCoeff();
    max_ = values.maxCoeff();
    if (!(min_ > 0.0)) throw std::invalid_argument("speed must be positive");
    bound_ = bound ? *bound : 1.25 * std::max({max_, 1.0 / min_, 1.0});
    if (!(bound_ > 1.0)) throw std::invalid_argument("speed bound M must exceed 1");
    if (!(max_ < bound_) || !(min_ > 1.0 / bound_)) {
        std::ostringstream msg;
        msg << "speed violates 1/M < c < M with M = " << bound_ << " (c in [" << min_ << ", " << max_ << "])";
        throw std::invalid_argument(msg.str());
    }
    values_ = std::make_shared<const Field>(std::move(values));
}

SpeedField SpeedField::constant(const GridSpec& grid, double c, std::optional<double> bound) {
    return SpeedField(grid, grid.make_array(c), bound);
}

SpeedField SpeedField::layered(const GridSpec& grid, double below, double above, double interface, double width,
                               std::optional<double> bound) {
    Field v = grid.make_array<double>();
    for (int j = 0; j < grid.ny(); ++j) {
        const double y = grid.node(0, j).y();
        const double s = width > 0.0 ? smoothstep((y - interface) / width + 0.5) : (y < interface ? 0.0 : 1.0);
        v.col(j).setConstant(below + (above - below) * s);
    }
    return SpeedField(grid, std::move(v), bound);
}

SpeedField SpeedField::radial(const GridSpec& grid, const Point& center, double radius, double background,
                              double peak, std::optional<double> bound) {
    if (!(radius > 0.0)) throw std::invalid_argument("radial speed needs a positive radius");
    Field v = grid.make_array(background);
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            const double r2 = (grid.node(i, j) - center).squaredNorm() / (radius * radius);
            if (r2 < 1.0) v(i, j) = background + (peak - background) * (1.0 - r2) * (1.0 - r2);
        }
    return SpeedField(grid, std::move(v), bound);
}

}  // namespace tat
