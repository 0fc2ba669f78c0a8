#ifndef TAT_PHANTOM_HPP
#define TAT_PHANTOM_HPP

#include <vector>

#include "tat/region.hpp"

namespace tat {

/// Compactly supported polynomial bump A (1 - r^2/R^2)^k, which is C^(k-1).
struct Bump {
    Point center = Point::Zero();
    double radius = 0.1;
    double amplitude = 1.0;
    int smoothness = 2;

    double operator()(const Point& x) const;
};

/// Initial pressure f, supported at least `supportMargin` inside Omega.
class Phantom {
public:
    const GridSpec& grid() const { return grid_; }
    const Field& values() const { return values_; }
    double support_margin() const { return supportMargin_; }

private:
    friend Phantom make_phantom(const Region& region, const std::vector<Bump>& bumps);
    GridSpec grid_;
    Field values_;
    double supportMargin_ = 0.0;
};

/// Sums the bumps on the region's grid. Every bump ball must stay 2h inside
/// Omega; otherwise std::invalid_argument names the offending bump.
Phantom make_phantom(const Region& region, const std::vector<Bump>& bumps);

}  // namespace tat

#endif  // TAT_PHANTOM_HPP
