#include "tat/phantom.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tat {

double Bump::operator()(const Point& x) const {
    const double r2 = (x - center).squaredNorm() / (radius * radius);
    if (r2 >= 1.0) return 0.0;
    return amplitude * std::pow(1.0 - r2, smoothness);
}

Phantom make_phantom(const Region& region, const std::vector<Bump>& bumps) {
    const GridSpec& grid = region.grid();
    const double h = grid.h();
    Phantom out;
    out.grid_ = grid;
    out.values_ = grid.make_array<double>();
    // With no bumps f = 0, so the whole depth of Omega is a valid margin.
    double margin = (-region.phi()).maxCoeff();
    for (std::size_t b = 0; b < bumps.size(); ++b) {
        const Bump& bump = bumps[b];
        if (!(bump.radius > 0.0) || bump.smoothness < 2 || !std::isfinite(bump.amplitude))
            throw std::invalid_argument("bump " + std::to_string(b) + " needs radius > 0 and smoothness >= 2");
        // phi is 1-Lipschitz, so the ball stays -phi(center) - radius inside.
        const double clearance = -region.signed_distance(bump.center) - bump.radius;
        if (clearance < 2.0 * h)
            throw std::invalid_argument("bump " + std::to_string(b) + " protrudes outside the region (clearance " +
                                        std::to_string(clearance) + " < 2h)");
        margin = b == 0 ? clearance : std::min(margin, clearance);
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) out.values_(i, j) += bump(grid.node(i, j));
    }
    out.supportMargin_ = margin;
    return out;
}

}  // namespace tat
