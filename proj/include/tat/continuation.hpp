#ifndef TAT_CONTINUATION_HPP
#define TAT_CONTINUATION_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "tat/geodesic.hpp"
#include "tat/patch.hpp"
#include "tat/wave.hpp"

namespace tat {

/// Boolean raster per time slice; slice k sits at t0 + k dt.
struct SpaceTimeSet {
    GridSpec grid;
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<Mask> slices;
    std::string label;

    int size() const { return int(slices.size()); }
    double time(int k) const { return t0 + k * dt; }
    Eigen::Index count() const;
    bool empty() const { return count() == 0; }
    /// Slice index whose time is within dt/2 of t, or -1.
    int slice_at(double t) const;
};

/// Every point of `inner` lies within `slack` (space-time Euclidean) of
/// `outer`; both sets must share grid and time axis.
bool contained_in(const SpaceTimeSet& inner, const SpaceTimeSet& outer, double slack = 0.0);

/// Hausdorff distance in (x, t) with the Euclidean metric. Zero for two empty
/// sets, +inf when exactly one is empty.
double hausdorff(const SpaceTimeSet& a, const SpaceTimeSet& b);

/// Exact squared Euclidean distance (physical units) from every node to the
/// nearest true node of `mask`; +inf everywhere for an empty mask.
Field squared_distance_transform(const GridSpec& grid, const Mask& mask);

template <class Scalar>
struct CovectorSampleT {
    Eigen::Matrix<Scalar, 2, 1> x;
    Eigen::Matrix<Scalar, 2, 1> xi;
    Scalar tau;
};
using CovectorSample = CovectorSampleT<double>;

/// p(x, xi, tau) = tau^2 - c(x)^2 |xi|^2.
template <class Scalar>
Scalar symbol(const SpeedField& speed, const CovectorSampleT<Scalar>& s) {
    const Scalar c = Scalar(speed.at(s.x.template cast<double>()));
    return s.tau * s.tau - c * c * s.xi.squaredNorm();
}

enum class Causality { spacelike, null, timelike };
const char* to_string(Causality c);

struct Classification {
    Causality causality;
    bool noncharacteristic;
};

/// spacelike iff c|xi| < |tau|, null within 1e-12 relative; noncharacteristic
/// iff |p| > 1e-12 (tau^2 + c^2 |xi|^2). Throws for a zero covector.
template <class Scalar>
Classification classify(const SpeedField& speed, const CovectorSampleT<Scalar>& s) {
    using std::abs;
    const Scalar c = Scalar(speed.at(s.x.template cast<double>()));
    const Scalar space = c * s.xi.norm();
    const Scalar time = abs(s.tau);
    if (space == Scalar(0) && time == Scalar(0)) throw std::invalid_argument("zero covector");
    const Scalar scale = time > space ? time : space;
    Causality k;
    if (abs(time - space) <= Scalar(1e-12) * scale)
        k = Causality::null;
    else
        k = space < time ? Causality::spacelike : Causality::timelike;
    const Scalar p = s.tau * s.tau - c * c * s.xi.squaredNorm();
    return {k, abs(p) > Scalar(1e-12) * (s.tau * s.tau + c * c * s.xi.squaredNorm())};
}

/// Domain of dependence U = {(x, t_k) : x exterior, (1 - delta) d_ext(x, p) + t_k < H}
/// with its boundary strata and the admissibility check for p.
struct DomainOfDependence {
    SpaceTimeSet set;
    DistanceField distance;  ///< d_ext(., p)
    double deltaShrink;
    double H;
    /// No complement sample q has (1 - delta) d_ext(q, p) < H - slack.
    bool admissible;
    /// min over complement samples of (1 - delta) d_ext(q, p) - H (+inf when
    /// the complement is empty).
    double admissibilityMargin;
    /// Sigma_1: exterior nodes of U at t = 0.
    Mask bottom;
    /// Sigma_2: normals ((1 - delta) grad d, 1) of the graph surface at
    /// exterior nodes with (1 - delta) d < H away from the obstacle.
    std::vector<CovectorSample> surfaceNormals;
    /// Sigma_3: nodes of U next to Omega, per slice.
    SpaceTimeSet lateral;
};

/// Slices at t = 0, dt, ..., (count - 1) dt. The admissibility check allows
/// `slack` (default 2h).
DomainOfDependence domain_of_dependence(const Point& p, double H, const Region& region, const BoundaryPatch& patch,
                                        const SpeedField& speed, double deltaShrink, double dt, int count,
                                        std::optional<double> slack = std::nullopt);

/// Time axis matching a wave run sub-sampled by `stride` and cut at tEnd.
struct TimeAxis {
    double dt;
    int count;
};
TimeAxis sampled_axis(double runDt, int runSteps, int stride, double tEnd);

struct DodReport {
    double maxAbs = 0.0;
    Index2 location = Index2::Constant(-1);
    int slice = -1;
    /// Largest ratio over slices of the energy inside U to the total.
    double energyFraction = 0.0;
    int slicesChecked = 0;
};

/// Measures the exterior solution on U; the run must hold a snapshot at every
/// slice time of U (see snapshot_times). Throws on mismatched grids/times.
DodReport verify_dod(const WaveRun& run, const SpeedField& speed, const SpaceTimeSet& U);

/// Slice times of a set, for requesting snapshots.
std::vector<double> snapshot_times(const SpaceTimeSet& set);

/// Symmetric time axis t_k = k tau, |k| <= floor(D / tau).
/// X = {(x, t) : d(x, z) + |t| < D} with the free-space metric distance.
SpaceTimeSet uc_cylinder_expand(const Point& z, double rho, double D, const SpeedField& speed, double tau);

/// The metric cylinder B(z, rho) x [-D, D] on the same axis.
SpaceTimeSet cylinder(const Point& z, double rho, double D, const SpeedField& speed, double tau);

struct UcResult {
    SpaceTimeSet set;
    int iterations;
};

/// Repeated application of the cylinder growth to B(p, rho + n delta) x
/// [-(H - n delta), H - n delta], n = 0, 1, ... while H - n delta > 0.
UcResult uc_iterate(const Point& p, double rho, double H, double deltaInj, const SpeedField& speed, double tau);

/// Same construction from a precomputed distance field d(., p).
UcResult uc_iterate(const DistanceField& d, double rho, double H, double deltaInj, double tau);

}  // namespace tat

#endif  // TAT_CONTINUATION_HPP
