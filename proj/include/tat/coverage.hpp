#ifndef TAT_COVERAGE_HPP
#define TAT_COVERAGE_HPP

#include <optional>
#include <vector>

#include "tat/geodesic.hpp"
#include "tat/patch.hpp"

namespace tat {

enum class CoverageStrategy { offset_eikonal, subsample };
enum class Verdict { satisfied, violated, indeterminate };

const char* to_string(CoverageStrategy s);
const char* to_string(Verdict v);

struct CoverageOptions {
    CoverageStrategy strategy = CoverageStrategy::offset_eikonal;
    /// Number of Gamma samples used by the subsample strategy (and by the
    /// fallback).
    int subsampleCount = 64;
    /// Slack for the strict inequality; defaults to 3h.
    std::optional<double> epsilon;
    /// Fall back to subsampling when the offsets -w fail the compatibility
    /// check w(q) - w(p) <= d(p, q) by more than `compatibilityTolerance`
    /// (default 2h).
    bool fallback = true;
    std::optional<double> compatibilityTolerance;
};

/// Whether a margin raster holds numbers or one of the two infinite cases
/// (Gamma is the whole boundary, or Gamma is empty).
enum class MarginKind { finite, plus_infinity, minus_infinity };

struct CoverageReport {
    GridSpec grid;
    Verdict verdict = Verdict::violated;
    bool satisfied = false;
    MarginKind marginKind = MarginKind::finite;
    /// max over p in Gamma of w(p) - d(x, p) at Omega nodes (see `domain`).
    Field margin;
    /// Index into patch.samples() of the maximizing p; -1 off Omega.
    LabelField witness;
    /// Omega nodes, where margin and witness are defined.
    Mask domain;
    /// w(p) per Gamma sample, +inf when the complement is empty.
    std::vector<double> clearance;
    double minMargin = 0.0;
    Index2 minLocation = Index2::Constant(-1);
    double epsilon = 0.0;
    /// max over Omega nodes of d(x, Gamma); +inf for empty Gamma.
    double tMin = 0.0;
    CoverageStrategy requested = CoverageStrategy::offset_eikonal;
    CoverageStrategy used = CoverageStrategy::offset_eikonal;
    int subsampleCount = 0;
    /// Largest amount by which a seed offset was undercut by another seed.
    double compatibilityDefect = 0.0;
};

/// w(p) = exterior travel time from each Gamma sample to the rest of the
/// boundary, one restricted solve from the complement samples. All entries
/// are +inf when the complement is empty.
std::vector<double> exterior_clearance(const Region& region, const BoundaryPatch& patch, const SpeedField& speed);

/// Decides the coverage property for the given detector patch.
CoverageReport check_property_p(const Region& region, const BoundaryPatch& patch, const SpeedField& speed,
                                const CoverageOptions& options = {});

/// Smallest admissible observation time, max over Omega of d(x, Gamma).
/// Throws for an empty patch.
double min_time(const Region& region, const BoundaryPatch& patch, const SpeedField& speed);

/// Positions in patch.samples() picked by subsample(k): floor(j n / k).
std::vector<int> subsample_indices(int n, int k);

/// Clearance at the witness of node (i, j), i.e. the usable depth H.
double witness_clearance(const CoverageReport& report, int i, int j);

}  // namespace tat

#endif  // TAT_COVERAGE_HPP
