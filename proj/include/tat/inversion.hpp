#ifndef TAT_INVERSION_HPP
#define TAT_INVERSION_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "tat/wave.hpp"

namespace tat {

/// Measurement map Lambda: f -> u|Gamma x [0, tMax] on the discrete level.
/// The trace holds levels 0 .. steps of the forward run.
Trace forward_operator(const Phantom& f, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       const WaveOptions& options = {});
/// Same map on a raw field (anything on the grid).
Trace forward_operator(const Field& f, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       const WaveOptions& options = {});

/// Exact transpose of forward_operator for the same options: time-reversed
/// run with the trace injected at the receivers (bilinear scatter). The
/// result is restricted to Omega (zero on exterior nodes).
Field adjoint_operator(const Trace& residual, const SpeedField& speed, double tMax, const WaveOptions& options = {});

/// Same, without the restriction to Omega.
Field adjoint_operator_full(const Trace& residual, const SpeedField& speed, double tMax,
                            const WaveOptions& options = {});

/// Sum of products over all entries.
double inner(const Trace& a, const Trace& b);
double norm(const Trace& t);

/// Nodes kept by the Landweber projection: phi <= -margin (default 2h, the
/// phantom support margin).
Mask support_mask(const Region& region, std::optional<double> margin = std::nullopt);

struct NormEstimate {
    double value;
    std::vector<double> history;  ///< estimate after each power iteration
};

/// Power iteration on P Lambda* Lambda P (P the support projection) from a
/// uniform [-1, 1] start drawn with mt19937_64(seed).
NormEstimate estimate_operator_norm(const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                                    int powerIterations, std::uint64_t seed, const WaveOptions& options = {});

struct InversionRun {
    Field estimate;
    /// ||data - Lambda f_k|| for k = 0 .. iterations.
    std::vector<double> residualHistory;
    double stepSize = 0.0;
    int iterations = 0;
    BoundaryPatch patch;
    double tMax = 0.0;
    SpeedField speed;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}
    const std::vector<double>& history() const { return history_; }

private:
    std::vector<double> history_;
};

/// Called after every update with the iteration number and f_k.
using IterateCallback = std::function<void(int k, const Field& estimate)>;

/// f_{k+1} = P[f_k + stepSize Lambda*(data - Lambda f_k)], f_0 = 0. Throws
/// DivergenceError when the residual grows three iterations in a row.
InversionRun landweber(const Trace& data, const BoundaryPatch& patch, const SpeedField& speed, double tMax,
                       int iterations, double stepSize, const Region& support, const WaveOptions& options = {},
                       const IterateCallback& onIterate = {});

/// ||a - b|| / ||b|| over the grid.
double relative_error(const Field& estimate, const Field& truth);

}  // namespace tat

#endif  // TAT_INVERSION_HPP
