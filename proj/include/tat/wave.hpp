#ifndef TAT_WAVE_HPP
#define TAT_WAVE_HPP

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tat/field_io.hpp"
#include "tat/patch.hpp"
#include "tat/phantom.hpp"
#include "tat/speed.hpp"

namespace tat {

enum class BoundaryCondition { sponge, reflecting };

const char* to_string(BoundaryCondition bc);
BoundaryCondition boundary_condition_from_string(const std::string& s);

struct WaveOptions {
    BoundaryCondition boundary = BoundaryCondition::sponge;
    double cflFactor = 0.9;
    int spongeWidth = 16;
    /// Peak damping rate; defaults to 0.25 c_max / (spongeWidth h). The
    /// outermost nodes always carry a first-order one-way (Mur) condition in
    /// sponge mode.
    std::optional<double> spongeStrength;
    /// Times at which to keep u and u_t (rounded to the nearest step).
    std::vector<double> snapshotTimes;
    bool recordEnergy = false;
    /// 0 picks worker_count().
    int workers = 0;
};

/// Thrown when the solution stops being finite.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
    int step() const { return step_; }

private:
    int step_;
};

struct Snapshot {
    int step = 0;
    double time = 0.0;
    Field u;
    Field ut;  ///< central difference (u^{k+1} - u^{k-1}) / 2dt
};

struct WaveRun {
    GridSpec grid;
    double dt = 0.0;
    int steps = 0;
    std::vector<Snapshot> snapshots;
    Field u;      ///< level `steps`
    Field uPrev;  ///< level `steps - 1`
    BoundaryCondition boundary = BoundaryCondition::sponge;
    int spongeWidth = 0;
    double spongeStrength = 0.0;
    /// Energy at levels 0 .. steps - 1 when requested.
    std::vector<double> energyHistory;
    /// Nodes updated by the scheme; all nodes for the forward problem.
    Mask active;
};

/// Samples of u at the Gamma nodes; column k holds time t0 + k dt.
struct Trace {
    Trace(BoundaryPatch patch, double dt, double t0, Eigen::MatrixXd values);

    BoundaryPatch patch;
    double dt;
    double t0;
    Eigen::MatrixXd values;  ///< receiver x time

    int receivers() const { return int(values.rows()); }
    int samples() const { return int(values.cols()); }
    double time(int k) const { return t0 + k * dt; }
    double tMax() const { return time(samples() - 1); }
};

/// Largest CFL-admissible step rounded down so that tMax is a whole number
/// of steps: dt = tMax / ceil(tMax / (cfl h_min / (sqrt(2) c_max))).
double stable_time_step(const SpeedField& speed, double tMax, double cflFactor);

/// Leapfrog u^{k+1} = 2u^k - u^{k-1} + dt^2 c^2 Lap_h u^k with the 5-point
/// Laplacian. Reflecting runs mirror the grid edges (Neumann); sponge runs
/// damp a quadratic layer and use a one-way condition on the edge nodes.
/// Nodes outside `active` keep whatever the boundary hook writes.
class WaveStepper {
public:
    using BoundaryHook = std::function<void(int level, Field& u)>;

    WaveStepper(SpeedField speed, double dt, const WaveOptions& options, std::optional<Mask> active = std::nullopt);

    /// u^0 = u0 and the even-in-time first step u^1 = u^0 + dt^2/2 A u^0.
    void start(const Field& u0);
    /// Arbitrary state: current level `index` is u, the previous one uPrev.
    void set_state(Field u, Field uPrev, int index = 0);
    void set_boundary_hook(BoundaryHook hook) { hook_ = std::move(hook); }

    /// Advances one level; throws BlowUpError on a non-finite result.
    void step();

    /// c^2 Lap_h u on active nodes, zero elsewhere.
    Field apply(const Field& u) const;
    /// Transpose of apply().
    Field apply_transpose(const Field& w) const;

    /// Transpose of one step() without the boundary hook: given the adjoint
    /// `next` of the new level, accumulates into the adjoints of the current
    /// and previous levels. `next` is consumed.
    void step_transpose(Field& next, Field& current, Field& previous) const;

    const Field& u() const { return u_; }
    const Field& u_prev() const { return uPrev_; }
    int index() const { return index_; }
    double dt() const { return dt_; }
    const SpeedField& speed() const { return speed_; }
    const Field& damping() const { return sigma_; }
    const Mask& active() const { return active_; }
    double sponge_strength() const { return sigmaMax_; }
    bool absorbing_edges() const { return absorbingEdges_; }

private:
    void advance_rows(int lo, int hi, Field& next) const;
    void absorb_edges(Field& next) const;
    double mur(int i, int j, double h) const;

    SpeedField speed_;
    GridSpec grid_;
    double dt_;
    Field c2_;
    Field sigma_;
    double sigmaMax_ = 0.0;
    bool absorbingEdges_ = false;
    Mask active_;
    int workers_;
    Field u_, uPrev_;
    int index_ = 0;
    BoundaryHook hook_;
};

/// Forward problem with initial pressure f and zero initial velocity.
/// Returns the run and the trace at the patch samples, levels 0 .. steps.
std::pair<WaveRun, Trace> simulate(const SpeedField& speed, const Phantom& phantom, double tMax,
                                   const BoundaryPatch& patch, const WaveOptions& options = {});

/// Exterior problem: zero initial data outside Omega, Dirichlet values from
/// `boundaryData` (covering every boundary sample) on exterior nodes next to
/// Omega, interpolated along the boundary and linearly in time.
WaveRun simulate_exterior(const SpeedField& speed, const Region& region, const Trace& boundaryData, double tMax,
                          const WaveOptions& options = {});

/// Exterior nodes with a 4-neighbour in Omega.
Mask dirichlet_nodes(const Region& region);

/// 1/2 sum [c^-2 u_t^2 + |grad_h u|^2] h^2 with trapezoid weights at the grid
/// edge; gradients use one-sided edge differences so the sum matches the
/// discrete operator. Nodes outside `subset` contribute nothing.
double energy(const SpeedField& speed, const Field& u, const Field& ut, const Mask* subset = nullptr);

/// Energy at the final level of a run (one extra step supplies u^{k+1}).
double energy(const WaveRun& run, const SpeedField& speed, const Mask* subset = nullptr);

/// Even reflection in time about t = 0; a trace that already extends to
/// negative times is first cut back to t >= 0.
Trace even_extension(const Trace& trace);

/// CSV with a time column and one column per receiver headed by its
/// boundary parameter.
void write_trace_csv(const fs::path& file, const Trace& trace);
void write_trace(const fs::path& stem, const Trace& trace, const json& meta = json::object());
Trace read_trace(const fs::path& stem, const Region& region);

}  // namespace tat

#endif  // TAT_WAVE_HPP
