#ifndef TAT_CLI_HPP
#define TAT_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tat/coverage.hpp"
#include "tat/field_io.hpp"
#include "tat/phantom.hpp"
#include "tat/wave.hpp"

namespace tat::cli {

enum ExitCode { kOk = 0, kInvariantFailure = 1, kUsageError = 2 };

/// Malformed config, unknown key, bad override or missing required value.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An input produced by another subcommand is missing or stale.
class UpstreamError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SpeedSpec {
    std::string model = "constant";
    double value = 1.0;
    double below = 1.0, above = 1.0, interface = 0.0, width = 0.1;
    Point center = Point::Zero();
    double radius = 0.5, background = 1.0, peak = 1.0;
    fs::path path;
    std::optional<double> bound;
};

struct DistanceSpec {
    std::vector<Point> sources;
    bool exterior = false;
    bool oracle = false;
    std::optional<fs::path> checkField;
    double lipschitzConstant = 2.0;
};

struct ContinuationSpec {
    double deltaShrink = 0.05;
    std::optional<double> deltaInj;
    std::optional<Point> point;
    std::optional<double> H;
    double rho = 0.1;
    int timeStride = 8;
    std::optional<double> ucTimeStep;
    bool exportSets = true;
};

struct InversionSpec {
    int iterations = 50;
    std::string stepRule = "power";
    double stepFactor = 0.9;
    std::optional<double> stepSize;
    int powerIterations = 10;
};

struct ExperimentConfig {
    /// Resolved document (overrides applied, defaults filled in).
    json document;
    fs::path source;
    GridSpec grid;
    SpeedSpec speed;
    Shape region;
    std::vector<Arc> arcs;
    std::vector<Bump> bumps;
    WaveOptions wave;
    std::optional<double> tMax;
    double tFactor = 1.5;
    CoverageOptions coverage;
    DistanceSpec distance;
    ContinuationSpec continuation;
    InversionSpec inversion;
    fs::path output = "tat-out";
    std::uint64_t seed = 0;
};

/// JSON text to document; parse errors report line and column.
json parse_document(const std::string& text, const std::string& name);

/// `a.b.c=value`; value is parsed as JSON when possible, otherwise taken as a
/// string.
void apply_override(json& doc, const std::string& assignment);

/// Validates every section; unknown keys are rejected with their full path.
ExperimentConfig parse_config(json doc, fs::path source = {});

ExperimentConfig load_config(const fs::path& file, const std::vector<std::string>& overrides = {});

SpeedField make_speed(const ExperimentConfig& cfg);

/// solver.t_max, or solver.t_factor times the minimal observation time.
double observation_time(const ExperimentConfig& cfg, const Region& region, const BoundaryPatch& patch,
                        const SpeedField& speed);

int cmd_distance(const ExperimentConfig& cfg, std::ostream& out);
int cmd_coverage(const ExperimentConfig& cfg, std::ostream& out);
int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_verify_dod(const ExperimentConfig& cfg, std::ostream& out);
int cmd_uc(const ExperimentConfig& cfg, std::ostream& out);
int cmd_reconstruct(const ExperimentConfig& cfg, std::ostream& out);
/// Collates reconstruct summaries into report.csv and report.txt in `outDir`,
/// rows sorted by final residual.
int cmd_report(const std::vector<ExperimentConfig>& cfgs, const fs::path& outDir, std::ostream& out);

}  // namespace tat::cli

#endif  // TAT_CLI_HPP
