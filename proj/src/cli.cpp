#include "tat/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "tat/continuation.hpp"
#include "tat/geodesic.hpp"
#include "tat/inversion.hpp"

namespace tat::cli {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Typed access to one config object; remembers which keys were read so the
// rest can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + " must be an object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <class T>
    T get(const char* key, T fallback) {
        used_.insert(key);
        return has(key) ? convert<T>(key) : fallback;
    }

    template <class T>
    std::optional<T> opt(const char* key) {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        return convert<T>(key);
    }

    template <class T>
    T req(const char* key) {
        used_.insert(key);
        if (!has(key)) throw ConfigError(where(key) + " is required");
        return convert<T>(key);
    }

    Section sub(const char* key) {
        used_.insert(key);
        static const json empty = json::object();
        return Section(has(key) ? j_.at(key) : empty, where(key));
    }

    const json& raw(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) throw ConfigError("unknown key " + where(k.c_str()));
    }

    std::string where(const char* key = nullptr) const {
        if (!key) return path_.empty() ? "<root>" : path_;
        return path_.empty() ? std::string(key) : path_ + "." + key;
    }

private:
    template <class T>
    T convert(const char* key) const {
        const json& v = j_.at(key);
        try {
            if constexpr (std::is_same_v<T, Point>) {
                const auto p = v.get<std::vector<double>>();
                if (p.size() != 2) throw ConfigError(where(key) + " must be a point [x, y]");
                return Point(p[0], p[1]);
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
                return v.get<double>();
            } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
                return v.get<T>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
                return v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
                return v.get<std::string>();
            } else {
                return v.get<T>();
            }
        } catch (const json::exception& e) {
            throw ConfigError(where(key) + ": " + e.what());
        }
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

template <class F>
auto as_config_error(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

GridSpec parse_grid(Section s) {
    GridSpec g;
    if (s.has("cells")) {
        const double lo = s.req<double>("lo"), hi = s.req<double>("hi");
        const int cells = s.req<int>("cells");
        g = as_config_error("grid", [&] { return GridSpec::square(lo, hi, cells); });
    } else {
        const Point o = s.req<Point>("origin");
        const Point h = s.req<Point>("spacing");
        const auto d = s.req<std::vector<int>>("dims");
        if (d.size() != 2) throw ConfigError("grid.dims must have two entries");
        g.origin = o;
        g.spacing = h;
        g.dims = Index2(d[0], d[1]);
        as_config_error("grid", [&] {
            g.validate();
            return 0;
        });
    }
    s.finish();
    return g;
}

SpeedSpec parse_speed(Section s) {
    SpeedSpec sp;
    sp.model = s.get<std::string>("model", "constant");
    sp.bound = s.opt<double>("bound");
    if (sp.model == "constant") {
        sp.value = s.get<double>("value", 1.0);
    } else if (sp.model == "layered") {
        sp.below = s.req<double>("below");
        sp.above = s.req<double>("above");
        sp.interface = s.get<double>("interface", 0.0);
        sp.width = s.get<double>("width", 0.1);
    } else if (sp.model == "radial") {
        sp.center = s.get<Point>("center", Point::Zero());
        sp.radius = s.req<double>("radius");
        sp.background = s.get<double>("background", 1.0);
        sp.peak = s.req<double>("peak");
    } else if (sp.model == "file") {
        sp.path = s.req<std::string>("path");
    } else {
        throw ConfigError("speed.model must be constant, layered, radial or file, got '" + sp.model + "'");
    }
    s.finish();
    return sp;
}

Shape parse_region(Section s) {
    const std::string kind = s.req<std::string>("shape");
    Shape shape;
    if (kind == "disk") {
        shape = Disk{s.get<Point>("center", Point::Zero()), s.req<double>("radius")};
    } else if (kind == "ellipse") {
        const auto ab = s.req<std::vector<double>>("semi_axes");
        if (ab.size() != 2) throw ConfigError("region.semi_axes must have two entries");
        shape = Ellipse{s.get<Point>("center", Point::Zero()), ab[0], ab[1]};
    } else if (kind == "polygon") {
        RoundedPolygon p;
        for (const json& v : s.raw("vertices")) {
            const auto xy = v.get<std::vector<double>>();
            if (xy.size() != 2) throw ConfigError("region.vertices entries must be [x, y]");
            p.vertices.emplace_back(xy[0], xy[1]);
        }
        p.cornerRadius = s.get<double>("corner_radius", 0.1);
        shape = p;
    } else {
        throw ConfigError("region.shape must be disk, ellipse or polygon, got '" + kind + "'");
    }
    s.finish();
    return shape;
}

std::vector<Bump> parse_bumps(Section s) {
    std::vector<Bump> bumps;
    if (s.has("bumps")) {
        const json& list = s.raw("bumps");
        if (!list.is_array()) throw ConfigError("phantom.bumps must be a list");
        for (std::size_t k = 0; k < list.size(); ++k) {
            Section b(list[k], "phantom.bumps[" + std::to_string(k) + "]");
            Bump bump;
            bump.center = b.req<Point>("center");
            bump.radius = b.req<double>("radius");
            bump.amplitude = b.get<double>("amplitude", 1.0);
            bump.smoothness = b.get<int>("smoothness", 3);
            b.finish();
            bumps.push_back(bump);
        }
    }
    s.opt<json>("bumps");
    s.finish();
    return bumps;
}

json read_json_file(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_document(ss.str(), file.string());
}

std::string fmt(double v) {
    std::ostringstream o;
    o << std::setprecision(6) << v;
    return o.str();
}

std::string fmt(const Point& p) { return "(" + fmt(p.x()) + ", " + fmt(p.y()) + ")"; }

// Sections whose content determines the simulate output.
std::string fingerprint(const ExperimentConfig& cfg) {
    json f = json::object();
    for (const char* k : {"grid", "speed", "region", "patch", "phantom", "solver"})
        f[k] = cfg.document.contains(k) ? cfg.document.at(k) : json(nullptr);
    if (cfg.speed.model == "file") f["speed_file_sha256"] = sha256_file(cfg.speed.path);
    const std::string s = f.dump();
    return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

// One command's output directory and its manifest.
class Output {
public:
    Output(const ExperimentConfig& cfg, std::string command)
        : cfg_(cfg), command_(std::move(command)), dir_(cfg.output / command_) {
        fs::create_directories(dir_);
        if (!cfg.source.empty()) input(cfg.source);
        if (cfg.speed.model == "file") input(cfg.speed.path);
    }

    const fs::path& dir() const { return dir_; }

    void field(const std::string& name, const GridSpec& grid, const Field& values, const std::string& kind,
               const json& meta = json::object()) {
        write_field(dir_ / name, grid, values, kind, meta);
        add(name + ".bin");
        add(name + ".json");
    }

    void trace(const std::string& name, const Trace& t) {
        write_trace(dir_ / name, t);
        add(name + ".bin");
        add(name + ".json");
    }

    void document(const std::string& name, const json& j) {
        std::ofstream(dir_ / name, std::ios::trunc) << j.dump(2) << '\n';
        add(name);
    }

    void text(const std::string& name, const std::string& content) {
        std::ofstream(dir_ / name, std::ios::trunc) << content;
        add(name);
    }

    void csv_trace(const std::string& name, const Trace& t) {
        write_trace_csv(dir_ / name, t);
        add(name);
    }

    void input(const fs::path& p) { inputs_[p.string()] = sha256_file(p); }

    /// Wall-clock data stays out of the manifest so reruns compare equal.
    void timings(const json& j) const { std::ofstream(dir_ / "timings.json", std::ios::trunc) << j.dump(2) << '\n'; }

    void finish() const {
        json outputs = json::object();
        for (const auto& f : files_) outputs[f] = sha256_file(dir_ / f);
        const std::string doc = cfg_.document.dump();
        json m = {{"tool", "tatctl"},
                  {"format_version", kFormatVersion},
                  {"command", command_},
                  {"config", cfg_.document},
                  {"config_sha256", sha256_hex(std::span(reinterpret_cast<const unsigned char*>(doc.data()), doc.size()))},
                  {"fingerprint", fingerprint(cfg_)},
                  {"seed", cfg_.seed},
                  {"inputs", inputs_},
                  {"outputs", outputs}};
        std::ofstream(dir_ / "manifest.json", std::ios::trunc) << m.dump(2) << '\n';
    }

private:
    void add(const std::string& f) {
        if (std::find(files_.begin(), files_.end(), f) == files_.end()) files_.push_back(f);
    }

    const ExperimentConfig& cfg_;
    std::string command_;
    fs::path dir_;
    std::vector<std::string> files_;
    std::map<std::string, std::string> inputs_;
};

// Checks that `command` ran with a matching config and returns its manifest.
json upstream(const ExperimentConfig& cfg, const std::string& command, Output& out) {
    const fs::path dir = cfg.output / command;
    const fs::path manifest = dir / "manifest.json";
    if (!fs::exists(manifest))
        throw UpstreamError("missing " + manifest.string() + ": run `tatctl " + command + "` with this config first");
    json m = read_json_file(manifest);
    if (m.value("format_version", -1) != kFormatVersion)
        throw UpstreamError(manifest.string() + " was written by format version " +
                            std::to_string(m.value("format_version", -1)) + ", expected " +
                            std::to_string(kFormatVersion) + "; rerun " + command);
    if (m.value("fingerprint", std::string()) != fingerprint(cfg))
        throw UpstreamError(dir.string() + " was produced from a different grid/speed/region/patch/phantom/solver "
                                           "configuration; rerun " + command);
    for (const auto& [f, sha] : m.at("outputs").items()) {
        if (sha256_file(dir / f) != sha.get<std::string>())
            throw UpstreamError(dir.string() + "/" + f + " does not match its manifest checksum; rerun " + command);
        out.input(dir / f);
    }
    return m;
}

struct Setup {
    SpeedField speed;
    Region region;
    BoundaryPatch patch;
};

Setup setup(const ExperimentConfig& cfg) {
    SpeedField speed = make_speed(cfg);
    Region region = as_config_error("region", [&] { return make_region(cfg.grid, cfg.region); });
    BoundaryPatch patch = as_config_error("patch", [&] { return make_patch(region, cfg.arcs); });
    return {std::move(speed), std::move(region), std::move(patch)};
}

json lipschitz_json(const LipschitzReport& r, const GridSpec& grid) {
    json j = {{"passed", r.passed}, {"max_violation", r.maxViolation}, {"tolerance", r.tolerance}};
    if (r.location.x() >= 0) {
        j["location"] = {r.location.x(), r.location.y()};
        const Point x = grid.node(r.location.x(), r.location.y());
        j["point"] = {x.x(), x.y()};
    }
    return j;
}

void print_lipschitz(std::ostream& out, const LipschitzReport& r, const GridSpec& grid) {
    if (r.passed) {
        out << "lipschitz: pass (max excess " << fmt(r.maxViolation) << ", tolerance " << fmt(r.tolerance) << ")\n";
        return;
    }
    out << "lipschitz: fail at node (" << r.location.x() << ", " << r.location.y() << ") = "
        << fmt(grid.node(r.location.x(), r.location.y())) << ", excess " << fmt(r.maxViolation) << " > "
        << fmt(r.tolerance) << '\n';
}

Field distance_values(const DistanceField& d) {
    return d.reachable().select(d.values(), std::numeric_limits<double>::quiet_NaN());
}

Field mask_field(const Mask& m) { return m.cast<double>(); }

void export_set(Output& out, const std::string& name, const SpaceTimeSet& s) {
    json slices = json::array();
    for (int k = 0; k < s.size(); ++k) {
        std::ostringstream stem;
        stem << name << "/slice_" << std::setw(4) << std::setfill('0') << k;
        fs::create_directories(out.dir() / name);
        out.field(stem.str(), s.grid, mask_field(s.slices[k]), "indicator", {{"time", s.time(k)}});
        slices.push_back({{"index", k}, {"time", s.time(k)}, {"stem", stem.str()}, {"count", s.slices[k].count()}});
    }
    out.document(name + ".json", {{"label", s.label},
                                  {"grid", to_json(s.grid)},
                                  {"dt", s.dt},
                                  {"t0", s.t0},
                                  {"steps", s.size()},
                                  {"count", s.count()},
                                  {"slices", slices}});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Point require_point(const ExperimentConfig& cfg, const char* command) {
    if (!cfg.continuation.point) throw ConfigError(std::string("continuation.point is required for ") + command);
    return *cfg.continuation.point;
}

}  // namespace

json parse_document(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(name + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError("override '" + key + "' descends into a non-object");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    json parsed = json::parse(value, nullptr, false);
    *node = parsed.is_discarded() ? json(value) : parsed;
}

ExperimentConfig parse_config(json doc, fs::path source) {
    ExperimentConfig cfg;
    cfg.source = std::move(source);
    Section root(doc, "");
    cfg.grid = parse_grid(root.sub("grid"));
    cfg.speed = parse_speed(root.sub("speed"));
    if (!root.has("region")) throw ConfigError("region is required");
    cfg.region = parse_region(root.sub("region"));
    {
        Section p = root.sub("patch");
        cfg.arcs = p.has("arcs") ? as_config_error("patch.arcs", [&] { return arcs_from_json(p.raw("arcs")); })
                                 : std::vector<Arc>{{0.0, 1.0}};
        p.finish();
    }
    cfg.bumps = parse_bumps(root.sub("phantom"));
    {
        Section s = root.sub("solver");
        cfg.wave.cflFactor = s.get<double>("cfl_factor", 0.9);
        cfg.wave.boundary = as_config_error("solver.boundary", [&] {
            return boundary_condition_from_string(s.get<std::string>("boundary", "sponge"));
        });
        cfg.wave.spongeWidth = s.get<int>("sponge_width", 16);
        cfg.wave.spongeStrength = s.opt<double>("sponge_strength");
        cfg.wave.snapshotTimes = s.get<std::vector<double>>("snapshot_times", {});
        cfg.wave.recordEnergy = s.get<bool>("record_energy", false);
        cfg.tMax = s.opt<double>("t_max");
        cfg.tFactor = s.get<double>("t_factor", 1.5);
        s.finish();
        if (!(cfg.wave.cflFactor > 0.0 && cfg.wave.cflFactor <= 0.95))
            throw ConfigError("solver.cfl_factor must lie in (0, 0.95]");
        if (cfg.wave.spongeWidth < 0) throw ConfigError("solver.sponge_width must be nonnegative");
        if (cfg.tMax && !(*cfg.tMax > 0.0)) throw ConfigError("solver.t_max must be positive");
        if (!(cfg.tFactor > 0.0)) throw ConfigError("solver.t_factor must be positive");
    }
    {
        Section s = root.sub("coverage");
        const std::string strategy = s.get<std::string>("strategy", "offset_eikonal");
        if (strategy == "offset_eikonal")
            cfg.coverage.strategy = CoverageStrategy::offset_eikonal;
        else if (strategy == "subsample")
            cfg.coverage.strategy = CoverageStrategy::subsample;
        else
            throw ConfigError("coverage.strategy must be offset_eikonal or subsample");
        cfg.coverage.subsampleCount = s.get<int>("subsample_count", 64);
        cfg.coverage.epsilon = s.opt<double>("epsilon");
        cfg.coverage.fallback = s.get<bool>("fallback", true);
        cfg.coverage.compatibilityTolerance = s.opt<double>("compatibility_tolerance");
        s.finish();
        if (cfg.coverage.subsampleCount < 1) throw ConfigError("coverage.subsample_count must be positive");
    }
    {
        Section s = root.sub("distance");
        if (s.has("sources")) {
            for (const json& p : s.raw("sources")) {
                const auto xy = p.get<std::vector<double>>();
                if (xy.size() != 2) throw ConfigError("distance.sources entries must be [x, y]");
                cfg.distance.sources.emplace_back(xy[0], xy[1]);
            }
        }
        const std::string mode = s.get<std::string>("mode", "free");
        if (mode != "free" && mode != "exterior") throw ConfigError("distance.mode must be free or exterior");
        cfg.distance.exterior = mode == "exterior";
        cfg.distance.oracle = s.get<bool>("oracle", false);
        if (auto f = s.opt<std::string>("check_field")) cfg.distance.checkField = fs::path(*f);
        cfg.distance.lipschitzConstant = s.get<double>("lipschitz_constant", 2.0);
        s.finish();
    }
    {
        Section s = root.sub("continuation");
        auto& c = cfg.continuation;
        c.deltaShrink = s.get<double>("delta_shrink", 0.05);
        c.deltaInj = s.opt<double>("delta_inj");
        c.point = s.opt<Point>("point");
        c.H = s.opt<double>("H");
        c.rho = s.get<double>("rho", 0.1);
        c.timeStride = s.get<int>("time_stride", 8);
        c.ucTimeStep = s.opt<double>("uc_time_step");
        c.exportSets = s.get<bool>("export_sets", true);
        s.finish();
        if (!(c.deltaShrink >= 0.0 && c.deltaShrink < 1.0)) throw ConfigError("continuation.delta_shrink must lie in [0, 1)");
        if (c.deltaInj && !(*c.deltaInj > 0.0)) throw ConfigError("continuation.delta_inj must be positive");
        if (c.timeStride < 1) throw ConfigError("continuation.time_stride must be at least 1");
    }
    {
        Section s = root.sub("inversion");
        auto& v = cfg.inversion;
        v.iterations = s.get<int>("iterations", 50);
        v.stepRule = s.get<std::string>("step_rule", "power");
        v.stepFactor = s.get<double>("step_factor", 0.9);
        v.stepSize = s.opt<double>("step_size");
        v.powerIterations = s.get<int>("power_iterations", 10);
        s.finish();
        if (v.stepRule != "power" && v.stepRule != "fixed") throw ConfigError("inversion.step_rule must be power or fixed");
        if (v.stepRule == "fixed" && !v.stepSize) throw ConfigError("inversion.step_size is required for step_rule fixed");
        if (v.iterations < 0) throw ConfigError("inversion.iterations must be nonnegative");
        if (v.powerIterations < 5) throw ConfigError("inversion.power_iterations must be at least 5");
    }
    cfg.output = root.get<std::string>("output", "tat-out");
    cfg.seed = root.get<std::uint64_t>("seed", 0);
    root.finish();
    cfg.document = std::move(doc);
    return cfg;
}

ExperimentConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json doc = parse_document(ss.str(), file.string());
    if (!doc.is_object()) throw ConfigError(file.string() + ": top level must be an object");
    for (const auto& o : overrides) apply_override(doc, o);
    return parse_config(std::move(doc), file);
}

SpeedField make_speed(const ExperimentConfig& cfg) {
    const SpeedSpec& s = cfg.speed;
    return as_config_error("speed", [&]() -> SpeedField {
        if (s.model == "constant") return SpeedField::constant(cfg.grid, s.value, s.bound);
        if (s.model == "layered") return SpeedField::layered(cfg.grid, s.below, s.above, s.interface, s.width, s.bound);
        if (s.model == "radial")
            return SpeedField::radial(cfg.grid, s.center, s.radius, s.background, s.peak, s.bound);
        FieldFile f;
        try {
            f = read_field(s.path);
        } catch (const std::exception& e) {
            throw ConfigError("speed.path: " + std::string(e.what()));
        }
        if (f.grid != cfg.grid) throw ConfigError("speed file " + s.path.string() + " is on a different grid");
        return SpeedField(cfg.grid, f.values, s.bound);
    });
}

double observation_time(const ExperimentConfig& cfg, const Region& region, const BoundaryPatch& patch,
                        const SpeedField& speed) {
    if (cfg.tMax) return *cfg.tMax;
    const double tMin = patch.empty() ? kInf : min_time(region, patch, speed);
    if (!std::isfinite(tMin)) throw ConfigError("solver.t_max is required: the patch never sees all of Omega");
    return cfg.tFactor * tMin;
}

int cmd_distance(const ExperimentConfig& cfg, std::ostream& out) {
    const Setup s = setup(cfg);
    const GridSpec& grid = cfg.grid;
    Output o(cfg, "distance");
    if (cfg.distance.checkField) {
        FieldFile f;
        try {
            f = read_field(*cfg.distance.checkField);
        } catch (const std::exception& e) {
            throw ConfigError("distance.check_field: " + std::string(e.what()));
        }
        if (f.grid != grid) throw ConfigError("distance.check_field is on a different grid");
        if (f.kind != "distance") throw ConfigError("distance.check_field holds a '" + f.kind + "', not a distance");
        o.input(with_suffix(*cfg.distance.checkField, ".bin"));
        const Mask reachable = f.values.isFinite();
        const LipschitzReport r = lipschitz_check(grid, f.values, reachable, s.speed, cfg.distance.lipschitzConstant);
        print_lipschitz(out, r, grid);
        o.document("report.json", {{"mode", "check"}, {"lipschitz", lipschitz_json(r, grid)}});
        o.finish();
        return r.passed ? kOk : kInvariantFailure;
    }
    if (cfg.distance.sources.empty()) throw ConfigError("distance.sources is required (list of [x, y])");
    const Region* obstacle = cfg.distance.exterior ? &s.region : nullptr;
    const DistanceField d = as_config_error("distance", [&] { return solve_eikonal(s.speed, cfg.distance.sources, obstacle); });
    const LipschitzReport r = lipschitz_check(d, s.speed, cfg.distance.lipschitzConstant);
    print_lipschitz(out, r, grid);
    o.field("distance", grid, distance_values(d), "distance", {{"mode", cfg.distance.exterior ? "exterior" : "free"}});
    json report = {{"mode", cfg.distance.exterior ? "exterior" : "free"}, {"lipschitz", lipschitz_json(r, grid)}};
    bool ok = r.passed;
    if (cfg.distance.oracle) {
        const DistanceField od = dijkstra_oracle(s.speed, cfg.distance.sources, obstacle);
        double worst = 0.0, ratio = 0.0;
        Index2 at = Index2::Constant(-1);
        const double h = grid.h();
        for (int j = 0; j < grid.ny(); ++j)
            for (int i = 0; i < grid.nx(); ++i) {
                if (!d.reachable(i, j) || !od.reachable(i, j)) continue;
                const double e = std::abs(d(i, j) - od(i, j));
                const double q = e / std::max(3.0 * h, 0.03 * od(i, j));
                if (e > worst) worst = e;
                if (q > ratio) {
                    ratio = q;
                    at = Index2(i, j);
                }
            }
        out << "oracle: max discrepancy " << fmt(worst) << ", worst ratio to max(3h, 3%) " << fmt(ratio) << '\n';
        o.field("oracle", grid, distance_values(od), "distance", {{"mode", "oracle"}});
        report["oracle"] = {{"max_discrepancy", worst}, {"worst_ratio", ratio}, {"location", {at.x(), at.y()}}};
        ok = ok && ratio <= 1.0;
    }
    o.document("report.json", report);
    o.finish();
    return ok ? kOk : kInvariantFailure;
}

int cmd_coverage(const ExperimentConfig& cfg, std::ostream& out) {
    const Setup s = setup(cfg);
    Output o(cfg, "coverage");
    const auto t0 = std::chrono::steady_clock::now();
    const CoverageReport r = check_property_p(s.region, s.patch, s.speed, cfg.coverage);
    const Field margin = r.domain.select(r.margin, std::numeric_limits<double>::quiet_NaN());
    o.field("margin", cfg.grid, margin, "margin");
    json clearance = json::array();
    for (double w : r.clearance) clearance.push_back(finite_or_null(w));
    const char* kind = r.marginKind == MarginKind::finite        ? "finite"
                       : r.marginKind == MarginKind::plus_infinity ? "+inf"
                                                                   : "-inf";
    json report = {{"verdict", to_string(r.verdict)},
                   {"satisfied", r.satisfied},
                   {"margin_kind", kind},
                   {"min_margin", finite_or_null(r.minMargin)},
                   {"epsilon", r.epsilon},
                   {"t_min", finite_or_null(r.tMin)},
                   {"strategy_requested", to_string(r.requested)},
                   {"strategy_used", to_string(r.used)},
                   {"subsample_count", r.subsampleCount},
                   {"compatibility_defect", finite_or_null(r.compatibilityDefect)},
                   {"gamma_samples", s.patch.samples().size()},
                   {"complement_samples", s.patch.complement_samples().size()},
                   {"clearance", clearance}};
    if (r.minLocation.x() >= 0) report["min_location"] = {r.minLocation.x(), r.minLocation.y()};
    o.document("report.json", report);
    o.timings({{"coverage_seconds", seconds_since(t0)}});
    o.finish();
    out << "property_p: " << to_string(r.verdict) << ", tMin = " << fmt(r.tMin) << '\n';
    out << "min margin " << (r.marginKind == MarginKind::finite ? fmt(r.minMargin) : std::string(kind)) << " (epsilon "
        << fmt(r.epsilon) << ", strategy " << to_string(r.used) << ")\n";
    return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
    const Setup s = setup(cfg);
    const Phantom phantom = as_config_error("phantom", [&] { return make_phantom(s.region, cfg.bumps); });
    const double T = observation_time(cfg, s.region, s.patch, s.speed);
    Output o(cfg, "simulate");
    const auto t0 = std::chrono::steady_clock::now();
    const BoundaryPatch full = make_patch(s.region, {{0.0, 1.0}});
    auto [run, all] = simulate(s.speed, phantom, T, full, cfg.wave);
    // Patch trace: rows of the full-boundary trace at the Gamma samples.
    Eigen::MatrixXd rows(Eigen::Index(s.patch.samples().size()), all.samples());
    std::vector<int> rowOf(s.region.boundary().size(), -1);
    for (std::size_t r = 0; r < full.samples().size(); ++r) rowOf[full.samples()[r]] = int(r);
    for (std::size_t r = 0; r < s.patch.samples().size(); ++r)
        rows.row(Eigen::Index(r)) = all.values.row(rowOf[s.patch.samples()[r]]);
    const Trace trace(s.patch, all.dt, 0.0, std::move(rows));

    o.field("phantom", cfg.grid, phantom.values(), "pressure");
    o.trace("trace", trace);
    o.csv_trace("trace.csv", trace);
    o.trace("boundary_trace", all);
    o.field("final", cfg.grid, run.u, "pressure", {{"time", run.steps * run.dt}});
    for (const Snapshot& snap : run.snapshots) {
        std::ostringstream name;
        name << "snapshot_" << std::setw(6) << std::setfill('0') << snap.step;
        o.field(name.str(), cfg.grid, snap.u, "pressure", {{"time", snap.time}, {"step", snap.step}});
    }
    if (!run.energyHistory.empty()) {
        std::ostringstream csv;
        csv << std::setprecision(17) << "time,energy\n";
        for (std::size_t k = 0; k < run.energyHistory.size(); ++k) csv << k * run.dt << ',' << run.energyHistory[k] << '\n';
        o.text("energy.csv", csv.str());
    }
    const double peak = trace.values.size() ? trace.values.cwiseAbs().maxCoeff() : 0.0;
    o.document("summary.json", {{"t_max", T},
                                {"dt", run.dt},
                                {"steps", run.steps},
                                {"boundary", to_string(run.boundary)},
                                {"sponge_width", run.spongeWidth},
                                {"sponge_strength", run.spongeStrength},
                                {"receivers", trace.receivers()},
                                {"boundary_samples", all.receivers()},
                                {"max_abs_trace", peak}});
    o.timings({{"simulate_seconds", seconds_since(t0)}});
    o.finish();
    out << "simulate: " << run.steps << " steps, dt = " << fmt(run.dt) << ", tMax = " << fmt(T) << ", trace "
        << trace.receivers() << " x " << trace.samples() << ", max |trace| = " << fmt(peak) << '\n';
    return kOk;
}

int cmd_verify_dod(const ExperimentConfig& cfg, std::ostream& out) {
    const Setup s = setup(cfg);
    const Point p = require_point(cfg, "verify-dod");
    if (s.region.signed_distance(p) <= 0.0) throw ConfigError("continuation.point must lie outside the closed region");
    Output o(cfg, "verify-dod");
    upstream(cfg, "simulate", o);
    const auto t0 = std::chrono::steady_clock::now();
    Trace data = read_trace(cfg.output / "simulate" / "boundary_trace", s.region);
    if (!data.patch.is_full()) throw UpstreamError("simulate/boundary_trace does not cover the whole boundary; rerun simulate");
    for (std::size_t r = 0; r < data.patch.samples().size(); ++r)
        if (s.patch.contains_sample(data.patch.samples()[r])) data.values.row(Eigen::Index(r)).setZero();

    const double delta = cfg.continuation.deltaShrink;
    const Point src[1] = {p};
    const DistanceField dext = solve_eikonal(s.speed, src, &s.region);
    double clearance = kInf;
    for (const Point& q : s.patch.complement_points()) clearance = std::min(clearance, dext.at(q).value_or(kInf));
    const double H = cfg.continuation.H.value_or((1.0 - delta) * clearance);
    if (!std::isfinite(H)) throw ConfigError("continuation.H is required when the patch covers the whole boundary");
    if (!(H > 0.0)) throw ConfigError("continuation.H must be positive");
    if (H > data.tMax() * (1.0 + 1e-12))
        throw UpstreamError("simulate covered t <= " + fmt(data.tMax()) + " but H = " + fmt(H) +
                            "; rerun simulate with solver.t_max >= H");

    const double dt = stable_time_step(s.speed, H, cfg.wave.cflFactor);
    const int steps = int(std::llround(H / dt));
    const TimeAxis axis = sampled_axis(dt, steps, cfg.continuation.timeStride, H);
    const DomainOfDependence D =
        domain_of_dependence(p, H, s.region, s.patch, s.speed, delta, axis.dt, axis.count);
    WaveOptions opts = cfg.wave;
    opts.snapshotTimes = snapshot_times(D.set);
    opts.recordEnergy = false;
    const WaveRun run = simulate_exterior(s.speed, s.region, data, H, opts);
    const DodReport rep = verify_dod(run, s.speed, D.set);

    double maxData = 0.0;
    for (int k = 0; k < data.samples() && data.time(k) <= H + 1e-12; ++k)
        maxData = std::max(maxData, data.values.col(k).cwiseAbs().maxCoeff());
    const double ratio = maxData > 0.0 ? rep.maxAbs / maxData : (rep.maxAbs > 0.0 ? kInf : 0.0);

    int spacelike = 0, nullish = 0, timelike = 0, characteristic = 0;
    for (const CovectorSample& n : D.surfaceNormals) {
        const Classification c = classify(s.speed, n);
        spacelike += c.causality == Causality::spacelike;
        nullish += c.causality == Causality::null;
        timelike += c.causality == Causality::timelike;
        characteristic += !c.noncharacteristic;
    }
    const bool normalsOk = delta == 0.0 || spacelike == int(D.surfaceNormals.size());
    const bool vanishes = !D.admissible || rep.maxAbs <= 1e-3 * maxData + 1e-12;

    json report = {{"point", {p.x(), p.y()}},
                   {"H", H},
                   {"delta_shrink", delta},
                   {"clearance", finite_or_null(clearance)},
                   {"admissible", D.admissible},
                   {"admissibility_margin", finite_or_null(D.admissibilityMargin)},
                   {"max_abs", rep.maxAbs},
                   {"max_data", maxData},
                   {"ratio", finite_or_null(ratio)},
                   {"energy_fraction", rep.energyFraction},
                   {"slices", rep.slicesChecked},
                   {"slice_dt", axis.dt},
                   {"set_count", D.set.count()},
                   {"lateral_count", D.lateral.count()},
                   {"normals",
                    {{"sampled", D.surfaceNormals.size()},
                     {"spacelike", spacelike},
                     {"null", nullish},
                     {"timelike", timelike},
                     {"characteristic", characteristic}}},
                   {"passed", vanishes && normalsOk}};
    if (rep.slice >= 0) report["location"] = {rep.location.x(), rep.location.y(), rep.slice};
    o.document("report.json", report);
    if (cfg.continuation.exportSets) {
        export_set(o, "U", D.set);
        o.field("bottom", cfg.grid, mask_field(D.bottom), "indicator");
    }
    o.timings({{"verify_dod_seconds", seconds_since(t0)}});
    o.finish();

    out << "admissible: " << (D.admissible ? "yes" : "no") << " (margin " << fmt(D.admissibilityMargin) << ", H = " << fmt(H)
        << ")\n";
    out << "max |v| on U = " << fmt(rep.maxAbs) << " (ratio to max |data| " << fmt(ratio) << "), energy fraction "
        << fmt(rep.energyFraction) << '\n';
    out << "surface normals: " << spacelike << " spacelike, " << nullish << " null, " << timelike << " timelike of "
        << D.surfaceNormals.size() << '\n';
    out << "verify_dod: " << (vanishes && normalsOk ? "pass" : "fail") << '\n';
    return vanishes && normalsOk ? kOk : kInvariantFailure;
}

int cmd_uc(const ExperimentConfig& cfg, std::ostream& out) {
    const SpeedField speed = make_speed(cfg);
    const Point p = require_point(cfg, "uc");
    if (!cfg.continuation.H) throw ConfigError("continuation.H is required for uc");
    const double H = *cfg.continuation.H, rho = cfg.continuation.rho;
    if (!(H > 0.0) || !(rho > 0.0)) throw ConfigError("continuation.H and continuation.rho must be positive");
    const double h = cfg.grid.h();
    const double deltaInj = cfg.continuation.deltaInj.value_or(H / 8.0);
    const double tau = cfg.continuation.ucTimeStep.value_or(2.0 * h);
    if (!(tau > 0.0)) throw ConfigError("continuation.uc_time_step must be positive");
    if (!cfg.grid.contains(p)) throw ConfigError("continuation.point lies outside the grid");
    Output o(cfg, "uc");
    const auto t0 = std::chrono::steady_clock::now();

    const Point src[1] = {p};
    const DistanceField d = solve_eikonal(speed, src);
    const SpaceTimeSet X = uc_cylinder_expand(p, rho, H, speed, tau);
    const UcResult Y = uc_iterate(d, rho, H, deltaInj, tau);
    const SpaceTimeSet C = cylinder(p, rho, H, speed, tau);
    SpaceTimeSet envelope = Y.set, inner = Y.set;
    envelope.label = "causal envelope";
    inner.label = "guaranteed set";
    for (int k = 0; k < Y.set.size(); ++k) {
        const double t = std::abs(Y.set.time(k));
        envelope.slices[k] = d.reachable() && (d.values() + t < rho + H + 3.0 * h);
        inner.slices[k] = d.reachable() && (d.values() + t <= H - 3.0 * h);
    }
    const double slack = 2.0 * h;
    const bool cylIn = contained_in(C, Y.set, slack);
    const bool inEnv = contained_in(Y.set, envelope, slack);
    const bool covers = contained_in(inner, Y.set, slack);
    const bool ok = cylIn && inEnv && covers;

    o.document("report.json", {{"point", {p.x(), p.y()}},
                               {"rho", rho},
                               {"H", H},
                               {"delta_inj", deltaInj},
                               {"tau", tau},
                               {"iterations", Y.iterations},
                               {"cone_count", X.count()},
                               {"final_count", Y.set.count()},
                               {"cylinder_in_final", cylIn},
                               {"final_in_envelope", inEnv},
                               {"final_covers_guaranteed_set", covers},
                               {"passed", ok}});
    if (cfg.continuation.exportSets) {
        export_set(o, "X", X);
        export_set(o, "Y", Y.set);
    }
    o.timings({{"uc_seconds", seconds_since(t0)}});
    o.finish();
    out << "uc: " << Y.iterations << " iterations (deltaInj " << fmt(deltaInj) << "), cone " << X.count() << " points, final "
        << Y.set.count() << " points\n";
    out << "containment: cylinder in final " << (cylIn ? "yes" : "no") << ", final in envelope " << (inEnv ? "yes" : "no")
        << ", covers d + |t| <= H - 3h " << (covers ? "yes" : "no") << '\n';
    out << "uc: " << (ok ? "pass" : "fail") << '\n';
    return ok ? kOk : kInvariantFailure;
}

int cmd_reconstruct(const ExperimentConfig& cfg, std::ostream& out) {
    const Setup s = setup(cfg);
    const Phantom phantom = as_config_error("phantom", [&] { return make_phantom(s.region, cfg.bumps); });
    Output o(cfg, "reconstruct");
    upstream(cfg, "simulate", o);
    const Trace data = read_trace(cfg.output / "simulate" / "trace", s.region);
    if (data.patch.samples() != s.patch.samples())
        throw UpstreamError("simulate/trace was recorded on a different patch; rerun simulate");
    const double T = data.tMax();
    json timings = json::object();

    auto t0 = std::chrono::steady_clock::now();
    const CoverageReport cov = check_property_p(s.region, s.patch, s.speed, cfg.coverage);
    timings["coverage_seconds"] = seconds_since(t0);

    double stepSize = cfg.inversion.stepSize.value_or(0.0);
    json norm = nullptr;
    if (cfg.inversion.stepRule == "power") {
        t0 = std::chrono::steady_clock::now();
        const NormEstimate ne =
            estimate_operator_norm(s.patch, s.speed, T, cfg.inversion.powerIterations, cfg.seed, cfg.wave);
        timings["norm_seconds"] = seconds_since(t0);
        if (!(ne.value > 0.0)) throw ConfigError("operator norm estimate is zero; the patch records nothing");
        stepSize = cfg.inversion.stepFactor / (ne.value * ne.value);
        norm = {{"estimate", ne.value}, {"history", ne.history}};
    }

    std::vector<double> errors{relative_error(Field::Zero(cfg.grid.nx(), cfg.grid.ny()), phantom.values())};
    t0 = std::chrono::steady_clock::now();
    std::optional<InversionRun> run;
    std::string failure;
    std::vector<double> history;
    try {
        run = landweber(data, s.patch, s.speed, T, cfg.inversion.iterations, stepSize, s.region, cfg.wave,
                        [&](int, const Field& f) { errors.push_back(relative_error(f, phantom.values())); });
        history = run->residualHistory;
    } catch (const DivergenceError& e) {
        failure = e.what();
        history = e.history();
    }
    timings["landweber_seconds"] = seconds_since(t0);

    std::ostringstream csv;
    csv << std::setprecision(17) << "iteration,residual,relative_error\n";
    for (std::size_t k = 0; k < history.size(); ++k)
        csv << k << ',' << history[k] << ',' << (k < errors.size() ? errors[k] : std::nan("")) << '\n';
    o.text("residuals.csv", csv.str());

    bool monotone = true;
    for (std::size_t k = 1; k < history.size(); ++k) monotone = monotone && history[k] <= history[k - 1];
    const double r0 = history.empty() ? 0.0 : history.front();
    const double rN = history.empty() ? 0.0 : history.back();
    json summary = {{"arcs", to_json(cfg.arcs)},
                    {"property_p", to_string(cov.verdict)},
                    {"t_min", finite_or_null(cov.tMin)},
                    {"t_max", T},
                    {"iterations", failure.empty() ? run->iterations : int(history.size()) - 1},
                    {"step_rule", cfg.inversion.stepRule},
                    {"step_size", stepSize},
                    {"operator_norm", norm},
                    {"initial_residual", r0},
                    {"final_residual", rN},
                    {"relative_residual", r0 > 0.0 ? rN / r0 : 0.0},
                    {"relative_error", errors.back()},
                    {"residual_monotone", monotone},
                    {"diverged", !failure.empty()}};
    if (failure.empty()) o.field("estimate", cfg.grid, run->estimate, "pressure");
    o.document("summary.json", summary);
    o.timings(timings);
    o.finish();

    if (!failure.empty()) {
        out << "reconstruct: " << failure << '\n';
        return kInvariantFailure;
    }
    out << "reconstruct: " << run->iterations << " iterations, step " << fmt(stepSize) << ", residual " << fmt(r0) << " -> "
        << fmt(rN) << ", relative error " << fmt(errors.back()) << " (property_p " << to_string(cov.verdict) << ")\n";
    const bool ok = monotone || cfg.inversion.stepRule != "power";
    if (!ok) out << "reconstruct: residual increased despite the power-iteration step bound\n";
    return ok ? kOk : kInvariantFailure;
}

int cmd_report(const std::vector<ExperimentConfig>& cfgs, const fs::path& outDir, std::ostream& out) {
    if (cfgs.empty()) throw ConfigError("report needs at least one config");
    struct Row {
        std::string label, arcs, verdict;
        double tMax, finalResidual, relResidual, relError;
        int iterations;
    };
    std::vector<Row> rows;
    for (const auto& cfg : cfgs) {
        const fs::path f = cfg.output / "reconstruct" / "summary.json";
        if (!fs::exists(f)) throw UpstreamError("missing " + f.string() + ": run `tatctl reconstruct` with " +
                                                (cfg.source.empty() ? std::string("that config") : cfg.source.string()) + " first");
        const json j = read_json_file(f);
        std::string arcs;
        for (const auto& a : j.at("arcs")) arcs += (arcs.empty() ? "" : " ") + ("[" + fmt(a[0].get<double>()) + "," + fmt(a[1].get<double>()) + "]");
        rows.push_back({cfg.source.empty() ? cfg.output.filename().string() : cfg.source.stem().string(), arcs,
                        j.at("property_p").get<std::string>(), j.at("t_max").get<double>(),
                        j.at("final_residual").get<double>(), j.at("relative_residual").get<double>(),
                        j.at("relative_error").get<double>(), j.at("iterations").get<int>()});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.finalResidual < b.finalResidual; });

    std::ostringstream csv, txt;
    csv << std::setprecision(17) << "label,arcs,property_p,t_max,iterations,final_residual,relative_residual,relative_error\n";
    txt << std::left << std::setw(24) << "label" << std::setw(22) << "arcs" << std::setw(14) << "property_p" << std::setw(10)
        << "t_max" << std::setw(7) << "iters" << std::setw(14) << "residual" << std::setw(12) << "rel_resid"
        << "rel_error\n";
    for (const Row& r : rows) {
        csv << r.label << ',' << r.arcs << ',' << r.verdict << ',' << r.tMax << ',' << r.iterations << ',' << r.finalResidual
            << ',' << r.relResidual << ',' << r.relError << '\n';
        txt << std::left << std::setw(24) << r.label << std::setw(22) << r.arcs << std::setw(14) << r.verdict << std::setw(10)
            << fmt(r.tMax) << std::setw(7) << r.iterations << std::setw(14) << fmt(r.finalResidual) << std::setw(12)
            << fmt(r.relResidual) << fmt(r.relError) << '\n';
    }
    const auto best = std::min_element(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.relError < b.relError; });
    txt << "lowest relative error: " << best->label << '\n';
    fs::create_directories(outDir);
    std::ofstream(outDir / "report.csv", std::ios::trunc) << csv.str();
    std::ofstream(outDir / "report.txt", std::ios::trunc) << txt.str();
    out << txt.str();
    return kOk;
}

}  // namespace tat::cli
