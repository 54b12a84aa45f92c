#ifndef BODYFIT_PIPELINE_HPP
#define BODYFIT_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bodyfit/error.hpp"
#include "bodyfit/face_grid.hpp"
#include "bodyfit/geometry.hpp"
#include "bodyfit/io.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/packing.hpp"
#include "bodyfit/sampling.hpp"
#include "bodyfit/sdf.hpp"
#include "bodyfit/shapes.hpp"
#include "bodyfit/winding.hpp"

namespace bodyfit {

/// Failure inside one pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// A geometry given either by file or by one of the built-in shapes.
struct GeometrySource {
    std::string path;
    std::optional<GeometryFormat> format;  ///< detected from the file when unset
    std::string shape;                     ///< circle, rectangle, naca, icosphere, uv_sphere, box
    double size = 1.0;                     ///< radius, chord or half edge
    std::size_t resolution = 0;            ///< segments, sphere level or longitudes
    std::vector<double> center;

    int dimension() const {
        if (!shape.empty()) return shape == "circle" || shape == "rectangle" || shape == "naca" ? 2 : 3;
        if (format) return format_dimension(*format);
        return format_dimension(detect_format(path));
    }
};

struct PipelineConfig {
    std::vector<GeometrySource> geometries;
    double spacing = 0.0;
    double winding_threshold = 0.5;
    double boundary_layers = 4.0;  ///< tau / spacing
    double smoothing_length_factor = 0.8;
    std::optional<double> band_radius;  ///< absolute; see effective_band_radius
    std::size_t leaf_capacity = 100;
    double rho_0 = 1.0;
    double background_pressure = 1.0;
    double abs_tolerance = 1e-6;
    double rel_tolerance = 1e-3;
    RungeKuttaScheme scheme = RungeKuttaScheme::bogacki_shampine_3_2;
    std::size_t max_iterations = 1000;
    PlacementMode placement = PlacementMode::midpoint;
    bool terminate_on_energy_plateau = false;
    std::string output_dir = ".";
    std::string prefix = "bodyfit";
    bool write_csv = true;
    bool write_vtk = false;
    bool write_cloud = false;

    double smoothing_length() const { return smoothing_length_factor * spacing; }
    double boundary_thickness() const { return boundary_layers * spacing; }
    /// max(3h, tau + spacing), widened so a particle at either projection trigger
    /// (tau + spacing/2 outside, spacing/2 inside) still has full kernel support in the cloud.
    double effective_band_radius() const {
        if (band_radius) return *band_radius;
        const double h3 = 3.0 * smoothing_length(), tau = boundary_thickness();
        return std::max({h3, tau + spacing, tau + 0.5 * spacing + h3});
    }

    void validate() const {
        if (geometries.empty()) throw Error("no geometry given");
        if (!(spacing > 0.0)) throw Error("particle spacing must be positive");
        if (!(winding_threshold > 0.0 && winding_threshold <= 1.0)) throw Error("winding threshold must lie in (0, 1]");
        if (!(boundary_layers >= 0.0)) throw Error("boundary layers must be non-negative");
        if (!(smoothing_length_factor > 0.0)) throw Error("smoothing length factor must be positive");
        if (!(effective_band_radius() > 0.0)) throw Error("band radius must be positive");
        if (boundary_thickness() > effective_band_radius() * (1.0 + 1e-12))
            throw Error("boundary thickness exceeds the band radius");
        if (!(rho_0 > 0.0)) throw Error("reference density must be positive");
    }

    PackingConfig packing() const {
        PackingConfig p;
        p.background_pressure = background_pressure;
        p.smoothing_length_factor = smoothing_length_factor;
        p.boundary_thickness = boundary_thickness();
        p.max_iterations = max_iterations;
        p.abs_tolerance = abs_tolerance;
        p.rel_tolerance = rel_tolerance;
        p.scheme = scheme;
        p.placement = placement;
        p.terminate_on_energy_plateau = terminate_on_energy_plateau;
        return p;
    }
};

inline GeometrySource geometry_source_from_json(const nlohmann::json& j) {
    GeometrySource s;
    if (j.is_string()) {
        s.path = j.get<std::string>();
        return s;
    }
    if (j.contains("path")) s.path = j.at("path").get<std::string>();
    if (j.contains("format")) s.format = parse_format(j.at("format").get<std::string>());
    if (j.contains("shape")) s.shape = j.at("shape").get<std::string>();
    if (j.contains("size")) s.size = j.at("size").get<double>();
    if (j.contains("resolution")) s.resolution = j.at("resolution").get<std::size_t>();
    if (j.contains("center")) s.center = j.at("center").get<std::vector<double>>();
    if (s.path.empty() == s.shape.empty()) throw Error("geometry entry needs exactly one of 'path' or 'shape'");
    return s;
}

/// Overlays the keys present in `j` onto `cfg`; unknown keys are errors.
inline void apply_json(PipelineConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw Error("configuration must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "geometry" || key == "geometries") {
            cfg.geometries.clear();
            if (v.is_array())
                for (const auto& e : v) cfg.geometries.push_back(geometry_source_from_json(e));
            else
                cfg.geometries.push_back(geometry_source_from_json(v));
        } else if (key == "spacing") cfg.spacing = v.get<double>();
        else if (key == "winding_threshold") cfg.winding_threshold = v.get<double>();
        else if (key == "boundary_layers") cfg.boundary_layers = v.get<double>();
        else if (key == "smoothing_length_factor") cfg.smoothing_length_factor = v.get<double>();
        else if (key == "band_radius") cfg.band_radius = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
        else if (key == "leaf_capacity") cfg.leaf_capacity = v.get<std::size_t>();
        else if (key == "rho_0") cfg.rho_0 = v.get<double>();
        else if (key == "background_pressure") cfg.background_pressure = v.get<double>();
        else if (key == "abs_tolerance") cfg.abs_tolerance = v.get<double>();
        else if (key == "rel_tolerance") cfg.rel_tolerance = v.get<double>();
        else if (key == "integrator") cfg.scheme = parse_scheme(v.get<std::string>());
        else if (key == "max_iterations") cfg.max_iterations = v.get<std::size_t>();
        else if (key == "placement") cfg.placement = parse_placement(v.get<std::string>());
        else if (key == "terminate_on_energy_plateau") cfg.terminate_on_energy_plateau = v.get<bool>();
        else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
        else if (key == "prefix") cfg.prefix = v.get<std::string>();
        else if (key == "formats") {
            cfg.write_csv = cfg.write_vtk = false;
            for (const auto& f : v) {
                const auto fmt = parse_particle_format(f.get<std::string>());
                (fmt == ParticleFormat::csv ? cfg.write_csv : cfg.write_vtk) = true;
            }
        } else if (key == "write_cloud") cfg.write_cloud = v.get<bool>();
        else throw Error("unknown configuration key '" + key + "'");
    }
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open configuration '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("configuration '" + path + "': " + e.what());
    }
    PipelineConfig cfg;
    try {
        apply_json(cfg, j);
    } catch (const nlohmann::json::exception& e) {
        throw Error("configuration '" + path + "': " + e.what());
    }
    return cfg;
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json g = nlohmann::json::array();
    for (const auto& s : c.geometries) {
        nlohmann::json e;
        if (!s.path.empty()) e["path"] = s.path;
        if (s.format) {
            static constexpr const char* names[] = {"stl_binary", "stl_ascii", "polygon_csv"};
            e["format"] = names[static_cast<int>(*s.format)];
        }
        if (!s.shape.empty()) {
            e["shape"] = s.shape;
            e["size"] = s.size;
            e["resolution"] = s.resolution;
            if (!s.center.empty()) e["center"] = s.center;
        }
        g.push_back(e);
    }
    nlohmann::json formats = nlohmann::json::array();
    if (c.write_csv) formats.push_back("csv");
    if (c.write_vtk) formats.push_back("vtk");
    return {{"geometries", g},
            {"spacing", c.spacing},
            {"winding_threshold", c.winding_threshold},
            {"boundary_layers", c.boundary_layers},
            {"smoothing_length_factor", c.smoothing_length_factor},
            {"band_radius", c.effective_band_radius()},
            {"leaf_capacity", c.leaf_capacity},
            {"rho_0", c.rho_0},
            {"background_pressure", c.background_pressure},
            {"abs_tolerance", c.abs_tolerance},
            {"rel_tolerance", c.rel_tolerance},
            {"integrator", std::string(scheme_name(c.scheme))},
            {"max_iterations", c.max_iterations},
            {"placement", std::string(placement_name(c.placement))},
            {"terminate_on_energy_plateau", c.terminate_on_energy_plateau},
            {"output_dir", c.output_dir},
            {"prefix", c.prefix},
            {"formats", formats},
            {"write_cloud", c.write_cloud}};
}

template <int D>
Geometry<D> build_shape(const GeometrySource& s, Diagnostics* diag) {
    (void)diag;
    Vec<D> c{};
    for (int i = 0; i < D && i < static_cast<int>(s.center.size()); ++i) c[i] = s.center[static_cast<std::size_t>(i)];
    if constexpr (D == 2) {
        if (s.shape == "circle") return shapes::circle(s.size, s.resolution ? s.resolution : 256, c);
        if (s.shape == "rectangle") return shapes::rectangle(c - Vec2::filled(s.size), c + Vec2::filled(s.size));
        if (s.shape == "naca") {
            auto g = shapes::naca4(12, s.size, s.resolution ? s.resolution : 200);
            std::vector<Vec2> v(g.vertices());
            for (auto& x : v) x += c;
            return Geometry<2>(std::move(v), g.faces());
        }
    } else {
        if (s.shape == "icosphere") return shapes::icosphere(s.size, s.resolution ? static_cast<int>(s.resolution) : 4, c);
        if (s.shape == "uv_sphere") {
            const std::size_t lon = s.resolution ? s.resolution : 100;
            return shapes::uv_sphere(s.size, lon, lon / 2 + 2, c);
        }
        if (s.shape == "box") return shapes::box(c - Vec3::filled(s.size), c + Vec3::filled(s.size));
    }
    throw Error("unknown " + std::to_string(D) + "D shape '" + s.shape + "'");
}

template <int D>
Geometry<D> load_source(const GeometrySource& s, Diagnostics* diag) {
    if (!s.shape.empty()) return build_shape<D>(s, diag);
    const GeometryFormat f = s.format ? *s.format : detect_format(s.path);
    return load_geometry<D>(s.path, f, diag);
}

/// Loads and unions all configured geometries.
template <int D>
Geometry<D> load_geometries(const PipelineConfig& cfg, Diagnostics* diag) {
    std::vector<Geometry<D>> parts;
    for (const auto& s : cfg.geometries) {
        if (s.dimension() != D) throw Error("all geometries must share one dimension");
        parts.push_back(load_source<D>(s, diag));
    }
    return parts.size() == 1 ? std::move(parts.front()) : merge_geometries(parts);
}

struct StageTime {
    std::string stage;
    double seconds = 0.0;
};

template <int D>
struct PipelineResult {
    Geometry<D> geometry;
    std::optional<PackingState<D>> state;
    ConvergenceReport convergence;
    QualityReport quality;
    QualityReport initial_quality;
    std::size_t coincident_removed = 0;
    std::vector<StageTime> timings;
    std::vector<std::string> artifacts;
    Diagnostics diagnostics;
};

namespace detail {

template <typename F>
auto run_stage(const std::string& name, std::vector<StageTime>& times, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&] {
        times.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
    };
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            finish();
        } else {
            auto r = f();
            finish();
            return r;
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

}  // namespace detail

/// Output of the sampling stages: geometry, distance cloud and both particle sets.
template <int D>
struct SampledBody {
    Geometry<D> geometry;
    SignedDistanceCloud<D> cloud;
    ParticleSet<D> interior;
    ParticleSet<D> boundary;
    std::size_t coincident_removed = 0;
};

/// load -> face grid -> SDF -> boundary -> hierarchy -> interior.
template <int D>
SampledBody<D> sample_body(const PipelineConfig& cfg, Diagnostics& diag, std::vector<StageTime>& t) {
    detail::run_stage("config", t, [&] { cfg.validate(); });
    SampledBody<D> b;
    b.geometry = detail::run_stage("load_geometry", t, [&] { return load_geometries<D>(cfg, &diag); });
    const Geometry<D>& g = b.geometry;
    const double dx = cfg.spacing, band = cfg.effective_band_radius(), tau = cfg.boundary_thickness();

    auto grid = detail::run_stage("build_face_grid", t, [&] { return build_face_grid(g, band); });
    b.cloud = detail::run_stage("build_sdf", t, [&] { return build_sdf(g, grid, dx, band); });
    b.boundary = detail::run_stage("sample_boundary", t, [&] {
        return tau > 0.0 ? sample_boundary(b.cloud, tau, cfg.rho_0, &diag)
                         : ParticleSet<D>::at_rest({}, 0.0, dx, ParticleRole::boundary);
    });
    auto tree = detail::run_stage("build_hierarchy", t, [&] { return build_hierarchy(g, cfg.leaf_capacity); });
    b.interior = detail::run_stage("sample_interior", t, [&] {
        auto p = sample_interior(g, tree, dx, cfg.winding_threshold, cfg.rho_0);
        b.coincident_removed = remove_coincident(b.boundary, p);
        return p;
    });
    return b;
}

/// Splits exported particle records back into interior and boundary sets.
template <int D>
std::pair<ParticleSet<D>, ParticleSet<D>> particle_sets_from_records(const std::vector<ParticleRecord<D>>& records,
                                                                     double spacing) {
    auto interior = ParticleSet<D>::at_rest({}, 0.0, spacing, ParticleRole::interior);
    auto boundary = ParticleSet<D>::at_rest({}, 0.0, spacing, ParticleRole::boundary);
    for (const auto& r : records) {
        auto& s = r.role == ParticleRole::interior ? interior : boundary;
        s.positions.push_back(r.position);
        s.masses.push_back(r.mass);
    }
    for (auto* s : {&interior, &boundary}) {
        s->velocity.assign(s->size(), Vec<D>{});
        s->advection_velocity.assign(s->size(), Vec<D>{});
    }
    return {std::move(interior), std::move(boundary)};
}

/// Writes the particle sets in the configured formats.
template <int D>
std::vector<std::string> export_particles(const PipelineConfig& cfg, const std::string& suffix,
                                          const ParticleSet<D>& interior, const ParticleSet<D>& boundary,
                                          const SignedDistanceCloud<D>* cloud, const QuinticKernel<D>* kernel) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const auto base = (fs::path(cfg.output_dir) / cfg.prefix).string() + suffix;
    const std::vector<const ParticleSet<D>*> sets{&interior, &boundary};
    std::vector<std::string> written;
    if (cfg.write_csv) {
        write_particles_csv<D>(base + ".csv", sets);
        written.push_back(base + ".csv");
    }
    if (cfg.write_vtk) {
        std::vector<PointScalar> extra;
        if (kernel) {
            std::vector<Vec<D>> all(interior.positions);
            all.insert(all.end(), boundary.positions.begin(), boundary.positions.end());
            std::vector<double> m(interior.masses);
            m.insert(m.end(), boundary.masses.begin(), boundary.masses.end());
            extra.push_back({"density", density_summation<D>(all, m, *kernel)});
            if (cloud) {
                const CloudInterpolator<D> interp(*cloud, *kernel);
                std::vector<double> phi;
                for (const auto& x : all) {
                    const auto s = interp(x);
                    phi.push_back(s.status == ShepardStatus::empty_support ? std::nan("") : s.phi);
                }
                extra.push_back({"phi", std::move(phi)});
            }
        }
        write_particles_vtk<D>(base + ".vtk", sets, extra);
        written.push_back(base + ".vtk");
    }
    return written;
}

template <int D>
std::vector<std::string> export_cloud(const PipelineConfig& cfg, const SignedDistanceCloud<D>& cloud) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    const auto base = (fs::path(cfg.output_dir) / cfg.prefix).string() + "_sdf";
    std::vector<std::string> written;
    if (cfg.write_csv) {
        write_cloud_csv(base + ".csv", cloud);
        written.push_back(base + ".csv");
    }
    if (cfg.write_vtk) {
        write_cloud_vtk(base + ".vtk", cloud);
        written.push_back(base + ".vtk");
    }
    return written;
}

/// Packs a sampled body and writes particles, energy history and the quality report.
template <int D>
void pack_and_export(PipelineResult<D>& r, const PipelineConfig& cfg, SampledBody<D> body,
                     const IterationCallback& on_iteration) {
    auto& t = r.timings;
    r.geometry = std::move(body.geometry);
    r.coincident_removed = body.coincident_removed;
    const PackingConfig pc = cfg.packing();
    r.state.emplace(make_packing_state(std::move(body.interior), std::move(body.boundary), std::move(body.cloud), pc));
    auto& state = *r.state;
    r.initial_quality = detail::run_stage("initial_metrics", t, [&] { return quality_report(state, ConvergenceReport{}, cfg.rho_0); });
    r.convergence = detail::run_stage("pack", t, [&] { return pack(state, pc, on_iteration); });
    r.quality = detail::run_stage("metrics", t, [&] { return quality_report(state, r.convergence, cfg.rho_0); });

    detail::run_stage("export", t, [&] {
        namespace fs = std::filesystem;
        const auto base = (fs::path(cfg.output_dir) / cfg.prefix).string();
        for (auto& f : export_particles<D>(cfg, "_particles", state.interior, state.boundary, &state.cloud, &state.kernel))
            r.artifacts.push_back(std::move(f));
        if (cfg.write_cloud)
            for (auto& f : export_cloud(cfg, state.cloud)) r.artifacts.push_back(std::move(f));
        write_energy_csv(base + "_energy.csv", r.convergence.records);
        r.artifacts.push_back(base + "_energy.csv");

        nlohmann::json report = to_json(r.quality);
        report["initial"] = to_json(r.initial_quality);
        report["plateau_reached"] = r.convergence.plateau_reached;
        report["projected_interior"] = r.convergence.projected_interior;
        report["projected_boundary"] = r.convergence.projected_boundary;
        report["zero_normal_events"] = r.convergence.zero_normal_events;
        report["rejected_steps"] = r.convergence.rejected_steps;
        report["coincident_removed"] = r.coincident_removed;
        report["warnings"] = r.diagnostics.warnings;
        report["config"] = to_json(cfg);
        nlohmann::json times = nlohmann::json::object();
        for (const auto& st : r.timings) times[st.stage] = st.seconds;
        report["stage_seconds"] = times;
        write_json(base + "_quality.json", report);
        r.artifacts.push_back(base + "_quality.json");
    });
}

/// load -> face grid -> SDF -> boundary -> hierarchy -> interior -> pack -> metrics -> export.
template <int D>
PipelineResult<D> run_pipeline(const PipelineConfig& cfg, const IterationCallback& on_iteration = {}) {
    PipelineResult<D> r;
    auto body = sample_body<D>(cfg, r.diagnostics, r.timings);
    pack_and_export(r, cfg, std::move(body), on_iteration);
    return r;
}

/// Packs previously exported particles; the distance cloud is rebuilt from the geometry.
template <int D>
PipelineResult<D> run_pack(const PipelineConfig& cfg, const std::string& particles_csv,
                           const IterationCallback& on_iteration = {}) {
    PipelineResult<D> r;
    auto& t = r.timings;
    detail::run_stage("config", t, [&] { cfg.validate(); });
    SampledBody<D> b;
    b.geometry = detail::run_stage("load_geometry", t, [&] { return load_geometries<D>(cfg, &r.diagnostics); });
    const double band = cfg.effective_band_radius();
    auto grid = detail::run_stage("build_face_grid", t, [&] { return build_face_grid(b.geometry, band); });
    b.cloud = detail::run_stage("build_sdf", t, [&] { return build_sdf(b.geometry, grid, cfg.spacing, band); });
    detail::run_stage("load_particles", t, [&] {
        auto sets = particle_sets_from_records<D>(read_particles_csv<D>(particles_csv), cfg.spacing);
        if (sets.first.empty()) throw Error("'" + particles_csv + "' contains no interior particles");
        b.interior = std::move(sets.first);
        b.boundary = std::move(sets.second);
    });
    pack_and_export(r, cfg, std::move(b), on_iteration);
    return r;
}

}  // namespace bodyfit

#endif  // BODYFIT_PIPELINE_HPP
