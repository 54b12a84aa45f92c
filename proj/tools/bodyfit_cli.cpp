// bodyfit: body-fitted particle sampling and packing from the command line.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bodyfit/bodyfit.hpp"

using namespace bodyfit;

namespace {

/// Flags that override values of a JSON config. std::optional marks "not given".
struct Overrides {
    std::string config_path;
    std::vector<std::string> geometry;
    std::string shape;
    std::optional<double> shape_size;
    std::optional<std::size_t> shape_resolution;
    std::optional<double> spacing;
    std::optional<double> winding_threshold;
    std::optional<double> boundary_layers;
    std::optional<double> smoothing_length_factor;
    std::optional<double> band_radius;
    std::optional<std::size_t> leaf_capacity;
    std::optional<double> rho_0;
    std::optional<double> background_pressure;
    std::optional<double> abs_tolerance;
    std::optional<double> rel_tolerance;
    std::string integrator;
    std::optional<std::size_t> max_iterations;
    std::string placement;
    bool plateau = false;
    std::string output_dir;
    std::string prefix;
    std::vector<std::string> formats;
    bool write_cloud = false;
    int threads = 0;
};

void add_geometry_options(CLI::App* app, Overrides& o) {
    app->add_option("-c,--config", o.config_path, "JSON configuration file");
    app->add_option("-g,--geometry", o.geometry, "Geometry file (STL or polygon CSV); repeat for several bodies");
    app->add_option("--shape", o.shape, "Built-in shape instead of a file")
        ->check(CLI::IsMember({"circle", "rectangle", "naca", "icosphere", "uv_sphere", "box"}));
    app->add_option("--shape-size", o.shape_size, "Radius, chord or half edge of the built-in shape");
    app->add_option("--shape-resolution", o.shape_resolution, "Segments, sphere level or longitudes");
    app->add_option("--spacing,--dx", o.spacing, "Particle spacing");
    app->add_option("--winding-threshold", o.winding_threshold, "Inside test threshold on |w| in (0, 1]");
    app->add_option("--boundary-layers", o.boundary_layers, "Boundary thickness in particle spacings (0 disables)");
    app->add_option("--smoothing-factor", o.smoothing_length_factor, "Smoothing length over spacing");
    app->add_option("--band-radius", o.band_radius, "Absolute narrow band radius of the distance cloud");
    app->add_option("--leaf-capacity", o.leaf_capacity, "Faces per leaf of the winding hierarchy");
    app->add_option("--rho0", o.rho_0, "Reference density");
    app->add_option("-o,--output-dir", o.output_dir, "Output directory");
    app->add_option("--prefix", o.prefix, "Output file prefix");
    app->add_option("--format", o.formats, "Particle output formats")->check(CLI::IsMember({"csv", "vtk"}));
    app->add_option("--threads", o.threads, "Worker threads (overrides BODYFIT_NUM_THREADS)");
}

void add_packing_options(CLI::App* app, Overrides& o) {
    app->add_option("--background-pressure", o.background_pressure, "Background pressure");
    app->add_option("--atol", o.abs_tolerance, "Absolute tolerance of the time integrator");
    app->add_option("--rtol", o.rel_tolerance, "Relative tolerance of the time integrator");
    app->add_option("--integrator", o.integrator, "Runge-Kutta pair")->check(CLI::IsMember({"bs32", "dp54"}));
    app->add_option("--max-iterations", o.max_iterations, "Packing iterations");
    app->add_option("--placement", o.placement, "Surface placement")->check(CLI::IsMember({"midpoint", "on_surface"}));
    app->add_flag("--plateau", o.plateau, "Stop once the kinetic energy plateaus");
    app->add_flag("--write-cloud", o.write_cloud, "Also export the signed distance cloud");
}

PipelineConfig resolve(const Overrides& o) {
    PipelineConfig cfg;
    if (!o.config_path.empty()) cfg = load_config(o.config_path);
    if (!o.geometry.empty()) {
        cfg.geometries.clear();
        for (const auto& p : o.geometry) {
            GeometrySource s;
            s.path = p;
            cfg.geometries.push_back(s);
        }
    }
    if (!o.shape.empty()) {
        GeometrySource s;
        s.shape = o.shape;
        cfg.geometries = {s};
    }
    for (auto& s : cfg.geometries) {
        if (s.shape.empty()) continue;
        if (o.shape_size) s.size = *o.shape_size;
        if (o.shape_resolution) s.resolution = *o.shape_resolution;
    }
    auto set = [](auto& field, const auto& value) {
        if (value) field = *value;
    };
    set(cfg.spacing, o.spacing);
    set(cfg.winding_threshold, o.winding_threshold);
    set(cfg.boundary_layers, o.boundary_layers);
    set(cfg.smoothing_length_factor, o.smoothing_length_factor);
    if (o.band_radius) cfg.band_radius = o.band_radius;
    set(cfg.leaf_capacity, o.leaf_capacity);
    set(cfg.rho_0, o.rho_0);
    set(cfg.background_pressure, o.background_pressure);
    set(cfg.abs_tolerance, o.abs_tolerance);
    set(cfg.rel_tolerance, o.rel_tolerance);
    if (!o.integrator.empty()) cfg.scheme = parse_scheme(o.integrator);
    set(cfg.max_iterations, o.max_iterations);
    if (!o.placement.empty()) cfg.placement = parse_placement(o.placement);
    if (o.plateau) cfg.terminate_on_energy_plateau = true;
    if (!o.output_dir.empty()) cfg.output_dir = o.output_dir;
    if (!o.prefix.empty()) cfg.prefix = o.prefix;
    if (!o.formats.empty()) {
        cfg.write_csv = cfg.write_vtk = false;
        for (const auto& f : o.formats) (f == "csv" ? cfg.write_csv : cfg.write_vtk) = true;
    }
    if (o.write_cloud) cfg.write_cloud = true;
    return cfg;
}

int dimension_of(const PipelineConfig& cfg) {
    if (cfg.geometries.empty()) throw StageError("config", "no geometry given");
    try {
        return cfg.geometries.front().dimension();
    } catch (const std::exception& e) {
        throw StageError("load_geometry", e.what());
    }
}

template <typename F>
auto dispatch(const PipelineConfig& cfg, F&& f) {
    return dimension_of(cfg) == 2 ? f(std::integral_constant<int, 2>{}) : f(std::integral_constant<int, 3>{});
}

void print_warnings(const Diagnostics& d) {
    for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
}

void print_artifacts(const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << "wrote " << f << '\n';
}

template <int D>
void print_summary(const PipelineResult<D>& r) {
    const auto& q = r.quality;
    std::printf("interior %zu  boundary %zu  iterations %zu\n", q.interior_count, q.boundary_count, q.iterations);
    std::printf("E_kin %.6e  E_kin_n %.6e  L2 %.6e  L_inf %.6e  (initial L2 %.6e)\n", q.e_kin, q.e_kin_n, q.l2,
                q.l_inf, r.initial_quality.l2);
}

int run_sample(const PipelineConfig& cfg) {
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) {
        Diagnostics diag;
        std::vector<StageTime> t;
        auto body = sample_body<D>(cfg, diag, t);
        print_warnings(diag);
        const QuinticKernel<D> kernel(cfg.smoothing_length());
        auto files = detail::run_stage("export", t, [&] {
            return export_particles<D>(cfg, "_sampled", body.interior, body.boundary, &body.cloud, &kernel);
        });
        std::printf("interior %zu  boundary %zu  coincident removed %zu\n", body.interior.size(), body.boundary.size(),
                    body.coincident_removed);
        print_artifacts(files);
        return 0;
    });
}

int run_sdf(const PipelineConfig& cfg) {
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) {
        Diagnostics diag;
        std::vector<StageTime> t;
        detail::run_stage("config", t, [&] { cfg.validate(); });
        const auto g = detail::run_stage("load_geometry", t, [&] { return load_geometries<D>(cfg, &diag); });
        print_warnings(diag);
        const double band = cfg.effective_band_radius();
        const auto grid = detail::run_stage("build_face_grid", t, [&] { return build_face_grid(g, band); });
        const auto cloud = detail::run_stage("build_sdf", t, [&] { return build_sdf(g, grid, cfg.spacing, band); });
        const auto files = detail::run_stage("export", t, [&] { return export_cloud(cfg, cloud); });
        std::printf("faces %zu  cells %zu  cloud points %zu  band %.6g\n", g.face_count(), grid.cell_count(),
                    cloud.size(), band);
        print_artifacts(files);
        return 0;
    });
}

template <int D>
int finish_packing(const PipelineResult<D>& r) {
    print_warnings(r.diagnostics);
    print_summary(r);
    print_artifacts(r.artifacts);
    return 0;
}

int run_full(const PipelineConfig& cfg) {
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) { return finish_packing(run_pipeline<D>(cfg)); });
}

int run_pack_cmd(const PipelineConfig& cfg, const std::string& particles) {
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) { return finish_packing(run_pack<D>(cfg, particles)); });
}

int run_segment(const PipelineConfig& cfg, const std::string& particles, const std::string& out_path) {
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) {
        Diagnostics diag;
        std::vector<StageTime> t;
        const auto g = detail::run_stage("load_geometry", t, [&] { return load_geometries<D>(cfg, &diag); });
        print_warnings(diag);
        const auto records = detail::run_stage("load_particles", t, [&] { return read_particles_csv<D>(particles); });
        const auto tree = detail::run_stage("build_hierarchy", t, [&] { return build_hierarchy(g, cfg.leaf_capacity); });
        std::vector<char> keep(records.size(), 0);
        detail::run_stage("segment", t, [&] {
            parallel_for(records.size(), [&](std::size_t i) { keep[i] = is_inside(records[i].position, tree, cfg.winding_threshold); });
        });
        ParticleSet<D> inside = ParticleSet<D>::at_rest({}, 0.0, cfg.spacing, ParticleRole::interior);
        ParticleSet<D> inside_boundary = ParticleSet<D>::at_rest({}, 0.0, cfg.spacing, ParticleRole::boundary);
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (!keep[i]) continue;
            auto& s = records[i].role == ParticleRole::interior ? inside : inside_boundary;
            s.positions.push_back(records[i].position);
            s.masses.push_back(records[i].mass);
        }
        detail::run_stage("export", t,
                          [&] { write_particles_csv<D>(out_path, {&inside, &inside_boundary}); });
        std::printf("kept %zu of %zu particles\n", inside.size() + inside_boundary.size(), records.size());
        print_artifacts({out_path});
        return 0;
    });
}

/// Wall time of f() in seconds.
template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct BenchOptions {
    int repeats = 3;
    std::vector<double> spacing_fractions{1.0 / 25, 1.0 / 50, 1.0 / 100};
    bool brute_force = true;
    std::string csv;
};

int run_bench(const PipelineConfig& cfg, const BenchOptions& b) {
    if (b.repeats < 3) throw StageError("config", "bench needs at least 3 repeats");
    return dispatch(cfg, [&]<int D>(std::integral_constant<int, D>) {
        Diagnostics diag;
        Geometry<D> g;
        const double load = timed([&] { g = load_geometries<D>(cfg, &diag); });
        print_warnings(diag);
        const auto box = geometry_aabb(g);
        double length = 0.0;
        for (int i = 0; i < D; ++i) length = std::max(length, box.max_corner[i] - box.min_corner[i]);

        const std::string path = b.csv.empty() ? (std::filesystem::path(cfg.output_dir) / (cfg.prefix + "_bench.csv")).string() : b.csv;
        if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) std::filesystem::create_directories(dir);
        std::ofstream out(path);
        if (!out) throw StageError("export", "cannot open '" + path + "'");
        out << "faces,spacing,repeat,stage,seconds,count\n";
        auto row = [&](double dx, int rep, const char* stage, double s, std::size_t count) {
            out << g.face_count() << ',' << detail::format_double(dx) << ',' << rep << ',' << stage << ','
                << detail::format_double(s) << ',' << count << '\n';
        };
        row(0.0, 0, "load_geometry", load, g.face_count());

        for (double frac : b.spacing_fractions) {
            const double dx = frac * length;
            PipelineConfig c = cfg;
            c.spacing = dx;
            const double band = c.effective_band_radius();
            double grid_best = 1e300, brute_best = 1e300;
            for (int rep = 0; rep < b.repeats; ++rep) {
                std::optional<FaceGrid<D>> grid;
                const double tg = timed([&] { grid.emplace(g, band); });
                row(dx, rep, "build_face_grid", tg, grid->cell_count());
                SignedDistanceCloud<D> cloud;
                const double ts = timed([&] { cloud = build_sdf(g, *grid, dx, band); });
                row(dx, rep, "build_sdf", ts, cloud.size());
                grid_best = std::min(grid_best, tg + ts);
                if (b.brute_force) {
                    SignedDistanceCloud<D> brute;
                    const double tb = timed([&] { brute = build_sdf_brute_force(g, *grid, dx, band); });
                    row(dx, rep, "build_sdf_brute_force", tb, brute.size());
                    brute_best = std::min(brute_best, tb);
                    if (brute.phi != cloud.phi) throw StageError("bench", "grid and brute-force distances differ");
                }
                std::optional<WindingHierarchy<D>> tree;
                const double th = timed([&] { tree.emplace(g, c.leaf_capacity); });
                row(dx, rep, "build_hierarchy", th, tree->nodes().size());
                ParticleSet<D> interior;
                const double ti = timed([&] { interior = sample_interior(g, *tree, dx, c.winding_threshold, c.rho_0); });
                row(dx, rep, "sample_interior", ti, interior.size());
            }
            std::printf("dx %.6g  sdf with grid %.4fs", dx, grid_best);
            if (b.brute_force) std::printf("  brute force %.4fs  speedup %.1fx", brute_best, brute_best / grid_best);
            std::printf("\n");
        }
        out.flush();
        if (!out) throw StageError("export", "write to '" + path + "' failed");
        print_artifacts({path});
        return 0;
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Body-fitted particle sampling and packing"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "bodyfit 1.0");

    Overrides o;
    std::string particles, segment_out;
    BenchOptions bench;

    auto* sample = app.add_subcommand("sample", "Sample interior and boundary particles on the lattice");
    auto* sdf = app.add_subcommand("sdf", "Build and export the narrow-band signed distance cloud");
    auto* pack_cmd = app.add_subcommand("pack", "Pack particles from a CSV export against a geometry");
    auto* pipeline = app.add_subcommand("pipeline", "Sample, pack, evaluate and export");
    auto* bench_cmd = app.add_subcommand("bench", "Time the preprocessing stages over a spacing sweep");
    auto* segment = app.add_subcommand("segment", "Keep the particles of a CSV export that lie inside a geometry");

    for (auto* c : {sample, sdf, pack_cmd, pipeline, bench_cmd, segment}) add_geometry_options(c, o);
    for (auto* c : {pack_cmd, pipeline}) add_packing_options(c, o);
    pack_cmd->add_option("-p,--particles", particles, "Particle CSV to pack")->required()->check(CLI::ExistingFile);
    segment->add_option("-p,--particles", particles, "Particle CSV to filter")->required()->check(CLI::ExistingFile);
    segment->add_option("--out", segment_out, "Output CSV")->required();
    bench_cmd->add_option("--repeats", bench.repeats, "Repetitions per configuration (at least 3)");
    bench_cmd->add_option("--fractions", bench.spacing_fractions, "Spacings as fractions of the largest extent");
    bench_cmd->add_option("--csv", bench.csv, "Timing CSV path (default <output-dir>/<prefix>_bench.csv)");
    bench_cmd->add_flag("!--no-brute-force", bench.brute_force, "Skip the brute-force distance timing");

    CLI11_PARSE(app, argc, argv);

    set_thread_count_from_env();
    if (o.threads > 0) set_thread_count(o.threads);

    try {
        PipelineConfig cfg = resolve(o);
        // Spacing is only needed by the particle stages; bench and segment supply their own.
        if (bench_cmd->parsed() && !(cfg.spacing > 0.0)) cfg.spacing = 1.0;
        if (segment->parsed() && !(cfg.spacing > 0.0)) cfg.spacing = 1.0;
        if (sample->parsed()) return run_sample(cfg);
        if (sdf->parsed()) return run_sdf(cfg);
        if (pack_cmd->parsed()) return run_pack_cmd(cfg, particles);
        if (pipeline->parsed()) return run_full(cfg);
        if (bench_cmd->parsed()) return run_bench(cfg, bench);
        if (segment->parsed()) return run_segment(cfg, particles, segment_out);
    } catch (const StageError& e) {
        std::cerr << "bodyfit: stage " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bodyfit: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
