#ifndef BODYFIT_IO_HPP
#define BODYFIT_IO_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bodyfit/error.hpp"
#include "bodyfit/geometry.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/packing.hpp"
#include "bodyfit/sampling.hpp"

namespace bodyfit {

enum class ParticleFormat { csv, vtk_legacy };

inline ParticleFormat parse_particle_format(std::string_view s) {
    if (s == "csv") return ParticleFormat::csv;
    if (s == "vtk" || s == "vtk_legacy") return ParticleFormat::vtk_legacy;
    throw Error("unknown particle format '" + std::string(s) + "' (expected csv or vtk)");
}

namespace detail {

/// Shortest text that round-trips the double exactly.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline void check_written(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw Error("write to '" + path + "' failed");
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, sep)) out.emplace_back(trim(cur));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace detail

/// Particle as read back from an export.
template <int D>
struct ParticleRecord {
    Vec<D> position;
    double mass = 0.0;
    ParticleRole role = ParticleRole::interior;
};

/// CSV with columns x[,y[,z]],mass,role.
template <int D>
void write_particles_csv(const std::string& path, const std::vector<const ParticleSet<D>*>& sets) {
    auto out = detail::open_output(path);
    static constexpr const char* axes[] = {"x", "y", "z"};
    for (int i = 0; i < D; ++i) out << axes[i] << ',';
    out << "mass,role\n";
    for (const auto* s : sets)
        for (std::size_t i = 0; i < s->size(); ++i) {
            for (int c = 0; c < D; ++c) out << detail::format_double(s->positions[i][c]) << ',';
            out << detail::format_double(s->masses[i]) << ',' << role_name(s->role) << '\n';
        }
    detail::check_written(out, path);
}

template <int D>
std::vector<ParticleRecord<D>> read_particles_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty particle file");
    const auto header = detail::split(std::string(detail::trim(line)), ',');
    if (header.size() != static_cast<std::size_t>(D) + 2 || header[static_cast<std::size_t>(D)] != "mass" ||
        header.back() != "role")
        throw ParseError(path + ": header does not match a " + std::to_string(D) + "D particle file");
    std::vector<ParticleRecord<D>> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cols = detail::split(std::string(detail::trim(line)), ',');
        if (cols.size() != header.size()) throw ParseError(path + ":" + std::to_string(line_no) + ": wrong column count");
        ParticleRecord<D> r;
        const std::string where = path + ":" + std::to_string(line_no);
        for (int c = 0; c < D; ++c) r.position[c] = detail::parse_double(cols[static_cast<std::size_t>(c)], where);
        r.mass = detail::parse_double(cols[static_cast<std::size_t>(D)], where);
        if (cols.back() == "interior") r.role = ParticleRole::interior;
        else if (cols.back() == "boundary") r.role = ParticleRole::boundary;
        else throw ParseError(path + ":" + std::to_string(line_no) + ": unknown role '" + cols.back() + "'");
        out.push_back(r);
    }
    return out;
}

/// Optional per-particle scalar written alongside mass and role.
struct PointScalar {
    std::string name;
    std::vector<double> values;
};

/// Legacy ASCII VTK polydata with one vertex cell per particle.
template <int D>
void write_particles_vtk(const std::string& path, const std::vector<const ParticleSet<D>*>& sets,
                         const std::vector<PointScalar>& extra = {}) {
    std::size_t n = 0;
    for (const auto* s : sets) n += s->size();
    for (const auto& e : extra)
        if (e.values.size() != n) throw Error("point scalar '" + e.name + "' has the wrong length");
    auto out = detail::open_output(path);
    out << "# vtk DataFile Version 3.0\nbodyfit particles\nASCII\nDATASET POLYDATA\n";
    out << "POINTS " << n << " double\n";
    for (const auto* s : sets)
        for (const auto& x : s->positions) {
            for (int c = 0; c < 3; ++c) out << (c ? " " : "") << (c < D ? detail::format_double(x[c]) : "0");
            out << '\n';
        }
    out << "VERTICES " << n << ' ' << 2 * n << '\n';
    for (std::size_t i = 0; i < n; ++i) out << "1 " << i << '\n';
    out << "POINT_DATA " << n << "\nSCALARS mass double 1\nLOOKUP_TABLE default\n";
    for (const auto* s : sets)
        for (double m : s->masses) out << detail::format_double(m) << '\n';
    out << "SCALARS role int 1\nLOOKUP_TABLE default\n";
    for (const auto* s : sets)
        for (std::size_t i = 0; i < s->size(); ++i) out << (s->role == ParticleRole::interior ? 0 : 1) << '\n';
    for (const auto& e : extra) {
        out << "SCALARS " << e.name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : e.values) out << detail::format_double(v) << '\n';
    }
    detail::check_written(out, path);
}

/// Points and point scalars of a legacy ASCII VTK file.
struct VtkPointData {
    std::vector<std::array<double, 3>> points;
    std::vector<PointScalar> scalars;

    const PointScalar* scalar(const std::string& name) const {
        for (const auto& s : scalars)
            if (s.name == name) return &s;
        return nullptr;
    }
};

inline VtkPointData read_vtk_points(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("# vtk DataFile", 0) != 0) throw ParseError(path + ": not a legacy VTK file");
    std::getline(in, line);  // title
    std::string word;
    in >> word;
    if (word != "ASCII") throw ParseError(path + ": only ASCII VTK is supported");
    VtkPointData d;
    std::size_t point_data = 0;
    while (in >> word) {
        if (word == "DATASET") {
            in >> word;
        } else if (word == "POINTS") {
            std::size_t n;
            std::string type;
            if (!(in >> n >> type)) throw ParseError(path + ": bad POINTS header");
            d.points.resize(n);
            for (auto& p : d.points)
                if (!(in >> p[0] >> p[1] >> p[2])) throw ParseError(path + ": truncated POINTS block");
        } else if (word == "VERTICES" || word == "CELLS" || word == "LINES" || word == "POLYGONS") {
            std::size_t cells, size;
            if (!(in >> cells >> size)) throw ParseError(path + ": bad cell header");
            for (std::size_t i = 0; i < size; ++i) in >> word;
        } else if (word == "POINT_DATA") {
            in >> point_data;
        } else if (word == "SCALARS") {
            PointScalar s;
            std::string type;
            in >> s.name >> type;
            std::getline(in, line);
            in >> word;
            if (word != "LOOKUP_TABLE") throw ParseError(path + ": SCALARS without LOOKUP_TABLE");
            in >> word;
            s.values.resize(point_data);
            for (auto& v : s.values)
                if (!(in >> v)) throw ParseError(path + ": truncated SCALARS block '" + s.name + "'");
            d.scalars.push_back(std::move(s));
        } else if (word == "VECTORS" || word == "NORMALS") {
            std::string name, type;
            in >> name >> type;
            double v;
            for (std::size_t i = 0; i < 3 * point_data; ++i)
                if (!(in >> v)) throw ParseError(path + ": truncated " + word + " block");
        } else {
            throw ParseError(path + ": unexpected keyword '" + word + "'");
        }
    }
    return d;
}

/// Signed distance cloud as CSV with columns x[,y[,z]],phi,nx[,ny[,nz]].
template <int D>
void write_cloud_csv(const std::string& path, const SignedDistanceCloud<D>& cloud) {
    auto out = detail::open_output(path);
    static constexpr const char* axes[] = {"x", "y", "z"};
    for (int i = 0; i < D; ++i) out << axes[i] << ',';
    out << "phi";
    for (int i = 0; i < D; ++i) out << ",n" << axes[i];
    out << '\n';
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int c = 0; c < D; ++c) out << detail::format_double(cloud.positions[i][c]) << ',';
        out << detail::format_double(cloud.phi[i]);
        for (int c = 0; c < D; ++c) out << ',' << detail::format_double(cloud.normals[i][c]);
        out << '\n';
    }
    detail::check_written(out, path);
}

template <int D>
void write_cloud_vtk(const std::string& path, const SignedDistanceCloud<D>& cloud) {
    auto out = detail::open_output(path);
    const std::size_t n = cloud.size();
    out << "# vtk DataFile Version 3.0\nbodyfit signed distance cloud\nASCII\nDATASET POLYDATA\n";
    out << "POINTS " << n << " double\n";
    for (const auto& x : cloud.positions) {
        for (int c = 0; c < 3; ++c) out << (c ? " " : "") << (c < D ? detail::format_double(x[c]) : "0");
        out << '\n';
    }
    out << "VERTICES " << n << ' ' << 2 * n << '\n';
    for (std::size_t i = 0; i < n; ++i) out << "1 " << i << '\n';
    out << "POINT_DATA " << n << "\nSCALARS phi double 1\nLOOKUP_TABLE default\n";
    for (double p : cloud.phi) out << detail::format_double(p) << '\n';
    out << "VECTORS normal double\n";
    for (const auto& v : cloud.normals) {
        for (int c = 0; c < 3; ++c) out << (c ? " " : "") << (c < D ? detail::format_double(v[c]) : "0");
        out << '\n';
    }
    detail::check_written(out, path);
}

inline void write_energy_csv(const std::string& path, const std::vector<EnergyRecord>& records) {
    auto out = detail::open_output(path);
    out << "iteration,E_kin,E_kin_n,dt,projected_interior,projected_boundary\n";
    for (const auto& r : records)
        out << r.iteration << ',' << detail::format_double(r.e_kin) << ',' << detail::format_double(r.e_kin_n) << ','
            << detail::format_double(r.dt) << ',' << r.projected_interior << ',' << r.projected_boundary << '\n';
    detail::check_written(out, path);
}

inline nlohmann::json to_json(const QualityReport& q) {
    return {{"E_kin", q.e_kin},
            {"E_kin_n", q.e_kin_n},
            {"L2", q.l2},
            {"L_inf", q.l_inf},
            {"deviation_fraction", q.deviation_fraction},
            {"rho_0", q.rho_0},
            {"interior_count", q.interior_count},
            {"boundary_count", q.boundary_count},
            {"iterations", q.iterations}};
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    detail::check_written(out, path);
}

}  // namespace bodyfit

#endif  // BODYFIT_IO_HPP
