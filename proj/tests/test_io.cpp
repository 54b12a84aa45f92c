#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "bodyfit/face_grid.hpp"
#include "bodyfit/io.hpp"
#include "bodyfit/shapes.hpp"
#include "test_support.hpp"

using namespace bodyfit;

namespace {

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(ParticleCsv, ThreeParticlesGiveFourLines) {
    test::ScratchDir dir;
    const auto a = ParticleSet<2>::at_rest({{0.1, 0.2}, {0.3, 0.4}}, 0.01, 0.1, ParticleRole::interior);
    const auto b = ParticleSet<2>::at_rest({{1.5, -2.0}}, 0.02, 0.1, ParticleRole::boundary);
    const auto path = dir.file("p.csv");
    write_particles_csv<2>(path, {&a, &b});
    const auto lines = lines_of(path);
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "x,y,mass,role");
    EXPECT_EQ(lines[3], "1.5,-2,0.02,boundary");
    const auto back = read_particles_csv<2>(path);
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back[0].position, a.positions[0]);
    EXPECT_EQ(back[1].position, a.positions[1]);
    EXPECT_EQ(back[0].role, ParticleRole::interior);
    EXPECT_EQ(back[2].role, ParticleRole::boundary);
    EXPECT_EQ(back[2].mass, 0.02);
}

TEST(ParticleCsv, RoundTripIsExact) {
    test::ScratchDir dir;
    std::vector<Vec3> x{{1.0 / 3.0, -2.0 / 7.0, 1e-17}, {std::nextafter(1.0, 2.0), 123456.789, -0.1}};
    const auto s = ParticleSet<3>::at_rest(x, 1.0 / 3.0, 0.1, ParticleRole::interior);
    write_particles_csv<3>(dir.file("p.csv"), {&s});
    const auto back = read_particles_csv<3>(dir.file("p.csv"));
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back[i].position, x[i]);
        EXPECT_EQ(back[i].mass, 1.0 / 3.0);
    }
}

TEST(ParticleCsv, RejectsMalformedFiles) {
    test::ScratchDir dir;
    test::write_text(dir.file("a.csv"), "x,y,z,mass,role\n0,0,0,1,interior\n");
    EXPECT_THROW(read_particles_csv<2>(dir.file("a.csv")), ParseError);
    test::write_text(dir.file("b.csv"), "x,y,mass,role\n0,0,1,fluid\n");
    EXPECT_THROW(read_particles_csv<2>(dir.file("b.csv")), ParseError);
    test::write_text(dir.file("c.csv"), "x,y,mass,role\n0,abc,1,interior\n");
    EXPECT_THROW(read_particles_csv<2>(dir.file("c.csv")), ParseError);
    test::write_text(dir.file("d.csv"), "");
    EXPECT_THROW(read_particles_csv<2>(dir.file("d.csv")), ParseError);
    EXPECT_THROW(read_particles_csv<2>(dir.file("missing.csv")), Error);
}

TEST(ParticleVtk, RoundTripsPointsAndScalars) {
    test::ScratchDir dir;
    const auto a = ParticleSet<2>::at_rest({{0.5, 0.25}, {1.0, 2.0}, {-1.0, 3.5}}, 0.01, 0.1, ParticleRole::interior);
    const auto b = ParticleSet<2>::at_rest({{4.0, 4.0}}, 0.02, 0.1, ParticleRole::boundary);
    const auto path = dir.file("p.vtk");
    write_particles_vtk<2>(path, {&a, &b}, {{"density", {1.0, 0.99, 1.01, 0.5}}});
    const auto d = read_vtk_points(path);
    ASSERT_EQ(d.points.size(), 4u);
    EXPECT_EQ(d.points[0], (std::array<double, 3>{0.5, 0.25, 0.0}));
    EXPECT_EQ(d.points[3], (std::array<double, 3>{4.0, 4.0, 0.0}));
    ASSERT_NE(d.scalar("mass"), nullptr);
    EXPECT_EQ(d.scalar("mass")->values[3], 0.02);
    ASSERT_NE(d.scalar("role"), nullptr);
    EXPECT_EQ(d.scalar("role")->values, (std::vector<double>{0, 0, 0, 1}));
    ASSERT_NE(d.scalar("density"), nullptr);
    EXPECT_EQ(d.scalar("density")->values[2], 1.01);
    EXPECT_THROW(write_particles_vtk<2>(path, {&a}, {{"bad", {1.0}}}), Error);
}

TEST(CloudExport, CsvAndVtkAgree) {
    test::ScratchDir dir;
    const auto g = shapes::circle(1.0, 64);
    const FaceGrid<2> grid(g, 0.2);
    const auto cloud = build_sdf(g, grid, 0.1, 0.2);
    write_cloud_csv(dir.file("c.csv"), cloud);
    write_cloud_vtk(dir.file("c.vtk"), cloud);
    const auto lines = lines_of(dir.file("c.csv"));
    EXPECT_EQ(lines[0], "x,y,phi,nx,ny");
    EXPECT_EQ(lines.size(), cloud.size() + 1);
    const auto d = read_vtk_points(dir.file("c.vtk"));
    ASSERT_EQ(d.points.size(), cloud.size());
    ASSERT_NE(d.scalar("phi"), nullptr);
    EXPECT_EQ(d.scalar("phi")->values, cloud.phi);
}

TEST(EnergyCsv, HeaderAndRows) {
    test::ScratchDir dir;
    const std::vector<EnergyRecord> rec{{1, 2.5e-4, 1.0, 1e-3, 10, 3}, {2, 1.25e-4, 0.5, 2e-3, 8, 0}};
    write_energy_csv(dir.file("e.csv"), rec);
    const auto lines = lines_of(dir.file("e.csv"));
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "iteration,E_kin,E_kin_n,dt,projected_interior,projected_boundary");
    EXPECT_EQ(lines[2], "2,0.000125,0.5,0.002,8,0");
}

TEST(QualityJson, ContainsAllFields) {
    test::ScratchDir dir;
    QualityReport q;
    q.e_kin = 1e-5;
    q.l2 = 0.01;
    q.l_inf = 0.05;
    q.interior_count = 316;
    write_json(dir.file("q.json"), to_json(q));
    std::ifstream in(dir.file("q.json"));
    const auto j = nlohmann::json::parse(in);
    for (const char* key : {"E_kin", "E_kin_n", "L2", "L_inf", "deviation_fraction", "rho_0", "interior_count",
                            "boundary_count", "iterations"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["interior_count"], 316);
    EXPECT_EQ(j["L_inf"], 0.05);
}

TEST(Output, UnwritablePathThrows) {
    const auto s = ParticleSet<2>::at_rest({{0, 0}}, 1.0, 1.0, ParticleRole::interior);
    EXPECT_THROW(write_particles_csv<2>("/nonexistent_dir/x/p.csv", {&s}), Error);
    EXPECT_THROW(parse_particle_format("ply"), Error);
    EXPECT_EQ(parse_particle_format("vtk"), ParticleFormat::vtk_legacy);
}
