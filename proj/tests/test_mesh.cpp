#include "doctest.h"

#include <cmath>

#include "maxwell/error.hpp"
#include "maxwell/mesh.hpp"

using namespace maxwell;

namespace {

const char* kRefTet =
    "tetmesh 1\n"
    "# reference tetrahedron\n"
    "vertices 4\n"
    "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
    "cells 1\n"
    "0 1 2 3\n";

TetMesh two_tets() {
  // Bipyramid: two tetrahedra glued along the face (0, 1, 2).
  return TetMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.3, 0.3, -1}}, {{0, 1, 2, 3}, {0, 1, 2, 4}});
}

}  // namespace

TEST_CASE("box mesh entity counts") {
  // Kuhn split of one cube: 12 cube edges + 6 face diagonals + 1 body diagonal.
  const TetMesh m1 = generate_box_mesh(1);
  CHECK(m1.num_vertices() == 8);
  CHECK(m1.num_cells() == 6);
  CHECK(m1.num_edges() == 19);
  CHECK(m1.num_faces() == 18);
  CHECK(m1.euler_characteristic() == 1);

  const TetMesh m2 = generate_box_mesh(2);
  CHECK(m2.num_vertices() == 27);
  CHECK(m2.num_cells() == 48);
  CHECK(generate_box_mesh(3).euler_characteristic() == 1);
}

TEST_CASE("box mesh cells are positively oriented and fill the box") {
  for (std::size_t n : {1u, 2u, 3u}) {
    const Box box{{-1.0, 0.5, 2.0}, {2.0, 1.5, 2.25}};
    const TetMesh m = generate_box_mesh(n, box);
    for (std::size_t c = 0; c < m.num_cells(); ++c) CHECK(m.cell_volume(c) > 0.0);
    CHECK(std::abs(m.total_volume() - 0.75) <= 1e-13 * 0.75);
  }
}

TEST_CASE("box mesh rejects bad arguments") {
  CHECK_THROWS_AS(generate_box_mesh(0), InvalidArgument);
  CHECK_THROWS_AS(generate_box_mesh(2, Box{{0, 0, 0}, {1, 0, 1}}), InvalidArgument);
}

TEST_CASE("mesh size") {
  CHECK(mesh_size(read_mesh(kRefTet)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(mesh_size(generate_box_mesh(1)) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(mesh_size(generate_box_mesh(2)) == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
  CHECK(mesh_size(generate_box_mesh(8)) == doctest::Approx(mesh_size(generate_box_mesh(4)) / 2).epsilon(1e-15));
}

TEST_CASE("topology of a single tetrahedron") {
  const TetMesh m = read_mesh(kRefTet);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_edges() == 6);
  CHECK(m.num_faces() == 4);
  CHECK(m.num_cells() == 1);
  for (std::size_t f = 0; f < 4; ++f) CHECK(m.is_boundary_face(f));
  for (std::size_t e = 0; e < 6; ++e) CHECK(m.is_boundary_edge(e));
}

TEST_CASE("topology of two tetrahedra sharing a face") {
  const TetMesh m = two_tets();
  CHECK(m.num_edges() == 9);
  CHECK(m.num_faces() == 7);
  int interior = 0;
  for (std::size_t f = 0; f < m.num_faces(); ++f) interior += m.is_boundary_face(f) ? 0 : 1;
  CHECK(interior == 1);
  CHECK(m.euler_characteristic() == 1);
}

TEST_CASE("build_topology ordering and determinism") {
  const TetMesh m = generate_box_mesh(2);
  for (std::size_t e = 1; e < m.num_edges(); ++e) CHECK(m.edges()[e - 1] < m.edges()[e]);
  for (std::size_t f = 1; f < m.num_faces(); ++f) CHECK(m.faces()[f - 1] < m.faces()[f]);
  const Topology a = build_topology(m.cells(), m.num_vertices());
  const Topology b = build_topology(m.cells(), m.num_vertices());
  CHECK(a.edges == b.edges);
  CHECK(a.faces == b.faces);
  CHECK(a.face_cells == b.face_cells);
  CHECK(a.cell_edges == b.cell_edges);
  // A face is on the boundary iff it has one adjacent cell.
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    CHECK(m.is_boundary_face(f) == (m.face_cells()[f][1] == kNoIndex));
  }
}

TEST_CASE("build_topology errors") {
  const std::vector<Cell> repeated{{0, 1, 1, 2}};
  CHECK_THROWS_AS(build_topology(repeated, 4), InvalidArgument);
  const std::vector<Cell> duplicate{{0, 1, 2, 3}, {3, 2, 1, 0}};
  CHECK_THROWS_AS(build_topology(duplicate, 4), InvalidArgument);
  const std::vector<Cell> out_of_range{{0, 1, 2, 7}};
  CHECK_THROWS_AS(build_topology(out_of_range, 4), InvalidArgument);
}

TEST_CASE("negatively oriented input cells are reordered") {
  const TetMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {{0, 2, 1, 3}});
  CHECK(m.cell_volume(0) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("read_mesh errors carry line numbers") {
  const std::string bad_index = "tetmesh 1\nvertices 4\n0 0 0\n1 0 0\n0 1 0\n0 0 1\ncells 1\n0 1 2 5\n";
  try {
    read_mesh(bad_index);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 8);
    CHECK(std::string(e.what()).find("out of range") != std::string::npos);
  }
  CHECK_THROWS_AS(read_mesh("tetmesh 2\nvertices 0\ncells 0\n"), ParseError);
  CHECK_THROWS_AS(read_mesh("tetmesh 1\nvertices 1\n0 0\ncells 0\n"), ParseError);
  CHECK_THROWS_AS(read_mesh(std::string(kRefTet) + "extra\n"), ParseError);
  CHECK_THROWS_AS(read_mesh("tetmesh 1\nvertices 4\n0 0 0\n1 0 0\n2 0 0\n0 0 1\ncells 1\n0 1 2 3\n"), ParseError);
}

TEST_CASE("write then read reproduces the mesh") {
  const TetMesh m = generate_box_mesh(2);
  const TetMesh r = read_mesh(write_mesh(m));
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.num_edges() == m.num_edges());
  CHECK(r.num_faces() == m.num_faces());
  CHECK(r.num_cells() == m.num_cells());
  CHECK(r.vertices() == m.vertices());
  CHECK(r.cells() == m.cells());
}
