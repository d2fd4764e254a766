#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maxwell/vec3.hpp"

namespace maxwell {

using Index = std::size_t;
inline constexpr Index kNoIndex = std::numeric_limits<Index>::max();

using Cell = std::array<Index, 4>;
using Edge = std::array<Index, 2>;
using Face = std::array<Index, 3>;

/// Local edge numbering of a tetrahedron: pairs of local vertex slots.
inline constexpr std::array<std::array<int, 2>, 6> kLocalEdges{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// Local face i is the face opposite local vertex i.
inline constexpr std::array<std::array<int, 3>, 4> kLocalFaces{
    {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}}};

/// Derived connectivity of a tetrahedral cell complex.
///
/// Edges are sorted vertex pairs and faces sorted vertex triples, both in
/// ascending lexicographic order; an edge points from its lower to its higher
/// vertex and a face is oriented by the cyclic order of its ascending triple.
struct Topology {
  std::vector<Edge> edges;
  std::vector<Face> faces;
  /// One or two adjacent cells per face; the second slot is kNoIndex on the boundary.
  std::vector<std::array<Index, 2>> face_cells;
  std::vector<std::array<Index, 6>> cell_edges;  // indexed by kLocalEdges
  std::vector<std::array<Index, 4>> cell_faces;  // indexed by kLocalFaces
  std::vector<bool> boundary_edge;
  std::vector<bool> boundary_face;
  std::vector<bool> boundary_vertex;
};

/// Pure function of its inputs: identical cells give identical orderings.
/// Throws InvalidArgument on out-of-range indices, repeated vertices within a
/// cell, duplicate cells, or faces shared by more than two cells.
Topology build_topology(std::span<const Cell> cells, std::size_t vertex_count);

struct Box {
  Vec3 lower{0.0, 0.0, 0.0};
  Vec3 upper{1.0, 1.0, 1.0};
};

/// Conforming tetrahedral mesh. Immutable once constructed.
///
/// Cells are stored positively oriented: det[v1-v0, v2-v0, v3-v0] > 0. Input
/// cells with negative orientation get their last two vertices swapped.
class TetMesh {
 public:
  /// Throws InvalidArgument for degenerate cells (|volume| < 1e-14 h^3) and
  /// any error reported by build_topology.
  TetMesh(std::vector<Vec3> vertices, std::vector<Cell> cells);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return topo_.edges.size(); }
  std::size_t num_faces() const { return topo_.faces.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Edge>& edges() const { return topo_.edges; }
  const std::vector<Face>& faces() const { return topo_.faces; }
  const std::vector<std::array<Index, 2>>& face_cells() const { return topo_.face_cells; }
  const std::array<Index, 6>& cell_edges(Index c) const { return topo_.cell_edges[c]; }
  const std::array<Index, 4>& cell_faces(Index c) const { return topo_.cell_faces[c]; }

  bool is_boundary_edge(Index e) const { return topo_.boundary_edge[e]; }
  bool is_boundary_face(Index f) const { return topo_.boundary_face[f]; }
  bool is_boundary_vertex(Index v) const { return topo_.boundary_vertex[v]; }

  std::array<Vec3, 4> cell_points(Index c) const;
  double cell_volume(Index c) const;
  double total_volume() const;

  /// V - E + F - C; equals 1 for a triangulated ball.
  long long euler_characteristic() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<Cell> cells_;
  Topology topo_;
};

/// Kuhn subdivision of `box` into n^3 sub-cubes of 6 tetrahedra each, all
/// sharing the sub-cube diagonal from its lower to its upper corner.
TetMesh generate_box_mesh(std::size_t n, const Box& box = {});

/// Max over cells of the largest vertex-to-vertex distance.
double mesh_size(const TetMesh& mesh);

/// Mesh file format:
///   tetmesh 1
///   vertices N
///   x y z            (N lines)
///   cells M
///   a b c d          (M lines, 0-based)
/// Lines starting with '#' and blank lines are ignored.
TetMesh read_mesh(std::string_view text);
std::string write_mesh(const TetMesh& mesh);

}  // namespace maxwell
