#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "maxwell/mesh.hpp"
#include "maxwell/sparse.hpp"
#include "maxwell/vec3.hpp"

namespace maxwell {

/// Per-cell data of the lowest-order Whitney forms.
struct WhitneyCell {
  std::array<Vec3, 4> grad_lambda;  // constant barycentric gradients
  double volume = 0.0;
  /// +1 when local edge (a, b) of kLocalEdges runs from the lower to the higher
  /// global vertex, -1 otherwise.
  std::array<int, 6> edge_sign{};
  /// +1 when the global orientation of local face k points out of the cell.
  std::array<int, 4> face_sign{};
};

/// Lowest-order discrete de Rham complex P1 -> N0 -> RT0 -> Q0 on a mesh.
///
/// The coordinate maps are the incidence matrices
///   grad: G (edges x vertices), row of edge (a, b), a < b: -1 at a, +1 at b
///   curl: C (faces x edges), face (a, b, c): +1 (a,b), +1 (b,c), -1 (a,c)
///   div:  D (cells x faces), +1 where the face orientation points outward
/// so D C = 0 and C G = 0 hold in exact integer arithmetic.
///
/// N_h^0 drops the boundary edges; RT_h keeps every face.
class DeRhamComplex {
 public:
  explicit DeRhamComplex(std::shared_ptr<const TetMesh> mesh);

  const TetMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TetMesh> mesh_ptr() const { return mesh_; }

  std::size_t num_vertices() const { return mesh_->num_vertices(); }
  std::size_t num_edges() const { return mesh_->num_edges(); }
  std::size_t num_faces() const { return mesh_->num_faces(); }
  std::size_t num_cells() const { return mesh_->num_cells(); }
  std::size_t num_interior_edges() const { return interior_edges_.size(); }

  const CsrMatrix& grad() const { return grad_; }
  const CsrMatrix& curl() const { return curl_; }
  const CsrMatrix& div() const { return div_; }
  /// C restricted to interior-edge columns: faces x interior edges.
  const CsrMatrix& curl_interior() const { return curl_interior_; }

  /// Global edge ids spanning N_h^0, ascending.
  const std::vector<Index>& interior_edges() const { return interior_edges_; }
  /// Position in interior_edges(), or kNoIndex for a boundary edge.
  Index interior_edge_slot(Index edge) const { return edge_slot_[edge]; }
  const std::vector<Index>& interior_vertices() const { return interior_vertices_; }
  const std::vector<Index>& boundary_vertices() const { return boundary_vertices_; }

  const WhitneyCell& whitney(Index cell) const { return whitney_[cell]; }

  /// Interior-edge coefficients -> all-edge coefficients (boundary entries 0).
  Vector expand_interior(std::span<const double> interior) const;
  /// All-edge coefficients -> interior-edge coefficients (boundary entries dropped).
  Vector restrict_interior(std::span<const double> all_edges) const;

 private:
  std::shared_ptr<const TetMesh> mesh_;
  CsrMatrix grad_, curl_, div_, curl_interior_;
  std::vector<Index> interior_edges_;
  std::vector<Index> edge_slot_;
  std::vector<Index> interior_vertices_;
  std::vector<Index> boundary_vertices_;
  std::vector<WhitneyCell> whitney_;
};

DeRhamComplex build_complex(TetMesh mesh);
DeRhamComplex build_complex(std::shared_ptr<const TetMesh> mesh);

/// Barycentric coordinates of `point` with respect to `cell`.
std::array<double, 4> barycentric(const DeRhamComplex& complex, Index cell, const Vec3& point);

/// Edge basis w = l_a grad(l_b) - l_b grad(l_a) for the global edge behind local
/// edge `local_edge`, with (a, b) in ascending global order.
/// Throws InvalidArgument if `point` lies outside the cell.
Vec3 whitney_edge_eval(const DeRhamComplex& complex, Index cell, int local_edge, const Vec3& point);
/// Constant curl of the edge basis, 2 grad(l_a) x grad(l_b).
Vec3 whitney_edge_curl(const DeRhamComplex& complex, Index cell, int local_edge);

/// Face basis with unit flux through its global face orientation:
/// sign (x - x_i) / (3 |K|), where i is the local vertex opposite the face.
Vec3 whitney_face_eval(const DeRhamComplex& complex, Index cell, int local_face, const Vec3& point);
/// Constant divergence, sign / |K|.
double whitney_face_div(const DeRhamComplex& complex, Index cell, int local_face);

/// RT0 coordinates of the curl of an N0 field given on all edges: C alpha.
Vector curl_in_rt_coordinates(const DeRhamComplex& complex, std::span<const double> alpha);

/// Pointwise reconstruction from coefficients. N0 coefficients are indexed by
/// interior edge, RT0 coefficients by face.
Vec3 eval_nedelec(const DeRhamComplex& complex, std::span<const double> interior_coeffs, Index cell,
                  const Vec3& point);
Vec3 eval_nedelec_curl(const DeRhamComplex& complex, std::span<const double> interior_coeffs, Index cell);
Vec3 eval_rt(const DeRhamComplex& complex, std::span<const double> face_coeffs, Index cell, const Vec3& point);

}  // namespace maxwell
