#include "maxwell/derham.hpp"

#include <algorithm>
#include <string>

#include "maxwell/error.hpp"

namespace maxwell {

namespace {

// Parity (+1 even, -1 odd) of the permutation sorting three distinct values.
int sort_parity(Index a, Index b, Index c) {
  int inversions = (a > b) + (a > c) + (b > c);
  return inversions % 2 == 0 ? 1 : -1;
}

Index edge_id(const TetMesh& mesh, Index a, Index b) {
  const Edge key{std::min(a, b), std::max(a, b)};
  const auto& edges = mesh.edges();
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  return static_cast<Index>(it - edges.begin());
}

}  // namespace

DeRhamComplex::DeRhamComplex(std::shared_ptr<const TetMesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_) throw InvalidArgument("DeRhamComplex: null mesh");
  const TetMesh& m = *mesh_;

  std::vector<Triplet> g;
  g.reserve(2 * m.num_edges());
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    g.push_back({e, m.edges()[e][0], -1.0});
    g.push_back({e, m.edges()[e][1], 1.0});
  }
  grad_ = CsrMatrix::from_triplets(m.num_edges(), m.num_vertices(), std::move(g));

  // Boundary of the oriented face [a, b, c] is [b, c] - [a, c] + [a, b].
  std::vector<Triplet> c;
  c.reserve(3 * m.num_faces());
  for (std::size_t f = 0; f < m.num_faces(); ++f) {
    const Face& fv = m.faces()[f];
    c.push_back({f, edge_id(m, fv[0], fv[1]), 1.0});
    c.push_back({f, edge_id(m, fv[1], fv[2]), 1.0});
    c.push_back({f, edge_id(m, fv[0], fv[2]), -1.0});
  }
  curl_ = CsrMatrix::from_triplets(m.num_faces(), m.num_edges(), std::move(c));

  whitney_.resize(m.num_cells());
  std::vector<Triplet> d;
  d.reserve(4 * m.num_cells());
  for (std::size_t k = 0; k < m.num_cells(); ++k) {
    const Cell& cell = m.cells()[k];
    WhitneyCell& w = whitney_[k];
    const auto p = m.cell_points(k);
    const Vec3 e1 = p[1] - p[0], e2 = p[2] - p[0], e3 = p[3] - p[0];
    const double jac = det(e1, e2, e3);
    w.volume = jac / 6.0;
    w.grad_lambda[1] = cross(e2, e3) * (1.0 / jac);
    w.grad_lambda[2] = cross(e3, e1) * (1.0 / jac);
    w.grad_lambda[3] = cross(e1, e2) * (1.0 / jac);
    w.grad_lambda[0] = -(w.grad_lambda[1] + w.grad_lambda[2] + w.grad_lambda[3]);

    for (std::size_t le = 0; le < kLocalEdges.size(); ++le) {
      w.edge_sign[le] = cell[kLocalEdges[le][0]] < cell[kLocalEdges[le][1]] ? 1 : -1;
    }
    // The positively oriented cell induces (-1)^i [face opposite i] on its
    // boundary, with outward normals; compare with the ascending global order.
    for (std::size_t lf = 0; lf < kLocalFaces.size(); ++lf) {
      const auto& s = kLocalFaces[lf];
      const int induced = lf % 2 == 0 ? 1 : -1;
      w.face_sign[lf] = induced * sort_parity(cell[s[0]], cell[s[1]], cell[s[2]]);
      d.push_back({k, m.cell_faces(k)[lf], static_cast<double>(w.face_sign[lf])});
    }
  }
  div_ = CsrMatrix::from_triplets(m.num_cells(), m.num_faces(), std::move(d));

  edge_slot_.assign(m.num_edges(), kNoIndex);
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    if (!m.is_boundary_edge(e)) {
      edge_slot_[e] = interior_edges_.size();
      interior_edges_.push_back(e);
    }
  }
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    (m.is_boundary_vertex(v) ? boundary_vertices_ : interior_vertices_).push_back(v);
  }
  std::vector<Index> all_faces(m.num_faces());
  for (std::size_t f = 0; f < all_faces.size(); ++f) all_faces[f] = f;
  curl_interior_ = select(curl_, all_faces, interior_edges_);
}

Vector DeRhamComplex::expand_interior(std::span<const double> interior) const {
  if (interior.size() != interior_edges_.size()) throw DimensionMismatch("expand_interior: size mismatch");
  Vector all(num_edges(), 0.0);
  for (std::size_t i = 0; i < interior.size(); ++i) all[interior_edges_[i]] = interior[i];
  return all;
}

Vector DeRhamComplex::restrict_interior(std::span<const double> all_edges) const {
  if (all_edges.size() != num_edges()) throw DimensionMismatch("restrict_interior: size mismatch");
  Vector out(interior_edges_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = all_edges[interior_edges_[i]];
  return out;
}

DeRhamComplex build_complex(TetMesh mesh) { return DeRhamComplex(std::make_shared<const TetMesh>(std::move(mesh))); }

DeRhamComplex build_complex(std::shared_ptr<const TetMesh> mesh) { return DeRhamComplex(std::move(mesh)); }

std::array<double, 4> barycentric(const DeRhamComplex& complex, Index cell, const Vec3& point) {
  const WhitneyCell& w = complex.whitney(cell);
  const Vec3 r = point - complex.mesh().vertices()[complex.mesh().cells()[cell][0]];
  std::array<double, 4> l{};
  l[1] = dot(w.grad_lambda[1], r);
  l[2] = dot(w.grad_lambda[2], r);
  l[3] = dot(w.grad_lambda[3], r);
  l[0] = 1.0 - l[1] - l[2] - l[3];
  return l;
}

namespace {

std::array<double, 4> checked_barycentric(const DeRhamComplex& complex, Index cell, const Vec3& point) {
  if (cell >= complex.num_cells()) throw InvalidArgument("cell index out of range");
  auto l = barycentric(complex, cell, point);
  for (double v : l) {
    if (v < -1e-12 || v > 1.0 + 1e-12) throw InvalidArgument("point lies outside cell " + std::to_string(cell));
  }
  return l;
}

void check_local(int local, int count, const char* what) {
  if (local < 0 || local >= count) throw InvalidArgument(std::string("local ") + what + " index out of range");
}

}  // namespace

Vec3 whitney_edge_eval(const DeRhamComplex& complex, Index cell, int local_edge, const Vec3& point) {
  check_local(local_edge, 6, "edge");
  const auto l = checked_barycentric(complex, cell, point);
  const WhitneyCell& w = complex.whitney(cell);
  const auto [a, b] = kLocalEdges[local_edge];
  const Vec3 v = l[a] * w.grad_lambda[b] - l[b] * w.grad_lambda[a];
  return static_cast<double>(w.edge_sign[local_edge]) * v;
}

Vec3 whitney_edge_curl(const DeRhamComplex& complex, Index cell, int local_edge) {
  check_local(local_edge, 6, "edge");
  const WhitneyCell& w = complex.whitney(cell);
  const auto [a, b] = kLocalEdges[local_edge];
  return (2.0 * w.edge_sign[local_edge]) * cross(w.grad_lambda[a], w.grad_lambda[b]);
}

Vec3 whitney_face_eval(const DeRhamComplex& complex, Index cell, int local_face, const Vec3& point) {
  check_local(local_face, 4, "face");
  checked_barycentric(complex, cell, point);
  const WhitneyCell& w = complex.whitney(cell);
  const Vec3& opposite = complex.mesh().vertices()[complex.mesh().cells()[cell][local_face]];
  return (w.face_sign[local_face] / (3.0 * w.volume)) * (point - opposite);
}

double whitney_face_div(const DeRhamComplex& complex, Index cell, int local_face) {
  check_local(local_face, 4, "face");
  const WhitneyCell& w = complex.whitney(cell);
  return w.face_sign[local_face] / w.volume;
}

Vector curl_in_rt_coordinates(const DeRhamComplex& complex, std::span<const double> alpha) {
  if (alpha.size() != complex.num_edges()) {
    throw DimensionMismatch("curl_in_rt_coordinates: expected one coefficient per edge");
  }
  return spmv(complex.curl(), alpha);
}

Vec3 eval_nedelec(const DeRhamComplex& complex, std::span<const double> interior_coeffs, Index cell,
                  const Vec3& point) {
  const auto l = barycentric(complex, cell, point);
  const WhitneyCell& w = complex.whitney(cell);
  const auto& edges = complex.mesh().cell_edges(cell);
  Vec3 out;
  for (int le = 0; le < 6; ++le) {
    const Index slot = complex.interior_edge_slot(edges[le]);
    if (slot == kNoIndex) continue;
    const auto [a, b] = kLocalEdges[le];
    out += (interior_coeffs[slot] * w.edge_sign[le]) * (l[a] * w.grad_lambda[b] - l[b] * w.grad_lambda[a]);
  }
  return out;
}

Vec3 eval_nedelec_curl(const DeRhamComplex& complex, std::span<const double> interior_coeffs, Index cell) {
  const WhitneyCell& w = complex.whitney(cell);
  const auto& edges = complex.mesh().cell_edges(cell);
  Vec3 out;
  for (int le = 0; le < 6; ++le) {
    const Index slot = complex.interior_edge_slot(edges[le]);
    if (slot == kNoIndex) continue;
    const auto [a, b] = kLocalEdges[le];
    out += (2.0 * interior_coeffs[slot] * w.edge_sign[le]) * cross(w.grad_lambda[a], w.grad_lambda[b]);
  }
  return out;
}

Vec3 eval_rt(const DeRhamComplex& complex, std::span<const double> face_coeffs, Index cell, const Vec3& point) {
  const WhitneyCell& w = complex.whitney(cell);
  const auto& faces = complex.mesh().cell_faces(cell);
  const auto& cv = complex.mesh().cells()[cell];
  Vec3 out;
  for (int lf = 0; lf < 4; ++lf) {
    const Vec3& opposite = complex.mesh().vertices()[cv[lf]];
    out += (face_coeffs[faces[lf]] * w.face_sign[lf] / (3.0 * w.volume)) * (point - opposite);
  }
  return out;
}

}  // namespace maxwell
