#include "maxwell/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "maxwell/error.hpp"

namespace maxwell {

namespace {

template <std::size_t N>
Index find_sorted(const std::vector<std::array<Index, N>>& list, const std::array<Index, N>& key) {
  auto it = std::lower_bound(list.begin(), list.end(), key);
  return static_cast<Index>(it - list.begin());
}

double signed_volume(const std::vector<Vec3>& v, const Cell& c) {
  return det(v[c[1]] - v[c[0]], v[c[2]] - v[c[0]], v[c[3]] - v[c[0]]) / 6.0;
}

double cell_diameter(const std::vector<Vec3>& v, const Cell& c) {
  double d = 0.0;
  for (const auto& [a, b] : kLocalEdges) d = std::max(d, norm(v[c[a]] - v[c[b]]));
  return d;
}

}  // namespace

Topology build_topology(std::span<const Cell> cells, std::size_t vertex_count) {
  Topology t;
  std::vector<Cell> sorted_cells;
  sorted_cells.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    Cell s = cells[c];
    for (Index v : s) {
      if (v >= vertex_count) {
        throw InvalidArgument("cell " + std::to_string(c) + ": vertex index " + std::to_string(v) +
                              " out of range");
      }
    }
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw InvalidArgument("cell " + std::to_string(c) + " repeats a vertex");
    }
    sorted_cells.push_back(s);
  }
  {
    auto copy = sorted_cells;
    std::sort(copy.begin(), copy.end());
    if (std::adjacent_find(copy.begin(), copy.end()) != copy.end()) {
      throw InvalidArgument("duplicate cell");
    }
  }

  for (const Cell& c : cells) {
    for (const auto& [a, b] : kLocalEdges) t.edges.push_back({std::min(c[a], c[b]), std::max(c[a], c[b])});
    for (const auto& lf : kLocalFaces) {
      Face f{c[lf[0]], c[lf[1]], c[lf[2]]};
      std::sort(f.begin(), f.end());
      t.faces.push_back(f);
    }
  }
  std::sort(t.edges.begin(), t.edges.end());
  t.edges.erase(std::unique(t.edges.begin(), t.edges.end()), t.edges.end());
  std::sort(t.faces.begin(), t.faces.end());
  t.faces.erase(std::unique(t.faces.begin(), t.faces.end()), t.faces.end());

  t.face_cells.assign(t.faces.size(), {kNoIndex, kNoIndex});
  t.cell_edges.resize(cells.size());
  t.cell_faces.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Cell& cell = cells[c];
    for (std::size_t k = 0; k < kLocalEdges.size(); ++k) {
      Index a = cell[kLocalEdges[k][0]], b = cell[kLocalEdges[k][1]];
      t.cell_edges[c][k] = find_sorted(t.edges, Edge{std::min(a, b), std::max(a, b)});
    }
    for (std::size_t k = 0; k < kLocalFaces.size(); ++k) {
      Face f{cell[kLocalFaces[k][0]], cell[kLocalFaces[k][1]], cell[kLocalFaces[k][2]]};
      std::sort(f.begin(), f.end());
      Index fi = find_sorted(t.faces, f);
      t.cell_faces[c][k] = fi;
      auto& adj = t.face_cells[fi];
      if (adj[0] == kNoIndex) {
        adj[0] = c;
      } else if (adj[1] == kNoIndex) {
        adj[1] = c;
      } else {
        throw InvalidArgument("face shared by more than two cells");
      }
    }
  }

  t.boundary_face.assign(t.faces.size(), false);
  t.boundary_edge.assign(t.edges.size(), false);
  t.boundary_vertex.assign(vertex_count, false);
  for (std::size_t f = 0; f < t.faces.size(); ++f) {
    if (t.face_cells[f][1] != kNoIndex) continue;
    t.boundary_face[f] = true;
    const Face& fv = t.faces[f];
    for (Index v : fv) t.boundary_vertex[v] = true;
    t.boundary_edge[find_sorted(t.edges, Edge{fv[0], fv[1]})] = true;
    t.boundary_edge[find_sorted(t.edges, Edge{fv[0], fv[2]})] = true;
    t.boundary_edge[find_sorted(t.edges, Edge{fv[1], fv[2]})] = true;
  }
  return t;
}

TetMesh::TetMesh(std::vector<Vec3> vertices, std::vector<Cell> cells)
    : vertices_(std::move(vertices)), cells_(std::move(cells)) {
  for (const Vec3& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw InvalidArgument("non-finite vertex coordinate");
    }
  }
  // Index validation happens in build_topology; do it first so volumes are safe.
  topo_ = build_topology(cells_, vertices_.size());

  double h = 0.0;
  for (const Cell& c : cells_) h = std::max(h, cell_diameter(vertices_, c));
  const double min_volume = 1e-14 * h * h * h;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    double vol = signed_volume(vertices_, cells_[c]);
    if (!(std::abs(vol) >= min_volume) || vol == 0.0) {
      throw InvalidArgument("cell " + std::to_string(c) + " is degenerate (volume " + std::to_string(vol) + ")");
    }
    if (vol < 0.0) std::swap(cells_[c][2], cells_[c][3]);
  }
  // Reordering changes local slots, so rebuild the per-cell maps.
  topo_ = build_topology(cells_, vertices_.size());
}

std::array<Vec3, 4> TetMesh::cell_points(Index c) const {
  const Cell& cell = cells_[c];
  return {vertices_[cell[0]], vertices_[cell[1]], vertices_[cell[2]], vertices_[cell[3]]};
}

double TetMesh::cell_volume(Index c) const { return signed_volume(vertices_, cells_[c]); }

double TetMesh::total_volume() const {
  double v = 0.0;
  for (std::size_t c = 0; c < cells_.size(); ++c) v += cell_volume(c);
  return v;
}

long long TetMesh::euler_characteristic() const {
  return static_cast<long long>(num_vertices()) - static_cast<long long>(num_edges()) +
         static_cast<long long>(num_faces()) - static_cast<long long>(num_cells());
}

TetMesh generate_box_mesh(std::size_t n, const Box& box) {
  if (n == 0) throw InvalidArgument("box mesh needs n >= 1 subdivisions");
  const Vec3 ext = box.upper - box.lower;
  if (!(ext.x > 0.0 && ext.y > 0.0 && ext.z > 0.0)) throw InvalidArgument("box has non-positive extent");

  const std::size_t m = n + 1;
  auto vid = [m](std::size_t i, std::size_t j, std::size_t k) { return i + m * (j + m * k); };

  std::vector<Vec3> vertices;
  vertices.reserve(m * m * m);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t i = 0; i < m; ++i) {
        vertices.push_back({box.lower.x + ext.x * (static_cast<double>(i) / dn),
                            box.lower.y + ext.y * (static_cast<double>(j) / dn),
                            box.lower.z + ext.z * (static_cast<double>(k) / dn)});
      }
    }
  }

  // One tetrahedron per permutation of the axes: walk from the lower corner
  // to the upper corner one unit step at a time.
  static constexpr std::array<std::array<int, 3>, 6> kAxisOrders{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<Cell> cells;
  cells.reserve(6 * n * n * n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        for (const auto& order : kAxisOrders) {
          std::array<std::size_t, 3> p{i, j, k};
          Cell c{};
          c[0] = vid(p[0], p[1], p[2]);
          for (int s = 0; s < 3; ++s) {
            ++p[order[s]];
            c[s + 1] = vid(p[0], p[1], p[2]);
          }
          cells.push_back(c);
        }
      }
    }
  }
  return TetMesh(std::move(vertices), std::move(cells));
}

double mesh_size(const TetMesh& mesh) {
  double h = 0.0;
  for (const Cell& c : mesh.cells()) h = std::max(h, cell_diameter(mesh.vertices(), c));
  return h;
}

namespace {

struct LineReader {
  std::istringstream in;
  std::size_t line_no = 0;

  explicit LineReader(std::string_view text) : in(std::string(text)) {}

  // Next non-comment, non-blank line; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  }

  std::string require(const char* what) {
    std::string line;
    if (!next(line)) throw ParseError(line_no + 1, std::string("unexpected end of input, expected ") + what);
    return line;
  }
};

template <typename T, std::size_t N>
std::array<T, N> parse_fields(const std::string& line, std::size_t line_no, const char* what) {
  std::istringstream ls(line);
  std::array<T, N> out{};
  for (auto& v : out) {
    if (!(ls >> v)) throw ParseError(line_no, std::string("malformed ") + what + ": '" + line + "'");
  }
  std::string extra;
  if (ls >> extra) throw ParseError(line_no, std::string("trailing content in ") + what + ": '" + line + "'");
  return out;
}

std::size_t parse_count(const std::string& line, std::size_t line_no, const std::string& keyword) {
  std::istringstream ls(line);
  std::string kw;
  long long count = -1;
  std::string extra;
  if (!(ls >> kw >> count) || kw != keyword || count < 0 || (ls >> extra)) {
    throw ParseError(line_no, "expected '" + keyword + " <count>', got '" + line + "'");
  }
  return static_cast<std::size_t>(count);
}

}  // namespace

TetMesh read_mesh(std::string_view text) {
  LineReader r(text);
  std::string line = r.require("header");
  {
    std::istringstream ls(line);
    std::string magic, extra;
    int version = 0;
    if (!(ls >> magic >> version) || magic != "tetmesh" || (ls >> extra)) {
      throw ParseError(r.line_no, "expected header 'tetmesh 1'");
    }
    if (version != 1) throw ParseError(r.line_no, "unsupported mesh format version " + std::to_string(version));
  }

  line = r.require("vertex count");
  const std::size_t nv = parse_count(line, r.line_no, "vertices");
  std::vector<Vec3> vertices;
  vertices.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    line = r.require("vertex");
    auto xyz = parse_fields<double, 3>(line, r.line_no, "vertex");
    vertices.push_back({xyz[0], xyz[1], xyz[2]});
  }

  line = r.require("cell count");
  const std::size_t nc = parse_count(line, r.line_no, "cells");
  std::vector<Cell> cells;
  cells.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    line = r.require("cell");
    auto idx = parse_fields<long long, 4>(line, r.line_no, "cell");
    Cell c{};
    for (int k = 0; k < 4; ++k) {
      if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= nv) {
        throw ParseError(r.line_no, "vertex index " + std::to_string(idx[k]) + " out of range [0, " +
                                        std::to_string(nv) + ")");
      }
      c[k] = static_cast<Index>(idx[k]);
    }
    cells.push_back(c);
  }
  if (r.next(line)) throw ParseError(r.line_no, "unexpected content after cells: '" + line + "'");

  try {
    return TetMesh(std::move(vertices), std::move(cells));
  } catch (const InvalidArgument& e) {
    throw ParseError(r.line_no, e.what());
  }
}

std::string write_mesh(const TetMesh& mesh) {
  std::string out = "tetmesh 1\nvertices " + std::to_string(mesh.num_vertices()) + "\n";
  char buf[128];
  for (const Vec3& p : mesh.vertices()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    out += buf;
  }
  out += "cells " + std::to_string(mesh.num_cells()) + "\n";
  for (const Cell& c : mesh.cells()) {
    std::snprintf(buf, sizeof buf, "%zu %zu %zu %zu\n", c[0], c[1], c[2], c[3]);
    out += buf;
  }
  return out;
}

}  // namespace maxwell
