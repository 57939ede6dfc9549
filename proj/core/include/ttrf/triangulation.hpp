#pragma once

#include "ttrf/geometry.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ttrf {

inline constexpr TetId kBoundary = 0xFFFFFFFFu;

/// Tetrahedral decomposition of a point set. neighbors[t][i] is the tet across
/// the face opposite slot i, or kBoundary on the convex hull. Every tet is
/// positively oriented (signed_volume > 0).
struct TetMesh {
  std::vector<Point3> vertices;
  std::vector<Tetra> tets;
  std::vector<std::array<TetId, 4>> neighbors;

  [[nodiscard]] std::size_t num_tets() const { return tets.size(); }
  [[nodiscard]] TetCorners corners(TetId t) const;
  [[nodiscard]] double volume(TetId t) const { return signed_volume(corners(t)); }
};

/// Incremental Bowyer-Watson Delaunay tetrahedralization. Duplicate points stay
/// in `vertices` but are referenced by no tet. Throws TooFewPoints (< 5 points)
/// or DegenerateInput (all points coplanar).
TetMesh delaunay_triangulate(std::span<const Point3> points);

/// Tet containing p (all barycentrics >= -kBaryEps), found by a visibility walk
/// from `hint`; nullopt outside the hull.
std::optional<TetId> locate_point(const TetMesh& mesh, const Point3& p,
                                  std::optional<TetId> hint = std::nullopt);

/// Plain-text dump: `v x y z` per vertex then `t i0 i1 i2 i3` per tet.
void write_mesh_dump(const TetMesh& mesh, std::ostream& out);
/// Reads a dump and rebuilds face adjacency.
TetMesh read_mesh_dump(std::istream& in);

/// Recomputes neighbors from tets by matching face vertex sets.
void rebuild_adjacency(TetMesh& mesh);

/// FNV-1a over vertex coordinates and tet indices.
std::uint64_t mesh_hash(const TetMesh& mesh);

namespace predicates {
/// 6 * signed volume with a flag that the sign is not trustworthy.
struct Signed {
  double value = 0.0;
  bool uncertain = false;
};
Signed orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d);
/// Positive when p is strictly inside the circumsphere of the positively
/// oriented tetrahedron (a, b, c, d).
Signed insphere(const Point3& a, const Point3& b, const Point3& c, const Point3& d,
                const Point3& p);
}  // namespace predicates

}  // namespace ttrf
