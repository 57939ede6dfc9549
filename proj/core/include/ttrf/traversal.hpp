#pragma once

#include "ttrf/geometry.hpp"
#include "ttrf/triangulation.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ttrf {

inline constexpr std::size_t kDefaultMaxHits = 512;

/// A unique mesh face named by one tet that owns it and the slot it is opposite.
struct FaceRef {
  TetId tet = 0;
  std::uint32_t slot = 0;
};

/// One ray/face intersection; (u, v) are the triangle barycentrics of the
/// face's vertices taken in ascending slot order of `face.tet`.
struct FaceHit {
  double t = 0.0;
  std::uint32_t face = 0;
  double u = 0.0;
  double v = 0.0;
};

/// Binned-SAH bounding volume hierarchy over the unique faces of a TetMesh.
class FaceBvh {
 public:
  static FaceBvh build(const TetMesh& mesh);

  [[nodiscard]] std::size_t num_faces() const { return faces_.size(); }
  [[nodiscard]] std::span<const FaceRef> faces() const { return faces_; }
  [[nodiscard]] std::size_t num_nodes() const { return nodes_.size(); }

  /// Appends every face hit with t in [ray.t_min, ray.t_max], unordered.
  void intersect_all(const TetMesh& mesh, const Ray& ray, std::vector<FaceHit>& out) const;

 private:
  struct Node {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
    std::uint32_t first = 0;  // first face (leaf) or right child (interior; left is the next node)
    std::uint32_t count = 0;  // 0 for interior nodes
  };

  std::uint32_t build_range(std::uint32_t begin, std::uint32_t end, std::vector<std::array<double, 3>>& centroids,
                            std::vector<std::array<double, 6>>& bounds);

  std::vector<FaceRef> faces_;
  std::vector<Node> nodes_;
};

inline FaceBvh build_bvh(const TetMesh& mesh) { return FaceBvh::build(mesh); }

struct TraceSegment {
  TetId tet = 0;
  double t_in = 0.0;
  double t_out = 0.0;
  Barycentric4 bary_in;
  Barycentric4 bary_out;

  [[nodiscard]] double length() const { return t_out - t_in; }
};

/// Tets crossed by a ray, sorted by entry distance.
struct RaySegmentTrace {
  std::vector<TraceSegment> segments;
  bool truncated = false;

  [[nodiscard]] bool empty() const { return segments.empty(); }
  [[nodiscard]] double occupied_length() const;
};

/// Hits closer than this along the ray are treated as coincident.
inline constexpr double kHitTieEps = 1e-12;

/// Collects the first `max_hits` face hits in t order and pairs the hits that
/// bound each tet into segments. Zero-length segments are dropped.
RaySegmentTrace trace_ray(const FaceBvh& bvh, const TetMesh& mesh, const Ray& ray,
                          std::size_t max_hits = kDefaultMaxHits);

/// Same, from an already collected hit list (reused by tests and benchmarks).
RaySegmentTrace build_trace(const FaceBvh& bvh, const TetMesh& mesh, const Ray& ray, std::vector<FaceHit> hits,
                            std::size_t max_hits = kDefaultMaxHits);

/// Linear interpolation of a segment's entry/exit barycentrics. Throws
/// OutOfSegment when t lies outside [t_in, t_out].
std::pair<TetId, Barycentric4> barycentric_at(const TraceSegment& segment, double t);

}  // namespace ttrf
