#include "ttrf/traversal.hpp"

#include "ttrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ttrf {

namespace {

constexpr std::uint32_t kMaxLeafFaces = 4;
constexpr int kBins = 12;

double half_area(const std::array<double, 6>& b) {
  const double dx = std::max(0.0, b[3] - b[0]);
  const double dy = std::max(0.0, b[4] - b[1]);
  const double dz = std::max(0.0, b[5] - b[2]);
  return dx * dy + dy * dz + dz * dx;
}

std::array<double, 6> empty_box() {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {inf, inf, inf, -inf, -inf, -inf};
}

void grow(std::array<double, 6>& box, const std::array<double, 6>& other) {
  for (int k = 0; k < 3; ++k) {
    box[static_cast<std::size_t>(k)] = std::min(box[static_cast<std::size_t>(k)], other[static_cast<std::size_t>(k)]);
    box[static_cast<std::size_t>(k + 3)] =
        std::max(box[static_cast<std::size_t>(k + 3)], other[static_cast<std::size_t>(k + 3)]);
  }
}

std::array<Point3, 3> face_points(const TetMesh& mesh, const FaceRef& f) {
  const auto slots = face_slots(static_cast<int>(f.slot));
  const auto& tet = mesh.tets[f.tet];
  return {mesh.vertices[tet[slots[0]]], mesh.vertices[tet[slots[1]]], mesh.vertices[tet[slots[2]]]};
}

// Barycentrics of a face point expressed in a tet that shares the face.
Barycentric4 transfer(const TetMesh& mesh, TetId from, const Barycentric4& lambda, TetId to) {
  Barycentric4 out;
  const auto& src = mesh.tets[from];
  const auto& dst = mesh.tets[to];
  for (int j = 0; j < 4; ++j) {
    out[j] = 0.0;
    for (int k = 0; k < 4; ++k) {
      if (src[k] == dst[j]) {
        out[j] = lambda[k];
        break;
      }
    }
  }
  return out;
}

}  // namespace

FaceBvh FaceBvh::build(const TetMesh& mesh) {
  FaceBvh bvh;
  for (TetId t = 0; t < mesh.tets.size(); ++t) {
    for (std::uint32_t s = 0; s < 4; ++s) {
      const TetId nb = mesh.neighbors[t][s];
      if (nb == kBoundary || t < nb) bvh.faces_.push_back({t, s});
    }
  }
  const std::size_t n = bvh.faces_.size();
  std::vector<std::array<double, 6>> bounds(n);
  std::vector<std::array<double, 3>> centroids(n);
  Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
  Point3 hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pts = face_points(mesh, bvh.faces_[i]);
    const Point3 flo = pts[0].cwiseMin(pts[1]).cwiseMin(pts[2]);
    const Point3 fhi = pts[0].cwiseMax(pts[1]).cwiseMax(pts[2]);
    bounds[i] = {flo[0], flo[1], flo[2], fhi[0], fhi[1], fhi[2]};
    const Point3 c = (flo + fhi) * 0.5;
    centroids[i] = {c[0], c[1], c[2]};
    lo = lo.cwiseMin(flo);
    hi = hi.cwiseMax(fhi);
  }
  // Pad every box slightly so rays grazing a face's bounding plane are not culled.
  const double pad = n > 0 ? 1e-9 * (hi - lo).norm() : 0.0;
  for (auto& b : bounds) {
    for (int k = 0; k < 3; ++k) {
      b[static_cast<std::size_t>(k)] -= pad;
      b[static_cast<std::size_t>(k + 3)] += pad;
    }
  }
  if (n > 0) {
    bvh.nodes_.reserve(2 * n / kMaxLeafFaces + 2);
    bvh.build_range(0, static_cast<std::uint32_t>(n), centroids, bounds);
  }
  return bvh;
}

std::uint32_t FaceBvh::build_range(std::uint32_t begin, std::uint32_t end,
                                   std::vector<std::array<double, 3>>& centroids,
                                   std::vector<std::array<double, 6>>& bounds) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();

  auto box = empty_box();
  auto cbox = empty_box();
  for (std::uint32_t i = begin; i < end; ++i) {
    grow(box, bounds[i]);
    const auto& c = centroids[i];
    grow(cbox, {c[0], c[1], c[2], c[0], c[1], c[2]});
  }
  nodes_[id].lo = {box[0], box[1], box[2]};
  nodes_[id].hi = {box[3], box[4], box[5]};

  const std::uint32_t count = end - begin;
  if (count <= kMaxLeafFaces) {
    nodes_[id].first = begin;
    nodes_[id].count = count;
    return id;
  }

  // Binned SAH over the widest centroid axis candidates.
  int best_axis = -1;
  int best_split = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    const double cmin = cbox[static_cast<std::size_t>(axis)];
    const double cmax = cbox[static_cast<std::size_t>(axis + 3)];
    if (!(cmax > cmin)) continue;
    std::array<std::array<double, 6>, kBins> bin_box;
    std::array<std::uint32_t, kBins> bin_count{};
    bin_box.fill(empty_box());
    const double scale = kBins / (cmax - cmin);
    for (std::uint32_t i = begin; i < end; ++i) {
      int b = static_cast<int>((centroids[i][static_cast<std::size_t>(axis)] - cmin) * scale);
      b = std::clamp(b, 0, kBins - 1);
      ++bin_count[static_cast<std::size_t>(b)];
      grow(bin_box[static_cast<std::size_t>(b)], bounds[i]);
    }
    std::array<double, kBins> right_cost{};
    auto acc = empty_box();
    std::uint32_t acc_n = 0;
    for (int b = kBins - 1; b > 0; --b) {
      grow(acc, bin_box[static_cast<std::size_t>(b)]);
      acc_n += bin_count[static_cast<std::size_t>(b)];
      right_cost[static_cast<std::size_t>(b)] = acc_n > 0 ? half_area(acc) * acc_n : 0.0;
    }
    acc = empty_box();
    acc_n = 0;
    for (int b = 0; b < kBins - 1; ++b) {
      grow(acc, bin_box[static_cast<std::size_t>(b)]);
      acc_n += bin_count[static_cast<std::size_t>(b)];
      if (acc_n == 0 || acc_n == count) continue;
      const double cost = half_area(acc) * acc_n + right_cost[static_cast<std::size_t>(b + 1)];
      if (cost < best_cost) {
        best_cost = cost;
        best_axis = axis;
        best_split = b;
      }
    }
  }

  std::uint32_t mid = begin + count / 2;
  auto swap_items = [&](std::uint32_t a, std::uint32_t b) {
    std::swap(faces_[a], faces_[b]);
    std::swap(bounds[a], bounds[b]);
    std::swap(centroids[a], centroids[b]);
  };
  if (best_axis >= 0) {
    const double cmin = cbox[static_cast<std::size_t>(best_axis)];
    const double scale = kBins / (cbox[static_cast<std::size_t>(best_axis + 3)] - cmin);
    std::uint32_t i = begin;
    std::uint32_t j = end;
    while (i < j) {
      int b = static_cast<int>((centroids[i][static_cast<std::size_t>(best_axis)] - cmin) * scale);
      b = std::clamp(b, 0, kBins - 1);
      if (b <= best_split) {
        ++i;
      } else {
        swap_items(i, --j);
      }
    }
    mid = i;
    if (mid == begin || mid == end) mid = begin + count / 2;
  }

  build_range(begin, mid, centroids, bounds);  // left child is id + 1
  const std::uint32_t right = build_range(mid, end, centroids, bounds);
  nodes_[id].first = right;
  nodes_[id].count = 0;
  return id;
}

void FaceBvh::intersect_all(const TetMesh& mesh, const Ray& ray, std::vector<FaceHit>& out) const {
  if (nodes_.empty()) return;
  const RayTriangleTester tester(ray);
  const Vec3 inv = ray.direction.cwiseInverse();
  constexpr double kSlabGrow = 1.0 + 4.0 * std::numeric_limits<double>::epsilon();

  auto box_hit = [&](const Node& node) {
    double t0 = ray.t_min;
    double t1 = ray.t_max;
    for (int k = 0; k < 3; ++k) {
      double near = (node.lo[static_cast<std::size_t>(k)] - ray.origin[k]) * inv[k];
      double far = (node.hi[static_cast<std::size_t>(k)] - ray.origin[k]) * inv[k];
      if (near > far) std::swap(near, far);
      far *= kSlabGrow;
      // NaN (0 * inf) comparisons leave the interval untouched.
      t0 = near > t0 ? near : t0;
      t1 = far < t1 ? far : t1;
      if (t0 > t1) return false;
    }
    return true;
  };

  std::uint32_t stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!box_hit(node)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto pts = face_points(mesh, faces_[i]);
        if (auto hit = tester.intersect(pts[0], pts[1], pts[2])) {
          out.push_back({hit->t, i, hit->u, hit->v});
        }
      }
    } else {
      stack[top++] = node.first;
      stack[top++] = static_cast<std::uint32_t>(&node - nodes_.data()) + 1;
    }
  }
}

double RaySegmentTrace::occupied_length() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length();
  return total;
}

RaySegmentTrace build_trace(const FaceBvh& bvh, const TetMesh& mesh, const Ray& ray, std::vector<FaceHit> hits,
                            std::size_t max_hits) {
  RaySegmentTrace trace;
  std::sort(hits.begin(), hits.end(),
            [](const FaceHit& a, const FaceHit& b) { return a.t < b.t || (a.t == b.t && a.face < b.face); });
  if (hits.size() > max_hits) {
    hits.resize(max_hits);
    trace.truncated = true;
  }
  if (hits.empty()) return trace;

  struct TetHit {
    TetId tet;
    double t;
    Barycentric4 lambda;
  };
  std::vector<TetHit> per_tet;
  per_tet.reserve(hits.size() * 2);
  const auto faces = bvh.faces();
  for (const auto& h : hits) {
    const FaceRef& f = faces[h.face];
    const Barycentric4 lambda = lift_barycentric(h.u, h.v, static_cast<int>(f.slot));
    per_tet.push_back({f.tet, h.t, lambda});
    const TetId nb = mesh.neighbors[f.tet][f.slot];
    if (nb != kBoundary) per_tet.push_back({nb, h.t, transfer(mesh, f.tet, lambda, nb)});
  }
  std::stable_sort(per_tet.begin(), per_tet.end(),
                   [](const TetHit& a, const TetHit& b) { return a.tet < b.tet || (a.tet == b.tet && a.t < b.t); });

  for (std::size_t k = 0; k < per_tet.size();) {
    std::size_t e = k + 1;
    while (e < per_tet.size() && per_tet[e].tet == per_tet[k].tet) ++e;
    const TetHit& first = per_tet[k];
    const TetHit& last = per_tet[e - 1];
    if (e - k >= 2 && last.t - first.t >= kHitTieEps) {
      trace.segments.push_back({first.tet, first.t, last.t, first.lambda, last.lambda});
    }
    k = e;
  }

  // A ray that starts inside the hull: the tet around the origin has only an
  // exit hit. Close that segment at t_min.
  const FaceRef& f0 = faces[hits.front().face];
  for (TetId cand : {f0.tet, mesh.neighbors[f0.tet][f0.slot]}) {
    if (cand == kBoundary) continue;
    const bool has_segment = std::any_of(trace.segments.begin(), trace.segments.end(),
                                         [&](const TraceSegment& s) { return s.tet == cand; });
    if (has_segment) continue;
    const Point3 start = ray.at(ray.t_min);
    Barycentric4 at_start;
    try {
      at_start = barycentric_coords(start, mesh.corners(cand));
    } catch (const Error&) {
      continue;
    }
    if (!at_start.inside() || hits.front().t - ray.t_min < kHitTieEps) continue;
    const Barycentric4 exit = f0.tet == cand ? lift_barycentric(hits.front().u, hits.front().v, static_cast<int>(f0.slot))
                                             : transfer(mesh, f0.tet,
                                                        lift_barycentric(hits.front().u, hits.front().v,
                                                                         static_cast<int>(f0.slot)),
                                                        cand);
    trace.segments.push_back({cand, ray.t_min, hits.front().t, at_start, exit});
    break;
  }

  std::sort(trace.segments.begin(), trace.segments.end(), [](const TraceSegment& a, const TraceSegment& b) {
    return a.t_in < b.t_in || (a.t_in == b.t_in && a.tet < b.tet);
  });
  return trace;
}

RaySegmentTrace trace_ray(const FaceBvh& bvh, const TetMesh& mesh, const Ray& ray, std::size_t max_hits) {
  std::vector<FaceHit> hits;
  hits.reserve(256);
  bvh.intersect_all(mesh, ray, hits);
  return build_trace(bvh, mesh, ray, std::move(hits), max_hits);
}

std::pair<TetId, Barycentric4> barycentric_at(const TraceSegment& segment, double t) {
  if (!(t >= segment.t_in && t <= segment.t_out)) {
    throw Error(ErrorCode::OutOfSegment, "t outside [t_in, t_out]");
  }
  const double len = segment.t_out - segment.t_in;
  const double s = len > 0.0 ? (t - segment.t_in) / len : 0.0;
  return {segment.tet, Barycentric4::lerp(segment.bary_in, segment.bary_out, s)};
}

}  // namespace ttrf
