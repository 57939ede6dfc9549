#include "ttrf/triangulation.hpp"

#include "ttrf/error.hpp"
#include "ttrf/random.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

namespace ttrf {

TetCorners TetMesh::corners(TetId t) const {
  const auto& tet = tets[t];
  return {vertices[tet.v[0]], vertices[tet.v[1]], vertices[tet.v[2]], vertices[tet.v[3]]};
}

namespace predicates {

namespace {

// Relative width of the band in which a determinant's sign is treated as
// unknown, measured against the permanent (sum of absolute expansion terms).
constexpr double kTieBand = 1e-12;

double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return a.dot(b.cross(c)); }

double perm3(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 x = a.cwiseAbs();
  const Vec3 y = b.cwiseAbs();
  const Vec3 z = c.cwiseAbs();
  return x[0] * (y[1] * z[2] + y[2] * z[1]) + x[1] * (y[0] * z[2] + y[2] * z[0]) +
         x[2] * (y[0] * z[1] + y[1] * z[0]);
}

}  // namespace

Signed orient3d(const Point3& a, const Point3& b, const Point3& c, const Point3& d) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ad = d - a;
  const double value = det3(ab, ac, ad);
  const double bound = kTieBand * perm3(ab, ac, ad);
  return {value, std::abs(value) <= bound};
}

Signed insphere(const Point3& a, const Point3& b, const Point3& c, const Point3& d,
                const Point3& p) {
  const Vec3 pa = a - p;
  const Vec3 pb = b - p;
  const Vec3 pc = c - p;
  const Vec3 pd = d - p;
  const double wa = pa.squaredNorm();
  const double wb = pb.squaredNorm();
  const double wc = pc.squaredNorm();
  const double wd = pd.squaredNorm();
  const double value =
      wa * det3(pb, pc, pd) - wb * det3(pa, pc, pd) + wc * det3(pa, pb, pd) - wd * det3(pa, pb, pc);
  const double perm =
      wa * perm3(pb, pc, pd) + wb * perm3(pa, pc, pd) + wc * perm3(pa, pb, pd) + wd * perm3(pa, pb, pc);
  return {value, std::abs(value) <= kTieBand * perm};
}

}  // namespace predicates

namespace {

constexpr VertexId kInf = 0xFFFFFFFFu;
constexpr TetId kNone = 0xFFFFFFFFu;

struct Cell {
  std::array<VertexId, 4> v{};
  std::array<TetId, 4> n{kNone, kNone, kNone, kNone};
  bool alive = true;

  [[nodiscard]] bool ghost() const { return v[3] == kInf; }
};

std::uint64_t morton_spread(std::uint64_t x) {
  x &= 0x1fffff;
  x = (x | x << 32) & 0x1f00000000ffffull;
  x = (x | x << 16) & 0x1f0000ff0000ffull;
  x = (x | x << 8) & 0x100f00f00f00f00full;
  x = (x | x << 4) & 0x10c30c30c30c30c3ull;
  x = (x | x << 2) & 0x1249249249249249ull;
  return x;
}

// Biased randomized insertion order: random rounds of doubling size, each
// sorted along a Morton curve so consecutive insertions are spatially close.
std::vector<std::uint32_t> insertion_order(std::span<const Point3> pts) {
  std::vector<std::uint32_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0u);
  Rng rng = make_rng(0x7e7a5eedull);
  std::shuffle(order.begin(), order.end(), rng);

  Point3 lo = pts[0];
  Point3 hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-300));
  auto code = [&](std::uint32_t i) {
    const Vec3 q = ((pts[i] - lo).cwiseQuotient(extent) * 2097151.0);
    return morton_spread(static_cast<std::uint64_t>(q[0])) |
           morton_spread(static_cast<std::uint64_t>(q[1])) << 1 |
           morton_spread(static_cast<std::uint64_t>(q[2])) << 2;
  };

  std::size_t end = order.size();
  std::vector<std::pair<std::size_t, std::size_t>> rounds;
  while (end > 0) {
    const std::size_t begin = end <= 64 ? 0 : end / 2;
    rounds.emplace_back(begin, end);
    end = begin;
  }
  for (auto [b, e] : rounds) {
    std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
    keyed.reserve(e - b);
    for (std::size_t k = b; k < e; ++k) keyed.emplace_back(code(order[k]), order[k]);
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t k = b; k < e; ++k) order[k] = keyed[k - b].second;
  }
  return order;
}

// Puts the infinite vertex in slot 3 with an even permutation.
void normalize_ghost(std::array<VertexId, 4>& v) {
  static constexpr std::array<std::array<int, 2>, 3> kOthers{{{1, 2}, {0, 2}, {0, 1}}};
  for (std::size_t k = 0; k < 3; ++k) {
    if (v[k] != kInf) continue;
    std::swap(v[k], v[3]);
    std::swap(v[static_cast<std::size_t>(kOthers[k][0])], v[static_cast<std::size_t>(kOthers[k][1])]);
    return;
  }
}

class Builder {
 public:
  explicit Builder(std::span<const Point3> pts) : pts_(pts) {}

  TetMesh run();

 private:
  [[nodiscard]] const Point3& P(VertexId v) const { return pts_[v]; }

  TetId new_cell(const std::array<VertexId, 4>& v) {
    if (!free_.empty()) {
      const TetId id = free_.back();
      free_.pop_back();
      cells_[id] = Cell{v};
      stamp_[id] = 0;
      return id;
    }
    cells_.push_back(Cell{v});
    stamp_.push_back(0);
    return static_cast<TetId>(cells_.size() - 1);
  }

  // Orientation of the cell after replacing slot `slot` by p; only for real results.
  [[nodiscard]] predicates::Signed orient_with(const Cell& c, int slot, const Point3& p) const {
    std::array<const Point3*, 4> q{};
    for (int i = 0; i < 4; ++i) q[static_cast<std::size_t>(i)] = i == slot ? &p : &P(c.v[static_cast<std::size_t>(i)]);
    return predicates::orient3d(*q[0], *q[1], *q[2], *q[3]);
  }

  [[nodiscard]] bool real_conflict(const Cell& c, const Point3& p) const {
    const auto s = predicates::insphere(P(c.v[0]), P(c.v[1]), P(c.v[2]), P(c.v[3]), p);
    return !s.uncertain && s.value > 0.0;
  }

  [[nodiscard]] bool conflict(TetId id, const Point3& p) const {
    const Cell& c = cells_[id];
    if (!c.ghost()) return real_conflict(c, p);
    const auto o = predicates::orient3d(P(c.v[0]), P(c.v[1]), P(c.v[2]), p);
    if (!o.uncertain) return o.value > 0.0;
    return real_conflict(cells_[c.n[3]], p);
  }

  void init_simplex(const std::vector<std::uint32_t>& order);
  TetId locate(const Point3& p, TetId start);
  TetId brute_locate(const Point3& p) const;
  bool insert(VertexId pid, TetId base);
  void link_new(const std::vector<TetId>& fresh, VertexId pid);

  std::span<const Point3> pts_;
  std::vector<Cell> cells_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
  std::vector<TetId> free_;
  std::vector<bool> used_;
  Rng walk_rng_ = make_rng(0xa11ce);
  TetId last_ = 0;
};

void Builder::init_simplex(const std::vector<std::uint32_t>& order) {
  const VertexId a = order[0];
  auto farthest = [&](auto score) {
    double best = -1.0;
    VertexId arg = kInf;
    for (VertexId i : order) {
      const double s = score(P(i));
      if (s > best) {
        best = s;
        arg = i;
      }
    }
    return std::make_pair(arg, best);
  };
  const double scale = bbox_diagonal(pts_);
  auto [b, db] = farthest([&](const Point3& q) { return (q - P(a)).squaredNorm(); });
  if (!(db > 0.0)) throw Error(ErrorCode::DegenerateInput, "all points coincide");
  const Vec3 ab = (P(b) - P(a)).normalized();
  auto [c, dc] = farthest([&](const Point3& q) { return (q - P(a)).cross(ab).norm(); });
  if (!(dc > 1e-12 * scale)) throw Error(ErrorCode::DegenerateInput, "all points collinear");
  const Vec3 normal = (P(b) - P(a)).cross(P(c) - P(a)).normalized();
  auto [d, dd] = farthest([&](const Point3& q) { return std::abs((q - P(a)).dot(normal)); });
  if (!(dd > 1e-12 * scale)) throw Error(ErrorCode::DegenerateInput, "all points coplanar");

  std::array<VertexId, 4> v{a, b, c, d};
  if (predicates::orient3d(P(a), P(b), P(c), P(d)).value < 0.0) std::swap(v[0], v[1]);
  const TetId root = new_cell(v);
  std::vector<TetId> fresh{root};
  for (int i = 0; i < 4; ++i) {
    std::array<VertexId, 4> g = v;
    g[static_cast<std::size_t>(i)] = kInf;
    const auto fs = face_slots(i);
    std::swap(g[static_cast<std::size_t>(fs[0])], g[static_cast<std::size_t>(fs[1])]);
    normalize_ghost(g);
    fresh.push_back(new_cell(g));
  }
  link_new(fresh, kInf);
  for (VertexId q : v) used_[q] = true;
  last_ = root;
}

// Pairs up all faces of `fresh` that are not yet linked, by vertex triple.
void Builder::link_new(const std::vector<TetId>& fresh, VertexId /*pid*/) {
  struct Key {
    std::array<VertexId, 3> f;
    TetId cell;
    int slot;
  };
  std::vector<Key> keys;
  keys.reserve(fresh.size() * 3);
  for (TetId id : fresh) {
    for (int i = 0; i < 4; ++i) {
      if (cells_[id].n[static_cast<std::size_t>(i)] != kNone) continue;
      const auto fs = face_slots(i);
      std::array<VertexId, 3> f{cells_[id].v[static_cast<std::size_t>(fs[0])],
                                cells_[id].v[static_cast<std::size_t>(fs[1])],
                                cells_[id].v[static_cast<std::size_t>(fs[2])]};
      std::sort(f.begin(), f.end());
      keys.push_back({f, id, i});
    }
  }
  std::sort(keys.begin(), keys.end(), [](const Key& x, const Key& y) {
    return std::tie(x.f, x.cell, x.slot) < std::tie(y.f, y.cell, y.slot);
  });
  for (std::size_t k = 0; k + 1 < keys.size(); k += 2) {
    if (keys[k].f != keys[k + 1].f) {
      throw Error(ErrorCode::DegenerateInput, "triangulation cavity is not closed");
    }
    cells_[keys[k].cell].n[static_cast<std::size_t>(keys[k].slot)] = keys[k + 1].cell;
    cells_[keys[k + 1].cell].n[static_cast<std::size_t>(keys[k + 1].slot)] = keys[k].cell;
  }
  if (keys.size() % 2 != 0) throw Error(ErrorCode::DegenerateInput, "unmatched cavity face");
}

TetId Builder::brute_locate(const Point3& p) const {
  TetId outside = kNone;
  for (TetId id = 0; id < cells_.size(); ++id) {
    const Cell& c = cells_[id];
    if (!c.alive) continue;
    if (c.ghost()) {
      if (outside == kNone && conflict(id, p)) outside = id;
      continue;
    }
    bool inside = true;
    for (int i = 0; i < 4 && inside; ++i) {
      const auto o = orient_with(c, i, p);
      inside = o.uncertain || o.value > 0.0;
    }
    if (inside) return id;
  }
  return outside;
}

TetId Builder::locate(const Point3& p, TetId start) {
  TetId cur = start;
  if (!cells_[cur].alive) cur = 0;
  while (!cells_[cur].alive) ++cur;
  if (cells_[cur].ghost()) cur = cells_[cur].n[3];
  constexpr std::size_t max_steps = 5000;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const Cell& c = cells_[cur];
    const int offset = static_cast<int>(walk_rng_() & 3u);
    bool moved = false;
    for (int k = 0; k < 4; ++k) {
      const int i = (k + offset) & 3;
      const auto o = orient_with(c, i, p);
      if (!o.uncertain && o.value < 0.0) {
        const TetId next = c.n[static_cast<std::size_t>(i)];
        if (cells_[next].ghost()) return next;
        cur = next;
        moved = true;
        break;
      }
    }
    if (!moved) return cur;
  }
  return brute_locate(p);
}

bool Builder::insert(VertexId pid, TetId base) {
  const Point3& p = P(pid);
  if (base == kNone) return false;
  if (!cells_[base].ghost()) {
    for (VertexId v : cells_[base].v) {
      if (P(v) == p) return false;  // duplicate point
    }
  }

  ++epoch_;
  const std::uint32_t tested = epoch_ * 2;
  const std::uint32_t in_cavity = tested + 1;
  ++epoch_;

  std::vector<TetId> cavity{base};
  std::vector<TetId> stack{base};
  stamp_[base] = in_cavity;
  while (!stack.empty()) {
    const TetId t = stack.back();
    stack.pop_back();
    for (TetId nb : cells_[t].n) {
      if (stamp_[nb] == tested || stamp_[nb] == in_cavity) continue;
      if (conflict(nb, p)) {
        stamp_[nb] = in_cavity;
        cavity.push_back(nb);
        stack.push_back(nb);
      } else {
        stamp_[nb] = tested;
      }
    }
  }

  // Shrink until every boundary face sees p (star-shaped cavity).
  auto face_ok = [&](TetId t, int i) {
    const Cell& c = cells_[t];
    const bool result_real = !c.ghost() || i == 3;
    if (!result_real) return true;
    const auto o = orient_with(c, i, p);
    return !o.uncertain && o.value > 0.0;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      const TetId t = cavity[k];
      if (t == base || stamp_[t] != in_cavity) continue;
      for (int i = 0; i < 4; ++i) {
        if (stamp_[cells_[t].n[static_cast<std::size_t>(i)]] == in_cavity) continue;
        if (!face_ok(t, i)) {
          stamp_[t] = tested;
          changed = true;
          break;
        }
      }
    }
    if (changed) {
      // Keep only the part connected to the base cell.
      std::vector<TetId> kept{base};
      std::vector<TetId> todo{base};
      ++epoch_;
      const std::uint32_t seen = epoch_ * 2 + 1;
      ++epoch_;
      stamp_[base] = seen;
      while (!todo.empty()) {
        const TetId t = todo.back();
        todo.pop_back();
        for (TetId nb : cells_[t].n) {
          if (stamp_[nb] == in_cavity) {
            stamp_[nb] = seen;
            kept.push_back(nb);
            todo.push_back(nb);
          }
        }
      }
      for (TetId t : cavity) {
        if (stamp_[t] == in_cavity) stamp_[t] = tested;
      }
      for (TetId t : kept) stamp_[t] = in_cavity;
      cavity = std::move(kept);
    }
  }
  for (int i = 0; i < 4; ++i) {
    if (stamp_[cells_[base].n[static_cast<std::size_t>(i)]] != in_cavity && !face_ok(base, i)) {
      return false;  // p is numerically on a face it cannot be connected to
    }
  }

  std::vector<TetId> fresh;
  fresh.reserve(cavity.size() * 2);
  struct Boundary {
    TetId inside;
    int slot;
    TetId outside;
  };
  std::vector<Boundary> boundary;
  for (TetId t : cavity) {
    for (int i = 0; i < 4; ++i) {
      const TetId nb = cells_[t].n[static_cast<std::size_t>(i)];
      if (stamp_[nb] != in_cavity) boundary.push_back({t, i, nb});
    }
  }
  for (const auto& b : boundary) {
    std::array<VertexId, 4> v = cells_[b.inside].v;
    v[static_cast<std::size_t>(b.slot)] = pid;
    const TetId id = new_cell(v);
    cells_[id].n[static_cast<std::size_t>(b.slot)] = b.outside;
    for (auto& back : cells_[b.outside].n) {
      if (back == b.inside) {
        back = id;
        break;
      }
    }
    fresh.push_back(id);
  }
  for (TetId t : cavity) {
    cells_[t].alive = false;
    free_.push_back(t);
  }
  link_new(fresh, pid);
  for (TetId id : fresh) {
    if (!cells_[id].ghost()) {
      last_ = id;
      break;
    }
  }
  used_[pid] = true;
  return true;
}

TetMesh Builder::run() {
  used_.assign(pts_.size(), false);
  const auto order = insertion_order(pts_);
  init_simplex(order);
  for (VertexId pid : order) {
    if (used_[pid]) continue;
    const TetId base = locate(P(pid), last_);
    insert(pid, base);
  }

  TetMesh mesh;
  mesh.vertices.assign(pts_.begin(), pts_.end());
  std::vector<TetId> remap(cells_.size(), kBoundary);
  for (TetId id = 0; id < cells_.size(); ++id) {
    if (cells_[id].alive && !cells_[id].ghost()) {
      remap[id] = static_cast<TetId>(mesh.tets.size());
      mesh.tets.push_back(Tetra{cells_[id].v});
    }
  }
  mesh.neighbors.reserve(mesh.tets.size());
  for (TetId id = 0; id < cells_.size(); ++id) {
    if (remap[id] == kBoundary) continue;
    std::array<TetId, 4> nb{};
    for (int i = 0; i < 4; ++i) nb[static_cast<std::size_t>(i)] = remap[cells_[id].n[static_cast<std::size_t>(i)]];
    mesh.neighbors.push_back(nb);
  }
  return mesh;
}

}  // namespace

TetMesh delaunay_triangulate(std::span<const Point3> points) {
  if (points.size() < 5) throw Error(ErrorCode::TooFewPoints, "need at least 5 points");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point");
  }
  return Builder(points).run();
}

std::optional<TetId> locate_point(const TetMesh& mesh, const Point3& p, std::optional<TetId> hint) {
  if (mesh.tets.empty()) return std::nullopt;
  TetId cur = hint.value_or(0);
  if (cur >= mesh.tets.size()) cur = 0;
  Rng rng = make_rng(0x10ca7e);
  for (std::size_t step = 0; step < mesh.tets.size() + 16; ++step) {
    Barycentric4 lambda;
    try {
      lambda = barycentric_coords(p, mesh.corners(cur));
    } catch (const Error&) {
      break;
    }
    if (lambda.inside()) return cur;
    // Outside any hull face plane means outside the (convex) hull.
    for (int i = 0; i < 4; ++i) {
      if (lambda[i] < -kBaryEps && mesh.neighbors[cur][static_cast<std::size_t>(i)] == kBoundary) {
        return std::nullopt;
      }
    }
    int pick = -1;
    const int offset = static_cast<int>(rng() & 3u);
    for (int k = 0; k < 4; ++k) {
      const int i = (k + offset) & 3;
      if (lambda[i] < -kBaryEps) {
        pick = i;
        break;
      }
    }
    cur = mesh.neighbors[cur][static_cast<std::size_t>(pick)];
  }
  for (TetId t = 0; t < mesh.tets.size(); ++t) {
    try {
      if (barycentric_coords(p, mesh.corners(t)).inside()) return t;
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

void rebuild_adjacency(TetMesh& mesh) {
  struct Key {
    std::array<VertexId, 3> f;
    TetId tet;
    int slot;
  };
  std::vector<Key> keys;
  keys.reserve(mesh.tets.size() * 4);
  for (TetId t = 0; t < mesh.tets.size(); ++t) {
    for (int i = 0; i < 4; ++i) {
      const auto fs = face_slots(i);
      std::array<VertexId, 3> f{mesh.tets[t][fs[0]], mesh.tets[t][fs[1]], mesh.tets[t][fs[2]]};
      std::sort(f.begin(), f.end());
      keys.push_back({f, t, i});
    }
  }
  std::sort(keys.begin(), keys.end(),
            [](const Key& a, const Key& b) { return std::tie(a.f, a.tet, a.slot) < std::tie(b.f, b.tet, b.slot); });
  mesh.neighbors.assign(mesh.tets.size(), {kBoundary, kBoundary, kBoundary, kBoundary});
  for (std::size_t k = 0; k < keys.size();) {
    std::size_t e = k + 1;
    while (e < keys.size() && keys[e].f == keys[k].f) ++e;
    if (e - k == 2) {
      mesh.neighbors[keys[k].tet][static_cast<std::size_t>(keys[k].slot)] = keys[k + 1].tet;
      mesh.neighbors[keys[k + 1].tet][static_cast<std::size_t>(keys[k + 1].slot)] = keys[k].tet;
    } else if (e - k > 2) {
      throw Error(ErrorCode::ParseError, "face shared by more than two tetrahedra");
    }
    k = e;
  }
}

void write_mesh_dump(const TetMesh& mesh, std::ostream& out) {
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  for (const auto& t : mesh.tets) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
}

TetMesh read_mesh_dump(std::istream& in) {
  TetMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    char kind = 0;
    ss >> kind;
    if (kind == 'v') {
      Point3 p;
      ss >> p[0] >> p[1] >> p[2];
      if (!ss) throw Error(ErrorCode::ParseError, "bad vertex on line " + std::to_string(lineno));
      mesh.vertices.push_back(p);
    } else if (kind == 't') {
      Tetra t;
      ss >> t.v[0] >> t.v[1] >> t.v[2] >> t.v[3];
      if (!ss) throw Error(ErrorCode::ParseError, "bad tet on line " + std::to_string(lineno));
      mesh.tets.push_back(t);
    } else {
      throw Error(ErrorCode::ParseError, "unknown record on line " + std::to_string(lineno));
    }
  }
  for (const auto& t : mesh.tets) {
    for (VertexId v : t.v) {
      if (v >= mesh.vertices.size()) throw Error(ErrorCode::ParseError, "tet references missing vertex");
    }
  }
  rebuild_adjacency(mesh);
  return mesh;
}

std::uint64_t mesh_hash(const TetMesh& mesh) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::uint64_t nv = mesh.vertices.size();
  const std::uint64_t nt = mesh.tets.size();
  feed(&nv, sizeof nv);
  for (const auto& v : mesh.vertices) feed(v.data(), 3 * sizeof(double));
  feed(&nt, sizeof nt);
  for (const auto& t : mesh.tets) feed(t.v.data(), 4 * sizeof(VertexId));
  return h;
}

}  // namespace ttrf
