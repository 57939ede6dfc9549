#include "ttrf/field.hpp"

#include "ttrf/error.hpp"
#include "ttrf/random.hpp"

namespace ttrf {

template <typename S>
FeatureField<S> init_field(const TetMesh& mesh, const PointCloud& cloud, Eigen::Index dim, std::uint64_t seed) {
  if (mesh.vertices.size() != cloud.size()) {
    throw Error(ErrorCode::SizeMismatch, "mesh has " + std::to_string(mesh.vertices.size()) +
                                             " vertices but the cloud has " + std::to_string(cloud.size()) +
                                             " points");
  }
  if (dim < 4) throw Error(ErrorCode::InvalidArgument, "feature dimension must be at least 4");
  FeatureField<S> field(static_cast<Eigen::Index>(cloud.size()), dim);
  Rng rng = make_rng(seed, 0xfea7);
  std::uniform_real_distribution<double> noise(-kFeatureInitRange, kFeatureInitRange);
  for (Eigen::Index v = 0; v < field.num_vertices(); ++v) {
    const Rgba& c = cloud.colors[static_cast<std::size_t>(v)];
    for (int k = 0; k < 4; ++k) field.features(v, k) = static_cast<S>(c[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 4; k < dim; ++k) field.features(v, k) = static_cast<S>(noise(rng));
  }
  return field;
}

template FeatureField<float> init_field<float>(const TetMesh&, const PointCloud&, Eigen::Index, std::uint64_t);
template FeatureField<double> init_field<double>(const TetMesh&, const PointCloud&, Eigen::Index, std::uint64_t);

}  // namespace ttrf
