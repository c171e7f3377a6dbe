#include "clex/datagen.hpp"

namespace clex {

void SyntheticSpec::validate() const {
  if (samples_per_cluster < 1) throw Error(ErrorCode::InvalidArgument, "samples_per_cluster must be >= 1");
  if (means.rows() < 1 || means.cols() < 1) throw Error(ErrorCode::InvalidArgument, "synthetic spec has no clusters");
  if (means.rows() != stds.rows() || means.cols() != stds.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "means and stds must have the same shape");
  }
  if ((stds.array() < 0.0).any()) throw Error(ErrorCode::InvalidArgument, "standard deviations must be >= 0");
  if (means.rows() * samples_per_cluster < 2) throw Error(ErrorCode::InvalidArgument, "spec yields fewer than 2 rows");
}

SyntheticSpec SyntheticSpec::dataset_one(int samples_per_cluster) {
  SyntheticSpec s;
  s.id = SyntheticId::One;
  s.samples_per_cluster = samples_per_cluster;
  s.means.resize(2, 5);
  s.means << 11, 9, 7, 5, 3,
             3, 3, 3, 3, 3;
  s.stds = Matrix::Ones(2, 5);
  return s;
}

SyntheticSpec SyntheticSpec::dataset_two(int samples_per_cluster) {
  SyntheticSpec s;
  s.id = SyntheticId::Two;
  s.samples_per_cluster = samples_per_cluster;
  s.means.resize(4, 5);
  s.means << 3, 3, 3, 3, 3,
             11, 9, 7, 5, 4,
             19, 15, 11, 7, 5,
             27, 21, 15, 9, 6;
  s.stds.resize(4, 5);
  for (Eigen::Index c = 0; c < 4; ++c) s.stds.row(c) << 0.5, 0.5, 0.5, 2, 2;
  return s;
}

LabeledData generate(const SyntheticSpec& spec, RandomSeed seed) {
  spec.validate();
  const auto clusters = spec.means.rows();
  const auto features = spec.means.cols();
  const auto per = static_cast<Eigen::Index>(spec.samples_per_cluster);
  Matrix values(clusters * per, features);
  std::vector<int> labels(static_cast<std::size_t>(clusters * per));
  Rng rng = make_rng(derive(seed, {stream_tag("datagen")}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index c = 0; c < clusters; ++c) {
    for (Eigen::Index r = 0; r < per; ++r) {
      const auto row = c * per + r;
      labels[static_cast<std::size_t>(row)] = static_cast<int>(c);
      for (Eigen::Index f = 0; f < features; ++f) {
        values(row, f) = spec.means(c, f) + spec.stds(c, f) * normal(rng);
      }
    }
  }
  std::vector<std::string> names;
  for (Eigen::Index f = 0; f < features; ++f) names.push_back("feature" + std::to_string(f + 1));
  return {DataMatrix(std::move(values), std::move(names)),
          ClusterAssignment(std::move(labels), static_cast<int>(clusters))};
}

std::vector<LabeledData> generate_batch(const SyntheticSpec& spec, int count, RandomSeed seed) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "batch count must be >= 1");
  std::vector<LabeledData> batch;
  batch.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    batch.push_back(generate(spec, derive(seed, {stream_tag("datagen.batch"), static_cast<std::uint64_t>(i)})));
  }
  return batch;
}

}  // namespace clex
