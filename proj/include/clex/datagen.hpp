#pragma once

#include <vector>

#include "clex/core.hpp"
#include "clex/random.hpp"

namespace clex {

enum class SyntheticId { One, Two };

/// Gaussian blobs: row block c of the output is drawn from
/// Normal(means(c, f), stds(c, f)) independently per feature.
struct SyntheticSpec {
  SyntheticId id = SyntheticId::One;
  int samples_per_cluster = 50;
  Matrix means;  // clusters x features
  Matrix stds;   // clusters x features

  int clusters() const noexcept { return static_cast<int>(means.rows()); }
  void validate() const;

  /// Two clusters, five features with shrinking mean gaps, unit stds.
  static SyntheticSpec dataset_one(int samples_per_cluster = 50);
  /// Four clusters; features 1-3 tight (sd 0.5), features 4-5 wide (sd 2).
  static SyntheticSpec dataset_two(int samples_per_cluster = 50);
};

struct LabeledData {
  DataMatrix data;
  ClusterAssignment truth;
};

LabeledData generate(const SyntheticSpec& spec, RandomSeed seed);
std::vector<LabeledData> generate_batch(const SyntheticSpec& spec, int count, RandomSeed seed);

}  // namespace clex
