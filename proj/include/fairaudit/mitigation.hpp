#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairaudit/dataset.hpp"
#include "fairaudit/fairness.hpp"
#include "fairaudit/regressors.hpp"

namespace fairaudit {

enum class MitigationMethod { oversample, mixup, perturb, reweight };

std::string_view to_string(MitigationMethod method);
MitigationMethod mitigation_method_from_string(std::string_view name);

struct MitigationSpec {
  MitigationMethod method = MitigationMethod::oversample;
  std::string feature;
  double alpha = 0.2;   // MixUp Beta(alpha, alpha)
  double sigma = 0.01;  // Perturbation noise, z-scored units
  std::uint64_t seed = 0;

  void validate() const;
  std::string label() const { return std::string(to_string(method)); }
  static MitigationSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

enum class SampleOrigin { original, duplicated, synthetic };

std::string_view to_string(SampleOrigin origin);

struct AugmentedTrainSet {
  EncodedDataset data;
  std::optional<WeightVector> weights;
  std::vector<SampleOrigin> origin;
  /// Index of the source row for duplicates, first parent for synthetic rows,
  /// the row itself for originals.
  std::vector<std::size_t> source;

  /// Writes the encoded CSV followed by __origin, __source and __weight columns.
  void write_csv(std::ostream& out) const;
};

/// Target quartile (0..3) of every sample, cut at the 25/50/75th percentiles
/// of `y` with linear interpolation.
std::vector<int> target_strata(std::span<const double> y);

/// Number of extra minority rows each stratum receives so that the minority
/// reaches `target` while its stratum histogram stays proportional (largest
/// remainder rounding).
std::array<std::size_t, 4> allocate_deficit(const std::array<std::size_t, 4>& minority_counts, std::size_t target);

AugmentedTrainSet oversample(const EncodedDataset& train, const GroupAssignment& groups, std::uint64_t seed);
AugmentedTrainSet mixup(const EncodedDataset& train, const GroupAssignment& groups, double alpha,
                        std::uint64_t seed);
AugmentedTrainSet perturb(const EncodedDataset& train, const GroupAssignment& groups, double sigma,
                          std::uint64_t seed);

struct GroupWeights {
  double low = 0.0;   // raw n / (2 n_low)
  double high = 0.0;  // raw n / (2 n_high)
};

GroupWeights group_weights(std::size_t n_low, std::size_t n_high);
WeightVector reweight(const EncodedDataset& train, const GroupAssignment& groups);

/// Convex combination lambda * a + (1 - lambda) * b.
Sample mix_samples(const Sample& a, const Sample& b, double lambda);

AugmentedTrainSet apply(const MitigationSpec& spec, const EncodedDataset& train);

}  // namespace fairaudit
