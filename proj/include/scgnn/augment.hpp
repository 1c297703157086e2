#pragma once

#include "scgnn/common.hpp"
#include "scgnn/dataset.hpp"
#include "scgnn/rng.hpp"

#include <set>
#include <string>
#include <vector>

namespace scgnn {

/// Clip lengths (seconds) drawn for the clip-and-zero-pad augmentation.
struct AugmentationSpec {
  std::vector<int> clip_choices_s = {5, 10, 15, 20, 25};
  int full_length_s = 30;
  double sampling_rate_hz = kSamplingRateHz;

  void validate() const {
    if (clip_choices_s.empty()) throw UsageError("clip_choices must be non-empty");
    for (int c : clip_choices_s) {
      if (c <= 0) throw UsageError("clip choices must be positive seconds");
      if (c > full_length_s)
        throw UsageError("clip choice " + std::to_string(c) +
                         "s exceeds full length " + std::to_string(full_length_s) + "s");
    }
  }
};

/// Keeps the first t_c seconds and zeroes the rest; shape is preserved.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
clip_and_pad(const Eigen::MatrixBase<Derived>& waveform, double t_c_s,
             double sampling_rate_hz = kSamplingRateHz) {
  const auto n = waveform.rows();
  const long keep = static_cast<long>(t_c_s * sampling_rate_hz + 0.5);
  if (keep > n)
    throw UsageError("clip length " + std::to_string(t_c_s) + "s exceeds waveform (" +
                     std::to_string(n) + " samples)");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      waveform;
  if (keep < n) out.bottomRows(n - keep).setZero();
  return out;
}

/// One network snapshot in a contrastive batch: all stations of one event,
/// optionally clipped to the same length.
struct BatchSample {
  std::string event_id;
  int event_index = 0;          // index into the source event list
  bool is_augmented = false;
  double clip_s = 0.0;          // 0 means full length
};

/// Even-sized batch laid out as (original, augmentation) adjacent pairs:
/// positions 0,2,4,... are originals, 1,3,5,... their augmentations.
struct ContrastiveBatch {
  std::vector<BatchSample> samples;

  int size() const { return static_cast<int>(samples.size()); }

  /// Positive partner of position m.
  int partner(int m) const { return m % 2 == 0 ? m + 1 : m - 1; }
};

/// Pairs each event with one clip-and-pad augmentation whose length is drawn
/// uniformly from the configured choices. The same clip applies network-wide.
inline ContrastiveBatch make_contrastive_batch(
    const std::vector<int>& event_indices,
    const std::vector<std::string>& event_ids, const AugmentationSpec& spec,
    std::uint64_t rng_seed) {
  spec.validate();
  std::set<int> unique(event_indices.begin(), event_indices.end());
  if (unique.size() != event_indices.size())
    throw UsageError("duplicate events in a contrastive batch");
  Rng rng(rng_seed);
  ContrastiveBatch batch;
  for (std::size_t i = 0; i < event_indices.size(); ++i) {
    const int clip =
        spec.clip_choices_s[rng.uniform_int(spec.clip_choices_s.size())];
    BatchSample orig;
    orig.event_id = event_ids[i];
    orig.event_index = event_indices[i];
    BatchSample aug = orig;
    aug.is_augmented = true;
    aug.clip_s = clip;
    batch.samples.push_back(orig);
    batch.samples.push_back(aug);
  }
  return batch;
}

}  // namespace scgnn
