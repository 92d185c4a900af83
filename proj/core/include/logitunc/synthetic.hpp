#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "logitunc/records.hpp"

// Gaussian logit generators for demos, tests and benchmarks.
namespace logitunc::synthetic {

/// Class means separation * e_i in a k-dimensional logit space.
std::vector<Vector> axis_means(std::size_t num_classes, double separation = 4.0);

/// n_per_class correctly predicted records per class: logits ~ N(mean_i, sd^2 I),
/// redrawn until the argmax equals i.
RecordSet correct_records(const std::vector<Vector>& means, std::size_t n_per_class, std::uint64_t seed,
                          double sd = 1.0);

/// n_per_class draws per class kept as-is; predicted label is the argmax and
/// may disagree with the true label.
RecordSet labelled_records(const std::vector<Vector>& means, std::size_t n_per_class, std::uint64_t seed,
                           double sd = 1.0);

/// Rotates every mean by `radians` in the plane of the first two logit
/// coordinates, about the centroid of the means.
std::vector<Vector> rotate_about_centroid(const std::vector<Vector>& means, double radians);

}  // namespace logitunc::synthetic
