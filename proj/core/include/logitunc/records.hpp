#pragma once

#include <cstddef>
#include <vector>

#include "logitunc/types.hpp"

namespace logitunc {

/// One classifier output: the raw logit vector with its true and predicted labels.
struct LogitRecord {
  Vector logits;
  std::size_t true_label = 0;
  std::size_t predicted_label = 0;

  bool correct() const noexcept { return true_label == predicted_label; }
};

struct RecordSet {
  std::size_t num_classes = 0;
  std::vector<LogitRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  /// Throws InvalidArgument if any record breaks the set's invariants.
  void validate() const;
};

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax_index(const VectorRef& values);

/// Logits of the records with true_label == predicted_label == cls, one per row.
PointMatrix correct_logits_of_class(const RecordSet& set, std::size_t cls);

}  // namespace logitunc
