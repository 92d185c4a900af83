#include "logitunc/records.hpp"

#include <cmath>
#include <string>

#include "logitunc/error.hpp"

namespace logitunc {

std::size_t argmax_index(const VectorRef& values) {
  if (values.size() == 0) {
    throw Error(ErrorCode::InvalidArgument, "argmax of an empty vector");
  }
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  }
  return best;
}

void RecordSet::validate() const {
  if (num_classes == 0) throw Error(ErrorCode::InvalidArgument, "record set has zero classes");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto where = "record " + std::to_string(i);
    if (static_cast<std::size_t>(r.logits.size()) != num_classes) {
      throw Error(ErrorCode::InvalidArgument, where + ": logit dimension differs from class count");
    }
    if (!r.logits.allFinite()) throw Error(ErrorCode::InvalidArgument, where + ": non-finite logit");
    if (r.true_label >= num_classes || r.predicted_label >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, where + ": label outside [0, k)");
    }
    if (argmax_index(r.logits) != r.predicted_label) {
      throw Error(ErrorCode::PredictionMismatch, where + ": predicted label is not the logit argmax");
    }
  }
}

PointMatrix correct_logits_of_class(const RecordSet& set, std::size_t cls) {
  std::size_t count = 0;
  for (const auto& r : set.records) {
    if (r.correct() && r.true_label == cls) ++count;
  }
  PointMatrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(set.num_classes));
  Eigen::Index row = 0;
  for (const auto& r : set.records) {
    if (r.correct() && r.true_label == cls) out.row(row++) = r.logits.transpose();
  }
  return out;
}

}  // namespace logitunc
