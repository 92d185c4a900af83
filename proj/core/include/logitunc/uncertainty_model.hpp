#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "logitunc/calibration.hpp"
#include "logitunc/error.hpp"
#include "logitunc/gmm.hpp"
#include "logitunc/records.hpp"

namespace logitunc {

struct FittedClass {
  GmmModel gmm;
  ClassCalibration calibration;
};

struct UnfittedClass {
  std::string reason;
};

using ClassEntry = std::variant<FittedClass, UnfittedClass>;

/// Per-class mixtures and logistic calibrations over a k-class logit space.
struct UncertaintyModel {
  std::size_t num_classes = 0;
  Hyperparams hyperparams;
  std::vector<ClassEntry> per_class;

  /// nullptr when the class is unfitted.
  const FittedClass* fitted(std::size_t cls) const;

  std::size_t fitted_count() const;

  /// Throws InvalidArgument if any structural or per-class invariant fails.
  void validate() const;
};

struct ModelFitOptions {
  FitConfig fit;
  std::size_t c_max = 5;
  double elbow_tol = 0.01;
  /// Defaults to default_min_samples(k) when unset.
  std::optional<std::size_t> min_samples_per_class;

  void validate() const;
};

/// max(50, 5 k): below this a full-covariance fit in k dimensions is not meaningful.
std::size_t default_min_samples(std::size_t num_classes);

/// Fits one mixture per class on the correctly predicted training logits of
/// that class and calibrates it. Classes with too little data, or whose
/// scores degenerate, are recorded as unfitted. Throws NoFittableClass when
/// no class could be fitted.
UncertaintyModel fit_uncertainty_model(const RecordSet& train, const Hyperparams& hp,
                                       const ModelFitOptions& options);

struct Prediction {
  std::size_t predicted_class = 0;
  double uncertainty = 0.0;
};

/// Argmax class (lowest index on ties) and its uncertainty. Throws
/// ClassNotFitted if that class has no fitted mixture.
Prediction predict(const UncertaintyModel& model, const VectorRef& logits);

/// Uncertainty of `x` under class `cls` regardless of the argmax.
double class_uncertainty(const UncertaintyModel& model, std::size_t cls, const VectorRef& x);

/// Raised by batch_predict after scanning the whole batch; carries every
/// offending record index in ascending order.
class UnfittedPredictionError : public Error {
 public:
  explicit UnfittedPredictionError(std::vector<std::size_t> indices);
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

std::vector<double> batch_predict(const UncertaintyModel& model, const RecordSet& records);

}  // namespace logitunc
