#include "logitunc/uncertainty_model.hpp"

#include <algorithm>
#include <sstream>

#include "logitunc/random.hpp"

namespace logitunc {

const FittedClass* UncertaintyModel::fitted(std::size_t cls) const {
  if (cls >= per_class.size()) return nullptr;
  return std::get_if<FittedClass>(&per_class[cls]);
}

std::size_t UncertaintyModel::fitted_count() const {
  return static_cast<std::size_t>(std::count_if(per_class.begin(), per_class.end(), [](const auto& e) {
    return std::holds_alternative<FittedClass>(e);
  }));
}

void UncertaintyModel::validate() const {
  if (num_classes == 0) throw Error(ErrorCode::InvalidArgument, "model has zero classes");
  if (per_class.size() != num_classes) {
    throw Error(ErrorCode::InvalidArgument, "model must hold exactly one entry per class");
  }
  hyperparams.validate();
  for (std::size_t i = 0; i < num_classes; ++i) {
    if (const auto* f = fitted(i)) {
      if (f->gmm.dimension() != num_classes) {
        throw Error(ErrorCode::InvalidArgument,
                    "class " + std::to_string(i) + " mixture dimension differs from class count");
      }
      f->calibration.validate();
    }
  }
}

void ModelFitOptions::validate() const {
  fit.validate();
  if (c_max == 0) throw Error(ErrorCode::InvalidArgument, "c_max must be positive");
  if (!(elbow_tol > 0.0 && elbow_tol < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "elbow_tol must lie in (0, 1)");
  }
  if (min_samples_per_class && *min_samples_per_class < 2) {
    throw Error(ErrorCode::InvalidArgument, "min_samples_per_class must be at least 2");
  }
}

std::size_t default_min_samples(std::size_t num_classes) {
  return std::max<std::size_t>(50, 5 * num_classes);
}

namespace {

ClassEntry fit_class(const RecordSet& train, std::size_t cls, const Hyperparams& hp,
                     const ModelFitOptions& options, std::size_t min_samples) {
  const PointMatrix points = correct_logits_of_class(train, cls);
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) return UnfittedClass{"no correct predictions"};
  if (n < min_samples) {
    return UnfittedClass{"too few correct predictions (" + std::to_string(n) + " < " +
                         std::to_string(min_samples) + ")"};
  }

  FitConfig config = options.fit;
  config.seed = derive_seed(options.fit.seed, cls);
  try {
    auto selection = select_components(points, std::min(options.c_max, n), options.elbow_tol, config);
    GmmModel gmm = std::move(selection.models[selection.selected - 1]);
    ClassCalibration calibration = calibrate_class(gmm, points, hp);
    return FittedClass{std::move(gmm), calibration};
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::DegenerateScores:
      case ErrorCode::NumericalFailure:
      case ErrorCode::InsufficientData:
        return UnfittedClass{e.what()};
      default:
        throw;
    }
  }
}

}  // namespace

UncertaintyModel fit_uncertainty_model(const RecordSet& train, const Hyperparams& hp,
                                       const ModelFitOptions& options) {
  hp.validate();
  options.validate();
  if (train.empty()) throw Error(ErrorCode::EmptyInput, "training set is empty");
  train.validate();

  const std::size_t min_samples =
      options.min_samples_per_class.value_or(default_min_samples(train.num_classes));

  UncertaintyModel model;
  model.num_classes = train.num_classes;
  model.hyperparams = hp;
  model.per_class.reserve(train.num_classes);
  for (std::size_t cls = 0; cls < train.num_classes; ++cls) {
    model.per_class.push_back(fit_class(train, cls, hp, options, min_samples));
  }
  if (model.fitted_count() == 0) {
    throw Error(ErrorCode::NoFittableClass, "no class had enough correctly predicted samples");
  }
  return model;
}

double class_uncertainty(const UncertaintyModel& model, std::size_t cls, const VectorRef& x) {
  const auto* f = model.fitted(cls);
  if (f == nullptr) {
    throw Error(ErrorCode::ClassNotFitted, "class " + std::to_string(cls) + " has no fitted mixture");
  }
  return class_uncertainty(f->gmm, f->calibration, x);
}

Prediction predict(const UncertaintyModel& model, const VectorRef& logits) {
  if (static_cast<std::size_t>(logits.size()) != model.num_classes) {
    throw Error(ErrorCode::InvalidArgument, "logit vector length differs from class count");
  }
  if (!logits.allFinite()) throw Error(ErrorCode::InvalidArgument, "logits must be finite");
  const std::size_t cls = argmax_index(logits);
  return Prediction{cls, class_uncertainty(model, cls, logits)};
}

namespace {

std::string describe_indices(const std::vector<std::size_t>& indices) {
  std::ostringstream os;
  os << indices.size() << " record(s) predicted into unfitted classes, indices: ";
  constexpr std::size_t kShown = 20;
  for (std::size_t i = 0; i < std::min(indices.size(), kShown); ++i) {
    os << (i ? "," : "") << indices[i];
  }
  if (indices.size() > kShown) os << ",...";
  return os.str();
}

}  // namespace

UnfittedPredictionError::UnfittedPredictionError(std::vector<std::size_t> indices)
    : Error(ErrorCode::ClassNotFitted, describe_indices(indices)), indices_(std::move(indices)) {}

std::vector<double> batch_predict(const UncertaintyModel& model, const RecordSet& records) {
  std::vector<double> out;
  out.reserve(records.size());
  std::vector<std::size_t> unfitted;
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(predict(model, records.records[i].logits).uncertainty);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ClassNotFitted) throw;
      unfitted.push_back(i);
      out.push_back(0.0);
    }
  }
  if (!unfitted.empty()) throw UnfittedPredictionError(std::move(unfitted));
  return out;
}

}  // namespace logitunc
