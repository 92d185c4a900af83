#include "logitunc/synthetic.hpp"

#include <cmath>
#include <random>

#include "logitunc/error.hpp"
#include "logitunc/random.hpp"

namespace logitunc::synthetic {

namespace {

void require_means(const std::vector<Vector>& means) {
  if (means.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one class mean");
  for (const auto& m : means) {
    if (static_cast<std::size_t>(m.size()) != means.size()) {
      throw Error(ErrorCode::InvalidArgument, "each mean must have one entry per class");
    }
  }
}

Vector draw(const Vector& mean, double sd, std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  Vector x(mean.size());
  for (Eigen::Index i = 0; i < mean.size(); ++i) x[i] = mean[i] + sd * normal(rng);
  return x;
}

}  // namespace

std::vector<Vector> axis_means(std::size_t num_classes, double separation) {
  std::vector<Vector> out;
  for (std::size_t i = 0; i < num_classes; ++i) {
    Vector m = Vector::Zero(static_cast<Eigen::Index>(num_classes));
    m[static_cast<Eigen::Index>(i)] = separation;
    out.push_back(std::move(m));
  }
  return out;
}

RecordSet correct_records(const std::vector<Vector>& means, std::size_t n_per_class, std::uint64_t seed,
                          double sd) {
  require_means(means);
  RecordSet set;
  set.num_classes = means.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t cls = 0; cls < means.size(); ++cls) {
    auto rng = make_rng(seed, cls);
    std::size_t kept = 0;
    std::size_t attempts = 0;
    while (kept < n_per_class) {
      if (++attempts > 1000 * (n_per_class + 1)) {
        throw Error(ErrorCode::InvalidArgument, "class mean rarely wins the argmax; cannot draw correct records");
      }
      Vector x = draw(means[cls], sd, rng, normal);
      if (argmax_index(x) != cls) continue;
      set.records.push_back(LogitRecord{std::move(x), cls, cls});
      ++kept;
    }
  }
  return set;
}

RecordSet labelled_records(const std::vector<Vector>& means, std::size_t n_per_class, std::uint64_t seed,
                           double sd) {
  require_means(means);
  RecordSet set;
  set.num_classes = means.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t cls = 0; cls < means.size(); ++cls) {
    auto rng = make_rng(seed, cls);
    for (std::size_t i = 0; i < n_per_class; ++i) {
      Vector x = draw(means[cls], sd, rng, normal);
      const auto pred = argmax_index(x);
      set.records.push_back(LogitRecord{std::move(x), cls, pred});
    }
  }
  return set;
}

std::vector<Vector> rotate_about_centroid(const std::vector<Vector>& means, double radians) {
  require_means(means);
  if (means.size() < 2) throw Error(ErrorCode::InvalidArgument, "rotation needs a 2-D logit plane");
  Vector centroid = Vector::Zero(means.front().size());
  for (const auto& m : means) centroid += m;
  centroid /= static_cast<double>(means.size());
  const double c = std::cos(radians), s = std::sin(radians);
  std::vector<Vector> out;
  for (const auto& m : means) {
    Vector r = m;
    const double dx = m[0] - centroid[0], dy = m[1] - centroid[1];
    r[0] = centroid[0] + c * dx - s * dy;
    r[1] = centroid[1] + s * dx + c * dy;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace logitunc::synthetic
