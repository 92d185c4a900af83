#include "logitunc/data_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "logitunc/error.hpp"

namespace logitunc {

namespace {

using nlohmann::json;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<long long> parse_integer(std::string_view field) {
  long long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || field.empty()) return std::nullopt;
  return value;
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

std::string line_label(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format real value");
  return std::string(buf, ptr);
}

std::optional<double> parse_real(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot move output into place at " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Logit CSV

RecordSet parse_logit_records(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  RecordSet set;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_csv(line);

    if (!have_header) {
      if (fields.size() < 3 || fields[fields.size() - 2] != "label" || fields.back() != "pred") {
        throw Error(ErrorCode::MalformedRow, line_label(line_no) + ": header must be logit_0,...,label,pred");
      }
      for (std::size_t i = 0; i + 2 < fields.size(); ++i) {
        if (fields[i] != "logit_" + std::to_string(i)) {
          throw Error(ErrorCode::MalformedRow,
                      line_label(line_no) + ": expected header column logit_" + std::to_string(i));
        }
      }
      set.num_classes = fields.size() - 2;
      have_header = true;
      continue;
    }

    const std::size_t k = set.num_classes;
    if (fields.size() != k + 2) {
      throw Error(ErrorCode::MalformedRow, line_label(line_no) + ": expected " + std::to_string(k + 2) +
                                               " fields, found " + std::to_string(fields.size()));
    }
    LogitRecord rec;
    rec.logits.resize(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) {
      const auto v = parse_real(fields[i]);
      if (!v) {
        throw Error(ErrorCode::MalformedRow,
                    line_label(line_no) + ": logit_" + std::to_string(i) + " is not a finite number");
      }
      rec.logits[static_cast<Eigen::Index>(i)] = *v;
    }
    const auto label = parse_integer(fields[k]);
    const auto pred = parse_integer(fields[k + 1]);
    if (!label || !pred) {
      throw Error(ErrorCode::MalformedRow, line_label(line_no) + ": labels must be integers");
    }
    const auto in_range = [k](long long v) { return v >= 0 && static_cast<std::size_t>(v) < k; };
    if (!in_range(*label) || !in_range(*pred)) {
      throw Error(ErrorCode::LabelOutOfRange, line_label(line_no) + ": label outside [0, " +
                                                  std::to_string(k) + ")");
    }
    rec.true_label = static_cast<std::size_t>(*label);
    rec.predicted_label = static_cast<std::size_t>(*pred);
    const auto argmax = argmax_index(rec.logits);
    if (argmax != rec.predicted_label) {
      throw Error(ErrorCode::PredictionMismatch, line_label(line_no) + ": stored pred " +
                                                     std::to_string(rec.predicted_label) +
                                                     " but logit argmax is " + std::to_string(argmax));
    }
    set.records.push_back(std::move(rec));
  }
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read error");
  if (!have_header) throw Error(ErrorCode::EmptyFile, "no header row");
  return set;
}

RecordSet load_logit_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return parse_logit_records(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

std::string format_logit_records(const RecordSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.num_classes; ++i) out += "logit_" + std::to_string(i) + ",";
  out += "label,pred\n";
  for (const auto& r : set.records) {
    for (Eigen::Index i = 0; i < r.logits.size(); ++i) out += format_real(r.logits[i]) + ",";
    out += std::to_string(r.true_label) + "," + std::to_string(r.predicted_label) + "\n";
  }
  return out;
}

void save_logit_records(const RecordSet& set, const std::filesystem::path& path) {
  set.validate();
  write_file_atomic(path, format_logit_records(set));
}

// ---------------------------------------------------------------------------
// Model file

namespace {

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json matrix_to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptModelFile, what); }

const json& field(const json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) corrupt(std::string("missing field '") + name + "'");
  return obj.at(name);
}

double real_field(const json& obj, const char* name) {
  const auto& v = field(obj, name);
  if (!v.is_number()) corrupt(std::string("field '") + name + "' is not a number");
  return v.get<double>();
}

Vector vector_from_json(const json& arr, std::size_t expected, const char* what) {
  if (!arr.is_array() || arr.size() != expected) {
    corrupt(std::string(what) + " has the wrong length");
  }
  Vector out(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    if (!arr[i].is_number()) corrupt(std::string(what) + " contains a non-number");
    out[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return out;
}

Matrix matrix_from_json(const json& arr, std::size_t d, const char* what) {
  if (!arr.is_array() || arr.size() != d) corrupt(std::string(what) + " has the wrong shape");
  Matrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = vector_from_json(arr[i], d, what).transpose();
  }
  return out;
}

json class_to_json(const ClassEntry& entry) {
  if (const auto* u = std::get_if<UnfittedClass>(&entry)) {
    return json{{"status", "unfitted"}, {"reason", u->reason}};
  }
  const auto& f = std::get<FittedClass>(entry);
  json weights = json::array(), means = json::array(), chol = json::array();
  for (const auto& comp : f.gmm.components()) {
    weights.push_back(comp.weight);
    means.push_back(vector_to_json(comp.mean));
    chol.push_back(matrix_to_json(comp.cholesky));
  }
  return json{{"status", "fitted"},
              {"weights", weights},
              {"means", means},
              {"covariance_cholesky", chol},
              {"max_log_density", f.calibration.max_log_density},
              {"s_q1", f.calibration.s_q1},
              {"s_q2", f.calibration.s_q2},
              {"c1", f.calibration.c1},
              {"c2", f.calibration.c2}};
}

ClassEntry class_from_json(const json& obj, std::size_t d) {
  const auto& status = field(obj, "status");
  if (status == "unfitted") {
    const auto& reason = field(obj, "reason");
    if (!reason.is_string()) corrupt("unfitted reason is not a string");
    return UnfittedClass{reason.get<std::string>()};
  }
  if (status != "fitted") corrupt("unknown class status");

  const auto& weights = field(obj, "weights");
  const auto& means = field(obj, "means");
  const auto& chol = field(obj, "covariance_cholesky");
  if (!weights.is_array() || weights.empty() || !means.is_array() || !chol.is_array() ||
      means.size() != weights.size() || chol.size() != weights.size()) {
    corrupt("component arrays are missing or disagree in length");
  }
  std::vector<GaussianComponent> comps;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!weights[j].is_number()) corrupt("weight is not a number");
    comps.push_back(GaussianComponent{weights[j].get<double>(), vector_from_json(means[j], d, "mean"),
                                      matrix_from_json(chol[j], d, "covariance_cholesky")});
  }
  ClassCalibration cal;
  cal.max_log_density = real_field(obj, "max_log_density");
  cal.s_q1 = real_field(obj, "s_q1");
  cal.s_q2 = real_field(obj, "s_q2");
  cal.c1 = real_field(obj, "c1");
  cal.c2 = real_field(obj, "c2");
  try {
    return FittedClass{GmmModel(std::move(comps)), cal};
  } catch (const Error& e) {
    corrupt(e.what());
  }
}

}  // namespace

std::string model_to_json(const UncertaintyModel& model) {
  model.validate();
  json classes = json::array();
  for (const auto& entry : model.per_class) classes.push_back(class_to_json(entry));
  const auto& hp = model.hyperparams;
  json doc{{"schema_version", kModelSchemaVersion},
           {"num_classes", model.num_classes},
           {"hyperparameters", {{"u1", hp.u1}, {"u2", hp.u2}, {"q1", hp.q1}, {"q2", hp.q2}}},
           {"classes", classes}};
  return doc.dump(2) + "\n";
}

UncertaintyModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    corrupt(std::string("not valid JSON: ") + e.what());
  }
  const auto& version = field(doc, "schema_version");
  if (!version.is_number_integer()) corrupt("schema_version is not an integer");
  if (version.get<long long>() != kModelSchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch,
                "model schema_version " + version.dump() + ", expected " +
                    std::to_string(kModelSchemaVersion));
  }

  UncertaintyModel model;
  const auto& k = field(doc, "num_classes");
  if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) corrupt("num_classes must be positive");
  model.num_classes = k.get<std::size_t>();

  const auto& hp = field(doc, "hyperparameters");
  model.hyperparams = Hyperparams{real_field(hp, "u1"), real_field(hp, "u2"), real_field(hp, "q1"),
                                  real_field(hp, "q2")};

  const auto& classes = field(doc, "classes");
  if (!classes.is_array() || classes.size() != model.num_classes) {
    corrupt("classes must hold one entry per class");
  }
  for (const auto& c : classes) model.per_class.push_back(class_from_json(c, model.num_classes));

  try {
    model.validate();
  } catch (const Error& e) {
    corrupt(e.what());
  }
  return model;
}

void save_model(const UncertaintyModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model));
}

UncertaintyModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

// ---------------------------------------------------------------------------
// Uncertainty report

std::string format_uncertainty_report(const RecordSet& records, std::span<const double> uncertainties) {
  if (records.size() != uncertainties.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(records.size()) + " records but " +
                                               std::to_string(uncertainties.size()) + " uncertainties");
  }
  std::string out = "sample_index,predicted_label,uncertainty\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(records.records[i].predicted_label) + "," +
           format_real(uncertainties[i]) + "\n";
  }
  return out;
}

void write_uncertainty_report(const RecordSet& records, std::span<const double> uncertainties,
                              const std::filesystem::path& path) {
  write_file_atomic(path, format_uncertainty_report(records, uncertainties));
}

std::vector<ReportRow> load_uncertainty_report(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      if (fields.size() != 3 || fields[0] != "sample_index" || fields[1] != "predicted_label" ||
          fields[2] != "uncertainty") {
        throw Error(ErrorCode::MalformedRow, path.string() + ": unexpected report header");
      }
      have_header = true;
      continue;
    }
    const auto idx = fields.size() == 3 ? parse_integer(fields[0]) : std::nullopt;
    const auto label = fields.size() == 3 ? parse_integer(fields[1]) : std::nullopt;
    const auto u = fields.size() == 3 ? parse_real(fields[2]) : std::nullopt;
    if (!idx || !label || !u || *idx < 0 || *label < 0) {
      throw Error(ErrorCode::MalformedRow, path.string() + ": " + line_label(line_no));
    }
    rows.push_back(ReportRow{static_cast<std::size_t>(*idx), static_cast<std::size_t>(*label), *u});
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, path.string() + ": no header row");
  return rows;
}

}  // namespace logitunc
