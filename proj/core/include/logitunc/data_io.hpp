#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "logitunc/records.hpp"
#include "logitunc/uncertainty_model.hpp"

namespace logitunc {

inline constexpr int kModelSchemaVersion = 1;

/// Reads a logit CSV: header `logit_0,...,logit_{k-1},label,pred`, one sample
/// per row. The stored prediction must equal the logit argmax.
RecordSet load_logit_records(const std::filesystem::path& path);
RecordSet parse_logit_records(std::istream& in);

/// Writes the same format with round-trip precision.
void save_logit_records(const RecordSet& set, const std::filesystem::path& path);
std::string format_logit_records(const RecordSet& set);

std::string model_to_json(const UncertaintyModel& model);
UncertaintyModel model_from_json(std::string_view text);

void save_model(const UncertaintyModel& model, const std::filesystem::path& path);
UncertaintyModel load_model(const std::filesystem::path& path);

/// CSV with columns sample_index,predicted_label,uncertainty.
std::string format_uncertainty_report(const RecordSet& records, std::span<const double> uncertainties);
void write_uncertainty_report(const RecordSet& records, std::span<const double> uncertainties,
                              const std::filesystem::path& path);

struct ReportRow {
  std::size_t sample_index = 0;
  std::size_t predicted_label = 0;
  double uncertainty = 0.0;
};

std::vector<ReportRow> load_uncertainty_report(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

/// Parses a complete field as a finite double; std::nullopt otherwise.
std::optional<double> parse_real(std::string_view field);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace logitunc
