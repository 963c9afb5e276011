#pragma once

// Locale-independent CSV / JSON output.

#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwp {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest form that round-trips, at most 17 significant digits; "nan",
/// "inf", "-inf" for non-finite values.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(const std::string& s);
  CsvWriter& operator<<(const char* s) { return *this << std::string(s); }
  CsvWriter& operator<<(int v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(long v) { return *this << std::to_string(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << std::to_string(v); }
  /// Terminates the row; throws std::logic_error on a column count mismatch.
  void end_row();

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

/// Creates parent directories.  Throws IoError when the file cannot be
/// written.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::filesystem::path ensure_directory(const std::filesystem::path& dir);

/// `t,c0,c1,...` at the given samples (the integrator's steps when dt <= 0),
/// optionally followed by `theta,H,tau,H_tilde` for tb-2.4 / rev-tb-2.5
/// (the scaled pair is tb-2.4's chart: nan for rev-tb-2.5 and Theta <= 0).
std::string trajectory_csv(const Trajectory& tr, double dt = 0.0,
                           const FamilySpec* with_integrals = nullptr);

nlohmann::json params_json(const Params& p);
nlohmann::json trajectory_metadata(const FamilySpec& spec,
                                   const Trajectory& tr,
                                   IntegrationStatus status);

}  // namespace bwp
