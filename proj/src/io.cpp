#include "bwp/io.hpp"

#include "bwp/integrals.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace bwp {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  // Shortest round-trip representation is at most 17 significant digits.
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    out_ << (i ? "," : "") << header[i];
  }
  out_ << '\n';
}

CsvWriter& CsvWriter::operator<<(double v) { return *this << format_double(v); }

CsvWriter& CsvWriter::operator<<(const std::string& s) {
  if (filled_ >= columns_) throw std::logic_error("csv row has too many fields");
  out_ << (filled_ ? "," : "") << s;
  ++filled_;
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("csv row has too few fields");
  out_ << '\n';
  filled_ = 0;
}

std::filesystem::path ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir.string() + "'" +
                  (ec ? ": " + ec.message() : ""));
  }
  return dir;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string trajectory_csv(const Trajectory& tr, double dt, const FamilySpec* with_integrals) {
  std::vector<std::pair<double, State>> rows;
  if (dt > 0.0 && tr.has_dense() && tr.size() > 1) {
    rows = tr.sample(tr.backward() ? -dt : dt);
  } else {
    for (std::size_t i = 0; i < tr.size(); ++i) rows.emplace_back(tr.times()[i], tr.states()[i]);
  }
  const bool ints = with_integrals && (with_integrals->id() == FamilyId::Tb24 ||
                                       with_integrals->id() == FamilyId::RevTb25);
  std::vector<std::string> header{"t"};
  for (int i = 0; i < tr.dim(); ++i) header.push_back("c" + std::to_string(i));
  if (ints) {
    for (const char* h : {"theta", "H", "tau", "H_tilde"}) header.emplace_back(h);
  }
  std::ostringstream os;
  CsvWriter w(os, header);
  for (const auto& [t, x] : rows) {
    w << t;
    for (int i = 0; i < x.size(); ++i) w << x[i];
    if (ints) {
      const IntegralPair ip = integrals(with_integrals->id(), x);
      w << ip.theta << ip.hamiltonian;
      if (with_integrals->id() == FamilyId::Tb24 && ip.theta > 0.0) {
        const ScaledCoords sc = scaled_coords(ip.theta, ip.hamiltonian);
        w << sc.tau << sc.h_tilde;
      } else {
        w << std::nan("") << std::nan("");
      }
    }
    w.end_row();
  }
  return os.str();
}

nlohmann::json params_json(const Params& p) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : p) j[k] = v;
  return j;
}

nlohmann::json trajectory_metadata(const FamilySpec& spec, const Trajectory& tr,
                                   IntegrationStatus status) {
  return {
      {"family", std::string(family_key(spec.id()))},
      {"params", params_json(spec.params())},
      {"tolerances", {{"rel", tr.tolerances.rel}, {"abs", tr.tolerances.abs}}},
      {"steps",
       {{"accepted", tr.accepted_steps},
        {"rejected", tr.rejected_steps},
        {"evaluations", tr.evaluations}}},
      {"status", std::string(status_name(status))},
      {"t_begin", tr.empty() ? 0.0 : tr.t_begin()},
      {"t_end", tr.empty() ? 0.0 : tr.t_end()},
  };
}

}  // namespace bwp
