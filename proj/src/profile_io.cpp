#include "specfid/profile_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "specfid/errors.hpp"

namespace specfid {

std::vector<SpectralProfile> ProfileSet::with_label(Label label) const {
  std::vector<SpectralProfile> out;
  for (std::size_t i = 0; i < profiles.size(); ++i)
    if (labels[i] == label) out.push_back(profiles[i]);
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw NumericError("cannot format value");
  return {buf, ptr};
}

std::string profiles_to_csv(const ProfileSet& set) {
  if (set.profiles.size() != set.labels.size()) throw UsageError("profile/label count mismatch");
  std::size_t length = set.profiles.empty() ? 0 : set.profiles.front().size();
  std::string out = "label";
  for (std::size_t r = 0; r < length; ++r) out += ",r" + std::to_string(r);
  out += '\n';
  for (std::size_t i = 0; i < set.profiles.size(); ++i) {
    const auto& p = set.profiles[i];
    if (p.size() != length) throw UsageError("profile length mismatch");
    out += to_string(set.labels[i]);
    for (double v : p.values) {
      if (!std::isfinite(v)) throw NumericError("non-finite profile value");
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_profile_csv(const ProfileSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << profiles_to_csv(set);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

ProfileSet parse_profile_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty profile CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.empty() || header[0] != "label") throw DataError("profile CSV must start with a 'label' column");
  for (std::size_t r = 1; r < header.size(); ++r) {
    if (header[r] != "r" + std::to_string(r - 1)) throw DataError("unexpected profile CSV column '" + header[r] + "'");
  }
  const std::size_t length = header.size() - 1;
  if (length == 0) throw DataError("profile CSV has no value columns");

  ProfileSet set;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != length + 1) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(length + 1) + " fields");
    }
    SpectralProfile p;
    p.values.resize(length);
    for (std::size_t r = 0; r < length; ++r) {
      const auto& f = fields[r + 1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), p.values[r]);
      if (ec != std::errc{} || ptr != f.data() + f.size() || !std::isfinite(p.values[r])) {
        throw DataError("line " + std::to_string(line_no) + ": bad number '" + f + "'");
      }
    }
    set.labels.push_back(parse_label(fields[0]));
    set.profiles.push_back(std::move(p));
  }
  return set;
}

ProfileSet read_profile_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile_csv(ss.str());
}

std::vector<std::vector<double>> profile_values(const std::vector<SpectralProfile>& profiles) {
  std::vector<std::vector<double>> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(p.values);
  return out;
}

}  // namespace specfid
