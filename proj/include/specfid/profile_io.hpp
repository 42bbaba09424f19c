#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "specfid/image.hpp"
#include "specfid/spectrum.hpp"

namespace specfid {

/// Profiles with one label each; the in-memory form of a profile CSV.
struct ProfileSet {
  std::vector<SpectralProfile> profiles;
  std::vector<Label> labels;

  std::size_t size() const { return profiles.size(); }
  /// Profiles carrying `label`, in file order.
  std::vector<SpectralProfile> with_label(Label label) const;
};

/// Shortest decimal that round-trips the double.
std::string format_double(double value);

/// CSV with header `label,r0,...,r{L-1}`, one row per profile.
std::string profiles_to_csv(const ProfileSet& set);
void write_profile_csv(const ProfileSet& set, const std::filesystem::path& path);

/// Throws DataError on a malformed header, ragged rows or bad numbers.
ProfileSet parse_profile_csv(const std::string& text);
ProfileSet read_profile_csv(const std::filesystem::path& path);

std::vector<std::vector<double>> profile_values(const std::vector<SpectralProfile>& profiles);

}  // namespace specfid
