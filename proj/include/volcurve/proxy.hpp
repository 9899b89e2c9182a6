#pragma once

#include <map>
#include <string>
#include <vector>

namespace volcurve {

enum class VolumeMode { caseload, simple_average, cumulative_average };

// Yearly provider volumes. Years are calendar years; the earliest year in
// the table is the start of the available history.
class VolumeTable {
 public:
  // Throws Error(invalid_argument) on a negative volume and
  // Error(duplicate_key) if (provider, year) is already present.
  void add(const std::string& provider, int year, double volume);

  bool empty() const { return entries_.empty(); }
  bool contains(const std::string& provider) const { return entries_.contains(provider); }
  const std::map<int, double>& history(const std::string& provider) const;
  const std::map<std::string, std::map<int, double>>& entries() const { return entries_; }

  int history_start() const;
  int last_year() const;

 private:
  std::map<std::string, std::map<int, double>> entries_;
};

/// Average of the non-zero yearly volumes of `provider` up to and including
/// `year`. Throws Error(unknown_provider) if the provider has no entries and
/// Error(no_volume_history) if all of them are zero.
double cumulative_average(const VolumeTable& table, const std::string& provider, int year);

/// Average of the non-zero yearly volumes over all years.
double simple_average(const VolumeTable& table, const std::string& provider);

// Patient counts per (provider, year), the caseload volume.
using CaseloadCounts = std::map<std::pair<std::string, int>, long>;

double provider_volume(const VolumeTable& table, VolumeMode mode, const std::string& provider,
                       int year, const CaseloadCounts& caseloads);

struct VolumeSummary {
  std::string provider;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  int n_years = 0;  // non-zero years
  bool single_year = false;
};

/// Per-provider mean and sample standard deviation of the non-zero yearly
/// volumes. Providers without any non-zero year are left out.
std::vector<VolumeSummary> volume_variability(const VolumeTable& table);

}  // namespace volcurve
