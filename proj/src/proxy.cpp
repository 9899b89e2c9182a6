#include "volcurve/proxy.hpp"

#include <cmath>
#include <limits>

#include "volcurve/error.hpp"

namespace volcurve {

void VolumeTable::add(const std::string& provider, int year, double volume) {
  if (!(volume >= 0.0)) {
    throw Error(ErrorCode::invalid_argument,
                "negative volume for provider " + provider + " in year " + std::to_string(year));
  }
  auto [it, inserted] = entries_[provider].emplace(year, volume);
  if (!inserted) {
    throw Error(ErrorCode::duplicate_key,
                "duplicate volume entry for provider " + provider + " in year " + std::to_string(year));
  }
}

const std::map<int, double>& VolumeTable::history(const std::string& provider) const {
  auto it = entries_.find(provider);
  if (it == entries_.end()) {
    throw Error(ErrorCode::unknown_provider, "unknown provider volume: " + provider);
  }
  return it->second;
}

int VolumeTable::history_start() const {
  int start = std::numeric_limits<int>::max();
  for (const auto& [provider, years] : entries_) {
    if (!years.empty()) start = std::min(start, years.begin()->first);
  }
  return start;
}

int VolumeTable::last_year() const {
  int last = std::numeric_limits<int>::min();
  for (const auto& [provider, years] : entries_) {
    if (!years.empty()) last = std::max(last, years.rbegin()->first);
  }
  return last;
}

double cumulative_average(const VolumeTable& table, const std::string& provider, int year) {
  double total = 0.0;
  int nonzero = 0;
  for (const auto& [y, v] : table.history(provider)) {
    if (y > year) break;
    if (v > 0.0) {
      total += v;
      ++nonzero;
    }
  }
  if (nonzero == 0) {
    throw Error(ErrorCode::no_volume_history,
                "no volume history for provider " + provider + " up to year " + std::to_string(year));
  }
  return total / nonzero;
}

double simple_average(const VolumeTable& table, const std::string& provider) {
  double total = 0.0;
  int nonzero = 0;
  for (const auto& [y, v] : table.history(provider)) {
    if (v > 0.0) {
      total += v;
      ++nonzero;
    }
  }
  if (nonzero == 0) {
    throw Error(ErrorCode::no_volume_history, "no volume history for provider " + provider);
  }
  return total / nonzero;
}

double provider_volume(const VolumeTable& table, VolumeMode mode, const std::string& provider,
                       int year, const CaseloadCounts& caseloads) {
  switch (mode) {
    case VolumeMode::caseload: {
      auto it = caseloads.find({provider, year});
      if (it == caseloads.end()) {
        throw Error(ErrorCode::unknown_provider,
                    "no caseload for provider " + provider + " in year " + std::to_string(year));
      }
      return static_cast<double>(it->second);
    }
    case VolumeMode::simple_average:
      return simple_average(table, provider);
    case VolumeMode::cumulative_average:
      return cumulative_average(table, provider, year);
  }
  throw Error(ErrorCode::invalid_argument, "unknown volume mode");
}

std::vector<VolumeSummary> volume_variability(const VolumeTable& table) {
  std::vector<VolumeSummary> out;
  for (const auto& [provider, years] : table.entries()) {
    VolumeSummary s;
    s.provider = provider;
    double total = 0.0;
    for (const auto& [y, v] : years) {
      if (v > 0.0) {
        total += v;
        ++s.n_years;
      }
    }
    if (s.n_years == 0) continue;
    s.mean = total / s.n_years;
    if (s.n_years > 1) {
      double ss = 0.0;
      for (const auto& [y, v] : years) {
        if (v > 0.0) ss += (v - s.mean) * (v - s.mean);
      }
      s.sd = std::sqrt(ss / (s.n_years - 1));
    } else {
      s.single_year = true;
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace volcurve
