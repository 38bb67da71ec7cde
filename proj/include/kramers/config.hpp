#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kramers/exitlab.hpp"
#include "kramers/measures.hpp"
#include "kramers/quasipotential.hpp"
#include "kramers/system.hpp"

namespace kramers {

/// Line-oriented "key = value" file with dotted keys and '#' comments.
class ConfigFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(std::string_view text);
  static ConfigFile load(const std::string& path);

  const std::vector<Entry>& entries() const { return entries_; }
  bool has(const std::string& key) const;
  const Entry& entry(const std::string& key) const;
  /// Throws "missing required key" when absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  long long get_int(const std::string& key, std::optional<long long> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback = {}) const;
  Vec get_vec(const std::string& key, int dimension, std::optional<Vec> fallback = std::nullopt) const;

  /// Rejects keys outside `allowed` with their line numbers.
  void require_known(const std::vector<std::string>& allowed) const;

 private:
  std::vector<Entry> entries_;
};

/// Every key the experiment schema accepts.
const std::vector<std::string>& known_config_keys();

struct KramersBlock {
  double window_delta = -1.0;
  double location_delta = 0.25;
  int bootstrap = 1000;
  double t_cap_factor = 10.0;
  double fallback_t_cap = 100.0;
  double max_timeout_fraction = 0.2;
  /// Existing quasipotential report to validate against; computed when empty.
  std::string quasipotential_report;
};

struct CycleBlock {
  double rho = 0.1;
  double rho_prime = 0.5;
  double t_cap = 1e6;
};

struct IsBlock {
  double horizon = 1.0;
  /// identity | constant | transfer | report
  std::string tilt = "transfer";
  double level = 1.0;
  std::optional<Vec> target;
  std::string report;
};

struct ExperimentConfig {
  ConfigFile file;
  SystemSpec system;
  std::optional<LevyMeasure> measure;
  std::vector<double> epsilons = {0.4, 0.3, 0.2, 0.15};
  int paths = 1;
  std::uint64_t seed = 1;
  int workers = 1;
  double dt = 0.0;
  double t_cap = 0.0;
  double horizon = 1.0;
  std::uint64_t jump_cap = 500'000'000;
  Vec start;
  QuasiPotentialOptions qp;
  std::optional<Vec> qp_target;
  KramersBlock kramers;
  CycleBlock cycle;
  IsBlock is;
  int sample_count = 1000;

  static ExperimentConfig from(const ConfigFile& file);
  /// Exit experiment with the run and kramers blocks applied.
  ExitExperiment experiment() const;
};

SystemSpec build_system(const ConfigFile& file);
LevyMeasure build_measure(const ConfigFile& file, int dimension);

}  // namespace kramers
