#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "passforge/backend.hpp"
#include "passforge/env.hpp"
#include "passforge/generators.hpp"
#include "passforge/ppo.hpp"
#include "passforge/simulator.hpp"

namespace passforge {

inline constexpr const char* kToolVersion = "passforge 0.1.0";

struct BackendSpec {
  std::optional<std::string> file;  // calibration JSON, resolved against the config directory
  Topology topology = Topology::HeavyHexFragment;
  int qubits = 12;
  bool heterogeneous = true;
  std::uint64_t noise_seed = 0;
  double spread = 0.5;
};

struct CorpusSpec {
  enum class Kind { File, Random, Benchmark } kind = Kind::Random;
  std::string file;
  int count = 0;
  int min_qubits = 4;
  int max_qubits = 8;
  double depth_factor = 3.0;
  std::uint64_t seed = 0;
  BenchmarkKind benchmark = BenchmarkKind::GHZ;
  std::vector<int> qubits;
};

struct NamedCircuit {
  std::string name;
  QuantumCircuit circuit;
};

struct BenchSpec {
  std::vector<BenchmarkKind> kinds{BenchmarkKind::QFT, BenchmarkKind::QPE};
  int train_qubits = 3;
  std::vector<int> qubits{4, 6, 8, 10, 12};
};

struct EvalSpec {
  std::vector<std::string> methods{"policy", "fidelity_optimized", "time_optimized", "random", "greedy", "es"};
  int es_budget = 20;
};

/// Validated run configuration loaded from a JSON file. Unknown keys are
/// rejected at every level.
struct RunConfig {
  std::filesystem::path base_dir = ".";
  EnvConfig env{};
  PpoConfig ppo{};
  Curriculum curriculum{};
  std::vector<BackendSpec> backends{BackendSpec{}};
  int train_perturbations = 0;  // perturbed copies of each backend in the training pool
  std::vector<CorpusSpec> corpus;
  NoiseConfig noise{};
  std::optional<std::string> checkpoint;
  std::optional<std::string> circuit;
  std::vector<PassId> toggles = default_toggles();
  BenchSpec bench{};
  EvalSpec eval{};
  std::uint64_t seed = 0;
  std::string out = "runs";
  nlohmann::json source;  // the parsed document, for hashing and archiving

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
  static RunConfig load(const std::filesystem::path& path);

  /// Applies a seed override to every seeded component.
  void set_seed(std::uint64_t s);
  std::uint64_t hash() const;

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<BackendModel> load_backends() const;
  /// Backends plus train_perturbations perturbed copies of each.
  std::vector<BackendModel> training_pool() const;
  std::vector<NamedCircuit> load_corpus() const;
};

}  // namespace passforge
