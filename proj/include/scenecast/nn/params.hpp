#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenecast/nn/tensor.hpp"

namespace scenecast {

/// splitmix64-seeded xoshiro256** generator. Its output and the derived
/// uniform/normal draws are identical on every platform, unlike the
/// distributions in <random>.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Independent child stream; does not disturb this generator's sequence
  /// beyond one draw.
  Rng fork();

 private:
  std::uint64_t s_[4];
};

}  // namespace scenecast

namespace scenecast::nn {

/// Owns named parameters. Names are unique; iteration is in name order so
/// checkpoints and optimizer traversals are deterministic. Parameter
/// addresses stay valid for the store's lifetime.
class ParameterStore {
 public:
  /// Uniform in +-sqrt(1/fan_in).
  Parameter& create(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);
  Parameter& create_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  [[nodiscard]] Parameter& at(const std::string& name);
  [[nodiscard]] const Parameter& at(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const { return params_.count(name) != 0; }
  [[nodiscard]] std::vector<Parameter*> all();
  [[nodiscard]] std::vector<const Parameter*> all() const;
  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;

  void zero_grad();
  void clear_grad();

  /// Overwrites values of existing parameters from `other`; names and
  /// shapes must match exactly.
  void copy_values_from(const ParameterStore& other);

 private:
  std::map<std::string, Parameter> params_;
};

/// Checkpoint container: a JSON document
///   {"format": "scenecast-params", "version": 1, "meta": {...},
///    "params": {"<name>": {"shape": [rows, cols], "data": [row-major]}}}
/// Doubles are written in shortest round-trip form, so save/load is exact.
void save_checkpoint(const ParameterStore& store, const std::string& meta_json, const std::filesystem::path& path);

/// Loads values into an already-constructed store. Every stored parameter
/// must exist with the same shape, and vice versa. Returns the meta blob.
std::string load_checkpoint(ParameterStore& store, const std::filesystem::path& path);

/// Reads only the meta blob.
std::string read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace scenecast::nn
