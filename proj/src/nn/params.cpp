#include "scenecast/nn/params.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "scenecast/io.hpp"

namespace scenecast {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

double Rng::normal() {
  // Box-Muller; one draw per call keeps the stream simple to reason about.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Rng Rng::fork() { return Rng(next()); }

}  // namespace scenecast

namespace scenecast::nn {

using nlohmann::json;

Parameter& ParameterStore::create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                  Eigen::Index fan_in, Rng& rng) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.value.resize(rows, cols);
  const double bound = std::sqrt(1.0 / static_cast<double>(std::max<Eigen::Index>(fan_in, 1)));
  for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-bound, bound);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::create_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (params_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.value = Matrix::Zero(rows, cols);
  return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(&p);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.zero_grad();
}

void ParameterStore::clear_grad() {
  for (auto& [_, p] : params_) p.grad.reset();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.params_.size() != params_.size()) throw std::invalid_argument("parameter sets differ in size");
  for (auto& [name, p] : params_) {
    const Parameter& q = other.at(name);
    if (q.value.rows() != p.value.rows() || q.value.cols() != p.value.cols())
      throw ShapeError("parameter " + name + ": shape " + shape_string(q.value) + " vs " + shape_string(p.value));
    p.value = q.value;
  }
}

void save_checkpoint(const ParameterStore& store, const std::string& meta_json, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "scenecast-params";
  doc["version"] = 1;
  doc["meta"] = meta_json.empty() ? json::object() : json::parse(meta_json);
  json params = json::object();
  for (const Parameter* p : store.all()) {
    json entry;
    entry["shape"] = {p->value.rows(), p->value.cols()};
    entry["data"] = std::vector<double>(p->value.data(), p->value.data() + p->value.size());
    params[p->name] = std::move(entry);
  }
  doc["params"] = std::move(params);
  io::write_atomic(path, doc.dump() + "\n");
}

namespace {

json read_checkpoint_doc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  json doc = json::parse(in);
  if (doc.value("format", "") != "scenecast-params" || doc.value("version", 0) != 1)
    throw std::runtime_error("not a scenecast parameter checkpoint: " + path.string());
  return doc;
}

}  // namespace

std::string load_checkpoint(ParameterStore& store, const std::filesystem::path& path) {
  json doc = read_checkpoint_doc(path);
  const json& params = doc.at("params");
  if (params.size() != store.size())
    throw std::runtime_error("checkpoint " + path.string() + " has " + std::to_string(params.size()) +
                             " parameters, model expects " + std::to_string(store.size()));
  for (Parameter* p : store.all()) {
    if (!params.contains(p->name)) throw std::runtime_error("checkpoint missing parameter " + p->name);
    const json& e = params.at(p->name);
    const auto rows = e.at("shape").at(0).get<Eigen::Index>();
    const auto cols = e.at("shape").at(1).get<Eigen::Index>();
    if (rows != p->value.rows() || cols != p->value.cols())
      throw ShapeError("checkpoint parameter " + p->name + " has shape (" + std::to_string(rows) + ", " +
                       std::to_string(cols) + "), model expects " + shape_string(p->value));
    const auto data = e.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw std::runtime_error("checkpoint parameter " + p->name + ": data length mismatch");
    p->value = Eigen::Map<const Matrix>(data.data(), rows, cols);
  }
  return doc.at("meta").dump();
}

std::string read_checkpoint_meta(const std::filesystem::path& path) { return read_checkpoint_doc(path).at("meta").dump(); }

}  // namespace scenecast::nn
