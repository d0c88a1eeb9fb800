#include "ocvl/params.hpp"

namespace ocvl {

std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void ParamStore::add(const std::string& name, Matrix value, bool trainable) {
  if (!entries_.emplace(name, Entry{std::move(value), trainable}).second) {
    throw ArgumentError("duplicate parameter '" + name + "'");
  }
}

const Matrix& ParamStore::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second.value;
}

Matrix& ParamStore::at(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second.value;
}

bool ParamStore::trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ArgumentError("unknown parameter '" + name + "'");
  return it->second.trainable;
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    if (!trainable_only || e.trainable) n += e.value.size();
  }
  return n;
}

ParamStore ParamStore::zeros_like() const {
  ParamStore out;
  for (const auto& [name, e] : entries_) {
    out.add(name, Matrix(e.value.rows(), e.value.cols()), e.trainable);
  }
  return out;
}

bool operator==(const ParamStore& a, const ParamStore& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (auto ia = a.entries_.begin(), ib = b.entries_.begin(); ia != a.entries_.end(); ++ia, ++ib) {
    if (ia->first != ib->first || ia->second.trainable != ib->second.trainable ||
        !(ia->second.value == ib->second.value)) {
      return false;
    }
  }
  return true;
}

Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

Matrix random_uniform(std::size_t rows, std::size_t cols, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

Var ParamBinder::operator[](const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const bool grads = track_grads_ && store_.trainable(name);
  Var v = tape_.leaf(store_.at(name), grads);
  bound_.emplace(name, v);
  return v;
}

void ParamBinder::accumulate_grads(ParamStore& grads) const {
  for (const auto& [name, v] : bound_) {
    // Leaves that the loss never reached have no gradient buffer.
    if (!tape_.requires_grad(v.id) || !tape_.has_grad(v.id)) continue;
    Matrix& dst = grads.at(name);
    const Matrix& g = tape_.grad(v.id);
    for (std::size_t i = 0; i < g.size(); ++i) dst.data()[i] += g.data()[i];
  }
}

}  // namespace ocvl
