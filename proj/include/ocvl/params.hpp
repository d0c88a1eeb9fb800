#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ocvl/autodiff.hpp"
#include "ocvl/matrix.hpp"

namespace ocvl {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent per-item seeds from a root seed.
std::uint64_t mix_seed(std::uint64_t root, std::uint64_t index);

/// Named parameter tensors. Iteration order is the lexicographic name order,
/// which fixes the layout of checkpoints and of optimizer state.
class ParamStore {
 public:
  struct Entry {
    Matrix value;
    bool trainable = true;
  };

  void add(const std::string& name, Matrix value, bool trainable = true);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  bool trainable(const std::string& name) const;
  const std::map<std::string, Entry>& entries() const { return entries_; }
  std::map<std::string, Entry>& entries() { return entries_; }
  std::size_t scalar_count(bool trainable_only = true) const;

  /// Zero-filled store with the same names and shapes (used for gradients and
  /// optimizer moments).
  ParamStore zeros_like() const;

  friend bool operator==(const ParamStore& a, const ParamStore& b);

 private:
  std::map<std::string, Entry> entries_;
};

/// Gaussian init with standard deviation `stddev`.
Matrix random_normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
/// Uniform init in [-limit, limit].
Matrix random_uniform(std::size_t rows, std::size_t cols, double limit, Rng& rng);

/// Binds parameters of a store onto one tape, creating leaves on first use.
/// Non-trainable parameters and a binder built with `track_grads = false`
/// produce constant leaves.
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParamStore& store, bool track_grads = true)
      : tape_(tape), store_(store), track_grads_(track_grads) {}

  Var operator[](const std::string& name);
  Tape& tape() { return tape_; }

  /// Adds d(root)/d(param) of every bound trainable parameter into `grads`.
  void accumulate_grads(ParamStore& grads) const;

 private:
  Tape& tape_;
  const ParamStore& store_;
  bool track_grads_;
  std::map<std::string, Var> bound_;
};

}  // namespace ocvl
