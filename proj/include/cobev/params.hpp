#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "cobev/autodiff.hpp"
#include "cobev/rng.hpp"
#include "cobev/tensor.hpp"

namespace cobev {

// Named parameter arrays for one model (or one extractor pair). Ordered map
// keeps serialization and hashing deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return arrays_.count(name) > 0; }
  void merge(const ParamStore& other, const std::string& prefix = "");
  ParamStore subset(const std::string& prefix) const;

  std::map<std::string, Tensor>& arrays() { return arrays_; }
  const std::map<std::string, Tensor>& arrays() const { return arrays_; }

  int64_t total_count() const;
  std::map<std::string, std::string> hashes() const;  // per-array sha256

 private:
  std::map<std::string, Tensor> arrays_;
};

// Binds every array of a store as tape leaves so one backward pass yields
// gradients for all of them.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ParamStore& store, std::string prefix = "");
  Var operator[](const std::string& name) const;

 private:
  const Tape* tape_;
  std::string prefix_;
  std::map<std::string, Var> vars_;
};

std::map<std::string, Tensor> collect_grads(const Tape& tape, const BoundParams& bound,
                                            const ParamStore& store,
                                            const std::string& prefix = "");

class AdamOptimizer {
 public:
  explicit AdamOptimizer(double lr) : lr_(lr) {}
  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  // Updates only names present in `trainable`; everything else is untouched.
  void step(ParamStore& store, const std::map<std::string, Tensor>& grads,
            const std::set<std::string>& trainable);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int64_t t_ = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments_;
};

// Binary checkpoint container: magic, version, then per-array
// name/shape/dtype/payload, all little-endian.
std::string serialize_params(const ParamStore& store);
ParamStore deserialize_params(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

// ---- initializers ----
Tensor he_conv(Rng& rng, int cout, int cin, int kh, int kw);
Tensor he_linear(Rng& rng, int out, int in);
Tensor zeros(std::vector<int> shape);
Tensor full(std::vector<int> shape, double v);
Tensor identity_conv1x1(int c);  // [C,C,1,1] identity projection

}  // namespace cobev
