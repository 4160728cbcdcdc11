#include "cobev/params.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "cobev/common.hpp"

namespace cobev {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = arrays_.emplace(name, std::move(t));
  if (!inserted) throw std::runtime_error("duplicate parameter name: " + name);
  return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::runtime_error("missing parameter: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw std::runtime_error("missing parameter: " + name);
  return it->second;
}

void ParamStore::merge(const ParamStore& other, const std::string& prefix) {
  for (const auto& [k, t] : other.arrays_) add(prefix + k, t);
}

ParamStore ParamStore::subset(const std::string& prefix) const {
  ParamStore out;
  for (const auto& [k, t] : arrays_)
    if (k.rfind(prefix, 0) == 0) out.add(k.substr(prefix.size()), t);
  return out;
}

int64_t ParamStore::total_count() const {
  int64_t n = 0;
  for (const auto& [k, t] : arrays_) n += t.size();
  return n;
}

std::map<std::string, std::string> ParamStore::hashes() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, t] : arrays_)
    out[k] = sha256_hex(t.ptr(), static_cast<size_t>(t.size()) * sizeof(double));
  return out;
}

BoundParams::BoundParams(Tape& tape, const ParamStore& store, std::string prefix)
    : tape_(&tape), prefix_(std::move(prefix)) {
  for (const auto& [k, t] : store.arrays()) vars_.emplace(prefix_ + k, tape.input(t));
}

Var BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw std::runtime_error("unbound parameter: " + name);
  return it->second;
}

std::map<std::string, Tensor> collect_grads(const Tape& tape, const BoundParams& bound,
                                            const ParamStore& store, const std::string& prefix) {
  std::map<std::string, Tensor> out;
  for (const auto& [k, t] : store.arrays()) out[prefix + k] = tape.grad(bound[prefix + k]);
  return out;
}

void AdamOptimizer::step(ParamStore& store, const std::map<std::string, Tensor>& grads,
                         const std::set<std::string>& trainable) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& name : trainable) {
    auto git = grads.find(name);
    if (git == grads.end()) throw std::runtime_error("no gradient for trainable: " + name);
    Tensor& p = store.at(name);
    const Tensor& g = git->second;
    auto& [m, v] = moments_[name];
    if (m.size() != p.size()) {
      m = Tensor(p.shape());
      v = Tensor(p.shape());
    }
    for (int64_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      p[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

namespace {
constexpr char kMagic[4] = {'C', 'B', 'P', 'K'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF64 = 2;
}  // namespace

std::string serialize_params(const ParamStore& store) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(store.arrays().size()));
  for (const auto& [name, t] : store.arrays()) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
    put_u8(out, kDtypeF64);
    put_u8(out, static_cast<uint8_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i) put_u32(out, static_cast<uint32_t>(t.dim(i)));
    for (int64_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
  }
  return out;
}

ParamStore deserialize_params(const std::string& bytes) {
  size_t pos = 0;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint magic");
  pos = 4;
  uint32_t version = get_u32(bytes, pos);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  uint32_t count = get_u32(bytes, pos);
  ParamStore store;
  for (uint32_t a = 0; a < count; ++a) {
    uint32_t nlen = get_u32(bytes, pos);
    if (pos + nlen > bytes.size()) throw std::runtime_error("truncated checkpoint");
    std::string name = bytes.substr(pos, nlen);
    pos += nlen;
    uint8_t dtype = get_u8(bytes, pos);
    if (dtype != kDtypeF64) throw std::runtime_error("unsupported dtype in checkpoint");
    uint8_t ndim = get_u8(bytes, pos);
    std::vector<int> shape(ndim);
    for (int i = 0; i < ndim; ++i) shape[static_cast<size_t>(i)] = static_cast<int>(get_u32(bytes, pos));
    Tensor t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t[i] = get_f64(bytes, pos);
    store.add(name, std::move(t));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  write_file(path, serialize_params(store));
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw MissingArtifactError("checkpoint not found: " + path.string());
  return deserialize_params(read_file(path));
}

Tensor he_conv(Rng& rng, int cout, int cin, int kh, int kw) {
  Tensor t({cout, cin, kh, kw});
  double std = std::sqrt(2.0 / (static_cast<double>(cin) * kh * kw));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, std);
  return t;
}

Tensor he_linear(Rng& rng, int out, int in) {
  Tensor t({out, in});
  double std = std::sqrt(2.0 / static_cast<double>(in));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, std);
  return t;
}

Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor full(std::vector<int> shape, double v) { return Tensor(std::move(shape), v); }

Tensor identity_conv1x1(int c) {
  Tensor t({c, c, 1, 1});
  for (int i = 0; i < c; ++i) t[t.at4(i, i, 0, 0)] = 1.0;
  return t;
}

}  // namespace cobev
