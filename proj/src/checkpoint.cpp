#include "mf/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "mf/error.hpp"

namespace mf {

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
  if (by_name_.count(name)) throw DataError("parameter store: duplicate name " + name);
  order_.push_back(name);
  return by_name_.emplace(name, std::move(t)).first->second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw DataError("parameter store: missing tensor " + name);
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw DataError("parameter store: missing tensor " + name);
  return it->second;
}

bool ParameterStore::has(const std::string& name) const { return by_name_.count(name) > 0; }

std::size_t ParameterStore::total_parameters() const {
  std::size_t n = 0;
  for (const auto& name : order_) n += by_name_.at(name).numel();
  return n;
}

void ParameterStore::zero_grads() {
  for (const auto& name : order_) by_name_.at(name).zero_grad();
}

double ParameterStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& name : order_) {
    const Tensor& t = by_name_.at(name);
    if (!t.grad) continue;
    for (double g : *t.grad) sq += g * g;
  }
  return std::sqrt(sq);
}

void ParameterStore::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (const auto& name : order_) {
    Tensor& t = by_name_.at(name);
    if (!t.grad) continue;
    for (double& g : *t.grad) g *= s;
  }
}

ParameterStore ParameterStore::clone() const {
  ParameterStore out;
  for (const auto& name : order_) {
    const Tensor& src = by_name_.at(name);
    out.add(name, Tensor::from(src.shape, *src.values, src.requires_grad));
  }
  return out;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (order_ != other.order_)
    throw DataError("parameter store: incompatible stores in copy_values_from");
  for (const auto& name : order_) {
    Tensor& dst = by_name_.at(name);
    const Tensor& src = other.by_name_.at(name);
    if (dst.shape != src.shape)
      throw DimensionError("parameter store: shape mismatch for " + name);
    *dst.values = *src.values;
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'E', 'T', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw DataError("checkpoint: truncated file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}

double get_f64(std::istream& is) {
  const std::uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open for write: " + path);
  os.write(kMagic, 8);
  put_u64(os, store.names().size());
  for (const auto& name : store.names()) {
    const Tensor& t = store.get(name);
    put_u64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(os, t.shape.size());
    for (std::size_t d : t.shape) put_u64(os, d);
    for (double v : *t.values) put_f64(os, v);
  }
  if (!os) throw DataError("checkpoint: write failed: " + path);
}

ParameterStore load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("checkpoint: bad magic in " + path);
  const std::uint64_t count = get_u64(is);
  ParameterStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_len = get_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (!is) throw DataError("checkpoint: truncated name");
    const std::uint64_t rank = get_u64(is);
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      shape[r] = static_cast<std::size_t>(get_u64(is));
      numel *= shape[r];
    }
    std::vector<double> values(numel);
    for (std::size_t j = 0; j < numel; ++j) values[j] = get_f64(is);
    store.add(name, Tensor::from(std::move(shape), std::move(values), true));
  }
  return store;
}

}  // namespace mf
