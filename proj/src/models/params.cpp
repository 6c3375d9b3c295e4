#include "loadfc/models/params.hpp"

#include <cmath>

#include "loadfc/error.hpp"

namespace loadfc::models {

Tensor& ModelParams::add(std::string path, Tensor tensor) {
  if (index_.contains(path))
    throw DomainError("duplicate parameter path '" + path + "'");
  index_.emplace(path, entries_.size());
  entries_.push_back(Entry{std::move(path), std::move(tensor)});
  return entries_.back().tensor;
}

Tensor& ModelParams::add_weight(std::string path, std::size_t fan_in,
                                std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor w({fan_in, fan_out});
  for (double& x : w.data()) x = rng.uniform(-bound, bound);
  return add(std::move(path), std::move(w));
}

Tensor& ModelParams::add_constant(std::string path, std::size_t size,
                                  double value) {
  return add(std::move(path), Tensor({size}, value));
}

bool ModelParams::contains(std::string_view path) const {
  return index_.find(path) != index_.end();
}

Tensor& ModelParams::at(std::string_view path) {
  auto it = index_.find(path);
  if (it == index_.end())
    throw DomainError("unknown parameter '" + std::string(path) + "'");
  return entries_[it->second].tensor;
}

const Tensor& ModelParams::at(std::string_view path) const {
  return const_cast<ModelParams*>(this)->at(path);
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

}  // namespace loadfc::models
