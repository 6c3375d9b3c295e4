#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "loadfc/rng.hpp"
#include "loadfc/tensor.hpp"

namespace loadfc::models {

// Named parameter tensors, iterated in insertion order. The set of names is
// fixed once a model has been built.
class ModelParams {
 public:
  struct Entry {
    std::string path;
    Tensor tensor;
  };

  // Throws DomainError on a duplicate path.
  Tensor& add(std::string path, Tensor tensor);

  // Weight matrix [fan_in × fan_out], uniform in ±1/√fan_in.
  Tensor& add_weight(std::string path, std::size_t fan_in, std::size_t fan_out,
                     Rng& rng);
  Tensor& add_constant(std::string path, std::size_t size, double value);

  bool contains(std::string_view path) const;
  Tensor& at(std::string_view path);
  const Tensor& at(std::string_view path) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  std::vector<Entry>::iterator begin() { return entries_.begin(); }
  std::vector<Entry>::iterator end() { return entries_.end(); }
  std::vector<Entry>::const_iterator begin() const { return entries_.begin(); }
  std::vector<Entry>::const_iterator end() const { return entries_.end(); }

  void zero_grad();

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace loadfc::models
