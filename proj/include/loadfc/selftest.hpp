#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace loadfc::selftest {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Gradient checks for every differentiable operation and the three models at
// small sizes, plus attention, causality and softmax invariants on random
// instances drawn from `seed`.
std::vector<Check> run(std::uint64_t seed, std::size_t attention_instances = 200);

}  // namespace loadfc::selftest
