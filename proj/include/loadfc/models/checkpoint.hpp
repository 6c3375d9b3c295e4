#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "loadfc/models/forecaster.hpp"

// Checkpoint file, UTF-8 text, LF line endings:
//
//   loadfc-checkpoint 1
//   meta <key> <value>                 (model spec first, then caller entries)
//   param <path> <rank> <dim>...       (one per parameter, in model order)
//   <value> <value> ...                (hexadecimal floats, row-major)
//   end
//
// Values are written in hexadecimal floating-point form, so a save/load round
// trip reproduces every parameter bit for bit.
namespace loadfc::models {

struct Checkpoint {
  Forecaster model;
  // Caller metadata, e.g. window length and scaler bounds.
  std::map<std::string, std::string> metadata;
};

void write_checkpoint(std::ostream& out, const Forecaster& model,
                      const std::map<std::string, std::string>& metadata = {});
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     const std::map<std::string, std::string>& metadata = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace loadfc::models
