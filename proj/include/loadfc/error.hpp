#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loadfc {

// Base of every error raised by the library. `kind()` is a stable, single-token
// class name the CLI prints so callers can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(std::string_view kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  std::string_view kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define LOADFC_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(Kind, what) {}         \
  };

LOADFC_DEFINE_ERROR(DimensionError, "dimension")
LOADFC_DEFINE_ERROR(DomainError, "domain")
LOADFC_DEFINE_ERROR(GraphError, "graph")
LOADFC_DEFINE_ERROR(AttentionError, "degenerate-attention")
LOADFC_DEFINE_ERROR(SchemaError, "schema")
LOADFC_DEFINE_ERROR(EmptyInputError, "empty-input")
LOADFC_DEFINE_ERROR(DataError, "data")
LOADFC_DEFINE_ERROR(ConfigError, "config")
LOADFC_DEFINE_ERROR(DivergenceError, "divergence")
LOADFC_DEFINE_ERROR(MetricError, "undefined-metric")
LOADFC_DEFINE_ERROR(IoError, "io")
LOADFC_DEFINE_ERROR(FormatError, "format")

#undef LOADFC_DEFINE_ERROR

}  // namespace loadfc
