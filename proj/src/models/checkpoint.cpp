#include "loadfc/models/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::models {

namespace {

constexpr std::string_view kMagic = "loadfc-checkpoint 1";

std::map<std::string, std::string> spec_fields(const ModelSpec& spec) {
  std::map<std::string, std::string> f;
  f["model"] = model_key(spec.kind);
  f["transformer.layers"] = std::to_string(spec.transformer.n_layers);
  f["transformer.d_model"] = std::to_string(spec.transformer.d_model);
  f["transformer.heads"] = std::to_string(spec.transformer.n_heads);
  f["transformer.d_ff"] = std::to_string(spec.transformer.d_ff);
  f["transformer.dropout"] = text::format_hex(spec.transformer.dropout_rate);
  f["recurrent.hidden"] = std::to_string(spec.recurrent.hidden_size);
  return f;
}

const std::string& field(const std::map<std::string, std::string>& f,
                         const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw FormatError("checkpoint is missing meta '" + key + "'");
  return it->second;
}

ModelSpec spec_from_fields(std::map<std::string, std::string>& f) {
  ModelSpec s;
  s.kind = parse_model_kind(field(f, "model"));
  s.transformer.n_layers = text::parse_u64(field(f, "transformer.layers"), "layers");
  s.transformer.d_model = text::parse_u64(field(f, "transformer.d_model"), "d_model");
  s.transformer.n_heads = text::parse_u64(field(f, "transformer.heads"), "heads");
  s.transformer.d_ff = text::parse_u64(field(f, "transformer.d_ff"), "d_ff");
  s.transformer.dropout_rate =
      text::parse_double(field(f, "transformer.dropout"), "dropout");
  s.recurrent.hidden_size =
      text::parse_u64(field(f, "recurrent.hidden"), "hidden size");
  s.recurrent = s.recurrent_spec();
  for (const auto& [k, v] : spec_fields(s)) f.erase(k);
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Forecaster& model,
                      const std::map<std::string, std::string>& metadata) {
  out << kMagic << '\n';
  const auto fields = spec_fields(model.spec());
  for (const auto& [k, v] : fields) out << "meta " << k << ' ' << v << '\n';
  for (const auto& [k, v] : metadata) {
    if (fields.contains(k))
      throw FormatError("metadata key '" + k + "' collides with the model spec");
    if (k.find_first_of(" \n") != std::string::npos ||
        v.find('\n') != std::string::npos)
      throw FormatError("metadata entries must be single tokens");
    out << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [path, tensor] : model.params()) {
    out << "param " << path << ' ' << tensor.rank();
    for (std::size_t d : tensor.shape()) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      if (i) out << ' ';
      out << text::format_hex(tensor[i]);
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw FormatError("not a loadfc checkpoint (bad header)");
  std::map<std::string, std::string> meta;
  ModelParams params;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      meta[key] = value;
    } else if (tag == "param") {
      std::string path;
      std::size_t rank = 0;
      ls >> path >> rank;
      Shape shape(rank);
      for (auto& d : shape) ls >> d;
      if (!ls || path.empty()) throw FormatError("malformed param line: " + line);
      std::string values;
      if (!std::getline(in, values))
        throw FormatError("missing values for parameter " + path);
      const auto tokens = text::split(values, ' ');
      std::vector<double> data;
      data.reserve(tokens.size());
      for (auto tok : tokens) data.push_back(text::parse_double(tok, path));
      params.add(path, Tensor(std::move(shape), std::move(data)));
    } else {
      throw FormatError("unexpected checkpoint line: " + line);
    }
  }
  if (!ended) throw FormatError("checkpoint is truncated (no end marker)");
  ModelSpec spec = spec_from_fields(meta);
  Forecaster model(spec, std::move(params));

  // The parameter names must be exactly those the spec builds.
  Forecaster fresh = Forecaster::initialize(spec, 0);
  auto it = model.params().begin();
  for (const auto& [path, tensor] : fresh.params()) {
    if (it == model.params().end() || it->path != path ||
        it->tensor.shape() != tensor.shape())
      throw FormatError("checkpoint parameters do not match the " +
                        std::string(model_key(spec.kind)) + " layout at '" +
                        path + "'");
    ++it;
  }
  return Checkpoint{std::move(model), std::move(meta)};
}

void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     const std::map<std::string, std::string>& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model, metadata);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace loadfc::models
