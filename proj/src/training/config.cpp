#include "loadfc/training/config.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "loadfc/error.hpp"
#include "loadfc/text.hpp"

namespace loadfc::training {

const std::vector<std::string>& default_houses() {
  static const std::vector<std::string> houses = {
      "MAC000002", "MAC000033", "MAC000092", "MAC000156",
      "MAC000246", "MAC000450", "MAC001074", "MAC003223"};
  return houses;
}

ExperimentConfig default_grid_config() {
  ExperimentConfig c;
  c.houses = default_houses();
  c.models = {models::kAllModelKinds.begin(), models::kAllModelKinds.end()};
  c.windows = {2, 3, 6, 12};
  c.seeds_per_cell = 5;
  return c;
}

void ExperimentConfig::validate() const {
  if (houses.empty()) throw ConfigError("config lists no houses");
  if (models.empty()) throw ConfigError("config lists no models");
  if (windows.empty()) throw ConfigError("config lists no window lengths");
  if (seeds_per_cell == 0) throw ConfigError("seeds_per_cell must be positive");
  for (std::size_t n : windows)
    if (n == 0) throw ConfigError("window lengths must be positive");
  if (std::set<std::string>(houses.begin(), houses.end()).size() != houses.size())
    throw ConfigError("houses must be distinct");
  if (std::set<std::size_t>(windows.begin(), windows.end()).size() !=
      windows.size())
    throw ConfigError("window lengths must be distinct");
  if (std::set<models::ModelKind>(models.begin(), models.end()).size() !=
      models.size())
    throw ConfigError("models must be distinct");
  for (models::ModelKind k : models) settings.model_spec(k).validate();
  settings.train.validate();
  if (!(settings.split_ratio > 0.0 && settings.split_ratio < 1.0))
    throw ConfigError("data.split_ratio must lie strictly between 0 and 1");
}

namespace {

std::vector<std::string> list_of(const std::string& value) {
  std::vector<std::string> out;
  for (auto item : text::split(value, ',')) {
    item = text::trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

void apply_setting(ExperimentConfig& c, const std::string& key,
                   const std::string& raw) {
  const std::string value(text::trim(raw));
  auto u64 = [&] { return text::parse_u64(value, key); };
  auto dbl = [&] { return text::parse_double(value, key); };
  auto& s = c.settings;
  try {
    if (key == "houses") {
      c.houses = list_of(value);
    } else if (key == "models") {
      c.models.clear();
      for (const auto& m : list_of(value)) c.models.push_back(models::parse_model_kind(m));
    } else if (key == "windows") {
      c.windows.clear();
      for (const auto& w : list_of(value)) c.windows.push_back(text::parse_u64(w, key));
    } else if (key == "seeds_per_cell") {
      c.seeds_per_cell = u64();
    } else if (key == "base_seed") {
      c.base_seed = u64();
    } else if (key == "transformer.layers") {
      s.transformer.n_layers = u64();
    } else if (key == "transformer.d_model") {
      s.transformer.d_model = u64();
    } else if (key == "transformer.heads") {
      s.transformer.n_heads = u64();
    } else if (key == "transformer.d_ff") {
      s.transformer.d_ff = u64();
    } else if (key == "transformer.dropout") {
      s.transformer.dropout_rate = dbl();
    } else if (key == "recurrent.hidden") {
      s.recurrent.hidden_size = u64();
    } else if (key == "train.epochs") {
      s.train.epochs = u64();
    } else if (key == "train.batch_size") {
      s.train.batch_size = u64();
    } else if (key == "train.learning_rate") {
      s.train.learning_rate = dbl();
    } else if (key == "train.optimizer") {
      s.train.optimizer = parse_optimizer_kind(value);
    } else if (key == "train.beta1") {
      s.train.adam_beta1 = dbl();
    } else if (key == "train.beta2") {
      s.train.adam_beta2 = dbl();
    } else if (key == "train.eps") {
      s.train.adam_eps = dbl();
    } else if (key == "train.patience") {
      const auto p = u64();
      s.train.early_stop_patience = p ? std::optional<std::size_t>(p) : std::nullopt;
    } else if (key == "train.holdout") {
      s.validation.holdout_fraction = dbl();
    } else if (key == "data.split_ratio") {
      s.split_ratio = dbl();
    } else if (key == "data.max_readings") {
      s.max_readings = u64();
    } else if (key == "data.strict_grid") {
      s.windows.strict_grid = parse_bool(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c = default_grid_config();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply_setting(c, std::string(text::trim(body.substr(0, eq))),
                  std::string(body.substr(eq + 1)));
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  auto join = [&](const auto& items, auto fn) {
    std::string s;
    for (const auto& it : items) {
      if (!s.empty()) s += ", ";
      s += fn(it);
    }
    return s;
  };
  const auto& s = c.settings;
  out << "houses = " << join(c.houses, [](const std::string& h) { return h; }) << '\n'
      << "models = "
      << join(c.models, [](models::ModelKind k) { return std::string(models::model_key(k)); })
      << '\n'
      << "windows = " << join(c.windows, [](std::size_t n) { return std::to_string(n); })
      << '\n'
      << "seeds_per_cell = " << c.seeds_per_cell << '\n'
      << "base_seed = " << c.base_seed << '\n'
      << "transformer.layers = " << s.transformer.n_layers << '\n'
      << "transformer.d_model = " << s.transformer.d_model << '\n'
      << "transformer.heads = " << s.transformer.n_heads << '\n'
      << "transformer.d_ff = " << s.transformer.d_ff << '\n'
      << "transformer.dropout = " << text::format_double(s.transformer.dropout_rate) << '\n'
      << "recurrent.hidden = " << s.recurrent.hidden_size << '\n'
      << "train.epochs = " << s.train.epochs << '\n'
      << "train.batch_size = " << s.train.batch_size << '\n'
      << "train.learning_rate = " << text::format_double(s.train.learning_rate) << '\n'
      << "train.optimizer = " << optimizer_key(s.train.optimizer) << '\n'
      << "train.beta1 = " << text::format_double(s.train.adam_beta1) << '\n'
      << "train.beta2 = " << text::format_double(s.train.adam_beta2) << '\n'
      << "train.eps = " << text::format_double(s.train.adam_eps) << '\n'
      << "train.patience = " << s.train.early_stop_patience.value_or(0) << '\n'
      << "train.holdout = " << text::format_double(s.validation.holdout_fraction) << '\n'
      << "data.split_ratio = " << text::format_double(s.split_ratio) << '\n'
      << "data.max_readings = " << s.max_readings << '\n'
      << "data.strict_grid = " << (s.windows.strict_grid ? "true" : "false") << '\n';
}

}  // namespace loadfc::training
