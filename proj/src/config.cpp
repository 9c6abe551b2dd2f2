#include "gennet/config.hpp"

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "gennet/io.hpp"

namespace gennet {

using nlohmann::json;

namespace {

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int as_int(const json& v) {
  if (!v.is_number_integer()) throw FieldError("expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw FieldError("integer out of range");
  return static_cast<int>(x);
}

std::uint64_t as_u64(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw FieldError("expected a non-negative integer");
}

double as_real(const json& v) {
  if (!v.is_number()) throw FieldError("expected a number");
  return v.get<double>();
}

bool as_bool(const json& v) {
  if (!v.is_boolean()) throw FieldError("expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v) {
  if (!v.is_string()) throw FieldError("expected a quoted string");
  return v.get<std::string>();
}

IntRange as_range(const json& v) {
  if (!v.is_array() || v.size() != 2) throw FieldError("expected [lo, hi]");
  return {as_int(v[0]), as_int(v[1])};
}

std::vector<int> as_int_list(const json& v) {
  if (!v.is_array()) throw FieldError("expected an array of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(as_int(x));
  return out;
}

std::vector<std::string> as_string_list(const json& v) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw FieldError("expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(as_string(x));
  return out;
}

json range_json(IntRange r) { return json::array({r.lo, r.hi}); }

struct Field {
  std::function<void(EngineConfig&, const json&)> set;
  std::function<json(const EngineConfig&)> get;
};

// One table drives the flat text format and the JSON echo.
const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["population_size"] = {[](auto& c, auto& v) { c.population_size = as_int(v); },
                            [](auto& c) { return json(c.population_size); }};
    t["generations"] = {[](auto& c, auto& v) { c.generations = as_int(v); },
                        [](auto& c) { return json(c.generations); }};
    t["num_classes"] = {[](auto& c, auto& v) { c.num_classes = as_int(v); },
                        [](auto& c) { return json(c.num_classes); }};
    t["master_seed"] = {[](auto& c, auto& v) { c.master_seed = as_u64(v); },
                        [](auto& c) { return json(c.master_seed); }};
    t["crossover_rate"] = {[](auto& c, auto& v) { c.crossover_rate = as_real(v); },
                           [](auto& c) { return json(c.crossover_rate); }};
    t["mutation_rate"] = {
        [](auto& c, auto& v) { c.mutation_rate = v.is_null() ? std::nullopt : std::optional(as_real(v)); },
        [](auto& c) { return c.mutation_rate ? json(*c.mutation_rate) : json(nullptr); }};

    t["evaluator"] = {[](auto& c, auto& v) {
                        const auto s = as_string(v);
                        if (s == "surrogate")
                          c.evaluator.kind = EvaluatorKind::surrogate;
                        else if (s == "external")
                          c.evaluator.kind = EvaluatorKind::external;
                        else
                          throw FieldError("expected \"surrogate\" or \"external\"");
                      },
                      [](auto& c) { return json(std::string(to_string(c.evaluator.kind))); }};
    t["workers"] = {[](auto& c, auto& v) { c.evaluator.workers = as_string_list(v); },
                    [](auto& c) { return json(c.evaluator.workers); }};
    t["parallelism"] = {[](auto& c, auto& v) { c.evaluator.parallelism = as_int(v); },
                        [](auto& c) { return json(c.evaluator.parallelism); }};
    t["timeout_seconds"] = {[](auto& c, auto& v) { c.evaluator.timeout_seconds = as_real(v); },
                            [](auto& c) { return json(c.evaluator.timeout_seconds); }};
    t["max_retries"] = {[](auto& c, auto& v) { c.evaluator.max_retries = as_int(v); },
                        [](auto& c) { return json(c.evaluator.max_retries); }};
    t["dataset"] = {[](auto& c, auto& v) { c.evaluator.dataset = as_string(v); },
                    [](auto& c) { return json(c.evaluator.dataset); }};

    t["max_epochs"] = {[](auto& c, auto& v) { c.evaluator.train.max_epochs = as_int(v); },
                       [](auto& c) { return json(c.evaluator.train.max_epochs); }};
    t["batch_size"] = {[](auto& c, auto& v) { c.evaluator.train.batch_size = as_int(v); },
                       [](auto& c) { return json(c.evaluator.train.batch_size); }};
    t["learning_rate"] = {[](auto& c, auto& v) { c.evaluator.train.learning_rate = as_real(v); },
                          [](auto& c) { return json(c.evaluator.train.learning_rate); }};
    t["lr_decay_per_epoch"] = {[](auto& c, auto& v) { c.evaluator.train.lr_decay_per_epoch = as_real(v); },
                               [](auto& c) { return json(c.evaluator.train.lr_decay_per_epoch); }};
    t["validation_fraction"] = {[](auto& c, auto& v) { c.evaluator.train.validation_fraction = as_real(v); },
                                [](auto& c) { return json(c.evaluator.train.validation_fraction); }};
    t["augment"] = {[](auto& c, auto& v) { c.evaluator.train.augment = as_bool(v); },
                    [](auto& c) { return json(c.evaluator.train.augment); }};
    t["train_subset"] = {[](auto& c, auto& v) { c.evaluator.train.train_subset = as_int(v); },
                         [](auto& c) { return json(c.evaluator.train.train_subset); }};
    t["train_seed"] = {[](auto& c, auto& v) { c.evaluator.train.seed = as_u64(v); },
                       [](auto& c) { return json(c.evaluator.train.seed); }};

    const auto range = [&t](const char* key, IntRange SearchSpace::*member) {
      t[key] = {[member](auto& c, auto& v) { c.search_space.*member = as_range(v); },
                [member](auto& c) { return range_json(c.search_space.*member); }};
    };
    range("filters_range", &SearchSpace::conv_filters);
    range("units_range", &SearchSpace::fc_units);
    range("pooling_range", &SearchSpace::pooling);
    range("batch_norm_range", &SearchSpace::batch_norm);
    range("activation_range", &SearchSpace::activation);
    range("dropout_code_range", &SearchSpace::dropout);
    range("optimizer_range", &SearchSpace::optimizer);
    range("init_conv_range", &SearchSpace::init_conv_blocks);
    range("init_hidden_fc_range", &SearchSpace::init_hidden_fc_blocks);
    t["kernel_sizes"] = {[](auto& c, auto& v) { c.search_space.kernel_sizes = as_int_list(v); },
                         [](auto& c) { return json(c.search_space.kernel_sizes); }};
    return t;
  }();
  return table;
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

void finish(const EngineConfig& config, std::vector<std::string>& problems, bool check_values = true) {
  // Once the file is rejected anyway, report value problems alongside.
  if (check_values || !problems.empty())
    for (auto& p : config.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

}  // namespace

EngineConfig parse_config(std::string_view text, bool check_values) {
  EngineConfig config;
  std::vector<std::string> problems;
  std::set<std::string, std::less<>> seen;

  std::istringstream in{std::string(text)};
  std::string raw;
  for (int lineno = 1; std::getline(in, raw); ++lineno) {
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(fmt::format("line {}: expected `key = value`", lineno));
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    auto field = fields().find(key);
    if (field == fields().end()) {
      problems.push_back(fmt::format("line {}: unknown field '{}'", lineno, key));
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back(fmt::format("line {}: {} is set twice", lineno, key));
      continue;
    }
    try {
      field->second.set(config, json::parse(value));
    } catch (const json::parse_error&) {
      problems.push_back(fmt::format("line {}: {}: cannot parse value `{}`", lineno, key, value));
    } catch (const FieldError& e) {
      problems.push_back(fmt::format("line {}: {}: {}", lineno, key, e.what()));
    }
  }
  finish(config, problems, check_values);
  return config;
}

EngineConfig load_config(const std::filesystem::path& path, bool check_values) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError({e.what()});
  }
  return parse_config(text, check_values);
}

json config_to_json(const EngineConfig& config) {
  json out = json::object();
  for (const auto& [key, field] : fields()) out[key] = field.get(config);
  return out;
}

EngineConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError({"config: expected a JSON object"});
  EngineConfig config;
  std::vector<std::string> problems;
  for (const auto& [key, value] : doc.items()) {
    auto field = fields().find(key);
    if (field == fields().end()) {
      problems.push_back(fmt::format("unknown field '{}'", key));
      continue;
    }
    try {
      field->second.set(config, value);
    } catch (const FieldError& e) {
      problems.push_back(fmt::format("{}: {}", key, e.what()));
    }
  }
  finish(config, problems);
  return config;
}

}  // namespace gennet
