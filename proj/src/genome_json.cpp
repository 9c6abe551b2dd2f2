#include "gennet/genome_json.hpp"

#include <fstream>

#include <fmt/format.h>

#include "gennet/io.hpp"

namespace gennet {

using nlohmann::json;

namespace {

int int_field(const json& obj, const std::string& path, const char* key) {
  const std::string field = path.empty() ? key : path + "." + key;
  auto it = obj.find(key);
  if (it == obj.end()) throw GenomeFormatError(field, "missing field");
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  if (!it->is_number_integer()) throw GenomeFormatError(field, "expected an integer");
  const auto v = it->get<std::int64_t>();
  if (v < -(1 << 30) || v > (1 << 30)) throw GenomeFormatError(field, "integer out of range");
  return static_cast<int>(v);
}

int dropout_code(const json& obj, const std::string& path) {
  const int pct = int_field(obj, path, "dropout_pct");
  if (pct < 0 || pct > 50 || pct % 5 != 0)
    throw GenomeFormatError(path + ".dropout_pct", fmt::format("{} is not a multiple of 5 in [0, 50]", pct));
  return pct / 5;
}

bool bn_field(const json& obj, const std::string& path) {
  const int v = int_field(obj, path, "batch_norm");
  if (v != 0 && v != 1) throw GenomeFormatError(path + ".batch_norm", "expected 0 or 1");
  return v == 1;
}

const json& array_field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw GenomeFormatError(key, "missing field");
  if (!it->is_array()) throw GenomeFormatError(key, "expected an array");
  return *it;
}

// Validation loci use model names; map them back to document field names.
std::string document_field(std::string locus) {
  const auto replace_suffix = [&](std::string_view from, std::string_view to) {
    if (locus.size() >= from.size() && locus.compare(locus.size() - from.size(), from.size(), from) == 0)
      locus.replace(locus.size() - from.size(), from.size(), to);
  };
  replace_suffix(".dropout", ".dropout_pct");
  if (locus.starts_with("fc_blocks")) replace_suffix(".units", ".filters");
  return locus;
}

}  // namespace

GenomeFormatError::GenomeFormatError(std::string field, std::string message)
    : GenomeError(field + ": " + message), field_(std::move(field)) {}

json genome_to_json(const Genome& genome) {
  json conv = json::array();
  for (const auto& b : genome.conv_blocks) {
    conv.push_back({{"filters", b.filters},
                    {"kernel", b.kernel},
                    {"pooling", static_cast<int>(b.pooling)},
                    {"batch_norm", b.batch_norm ? 1 : 0},
                    {"activation", static_cast<int>(b.activation)},
                    {"dropout_pct", b.dropout * 5}});
  }
  json fc = json::array();
  for (const auto& b : genome.fc_blocks) {
    fc.push_back({{"filters", b.units},
                  {"batch_norm", b.batch_norm ? 1 : 0},
                  {"activation", static_cast<int>(b.activation)},
                  {"dropout_pct", b.dropout * 5}});
  }
  return json{{"num_classes", genome.num_classes},
              {"optimizer", static_cast<int>(genome.optimizer)},
              {"conv_blocks", std::move(conv)},
              {"fc_blocks", std::move(fc)}};
}

Genome genome_from_json(const json& doc) {
  if (!doc.is_object()) throw GenomeFormatError("$", "expected a JSON object");
  Genome g;
  g.num_classes = int_field(doc, "", "num_classes");
  g.optimizer = static_cast<Optimizer>(int_field(doc, "", "optimizer"));

  const json& conv = array_field(doc, "conv_blocks");
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const std::string path = fmt::format("conv_blocks[{}]", i);
    const json& o = conv[i];
    if (!o.is_object()) throw GenomeFormatError(path, "expected an object");
    ConvBlock b;
    b.filters = int_field(o, path, "filters");
    b.kernel = int_field(o, path, "kernel");
    b.pooling = static_cast<Pooling>(int_field(o, path, "pooling"));
    b.batch_norm = bn_field(o, path);
    b.activation = static_cast<Activation>(int_field(o, path, "activation"));
    b.dropout = dropout_code(o, path);
    g.conv_blocks.push_back(b);
  }

  const json& fc = array_field(doc, "fc_blocks");
  for (std::size_t i = 0; i < fc.size(); ++i) {
    const std::string path = fmt::format("fc_blocks[{}]", i);
    const json& o = fc[i];
    if (!o.is_object()) throw GenomeFormatError(path, "expected an object");
    FcBlock b;
    b.units = int_field(o, path, "filters");
    b.batch_norm = bn_field(o, path);
    b.activation = static_cast<Activation>(int_field(o, path, "activation"));
    b.dropout = dropout_code(o, path);
    g.fc_blocks.push_back(b);
  }

  if (auto v = check_well_formed(g); !v.empty())
    throw GenomeFormatError(document_field(v.front().locus), v.front().message);
  return g;
}

void write_genome_file(const std::filesystem::path& path, const Genome& genome) {
  write_file_atomically(path, genome_to_json(genome).dump(2) + "\n");
}

Genome read_genome_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GenomeFormatError("$", "cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw GenomeFormatError("$", std::string("malformed JSON: ") + e.what());
  }
  return genome_from_json(doc);
}

}  // namespace gennet
