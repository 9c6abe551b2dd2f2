#include <doctest.h>

#include "fixtures.hpp"
#include "gennet/genome_json.hpp"

using namespace gennet;
using namespace gennet::testing;
using nlohmann::json;

namespace {

std::string field_of(const json& doc) {
  try {
    genome_from_json(doc);
  } catch (const GenomeFormatError& e) {
    return e.field();
  }
  return "<accepted>";
}

}  // namespace

TEST_SUITE("genome_json") {

TEST_CASE("golden files load to the reference genomes") {
  const std::filesystem::path data = GENNET_TEST_DATA;
  CHECK(read_genome_file(data / "vgg19.json") == vgg19());
  CHECK(read_genome_file(data / "mnist_best.json") == mnist_best());
}

TEST_CASE("document layout") {
  const json doc = genome_to_json(mnist_best());
  CHECK(doc["num_classes"] == 10);
  CHECK(doc["optimizer"] == 5);
  CHECK(doc["conv_blocks"].size() == 3);
  CHECK(doc["conv_blocks"][0] ==
        json{{"filters", 419}, {"kernel", 5}, {"pooling", 0}, {"batch_norm", 1}, {"activation", 1}, {"dropout_pct", 20}});
  CHECK(doc["fc_blocks"][1] == json{{"filters", 414}, {"batch_norm", 1}, {"activation", 1}, {"dropout_pct", 45}});
  CHECK(doc["fc_blocks"][3] == json{{"filters", 10}, {"batch_norm", 0}, {"activation", 5}, {"dropout_pct", 0}});
}

TEST_CASE("json round trip over random genomes") {
  Rng rng(42);
  for (int i = 0; i < 500; ++i) {
    const Genome g = random_genome({}, 26, rng);
    REQUIRE(genome_from_json(json::parse(genome_to_json(g).dump())) == g);
  }
}

TEST_CASE("file round trip") {
  TempDir dir("gennet-json");
  write_genome_file(dir / "g.json", vgg19());
  CHECK(read_genome_file(dir / "g.json") == vgg19());
}

TEST_CASE("errors name the offending field") {
  json doc = genome_to_json(mnist_best());
  json bad = doc;
  bad["conv_blocks"][2]["kernel"] = 4;
  CHECK(field_of(bad) == "conv_blocks[2].kernel");

  bad = doc;
  bad["conv_blocks"][0]["dropout_pct"] = 12;
  CHECK(field_of(bad) == "conv_blocks[0].dropout_pct");

  bad = doc;
  bad["fc_blocks"][0].erase("filters");
  CHECK(field_of(bad) == "fc_blocks[0].filters");

  bad = doc;
  bad["fc_blocks"][3]["activation"] = 4;
  CHECK(field_of(bad) == "fc_blocks[3].activation");

  bad = doc;
  bad["fc_blocks"][3]["filters"] = 9;
  CHECK(field_of(bad) == "fc_blocks[3].filters");

  bad = doc;
  bad["optimizer"] = "adam";
  CHECK(field_of(bad) == "optimizer");

  bad = doc;
  bad["conv_blocks"] = json::object();
  CHECK(field_of(bad) == "conv_blocks");

  bad = doc;
  bad["conv_blocks"][1]["batch_norm"] = 3;
  CHECK(field_of(bad) == "conv_blocks[1].batch_norm");

  CHECK(field_of(json::array()) == "$");
  CHECK(field_of(doc) == "<accepted>");
}

TEST_CASE("boolean batch_norm is accepted") {
  json doc = genome_to_json(minimal_genome());
  doc["conv_blocks"][0]["batch_norm"] = true;
  CHECK(genome_from_json(doc).conv_blocks[0].batch_norm);
}

TEST_CASE("unreadable and malformed files") {
  TempDir dir("gennet-json");
  CHECK_THROWS_AS(read_genome_file(dir / "absent.json"), GenomeFormatError);
  spit(dir / "trunc.json", genome_to_json(vgg19()).dump().substr(0, 100));
  CHECK_THROWS_AS(read_genome_file(dir / "trunc.json"), GenomeFormatError);
}

}  // TEST_SUITE
