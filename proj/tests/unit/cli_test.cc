#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mechnli/cli.h"
#include "mechnli/dataset.h"
#include "mechnli/errors.h"
#include "mechnli/evalharness.h"
#include "mechnli/extract.h"
#include "mechnli/text.h"
#include "testing/fixtures.h"

using namespace mechnli;
using namespace mechnli::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run Cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> ReadJsonl(const std::string &path) {
  std::vector<json> out;
  for (const auto &line : SplitLines(ReadFile(path))) {
    if (!Trim(line).empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string WriteCorpus(const std::string &dir) {
  std::string text;
  for (const auto &a : ExtractionFixture()) text += AbstractToJson(a).dump() + "\n";
  const std::string path = dir + "/corpus.jsonl";
  WriteFile(path, text);
  return path;
}

json WithoutStamp(json manifest) {
  manifest.erase("created_at");
  return manifest;
}

// Runs every stage on the fixture corpus into `dir`.
void Pipeline(const std::string &dir, const std::string &jobs) {
  const std::string corpus = WriteCorpus(dir);
  REQUIRE(Cli({"extract", "--corpus", corpus, "--output", dir + "/ext.jsonl", "--jobs", jobs}).code == 0);
  REQUIRE(Cli({"perturb", "--input", dir + "/ext.jsonl", "--output", dir + "/groups.jsonl",
               "--default-type", "Chemical", "--jobs", jobs})
              .code == 0);
  REQUIRE(Cli({"train-lm", "--input", dir + "/ext.jsonl", "--output", dir + "/lm.json"}).code == 0);
  const Run decode = Cli({"decode", "--input", dir + "/ext.jsonl", "--model", dir + "/lm.json",
                          "--output", dir + "/gen.jsonl", "--min-len", "4", "--max-len", "24",
                          "--default-type", "Chemical", "--jobs", jobs});
  REQUIRE_MESSAGE(decode.code == 0, decode.err);
  const Run filter = Cli({"filter", "--input", dir + "/gen.jsonl", "--extractions",
                          dir + "/ext.jsonl", "--output", dir + "/accepted.jsonl", "--jobs", jobs});
  REQUIRE_MESSAGE(filter.code == 0, filter.err);
  const Run assemble = Cli({"assemble", "--groups", dir + "/groups.jsonl", "--generated",
                            dir + "/accepted.jsonl", "--output-dir", dir + "/data", "--jobs", jobs});
  REQUIRE_MESSAGE(assemble.code == 0, assemble.err);
}

}  // namespace

TEST_CASE("cli: extract on the fixture corpus") {
  const std::string dir = ScratchDir("cli_extract");
  const std::string corpus = WriteCorpus(dir);
  const Run r = Cli({"extract", "--corpus", corpus, "--output", dir + "/ext.jsonl"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out == "extracted 91 of 100 abstracts\n");
  const auto records = ReadJsonl(dir + "/ext.jsonl");
  CHECK(records.size() == 91);
  const json manifest = json::parse(ReadFile(dir + "/ext.jsonl.manifest.json"));
  CHECK(manifest["tool"] == "mechnli");
  CHECK(manifest["version"] == kToolVersion);
  CHECK(manifest["command"] == "extract");
  CHECK(manifest["seed"] == 13);
  CHECK(manifest["config_hash"] == ConfigHash(manifest["config"]));
  CHECK(manifest.contains("created_at"));
  CHECK(manifest["counts"]["abstracts"] == 100);
}

TEST_CASE("cli: lenient extraction skips corrupt lines") {
  const std::string dir = ScratchDir("cli_lenient");
  WriteFile(dir + "/bad.jsonl", CorruptCorpusJsonl());
  Run r = Cli({"extract", "--corpus", dir + "/bad.jsonl", "--output", dir + "/ext.jsonl"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("SchemaViolation at line 5") != std::string::npos);
  r = Cli({"extract", "--corpus", dir + "/bad.jsonl", "--output", dir + "/ext.jsonl", "--lenient"});
  CHECK(r.code == 0);
}

TEST_CASE("cli: exit codes") {
  const std::string dir = ScratchDir("cli_exit");
  CHECK(Cli({}).code == kExitUsage);
  CHECK(Cli({"frobnicate"}).code == kExitUsage);
  CHECK(Cli({"extract"}).code == kExitUsage);
  CHECK(Cli({"--version"}).code == kExitOk);
  CHECK(Cli({"extract", "--help"}).code == kExitOk);
  WriteFile(dir + "/corpus.jsonl", "{not json\n");
  CHECK(Cli({"extract", "--corpus", dir + "/corpus.jsonl", "--output", dir + "/o.jsonl"}).code ==
        kExitInput);
  CHECK(Cli({"extract", "--corpus", dir + "/missing.jsonl", "--output", dir + "/o.jsonl"}).code ==
        kExitUsage);
  const std::string corpus = WriteCorpus(dir);
  CHECK(Cli({"extract", "--corpus", corpus, "--output", dir + "/no/such/dir/o.jsonl"}).code ==
        kExitInput);
  CHECK(Cli({"perturb", "--input", corpus, "--output", dir + "/g.jsonl", "--kinds", "SEN,BOGUS"})
            .code == kExitUsage);
  // Instance files with a dangling negative violate the dataset invariants.
  const auto fx = MakeTable4Fixture();
  WriteFile(dir + "/ds.jsonl", InstancesToJsonl(fx.dataset));
  std::string preds;
  for (const auto &p : fx.predictions) {
    preds += json{{"id", p.id}, {"label", LabelName(p.label)}}.dump() + "\n";
  }
  WriteFile(dir + "/preds.jsonl", preds + json{{"id", fx.predictions[0].id}, {"label", "entailed"}}.dump() + "\n");
  CHECK(Cli({"eval", "--dataset", dir + "/ds.jsonl", "--predictions", dir + "/preds.jsonl"}).code ==
        kExitInvariant);
}

TEST_CASE("cli: config file supplies defaults and flags override it") {
  const std::string dir = ScratchDir("cli_config");
  const std::string corpus = WriteCorpus(dir);
  WriteFile(dir + "/run.cfg", "# extraction settings\nmin-premise = 10\nseed = 99\n");
  Run r = Cli({"extract", "--corpus", corpus, "--output", dir + "/a.jsonl", "--config",
               dir + "/run.cfg"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json m = json::parse(ReadFile(dir + "/a.jsonl.manifest.json"));
  CHECK(m["seed"] == 99);
  CHECK(m["config"]["min_premise"] == 10);
  const std::size_t narrowed = ReadJsonl(dir + "/a.jsonl").size();
  CHECK(narrowed < 91);
  r = Cli({"extract", "--corpus", corpus, "--output", dir + "/b.jsonl", "--config",
           dir + "/run.cfg", "--min-premise", "3"});
  CHECK(r.code == 0);
  CHECK(ReadJsonl(dir + "/b.jsonl").size() == 91);
  WriteFile(dir + "/bad.cfg", "no-such-option = 1\n");
  r = Cli({"extract", "--corpus", corpus, "--output", dir + "/c.jsonl", "--config", dir + "/bad.cfg"});
  CHECK(r.code == kExitUsage);
  WriteFile(dir + "/flag.cfg", "lenient = true\n");
  CHECK(Cli({"extract", "--corpus", corpus, "--output", dir + "/d.jsonl", "--config",
             dir + "/flag.cfg"})
            .code == 0);
  CHECK(ParseFlatConfig("a = 1\n# c\n\nb=two words\n") ==
        std::map<std::string, std::string>{{"a", "1"}, {"b", "two words"}});
  CHECK_THROWS_AS(ParseFlatConfig("novalue\n"), InvalidConfig);
}

TEST_CASE("cli: full pipeline is reproducible and independent of --jobs") {
  const std::string a = ScratchDir("cli_pipeline_a");
  const std::string b = ScratchDir("cli_pipeline_b");
  Pipeline(a, "1");
  Pipeline(b, "4");
  for (const char *file : {"ext.jsonl", "groups.jsonl", "lm.json", "gen.jsonl", "accepted.jsonl",
                           "data/train.jsonl", "data/dev.jsonl", "data/test.jsonl",
                           "data/stats.json"}) {
    CAPTURE(file);
    CHECK(ReadFile(a + "/" + file) == ReadFile(b + "/" + file));
  }
  for (const char *m : {"ext.jsonl.manifest.json", "groups.jsonl.manifest.json",
                        "data/manifest.json"}) {
    json ma = WithoutStamp(json::parse(ReadFile(a + "/" + m)));
    json mb = WithoutStamp(json::parse(ReadFile(b + "/" + m)));
    ma["config"].erase("jobs");
    mb["config"].erase("jobs");
    CHECK(ma["counts"] == mb["counts"]);
    CHECK(ma["seed"] == mb["seed"]);
  }

  const auto groups = ReadJsonl(a + "/groups.jsonl");
  CHECK(groups.size() == 91);
  for (const auto &g : groups) {
    const auto app = g["applicability"];
    CHECK(std::find(app.begin(), app.end(), "SEN") != app.end());
    CHECK(std::find(app.begin(), app.end(), "SEP") != app.end());
  }
  const auto gens = ReadJsonl(a + "/gen.jsonl");
  CHECK_FALSE(gens.empty());
  for (const auto &g : gens) {
    CHECK(g.contains("group_id"));
    CHECK(g.contains("candidates"));
  }

  const Run stats = Cli({"stats", "--dataset-dir", a + "/data", "--groups", a + "/groups.jsonl",
                         "--output", a + "/stats.json"});
  REQUIRE(stats.code == 0);
  CHECK(stats.out.find("applicable kinds") != std::string::npos);
  const Run again = Cli({"stats", "--dataset-dir", a + "/data"});
  CHECK(stats.out.starts_with(again.out));
  const json st = json::parse(ReadFile(a + "/data/stats.json"));
  for (const char *split : {"train", "dev", "test"}) CHECK(st["unique"][split].get<int>() > 0);
}

TEST_CASE("cli: balanced assembly caps rule categories") {
  const std::string dir = ScratchDir("cli_balanced");
  std::string lines;
  for (const auto &g : RandomGroups(3000, 12)) lines += GroupToJson(g).dump() + "\n";
  WriteFile(dir + "/groups.jsonl", lines);
  const Run r = Cli({"assemble", "--groups", dir + "/groups.jsonl", "--output-dir", dir + "/out",
                     "--balanced", "--cap", "150"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::map<std::string, std::size_t> counts;
  for (const auto &x : LoadInstances(dir + "/out/train.jsonl")) ++counts[CategoryName(x.category)];
  for (auto k : kRuleKinds) CHECK(counts[std::string(KindName(k))] <= 150);
  const json stats = json::parse(ReadFile(dir + "/out/stats.json"));
  CHECK(stats["counts"]["train"]["SEN"].get<std::size_t>() == counts["SEN"]);
}

TEST_CASE("cli: eval report is byte-identical across runs") {
  const std::string dir = ScratchDir("cli_eval");
  const auto fx = MakeTable4Fixture();
  WriteFile(dir + "/ds.jsonl", InstancesToJsonl(fx.dataset));
  std::string preds;
  for (const auto &p : fx.predictions) {
    preds += json{{"id", p.id}, {"label", LabelName(p.label)}}.dump() + "\n";
  }
  WriteFile(dir + "/preds.jsonl", preds);
  const Run a = Cli({"eval", "--dataset", dir + "/ds.jsonl", "--predictions", dir + "/preds.jsonl",
                     "--output", dir + "/a.json", "--svg", dir + "/a.svg"});
  const Run b = Cli({"eval", "--dataset", dir + "/ds.jsonl", "--predictions", dir + "/preds.jsonl",
                     "--output", dir + "/b.json"});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(ReadFile(dir + "/a.json") == ReadFile(dir + "/b.json"));
  CHECK(ReadFile(dir + "/a.svg").starts_with("<svg"));
  const json report = json::parse(ReadFile(dir + "/a.json"));
  CHECK(report.contains("positive_f1"));
}

TEST_CASE("cli: decode and filter through the bridge") {
  const std::string dir = ScratchDir("cli_bridge");
  const std::string corpus = WriteCorpus(dir);
  REQUIRE(Cli({"extract", "--corpus", corpus, "--output", dir + "/ext.jsonl"}).code == 0);
  auto records = ReadJsonl(dir + "/ext.jsonl");
  records.resize(2);
  std::string two;
  for (const auto &r : records) two += r.dump() + "\n";
  WriteFile(dir + "/two.jsonl", two);

  ::unsetenv(kBridgeEnvVar);
  Run r = Cli({"decode", "--input", dir + "/two.jsonl", "--output", dir + "/gen.jsonl", "--bridge"});
  CHECK(r.code == kExitInput);

  const FakeBridge bridge;
  ::setenv(kBridgeEnvVar, bridge.address().c_str(), 1);
  r = Cli({"decode", "--input", dir + "/two.jsonl", "--output", dir + "/gen.jsonl", "--bridge",
           "--schemes", "GEN,SEN", "--min-len", "2", "--max-len", "8", "--beam-size", "3",
           "--prune-factor", "3", "--default-type", "Chemical"});
  CHECK_MESSAGE(r.code == 0, r.err);
  r = Cli({"filter", "--input", dir + "/gen.jsonl", "--extractions", dir + "/two.jsonl", "--output",
           dir + "/acc.jsonl", "--bridge"});
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(bridge.requests() > 0);
  ::unsetenv(kBridgeEnvVar);
}

#ifdef MECHNLI_TOOL_PATH
TEST_CASE("cli: tool binary exit status") {
  const std::string dir = ScratchDir("cli_binary");
  const std::string tool = MECHNLI_TOOL_PATH;
  auto status = [](const std::string &cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status(tool + " --version") == 0);
  CHECK(status(tool + " bogus") == 1);
  WriteFile(dir + "/c.jsonl", "[]\n");
  CHECK(status(tool + " extract --corpus " + dir + "/c.jsonl --output " + dir + "/o.jsonl") == 2);
}
#endif
