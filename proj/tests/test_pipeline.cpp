#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relalign/manifest.hpp"
#include "relalign/pipeline.hpp"
#include "test_util.hpp"

using namespace relalign;
using namespace relalign::cli;
namespace fs = std::filesystem;

namespace {

KV synthetic_kv() {
  KV kv;
  kv["data.source"] = "synthetic";
  kv["data.classes"] = "3";
  kv["data.per_class"] = "20";
  kv["data.dev_per_class"] = "5";
  kv["data.test_per_class"] = "5";
  kv["data.seed"] = "7";
  kv["train.learning_rate"] = "0.02";
  kv["train.max_epochs"] = "4";
  kv["train.seeds"] = "1,2";
  kv["train.batch_size"] = "16";
  kv["train.label_encoder"] = "random";
  kv["encoder.embed_dim"] = "16";
  kv["encoder.vocab_size"] = "256";
  kv["encoder.max_len_arg1"] = "12";
  kv["encoder.max_len_arg2"] = "12";
  return kv;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("manifest matching ignores timestamps") {
  RunManifest a;
  a.command = "train";
  a.config_hash = "abc";
  a.inputs = {"x"};
  a.inputs_fingerprint = "f1";
  a.seeds = {1, 2};
  a.started = "2024-01-01T00:00:00Z";
  RunManifest b = a;
  b.started = "2030-09-09T09:09:09Z";
  b.finished = "2030-09-09T09:10:09Z";
  CHECK(a.matches(b));
  b.config_hash = "zzz";
  CHECK_FALSE(a.matches(b));

  const auto dir = testutil::temp_dir("manifest");
  save_manifest(a, dir);
  CHECK(manifest_exists(dir));
  const auto loaded = load_manifest(dir);
  CHECK(loaded.matches(a));
  CHECK(loaded.seeds == a.seeds);
}

TEST_CASE("fingerprint changes with file content") {
  const auto dir = testutil::temp_dir("fp");
  testutil::write_file(dir + "/a.txt", "one");
  const auto f1 = fingerprint_paths({dir});
  testutil::write_file(dir + "/a.txt", "two");
  const auto f2 = fingerprint_paths({dir});
  CHECK(f1 != f2);
  testutil::write_file(dir + "/a.txt", "one");
  CHECK(fingerprint_paths({dir}) == f1);
}

TEST_CASE("pipeline: ingest and train stages produce artifacts and skip on rerun") {
  const auto root = testutil::temp_dir("pipe");
  const KV kv = synthetic_kv();
  std::ostringstream log;

  CHECK(run_pipeline(kv, {"ingest", "train"}, root, log) == 0);
  CHECK(fs::exists(fs::path(root) / "ingest" / "train.jsonl"));
  CHECK(fs::exists(fs::path(root) / "ingest" / "taxonomy.json"));
  CHECK(fs::exists(fs::path(root) / "ingest" / "manifest.json"));
  CHECK(fs::exists(fs::path(root) / "train" / "seed-1" / "label_table.txt"));
  CHECK(fs::exists(fs::path(root) / "train" / "seed-2" / "metrics.json"));
  CHECK(fs::exists(fs::path(root) / "train" / "aggregate.json"));

  SUBCASE("rerun with unchanged inputs skips both stages") {
    const auto ingest_again = stage_ingest(kv, (fs::path(root) / "ingest").string(), log);
    CHECK(ingest_again.skipped);
    const auto train_again = stage_train(kv, (fs::path(root) / "ingest").string(),
                                         (fs::path(root) / "train").string(), log);
    CHECK(train_again.skipped);
  }

  SUBCASE("changing the config re-runs the stage") {
    KV changed = kv;
    changed["train.max_epochs"] = "5";
    const auto again = stage_train(changed, (fs::path(root) / "ingest").string(),
                                   (fs::path(root) / "train").string(), log);
    CHECK_FALSE(again.skipped);
  }

  SUBCASE("evaluate and report stages consume the run") {
    CHECK(run_pipeline(kv, {"evaluate", "report"}, root, log) == 0);
    CHECK(fs::exists(fs::path(root) / "evaluate" / "seed-1_heatmap.svg"));
    CHECK(fs::exists(fs::path(root) / "evaluate" / "seed-1_corr_raw.tsv"));
    CHECK(fs::exists(fs::path(root) / "evaluate" / "seed-1_projection.svg"));
    CHECK(fs::exists(fs::path(root) / "report" / "report.md"));
    const auto table = read_file((fs::path(root) / "report" / "report.md").string());
    CHECK(table.find("(± ") != std::string::npos);
  }
}

TEST_CASE("pipeline: requesting map without trained runs is a dependency error") {
  const auto root = testutil::temp_dir("pipe_dep");
  std::ostringstream log;
  CHECK_THROWS_WITH_AS(run_pipeline(synthetic_kv(), {"map"}, root, log),
                       doctest::Contains("train"), ValidationError);
  CHECK_THROWS_WITH_AS(run_pipeline(synthetic_kv(), {"bogus"}, root, log),
                       doctest::Contains("bogus"), ValidationError);
}

TEST_CASE("pipeline reruns reproduce byte-identical metric tables") {
  const KV kv = synthetic_kv();
  const auto root1 = testutil::temp_dir("pipe_det1");
  const auto root2 = testutil::temp_dir("pipe_det2");
  std::ostringstream log;
  REQUIRE(run_pipeline(kv, {"ingest", "train", "report"}, root1, log) == 0);
  REQUIRE(run_pipeline(kv, {"ingest", "train", "report"}, root2, log) == 0);
  CHECK(read_file((fs::path(root1) / "train" / "aggregate.json").string()) ==
        read_file((fs::path(root2) / "train" / "aggregate.json").string()));
  CHECK(read_file((fs::path(root1) / "report" / "report.md").string()) ==
        read_file((fs::path(root2) / "report" / "report.md").string()));
  CHECK(read_file((fs::path(root1) / "train" / "seed-1" / "label_table.txt").string()) ==
        read_file((fs::path(root2) / "train" / "seed-1" / "label_table.txt").string()));
}

TEST_CASE("best seed selection prefers the quality score") {
  const auto root = testutil::temp_dir("best");
  auto write_seed = [&](const std::string& name, double leq, double acc) {
    const auto dir = fs::path(root) / name;
    fs::create_directories(dir);
    std::ofstream out(dir / "metrics.json");
    out << "{\"accuracy\": " << acc << ", \"macro_f1\": 0.5, \"leq\": " << leq
        << ", \"model_kind\": \"label-embedding\", \"label_encoder_kind\": \"random\"}";
  };
  write_seed("seed-1", 0.80, 0.99);
  write_seed("seed-2", 0.95, 0.50);
  write_seed("seed-3", 0.90, 0.70);
  CHECK(best_seed_dir(root) == (fs::path(root) / "seed-2").string());
  CHECK_THROWS_AS(best_seed_dir(testutil::temp_dir("best_empty")), ValidationError);
}

TEST_CASE("aggregate files round-trip") {
  train::AggregateReport agg;
  train::SeedResult r1;
  r1.seed = 4;
  r1.metrics.accuracy = 0.9;
  r1.metrics.macro_f1 = 0.8;
  r1.metrics.leq = 0.7;
  agg.per_seed = {r1};
  agg.mean_accuracy = 0.9;
  agg.mean_macro_f1 = 0.8;
  agg.mean_leq = 0.7;
  agg.leq_available = true;
  agg.single_run = true;
  const auto dir = testutil::temp_dir("agg");
  save_aggregate(agg, "demo", dir + "/aggregate.json");
  const auto back = load_aggregate(dir + "/aggregate.json");
  CHECK(back.name == "demo");
  CHECK(back.aggregate.mean_accuracy == 0.9);
  CHECK(back.aggregate.leq_available);
  REQUIRE(back.aggregate.per_seed.size() == 1);
  CHECK(back.aggregate.per_seed[0].metrics.leq.value() == 0.7);
}
