#include <gtest/gtest.h>

#include <filesystem>

#include "eplab/cli/runner.hpp"

using namespace eplab;
using namespace eplab::cli;
namespace fs = std::filesystem;

namespace {

Invocation small(const std::string& id, const std::string& command = "eval") {
  Invocation inv;
  inv.command = command;
  inv.config = ExperimentConfig::defaults(id);
  inv.config.train_episodes = inv.config.is_patrol() ? 20 : 300;
  inv.config.eval_episodes = inv.config.is_patrol() ? 4 : 40;
  return inv;
}

const Artifact& artifact(const Outcome& out, const std::string& name) {
  for (const auto& a : out.artifacts) {
    if (a.name == name) return a;
  }
  throw std::out_of_range("no artifact " + name);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eplab-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, DefaultsRoundTripThroughText) {
  for (const auto& id : experiment_ids()) {
    const auto cfg = ExperimentConfig::defaults(id);
    const auto text = to_ini(cfg);
    const auto back = parse_config(text);
    EXPECT_EQ(to_ini(back), text) << id;
    EXPECT_EQ(config_hash(back), config_hash(cfg));
  }
}

TEST(Config, OverridesApply) {
  const auto cfg = parse_config("[experiment]\nid = patrol-state-d3\nseed = 7\neval_episodes = 12\n");
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.eval_episodes, 12);
  EXPECT_EQ(cfg.patrol.phases.size(), 3u);
  EXPECT_NE(config_hash(cfg), config_hash(ExperimentConfig::defaults("patrol-state-d3")));
}

TEST(Config, RejectsUnknownFieldWithLine) {
  try {
    parse_config("[experiment]\nid = deliberation-single\n\nfooo = 3\n", "", "x.ini");
    FAIL() << "accepted an unknown field";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 4);
    EXPECT_NE(std::string(e.what()).find("fooo"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[nosuch]\nx = 1\n", "assistant-single"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nid = nope\n"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nseed = 1\nseed = 2\n", "patrol-module"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\neval_episodes = 0\n", "patrol-module"), ConfigError);
}

TEST(Config, MissingFileNamesPath) {
  try {
    load_config("/nonexistent/dir/abc.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/abc.ini"), std::string::npos);
  }
}

TEST(Config, SampleConfigParses) {
  const auto cfg = load_config(std::string(EPLAB_SAMPLES_DIR) + "/patrol-state-d2.ini");
  EXPECT_EQ(cfg.id, "patrol-state-d2");
  cfg.validate();
}

TEST(Cli, RowCountsPerExperiment) {
  const std::map<std::string, std::size_t> want{{"deliberation-single", 4}, {"patrol-state-d2", 4},
                                                {"patrol-module", 2}, {"assistant-single", 3}};
  for (const auto& [id, rows] : want) {
    const auto out = execute(small(id));
    const auto parsed = eval::from_csv(artifact(out, "eval-metrics.csv").content);
    EXPECT_EQ(parsed.size(), rows) << id;
    EXPECT_FALSE(artifact(out, "eval-table.md").content.empty());
  }
  const auto out = execute(small("deliberation-single"));
  const auto rows = eval::from_csv(artifact(out, "eval-metrics.csv").content);
  std::vector<std::string> methods;
  for (const auto& r : rows) methods.push_back(r.method);
  EXPECT_EQ(methods, (std::vector<std::string>{"EP -> EP", "EP -> Step", "Step -> Step", "Step -> EP"}));
}

TEST(Cli, AssistantRowHasTableColumns) {
  const auto out = execute(small("assistant-milestones"));
  const auto rows = eval::from_csv(artifact(out, "eval-metrics.csv").content);
  for (const auto& r : rows) {
    for (const char* k : {"utility", "balanced", "timeout", "latency", "main"}) EXPECT_NO_THROW(r.at(k)) << k;
  }
}

TEST(Cli, SavedTablesReloadLosslessly) {
  const auto dir = scratch("tables");
  auto inv = small("deliberation-single", "train");
  const auto trained = execute(inv);
  const auto& text = artifact(trained, "qtable-EP.txt").content;
  EXPECT_EQ(agents::QTable::from_string(text).to_string(), text);
  for (const auto& a : trained.artifacts) write_file(dir / a.name, a.content);

  auto fresh = small("deliberation-single");
  auto reused = fresh;
  adopt_saved_tables(reused, dir);
  EXPECT_FALSE(reused.options.empty());
  const auto a = execute(fresh);
  const auto b = execute(reused);
  EXPECT_EQ(artifact(a, "eval-metrics.csv").content, artifact(b, "eval-metrics.csv").content);
  EXPECT_FALSE(b.inputs.empty());
  fs::remove_all(dir);
}

TEST(Cli, ManifestReplaysByteForByte) {
  auto inv = small("patrol-module");
  const auto out = execute(inv);
  const auto m = manifest(inv, out);
  EXPECT_EQ(m["config_hash"], config_hash(inv.config));
  const auto report = replay(m, 2);
  EXPECT_TRUE(report.ok());
  auto tampered = m;
  tampered["outputs"][0]["fnv1a"] = "0000000000000000";
  EXPECT_FALSE(replay(tampered, 1).ok());
}

TEST(Cli, WorkersDoNotChangeOutputs) {
  auto one = small("assistant-single");
  auto three = one;
  three.workers = 3;
  EXPECT_EQ(artifact(execute(one), "eval-metrics.csv").content, artifact(execute(three), "eval-metrics.csv").content);
}

TEST(Cli, RenderWithoutMatchSignalsNoMatch) {
  auto inv = small("patrol-module", "render");
  inv.options["method"] = "Loop";
  inv.options["criterion"] = "first_interruption";
  EXPECT_THROW(execute(inv), NoMatch);
  inv.options["criterion"] = "bogus";
  EXPECT_THROW(execute(inv), UsageError);
}

TEST(Cli, TrainRefusesAssistant) { EXPECT_THROW(execute(small("assistant-single", "train")), UsageError); }
