#include <gtest/gtest.h>

#include "astg/config.hpp"
#include "astg/error.hpp"

using namespace astg;

TEST(RunConfig, DefaultsTrainOnScatteredScene) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.scenario.kind, sim::ScenarioKind::scattered_static);
  EXPECT_EQ(cfg.scenario.n_dynamic, 5);
  EXPECT_EQ(cfg.scenario.n_static, 2);
  EXPECT_EQ(cfg.train.il_episodes + cfg.train.rl_episodes, 10000);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, SerializeRoundTripsEveryKey) {
  RunConfig cfg;
  cfg.seed = 123456789012345ULL;
  cfg.scenario.kind = sim::ScenarioKind::group_static;
  cfg.scenario.layout = sim::GroupLayout::CO;
  cfg.scenario.n_static = 5;
  cfg.episode.dt = 0.1 + 0.2;  // not exactly representable as written
  cfg.network.ablation = net::Ablation::temporal_only;
  cfg.train.rl_learning_rate = 1.0 / 3.0;
  cfg.out_dir = "runs/a b";

  const std::string text = serialize_config(cfg);
  RunConfig back;
  apply_config_text(back, text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.episode.dt, cfg.episode.dt);
  EXPECT_EQ(back.train.rl_learning_rate, cfg.train.rl_learning_rate);
  EXPECT_EQ(back.network.ablation, net::Ablation::temporal_only);
  EXPECT_EQ(back.out_dir, "runs/a b");
  EXPECT_EQ(config_keys().size(), static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(RunConfig, CommentsAndBlankLines) {
  RunConfig cfg;
  apply_config_text(cfg, "# header\n\n  seed = 9   # trailing\ntrain.gamma=0.95\n");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.train.gamma, 0.95);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_config_text(cfg, "seeed = 3\n"), InvalidConfigError);
  EXPECT_THROW(apply_config_text(cfg, "seed = three\n"), InvalidConfigError);
  EXPECT_THROW(apply_config_text(cfg, "seed\n"), InvalidConfigError);
  EXPECT_THROW(apply_config_text(cfg, "scenario.kind = spiral\n"), InvalidConfigError);
  EXPECT_THROW(apply_config_text(cfg, "train.gamma = 0.5x\n"), InvalidConfigError);
  try {
    apply_config_text(cfg, "seed = 1\nbogus.key = 2\n", "run.cfg");
    FAIL();
  } catch (const InvalidConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, ValidateCatchesBadCombinations) {
  RunConfig cfg;
  cfg.policy = "sarl";
  EXPECT_THROW(cfg.validate(), InvalidConfigError);
  cfg = {};
  cfg.train.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidConfigError);
  EXPECT_THROW(apply_config_file(cfg, "/nonexistent/astg.cfg"), InvalidConfigError);
}
