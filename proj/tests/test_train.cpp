#include "support/oracles.hpp"
#include "support/tempdir.hpp"
#include "ttrf/checkpoint.hpp"
#include "ttrf/cloud.hpp"
#include "ttrf/config.hpp"
#include "ttrf/dataset.hpp"
#include "ttrf/error.hpp"
#include "ttrf/fixture.hpp"
#include "ttrf/metrics.hpp"
#include "ttrf/optimizer.hpp"
#include "ttrf/parallel.hpp"
#include "ttrf/train.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ttrf;
using testing_support::TempDir;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.batch_rays = 128;
  c.n_coarse = 16;
  c.n_fine = 16;
  c.feature_dim = 16;
  c.hidden = 32;
  c.appearance = 16;
  c.total_steps = 20;
  c.decay_steps = 2000;
  c.log_every = 5;
  c.seed = 3;
  return c;
}

/// Small fixture written once per process.
const std::filesystem::path& fixture_dir() {
  static TempDir dir;
  static bool made = false;
  if (!made) {
    FixtureOptions opt;
    opt.train_views = 4;
    opt.test_views = 2;
    opt.width = 24;
    opt.height = 24;
    opt.points = 600;
    opt.supersample = 2;
    make_sphere_fixture(dir.path(), opt);
    made = true;
  }
  return dir.path();
}

TrainState fresh_state(const TrainConfig& c) {
  const auto cloud = load_ply(fixture_dir() / "points.ply");
  return init_train_state(prepare_cloud(cloud, c), c);
}

std::string checkpoint_bytes(const TrainState& s) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, s);
  return out.str();
}

}  // namespace

TEST(Config, DefaultsAndPreset) {
  const TrainConfig c;
  EXPECT_EQ(c.batch_rays, 4096);
  EXPECT_EQ(c.lr_start, 1e-3);
  EXPECT_EQ(c.lr_end, 1e-4);
  EXPECT_EQ(c.decay_steps, 300000);
  EXPECT_EQ(c.max_hits, 512);
  EXPECT_EQ(c.feature_dim, 64);
  EXPECT_EQ(c.hidden, 128);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.eps, 1e-8);
  EXPECT_EQ(c.optimizer, OptimizerKind::RAdam);
  EXPECT_EQ(c.augment_ratio, 0.5);
  EXPECT_EQ(c.max_points, 1000000);
  EXPECT_NO_THROW(c.validate());
  EXPECT_NO_THROW(TrainConfig::desk().validate());
}

TEST(Config, ParseSerializeRoundTrip) {
  auto c = small_config();
  c.activation = TrunkActivation::Softplus;
  c.background = BackgroundMode::Black;
  c.optimizer = OptimizerKind::Adam;
  c.lr_end = 3.3e-5;
  c.data_dir = "/tmp/some scene";
  const auto text = serialize_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.lr_end, 3.3e-5);
  EXPECT_EQ(back.data_dir, "/tmp/some scene");
  EXPECT_EQ(back.activation, TrunkActivation::Softplus);
}

TEST(Config, CommentsAndErrors) {
  const auto c = parse_config("# a comment\n\nbatch_rays = 77   # trailing\n  seed=5\n");
  EXPECT_EQ(c.batch_rays, 77);
  EXPECT_EQ(c.seed, 5u);
  EXPECT_THROW((void)parse_config("no_such_key = 1\n"), Error);
  EXPECT_THROW((void)parse_config("batch_rays = many\n"), Error);
  EXPECT_THROW((void)parse_config("batch_rays 5\n"), Error);
  auto bad = small_config();
  bad.lr_end = 1.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(LearningRate, EndpointsAndMidpoint) {
  const TrainConfig c;
  EXPECT_EQ(lr_at(0, c), 1e-3);
  EXPECT_EQ(lr_at(300000, c), 1e-4);
  EXPECT_EQ(lr_at(400000, c), 1e-4);
  EXPECT_NEAR(lr_at(150000, c), std::pow(10.0, -3.5), 1e-15);
  double prev = lr_at(0, c);
  for (std::int64_t s = 1000; s <= 310000; s += 1000) {
    const double lr = lr_at(s, c);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(Loss, ClosedFormsAndOracle) {
  std::vector<Eigen::Vector3d> pred{Eigen::Vector3d(0.5, 0.5, 0.5)}, gt{Eigen::Vector3d::Zero()}, d(1);
  EXPECT_NEAR(mse_loss(pred, gt, d), 0.25, 1e-15);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(d[0][c], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(mse_loss(pred, pred, d), 0.0);
  EXPECT_TRUE(d[0].isZero());
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Eigen::Vector3d> p(50), g(50), dp(50);
  for (int i = 0; i < 50; ++i) p[i] = Eigen::Vector3d(u(rng), u(rng), u(rng)), g[i] = Eigen::Vector3d(u(rng), u(rng), u(rng));
  double ref = 0;
  for (int i = 0; i < 50; ++i) {
    for (int c = 0; c < 3; ++c) ref += (p[i][c] - g[i][c]) * (p[i][c] - g[i][c]);
  }
  ref /= 150;
  EXPECT_NEAR(mse_loss(p, g, dp), ref, 1e-9);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(dp[i][1], 2 * (p[i][1] - g[i][1]) / 150, 1e-15);
  std::vector<Eigen::Vector3d> shorter(49), dshort(49);
  EXPECT_THROW((void)mse_loss(shorter, g, dp), Error);
}

TEST(Optimizer, ZeroGradientLeavesParameters) {
  Optimizer<double> opt(OptimizerKind::RAdam, 0.9, 0.999, 1e-8);
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0};
  for (int s = 0; s < 20; ++s) {
    opt.begin_step();
    opt.update(0, p, g, 1e-2);
  }
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Optimizer, ConstantGradientDescends) {
  for (auto kind : {OptimizerKind::RAdam, OptimizerKind::Adam}) {
    Optimizer<float> opt(kind, 0.9, 0.999, 1e-8);
    std::vector<float> p{0.0f, 0.0f}, g{0.5f, -2.0f};
    for (int s = 0; s < 50; ++s) {
      opt.begin_step();
      opt.update(0, p, g, 1e-2);
    }
    EXPECT_LT(p[0], 0.0f);
    EXPECT_GT(p[1], 0.0f);
  }
}

TEST(Optimizer, RectificationThreshold) {
  const Optimizer<double> opt(OptimizerKind::RAdam, 0.9, 0.999, 1e-8);
  EXPECT_FALSE(opt.rectified(1));
  EXPECT_FALSE(opt.rectified(4));
  EXPECT_TRUE(opt.rectified(6));
  EXPECT_TRUE(opt.rectified(1000));
  EXPECT_NEAR(opt.rectification(1000000), 1.0, 1e-6);
}

TEST(Optimizer, MatchesReferenceOnQuadraticBowl) {
  // f(x) = 0.5 sum_i k_i (x_i - c_i)^2 over a few coordinates.
  const std::vector<double> k{1.0, 4.0, 0.25, 10.0}, c{1.0, -2.0, 3.0, 0.5};
  Optimizer<double> opt(OptimizerKind::RAdam, 0.9, 0.999, 1e-8);
  std::vector<double> x(4, 0.0);
  std::vector<oracle::RAdamRef> ref(4);
  std::vector<double> xr(4, 0.0);
  TrainConfig lr_cfg;
  lr_cfg.decay_steps = 100;
  for (int s = 0; s < 100; ++s) {
    const double lr = 0.05 * lr_at(s, lr_cfg) / lr_cfg.lr_start;
    std::vector<double> g(4);
    for (int i = 0; i < 4; ++i) g[static_cast<std::size_t>(i)] = k[static_cast<std::size_t>(i)] * (x[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)]);
    opt.begin_step();
    opt.update(0, x, g, lr);
    for (std::size_t i = 0; i < 4; ++i) xr[i] = ref[i].step(xr[i], k[i] * (xr[i] - c[i]), lr);
    for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(x[i], xr[i], 1e-6) << "step " << s;
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(std::abs(x[i] - c[i]), std::abs(c[i]));
}

TEST(Optimizer, NonFiniteGradientThrowsAndKeepsParameters) {
  Optimizer<float> opt(OptimizerKind::RAdam, 0.9, 0.999, 1e-8);
  std::vector<float> p{1.0f, 2.0f}, g{0.1f, std::numeric_limits<float>::infinity()};
  opt.begin_step();
  try {
    opt.update(0, p, g, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteGradient);
  }
  EXPECT_EQ(p, (std::vector<float>{1.0f, 2.0f}));
}

TEST(Log, CsvFormat) {
  std::ostringstream out;
  write_log_header(out);
  write_log_row(out, {10, 0.5, 1e-3, std::nullopt});
  write_log_row(out, {20, 0.25, 5e-4, 21.5});
  EXPECT_EQ(out.str(), "step,loss,lr,psnr_eval\n10,0.5,0.001,\n20,0.25,0.0005,21.5\n");
}

TEST(Training, ZeroStepsLeavesStateUnchanged) {
  auto c = small_config();
  c.total_steps = 0;
  auto state = fresh_state(c);
  const auto before = checkpoint_bytes(state);
  const auto ds = load_nerf_transforms(fixture_dir());
  train(state, ds, 1);
  EXPECT_EQ(checkpoint_bytes(state), before);
}

TEST(Training, DeterministicForAnyThreadCount) {
  const auto c = small_config();
  const auto ds = load_nerf_transforms(fixture_dir());
  std::string logs[3];
  std::string ckpts[3];
  const int threads[3] = {1, 1, 3};
  for (int r = 0; r < 3; ++r) {
    auto state = fresh_state(c);
    std::ostringstream log;
    write_log_header(log);
    TrainHooks hooks;
    hooks.log = &log;
    train(state, ds, threads[r], hooks);
    logs[r] = log.str();
    ckpts[r] = checkpoint_bytes(state);
    EXPECT_EQ(state.step, 20);
  }
  EXPECT_EQ(logs[0], logs[1]);
  EXPECT_EQ(ckpts[0], ckpts[1]);
  EXPECT_EQ(logs[0], logs[2]);
  EXPECT_EQ(ckpts[0], ckpts[2]);
  EXPECT_NE(logs[0].find("\n20,"), std::string::npos);
}

TEST(Training, ResumeMatchesUninterruptedRun) {
  const auto c = small_config();
  const auto ds = load_nerf_transforms(fixture_dir());
  auto full = fresh_state(c);
  train(full, ds, 1);

  auto part = fresh_state(c);
  part.config.total_steps = 8;
  train(part, ds, 1);
  std::stringstream buf;
  write_checkpoint(buf, part);
  auto resumed = read_checkpoint(buf);
  resumed.config.total_steps = 20;
  train(resumed, ds, 1);
  EXPECT_EQ(resumed.field.features, full.field.features);
  EXPECT_EQ(resumed.mlp.params().w2, full.mlp.params().w2);
}

TEST(Checkpoint, RoundTripRendersBitIdentically) {
  const TempDir dir;
  auto c = small_config();
  c.total_steps = 5;
  auto state = fresh_state(c);
  const auto ds = load_nerf_transforms(fixture_dir());
  train(state, ds, 1);
  save_checkpoint(dir / "a.ckpt", state);
  const auto back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back.step, 5);
  EXPECT_EQ(serialize_config(back.config), serialize_config(state.config));
  EXPECT_EQ(mesh_hash(back.mesh), mesh_hash(state.mesh));
  EXPECT_EQ(back.optimizer.step_count(), state.optimizer.step_count());
  EXPECT_EQ(checkpoint_bytes(back), checkpoint_bytes(state));
  const auto a = render_state(state, ds.test[0].camera, 1);
  const auto b = render_state(back, ds.test[0].camera, 1);
  EXPECT_EQ(a.color.data, b.color.data);
  EXPECT_EQ(a.depth, b.depth);
}

TEST(Checkpoint, RejectsCorruption) {
  auto c = small_config();
  const auto state = fresh_state(c);
  const auto bytes = checkpoint_bytes(state);
  auto expect_parse_error = [](const std::string& b) {
    std::istringstream in(b);
    try {
      (void)read_checkpoint(in);
      ADD_FAILURE() << "no error";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_parse_error(bad_magic);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  expect_parse_error(bad_version);
  expect_parse_error(bytes.substr(0, bytes.size() / 2));
  EXPECT_EQ(bytes.substr(0, 4), "TTRF");
}

TEST(Training, LossDropsAndOverfitsOneImage) {
  // One training image, 2k steps.
  const TempDir dir;
  FixtureOptions opt;
  opt.train_views = 1;
  opt.test_views = 1;
  opt.width = 32;
  opt.height = 32;
  opt.points = 1500;
  opt.supersample = 2;
  make_sphere_fixture(dir.path(), opt);
  const auto ds = load_nerf_transforms(dir.path());
  auto c = TrainConfig::desk();
  c.batch_rays = 256;
  c.n_coarse = 16;
  c.n_fine = 16;
  c.total_steps = 2000;
  c.decay_steps = 2000;
  c.log_every = 1;
  auto state = init_train_state(prepare_cloud(load_ply(dir / "points.ply"), c), c);
  std::vector<double> losses;
  TrainHooks hooks;
  hooks.on_log = [&](const LogRow& row) { losses.push_back(row.loss); };
  train(state, ds, default_threads(), hooks);
  ASSERT_EQ(losses.size(), 2000u);
  auto median = [&](std::size_t a, std::size_t b) {
    std::vector<double> v(losses.begin() + static_cast<long>(a), losses.begin() + static_cast<long>(b));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  EXPECT_GT(median(0, 500), median(1500, 2000));
  const auto eval = evaluate_state(state, ds.train, default_threads());
  EXPECT_GT(eval.psnr[0], 30.0);
}
