#include "scgnn/adjacency.hpp"
#include "scgnn/nn/model.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

using namespace scgnn;
using namespace scgnn::nn;

namespace {

ModelConfig tiny_config(int n_samples = 200) {
  ModelConfig cfg;
  cfg.n_samples = n_samples;
  cfg.blocks = {{4, 4, 9, 5, 4, true, 0.0}, {6, 8, 3, 3, 5, false, 0.0}};
  cfg.dense_widths = {8, 8};
  cfg.dense_dropout = 0.0;
  cfg.gnn_stack = {GnnLayerSpec{GnnLayerSpec::Type::kChebyshev, 8, 1},
                   GnnLayerSpec{GnnLayerSpec::Type::kGraphSkip, 8, 1}};
  cfg.gnn_dropout = 0.0;
  cfg.attention_channels = 3;
  cfg.embedding_dense_units = 6;
  cfg.embedding_dim = 5;
  cfg.projection_hidden = 4;
  cfg.projection_dim = 3;
  cfg.head_dropout = 0.0;
  cfg.prediction_hidden = 4;
  return cfg;
}

SeqBatch random_input(int units, int len, Rng& rng, double scale = 1.0) {
  SeqBatch x(units);
  for (auto& m : x) {
    m.resize(len, 3);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  }
  return x;
}

GraphContext graph_for(int n, Rng& rng) {
  return make_graph_context(build_adjacency(scgnn::tst::random_distances(n, rng), 0.5));
}

}  // namespace

TEST(Model, DefaultShapes) {
  ModelConfig cfg;  // 3000 x 3 input
  Model model(cfg, 5);
  Rng rng(50);
  const int n = 6;
  const GraphContext g = graph_for(n, rng);
  SeqBatch x = random_input(n, 3000, rng);

  const Matrix f = model.forward_features(x);
  EXPECT_EQ(f.rows(), n);
  EXPECT_EQ(f.cols(), 256);
  const Matrix go = model.forward_graph(f, g);
  EXPECT_EQ(go.cols(), 256);
  const Matrix emb = model.forward_embedding(go);
  EXPECT_EQ(emb.cols(), 32);
  const Matrix z = model.forward_projection(emb);
  EXPECT_EQ(z.cols(), 10);
  const Vector intensity = model.forward_intensity(emb);
  EXPECT_EQ(intensity.size(), n);
  for (int i = 0; i < n; ++i) EXPECT_GE(intensity(i), 0.0);
}

TEST(Model, DefaultParameterCountNearTableValue) {
  Model model(ModelConfig{}, 1);
  const long count = model.count_parameters();
  EXPECT_EQ(count, 759279);  // regression pin for the default configuration
  EXPECT_GE(count, 705000 * 0.9);
  EXPECT_LE(count, 705000 * 1.1);
}

TEST(Model, ParameterCountGrowsWithDenseWidths) {
  ModelConfig cfg;
  Model base(cfg, 1);
  ModelConfig wide = cfg;
  for (auto& w : wide.dense_widths) w *= 2;
  Model big(wide, 1);
  EXPECT_GT(big.count_parameters(), base.count_parameters());
}

TEST(Model, ParameterCountDropsWithoutAttentionPool) {
  ModelConfig cfg;
  ModelConfig noap = cfg;
  noap.attention_pool = false;
  Model a(cfg, 1), b(noap, 1);
  EXPECT_LT(b.count_parameters(), a.count_parameters());
}

TEST(Model, AllZeroInputFiniteAndStationUniform) {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 7);
  Rng rng(51);
  const int n = 5;
  const GraphContext g = graph_for(n, rng);
  SeqBatch x(n);
  for (auto& m : x) m = Matrix::Zero(cfg.n_samples, 3);
  const Matrix f = model.forward_features(x);
  EXPECT_TRUE(f.allFinite());
  for (int i = 1; i < n; ++i) EXPECT_TRUE(f.row(i).isApprox(f.row(0)));
  const Vector intensity = model.predict(x, g);
  EXPECT_TRUE(intensity.allFinite());
}

TEST(Model, StationPermutationEquivariance) {
  const ModelConfig cfg = tiny_config();
  Rng rng(52);
  for (int trial = 0; trial < 20; ++trial) {
    Model model(cfg, 100 + trial);
    const int n = 4 + static_cast<int>(rng.uniform_int(4));
    const Matrix d = scgnn::tst::random_distances(n, rng);
    const auto adj = build_adjacency(d, 0.5);
    const GraphContext g = make_graph_context(adj);
    SeqBatch x = random_input(n, cfg.n_samples, rng);

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    Matrix wp(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) wp(i, j) = adj.weights(perm[i], perm[j]);
    const GraphContext gp = make_graph_context(wp);
    SeqBatch xp(n);
    for (int i = 0; i < n; ++i) xp[i] = x[perm[i]];

    const Matrix emb = model.embed(x, g);
    const Matrix z = model.forward_projection(emb);
    const Vector intensity = model.forward_intensity(emb);

    const Matrix emb_p = model.embed(xp, gp);
    const Matrix z_p = model.forward_projection(emb_p);
    const Vector intensity_p = model.forward_intensity(emb_p);

    for (int i = 0; i < n; ++i) {
      EXPECT_LT((emb_p.row(i) - emb.row(perm[i])).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_LT((z_p.row(i) - z.row(perm[i])).cwiseAbs().maxCoeff(), 1e-9);
      EXPECT_NEAR(intensity_p(i), intensity(perm[i]), 1e-9);
    }
  }
}

TEST(Model, DeterministicInferenceAndDuplicateBatch) {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 9);
  Rng rng(53);
  const int n = 4;
  const GraphContext g = graph_for(n, rng);
  SeqBatch one = random_input(n, cfg.n_samples, rng);
  SeqBatch two;
  two.insert(two.end(), one.begin(), one.end());
  two.insert(two.end(), one.begin(), one.end());
  auto out = model.forward(two, 2, n, g, false, nullptr);
  EXPECT_TRUE(out.embedding.topRows(n).isApprox(out.embedding.bottomRows(n), 1e-12));
  EXPECT_TRUE(out.projection.topRows(n).isApprox(out.projection.bottomRows(n), 1e-12));

  const Matrix emb1 = model.embed(one, g);
  const Matrix emb2 = model.embed(one, g);
  EXPECT_TRUE(emb1.isApprox(emb2));
}

TEST(Model, StripContrastiveHead) {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 11);
  const long full = model.count_parameters();
  long head = 0;
  for (Param* p : model.projection_params())
    if (p->learnable) head += p->size();

  EXPECT_TRUE(model.strip_contrastive_head());
  EXPECT_EQ(model.count_parameters(), full - head);
  EXPECT_FALSE(model.head_present());
  EXPECT_TRUE(model.trunk_frozen());
  for (Param* p : model.trunk_params()) EXPECT_TRUE(p->frozen);
  for (Param* p : model.prediction_params()) EXPECT_FALSE(p->frozen);

  Rng rng(54);
  const int n = 4;
  const GraphContext g = graph_for(n, rng);
  SeqBatch x = random_input(n, cfg.n_samples, rng);
  const Matrix emb = model.embed(x, g);
  EXPECT_THROW(model.forward_projection(emb), UsageError);

  // double strip is an idempotent no-op
  EXPECT_FALSE(model.strip_contrastive_head());
  EXPECT_EQ(model.count_parameters(), full - head);
}

TEST(Model, CheckpointRoundTrip) {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 13);
  Rng rng(55);
  const int n = 5;
  const GraphContext g = graph_for(n, rng);
  SeqBatch x = random_input(n, cfg.n_samples, rng);
  const Vector before = model.predict(x, g);

  const std::string path =
      (std::filesystem::temp_directory_path() / "scgnn_test.ckpt").string();
  model.save_checkpoint(path);
  Model loaded = Model::load_checkpoint(path);
  const Vector after = loaded.predict(x, g);
  // parameters round-trip through f32 storage
  EXPECT_LT((before - after).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(loaded.count_parameters(), model.count_parameters());

  // a second save/load of the already-quantized model is bit-stable
  loaded.save_checkpoint(path);
  Model loaded2 = Model::load_checkpoint(path);
  const Vector after2 = loaded2.predict(x, g);
  EXPECT_EQ((after - after2).cwiseAbs().maxCoeff(), 0.0);
  std::filesystem::remove(path);
}

TEST(Model, StrippedCheckpointRoundTrip) {
  const ModelConfig cfg = tiny_config();
  Model model(cfg, 17);
  model.strip_contrastive_head();
  const std::string path =
      (std::filesystem::temp_directory_path() / "scgnn_stripped.ckpt").string();
  model.save_checkpoint(path);
  Model loaded = Model::load_checkpoint(path);
  EXPECT_FALSE(loaded.head_present());
  EXPECT_TRUE(loaded.trunk_frozen());
  EXPECT_EQ(loaded.count_parameters(), model.count_parameters());
  std::filesystem::remove(path);
}

TEST(Model, RejectsWrongInputLength) {
  const ModelConfig cfg = tiny_config(200);
  Model model(cfg, 19);
  Rng rng(56);
  const int n = 3;
  const GraphContext g = graph_for(n, rng);
  SeqBatch x = random_input(n, 150, rng);
  EXPECT_THROW(model.forward(x, 1, n, g, false, nullptr), UsageError);
}

TEST(Model, IncompatiblePoolChainFailsAtConstruction) {
  ModelConfig cfg = tiny_config(20);  // far too short for the conv/pool chain
  EXPECT_THROW(Model(cfg, 1), UsageError);
}

TEST(Model, NoNanOnRandomConfigurations) {
  Rng rng(57);
  for (int trial = 0; trial < 60; ++trial) {
    ModelConfig cfg;
    cfg.n_samples = 120 + static_cast<int>(rng.uniform_int(4)) * 40;
    const int f1 = 2 + static_cast<int>(rng.uniform_int(4));
    const int f2 = f1 + static_cast<int>(rng.uniform_int(4));
    cfg.blocks = {{f1, f2, 5 + static_cast<int>(rng.uniform_int(6)),
                   3 + static_cast<int>(rng.uniform_int(3)),
                   2 + static_cast<int>(rng.uniform_int(3)),
                   rng.uniform() < 0.5, 0.0}};
    cfg.dense_widths = {4 + static_cast<int>(rng.uniform_int(8))};
    cfg.dense_dropout = 0.0;
    cfg.gnn_dropout = 0.0;
    cfg.head_dropout = 0.0;
    cfg.gnn_stack.clear();
    const char* kinds[] = {"cheb", "gcs", "gcn", "diff", "gat"};
    const int depth = 1 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < depth; ++i) {
      GnnLayerSpec spec = GnnLayerSpec::parse(kinds[rng.uniform_int(5)]);
      spec.channels = 3 + static_cast<int>(rng.uniform_int(6));
      spec.order = 1 + static_cast<int>(rng.uniform_int(2));
      cfg.gnn_stack.push_back(spec);
    }
    cfg.attention_pool = rng.uniform() < 0.8;
    cfg.attention_channels = 2 + static_cast<int>(rng.uniform_int(3));
    cfg.embedding_dense_units = 4 + static_cast<int>(rng.uniform_int(5));
    cfg.embedding_dim = 4 + static_cast<int>(rng.uniform_int(4));
    cfg.projection_hidden = 4;
    cfg.projection_dim = 2;
    cfg.prediction_hidden = 3;

    Model model(cfg, 1000 + trial);
    const int n = 3 + static_cast<int>(rng.uniform_int(4));
    const GraphContext g = graph_for(n, rng);
    SeqBatch x = random_input(2 * n, cfg.n_samples, rng, 10.0);
    Rng drop(1);
    auto out = model.forward(x, 2, n, g, true, &drop);
    ASSERT_TRUE(out.embedding.allFinite()) << "trial " << trial;
    ASSERT_TRUE(out.projection.allFinite()) << "trial " << trial;
    ASSERT_TRUE(out.intensity.allFinite()) << "trial " << trial;
  }
}
