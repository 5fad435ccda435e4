#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "doctest.h"
#include "json.hpp"
#include "omrn/checkpoint.hpp"
#include "omrn/cli.hpp"
#include "omrn/model.hpp"
#include "omrn/training.hpp"
#include "test_util.hpp"

using namespace omrn;

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("checkpoints round trip bitwise") {
  auto dir = test::scratch_dir("ckpt_roundtrip");
  ModelConfig cfg;
  cfg.model_dim = 16;
  cfg.loc.widths = {3, 7};
  cfg.loc.weights.regression = 0.25;
  cfg.agg.alpha = 0.4;
  cfg.agg.radius = 2;
  CheckpointMeta meta;
  meta.dims = dims_for(6, 6, cfg);
  meta.config = cfg;
  meta.seed = 42;
  meta.step = 123;
  auto params = init_params<float>(meta.dims, 42);

  auto path = (dir / "model.ckpt").string();
  save_checkpoint(path, params, meta);

  CheckpointMeta back;
  auto loaded = load_checkpoint(path, back);
  CHECK(test::params_bitwise_equal(params, loaded));
  CHECK(back.seed == 42);
  CHECK(back.step == 123);
  CHECK(back.dims.model == 16);
  CHECK(back.dims.region_dim == 6);
  CHECK(back.config.loc.widths == std::vector<int>({3, 7}));
  CHECK(back.config.loc.weights.regression == 0.25);
  CHECK(back.config.agg.alpha == 0.4);
  CHECK(back.config.agg.radius == 2);

  // Saving the identical state twice produces identical bytes.
  auto path2 = (dir / "model2.ckpt").string();
  save_checkpoint(path2, params, meta);
  CHECK(test::slurp(path) == test::slurp(path2));
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loading rejects corruption") {
  auto dir = test::scratch_dir("ckpt_corrupt");
  ModelConfig cfg;
  cfg.model_dim = 8;
  cfg.loc.widths = {3};
  CheckpointMeta meta;
  meta.dims = dims_for(4, 4, cfg);
  meta.config = cfg;
  auto params = init_params<float>(meta.dims, 1);
  auto path = (dir / "model.ckpt").string();
  save_checkpoint(path, params, meta);

  CheckpointMeta scratch;
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_checkpoint((dir / "absent.ckpt").string(), scratch), ValidationError);
  }
  SUBCASE("truncation") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
    CHECK_THROWS_AS(load_checkpoint(path, scratch), ValidationError);
  }
  SUBCASE("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('X');
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path, scratch), ValidationError);
  }
  SUBCASE("trailing garbage") {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f << "extra";
    f.close();
    CHECK_THROWS_AS(load_checkpoint(path, scratch), ValidationError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("the command pipeline composes on disk") {
  auto dir = test::scratch_dir("cli_pipeline");

  GenOptions gen;
  gen.synth.num_samples = 3;
  gen.synth.frames = 8;
  gen.synth.regions = 4;
  gen.synth.objects = 2;
  gen.synth.feature_dim = 12;
  gen.synth.seed = 11;
  gen.out_dir = (dir / "data").string();
  REQUIRE(run_gen(gen) == 0);
  const std::string manifest = (dir / "data" / "manifest.json").string();
  REQUIRE(std::filesystem::exists(manifest));

  TrainOptions tr;
  tr.data = manifest;
  tr.out = (dir / "model.ckpt").string();
  tr.loss_log = (dir / "loss.csv").string();
  tr.quiet = true;
  tr.model.model_dim = 16;
  tr.model.loc.widths = {3, 5};
  tr.train.steps = 15;
  tr.train.batch_size = 3;
  tr.train.seed = 2;
  REQUIRE(run_train(tr) == 0);

  // The loss log carries a header plus one line per step.
  std::ifstream log(tr.loss_log);
  std::string line;
  std::getline(log, line);
  CHECK(line == "step,spatial,temporal,regression,diversity,total");
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 15);

  CheckpointMeta meta;
  auto params = load_checkpoint(tr.out, meta);
  CHECK(meta.step == 15);
  CHECK(meta.seed == 2);
  CHECK(meta.dims.model == 16);
  CHECK(meta.config.loc.widths == std::vector<int>({3, 5}));

  InferOptions inf;
  inf.data = manifest;
  inf.checkpoint = tr.out;
  inf.out = (dir / "preds.json").string();
  REQUIRE(run_infer(inf) == 0);

  auto preds = read_predictions(inf.out);
  auto ds = load_dataset(manifest);
  REQUIRE(preds.size() == ds.samples.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].segment.s >= 1);
    CHECK(preds[i].segment.s <= preds[i].segment.e);
    CHECK(preds[i].segment.e <= 8);
    CHECK(preds[i].boxes.size() == static_cast<std::size_t>(preds[i].segment.length()));
  }

  EvalOptions ev;
  ev.data = manifest;
  ev.predictions = inf.out;
  ev.out = (dir / "metrics.json").string();
  REQUIRE(run_eval(ev) == 0);

  // The emitted metrics equal an in-process evaluation of the same files.
  auto expected = evaluate(preds, ground_truth_tubes(ds));
  std::ifstream mf(ev.out);
  auto j = nlohmann::json::parse(mf);
  CHECK(j.at("samples").get<std::size_t>() == expected.samples);
  CHECK(j.at("m_tiou").get<double>() == doctest::Approx(expected.m_tiou).epsilon(1e-12));
  CHECK(j.at("m_viou").get<double>() == doctest::Approx(expected.m_viou).epsilon(1e-12));
  CHECK(j.at("viou_at_0.3").get<double>() ==
        doctest::Approx(expected.viou_at_03).epsilon(1e-12));
  CHECK(j.at("viou_at_0.5").get<double>() ==
        doctest::Approx(expected.viou_at_05).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}

TEST_CASE("the command line rejects bad invocations") {
  auto dir = test::scratch_dir("cli_errors");
  auto run = [](std::vector<const char*> argv) {
    return dispatch_main(static_cast<int>(argv.size()), argv.data());
  };

  // More objects than region slots.
  auto out = (dir / "data").string();
  CHECK(run({"omrn", "gen", "--out", out.c_str(), "--samples", "2", "--frames", "6", "--regions",
             "3", "--objects", "5"}) == 1);
  // Unknown subcommands and flags are parse errors.
  CHECK(run({"omrn", "nosuch"}) != 0);
  CHECK(run({"omrn", "gen", "--bogus-flag", "1"}) != 0);
  // Missing files surface as validation failures.
  auto missing = (dir / "missing.json").string();
  auto preds = (dir / "preds.json").string();
  CHECK(run({"omrn", "eval", "--data", missing.c_str(), "--predictions", preds.c_str()}) == 1);
  CHECK(run({"omrn", "infer", "--data", missing.c_str(), "--checkpoint", missing.c_str(),
             "--out", preds.c_str()}) == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a generation round trip through the command line is reproducible") {
  auto dir = test::scratch_dir("cli_gen_repro");
  auto run = [](std::vector<const char*> argv) {
    return dispatch_main(static_cast<int>(argv.size()), argv.data());
  };
  auto out1 = (dir / "a").string();
  auto out2 = (dir / "b").string();
  for (const auto& out : {out1, out2})
    REQUIRE(run({"omrn", "gen", "--out", out.c_str(), "--samples", "2", "--frames", "6",
                 "--regions", "3", "--objects", "2", "--feature-dim", "8", "--seed", "5"}) == 0);
  CHECK(test::slurp(std::filesystem::path(out1) / "manifest.json") ==
        test::slurp(std::filesystem::path(out2) / "manifest.json"));
  auto d1 = load_dataset(out1 + "/manifest.json");
  auto d2 = load_dataset(out2 + "/manifest.json");
  CHECK(test::bitwise_equal(d1.samples[0].features, d2.samples[0].features));
  std::filesystem::remove_all(dir);
}

TEST_CASE("forward passes are identical across thread counts") {
  auto ds = generate_synthetic([] {
    SynthConfig sc;
    sc.num_samples = 1;
    sc.frames = 9;
    sc.regions = 4;
    sc.objects = 3;
    sc.feature_dim = 12;
    sc.seed = 23;
    return sc;
  }());
  const auto& s = ds.samples[0];
  ModelConfig cfg;
  cfg.model_dim = 16;
  cfg.loc.widths = {3, 5};
  auto dims = dims_for(ds.region_dim, ds.word_dim, cfg);
  auto params = init_params<float>(dims, 31);
  auto cache = build_cache<float>(s, cfg);

  auto run_with_threads = [&](int threads) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    ForwardTrace<float> trace;
    forward_full(s, cache, params, cfg, dims, trace);
    compute_losses(s, cache, trace, cfg);
    ModelParams<float> grads;
    grads.resize(dims);
    backward_full(s, cache, params, cfg, dims, trace, grads);
    return std::make_pair(std::move(trace), std::move(grads));
  };

#ifdef _OPENMP
  const int restore = omp_get_max_threads();
#endif
  auto [trace1, grads1] = run_with_threads(1);
  auto [trace4, grads4] = run_with_threads(4);
#ifdef _OPENMP
  omp_set_num_threads(restore);
#endif

  CHECK(test::bitwise_equal(trace1.agg, trace4.agg));
  CHECK(test::bitwise_equal(trace1.lang.objects, trace4.lang.objects));
  CHECK(test::bitwise_equal(trace1.rel.dist, trace4.rel.dist));
  CHECK(test::bitwise_equal(trace1.rel.fused, trace4.rel.fused));
  CHECK(test::bitwise_equal(trace1.loc.spatial, trace4.loc.spatial));
  CHECK(test::bitwise_equal(trace1.loc.conf, trace4.loc.conf));
  CHECK(test::bitwise_equal(trace1.loc.offsets, trace4.loc.offsets));
  CHECK(test::params_bitwise_equal(grads1, grads4));
}

TEST_CASE("the loss trends down while overfitting a tiny set") {
  SynthConfig sc;
  sc.num_samples = 2;
  sc.frames = 8;
  sc.regions = 4;
  sc.objects = 2;
  sc.feature_dim = 16;
  sc.seed = 19;
  auto ds = generate_synthetic(sc);
  ModelConfig cfg;
  cfg.model_dim = 16;
  cfg.loc.widths = {3, 5};
  auto dims = dims_for(ds.region_dim, ds.word_dim, cfg);
  auto params = init_params<float>(dims, 1);
  TrainConfig tc;
  tc.steps = 80;
  tc.batch_size = 2;
  tc.adam.lr = 0.002;
  auto history = train(ds.samples, params, cfg, tc);
  REQUIRE(history.size() == 80);
  double head = 0, tail = 0;
  for (int i = 0; i < 10; ++i) {
    head += history[static_cast<std::size_t>(i)].loss.total;
    tail += history[history.size() - 1 - static_cast<std::size_t>(i)].loss.total;
  }
  CHECK(tail < head);
  for (const auto& log : history) CHECK(std::isfinite(log.loss.total));
}

TEST_CASE("noisy features still ground a valid tube") {
  SynthConfig sc;
  sc.num_samples = 2;
  sc.frames = 7;
  sc.regions = 4;
  sc.objects = 2;
  sc.feature_dim = 12;
  sc.noise_std = 0.05;
  sc.seed = 29;
  auto ds = generate_synthetic(sc);
  ModelConfig cfg;
  cfg.model_dim = 16;
  cfg.loc.widths = {3};
  auto dims = dims_for(ds.region_dim, ds.word_dim, cfg);
  auto params = init_params<float>(dims, 3);
  for (const auto& s : ds.samples) {
    auto pred = predict(s, params, cfg, dims);
    CHECK(pred.segment.s >= 1);
    CHECK(pred.segment.s <= pred.segment.e);
    CHECK(pred.segment.e <= s.frames);
    CHECK(pred.boxes.size() == static_cast<std::size_t>(pred.segment.length()));
  }
}

TEST_SUITE_END();
