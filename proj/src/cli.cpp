#include "omrn/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "omrn/checkpoint.hpp"
#include "omrn/json_config.hpp"
#include "omrn/metrics.hpp"
#include "omrn/model.hpp"
#include "omrn/training.hpp"

namespace omrn {

namespace {

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

nlohmann::json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ValidationError(std::string(what) + ": cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(what) + ": bad JSON in '" + path + "': " + e.what());
  }
}

}  // namespace

int run_gen(const GenOptions& opt) {
  DatasetManifest ds = generate_synthetic(opt.synth);
  write_dataset(ds, opt.out_dir);
  std::cout << "wrote " << ds.samples.size() << " samples to " << opt.out_dir << "\n";
  return 0;
}

int run_train(const TrainOptions& opt) {
  DatasetManifest ds = load_dataset(opt.data);
  const ModelDims dims = dims_for(ds.region_dim, ds.word_dim, opt.model);
  ModelParams<float> params = init_params<float>(dims, opt.train.seed, opt.train.init_scale);

  std::ofstream log;
  if (!opt.loss_log.empty()) {
    log.open(opt.loss_log);
    if (!log) throw ValidationError("train: cannot open loss log '" + opt.loss_log + "'");
    log << "step,spatial,temporal,regression,diversity,total\n";
  }
  auto on_step = [&](const StepLog& s) {
    if (log.is_open())
      log << s.step << ',' << fmt6(s.loss.spatial) << ',' << fmt6(s.loss.temporal) << ','
          << fmt6(s.loss.regression) << ',' << fmt6(s.loss.diversity) << ','
          << fmt6(s.loss.total) << '\n';
    if (!opt.quiet)
      std::cout << "step " << s.step << " total " << fmt6(s.loss.total) << " spatial "
                << fmt6(s.loss.spatial) << " temporal " << fmt6(s.loss.temporal)
                << " regression " << fmt6(s.loss.regression) << " diversity "
                << fmt6(s.loss.diversity) << "\n";
  };
  train(ds.samples, params, opt.model, opt.train, on_step);
  if (log.is_open()) {
    log.flush();
    if (!log) throw ValidationError("train: failed writing loss log '" + opt.loss_log + "'");
  }

  CheckpointMeta meta;
  meta.dims = dims;
  meta.config = opt.model;
  meta.seed = opt.train.seed;
  meta.step = opt.train.steps;
  save_checkpoint(opt.out, params, meta);
  std::cout << "saved checkpoint " << opt.out << " after " << opt.train.steps << " steps\n";
  return 0;
}

int run_infer(const InferOptions& opt) {
  CheckpointMeta meta;
  ModelParams<float> params = load_checkpoint(opt.checkpoint, meta);
  DatasetManifest ds = load_dataset(opt.data);
  if (ds.region_dim != meta.dims.region_dim || ds.word_dim != meta.dims.word_dim)
    throw ValidationError("infer: dataset dims (" + std::to_string(ds.region_dim) + ", " +
                          std::to_string(ds.word_dim) + ") do not match the checkpoint");
  std::vector<TubePrediction> preds;
  preds.reserve(ds.samples.size());
  for (const VideoSample& s : ds.samples)
    preds.push_back(predict(s, params, meta.config, meta.dims));
  write_predictions(opt.out, preds);
  std::cout << "wrote " << preds.size() << " predictions to " << opt.out << "\n";
  return 0;
}

int run_eval(const EvalOptions& opt) {
  DatasetManifest ds = load_dataset(opt.data);
  const std::vector<TubePrediction> preds = read_predictions(opt.predictions);
  const Metrics m = evaluate(preds, ground_truth_tubes(ds));
  std::cout << "samples " << m.samples << " m_tiou " << fmt6(m.m_tiou) << " m_viou "
            << fmt6(m.m_viou) << " viou@0.3 " << fmt6(m.viou_at_03) << " viou@0.5 "
            << fmt6(m.viou_at_05) << "\n";
  if (!opt.out.empty()) write_metrics(opt.out, m);
  return 0;
}

int run_gradcheck(const GradCheckOptions& opt) {
  DatasetManifest ds = generate_synthetic(opt.synth);
  const GradCheckReport report =
      grad_check(ds.samples, opt.model, opt.param_seed, opt.init_scale, opt.fd_step, opt.tol);
  std::cout << "checked " << report.checked << " parameter elements, max rel err "
            << fmt6(report.max_rel_err) << " (" << report.worst.name << "[" << report.worst.index
            << "], analytic " << fmt6(report.worst.analytic) << ", numeric "
            << fmt6(report.worst.numeric) << ")\n";
  std::size_t shown = 0;
  for (const GradCheckEntry& e : report.failures) {
    if (++shown > 10) {
      std::cout << "... " << (report.failures.size() - 10) << " more failures\n";
      break;
    }
    std::cout << "FAIL " << e.name << "[" << e.index << "] analytic " << fmt6(e.analytic)
              << " numeric " << fmt6(e.numeric) << " rel err " << fmt6(e.rel_err) << "\n";
  }
  std::cout << (report.passed() ? "gradient check passed" : "gradient check FAILED")
            << " (tolerance " << fmt6(opt.tol) << ")\n";
  return report.passed() ? 0 : 1;
}

int dispatch_main(int argc, const char* const* argv) {
  CLI::App app{"object-aware multi-branch relation network for video grounding"};
  app.require_subcommand(1);

  // gen
  GenOptions gen;
  CLI::App* cg = app.add_subcommand("gen", "generate a synthetic dataset");
  cg->add_option("--out", gen.out_dir, "output directory")->required();
  cg->add_option("--samples", gen.synth.num_samples, "number of samples");
  cg->add_option("--frames", gen.synth.frames, "frames per video");
  cg->add_option("--regions", gen.synth.regions, "region proposals per frame");
  cg->add_option("--objects", gen.synth.objects, "objects mentioned per sentence");
  cg->add_option("--feature-dim", gen.synth.feature_dim, "region/word feature width");
  cg->add_option("--noise", gen.synth.noise_std, "feature noise standard deviation");
  cg->add_option("--seed", gen.synth.seed, "generator seed");

  // shared model/train flag storage (train + gradcheck)
  struct ModelFlags {
    int model_dim = 0;
    double alpha = 0;
    int radius = 0;
    std::vector<int> widths;
    double lam_s = 0, lam_t = 0, lam_r = 0, lam_d = 0;
    CLI::Option *o_dim = nullptr, *o_alpha = nullptr, *o_radius = nullptr, *o_widths = nullptr,
                *o_ls = nullptr, *o_lt = nullptr, *o_lr = nullptr, *o_ld = nullptr;
    void attach(CLI::App* c) {
      o_dim = c->add_option("--model-dim", model_dim, "projection width d");
      o_alpha = c->add_option("--alpha", alpha, "linking score IoU weight");
      o_radius = c->add_option("--radius", radius, "aggregation frame radius");
      o_widths = c->add_option("--widths", widths, "candidate widths")->delimiter(',');
      o_ls = c->add_option("--lambda-spatial", lam_s, "spatial loss weight");
      o_lt = c->add_option("--lambda-temporal", lam_t, "temporal loss weight");
      o_lr = c->add_option("--lambda-regression", lam_r, "regression loss weight");
      o_ld = c->add_option("--lambda-diversity", lam_d, "diversity loss weight");
    }
    void apply(ModelConfig& cfg) const {
      if (*o_dim) cfg.model_dim = model_dim;
      if (*o_alpha) cfg.agg.alpha = alpha;
      if (*o_radius) cfg.agg.radius = radius;
      if (*o_widths) cfg.loc.widths = widths;
      if (*o_ls) cfg.loc.weights.spatial = lam_s;
      if (*o_lt) cfg.loc.weights.temporal = lam_t;
      if (*o_lr) cfg.loc.weights.regression = lam_r;
      if (*o_ld) cfg.loc.weights.diversity = lam_d;
    }
  };

  // train
  TrainOptions tr;
  std::string tr_config;
  ModelFlags tr_model;
  int tr_steps = 0, tr_batch = 0;
  std::uint64_t tr_seed = 0;
  double tr_lr = 0, tr_scale = 0;
  CLI::App* ct = app.add_subcommand("train", "train on a dataset and save a checkpoint");
  ct->add_option("--data", tr.data, "dataset manifest")->required();
  ct->add_option("--out", tr.out, "checkpoint path")->required();
  ct->add_option("--loss-log", tr.loss_log, "per-step loss CSV");
  ct->add_option("--config", tr_config, "JSON config file (flags override it)");
  tr_model.attach(ct);
  CLI::Option* ot_steps = ct->add_option("--steps", tr_steps, "training steps");
  CLI::Option* ot_batch = ct->add_option("--batch-size", tr_batch, "samples per step");
  CLI::Option* ot_seed = ct->add_option("--seed", tr_seed, "parameter init seed");
  CLI::Option* ot_lr = ct->add_option("--lr", tr_lr, "Adam learning rate");
  CLI::Option* ot_scale = ct->add_option("--init-scale", tr_scale, "init bound multiplier");
  ct->add_flag("--quiet", tr.quiet, "suppress per-step output");

  // infer
  InferOptions inf;
  CLI::App* ci = app.add_subcommand("infer", "run inference with a checkpoint");
  ci->add_option("--data", inf.data, "dataset manifest")->required();
  ci->add_option("--checkpoint", inf.checkpoint, "checkpoint path")->required();
  ci->add_option("--out", inf.out, "predictions JSON path")->required();

  // eval
  EvalOptions ev;
  CLI::App* ce = app.add_subcommand("eval", "score predictions against the ground truth");
  ce->add_option("--data", ev.data, "dataset manifest")->required();
  ce->add_option("--predictions", ev.predictions, "predictions JSON")->required();
  ce->add_option("--out", ev.out, "metrics JSON path");

  // gradcheck
  GradCheckOptions gc;
  gc.synth.num_samples = 1;
  gc.synth.frames = 6;
  gc.synth.regions = 4;
  gc.synth.objects = 3;
  gc.synth.feature_dim = 16;
  gc.model.model_dim = 16;
  gc.model.loc.widths = {3, 5, 7};
  ModelFlags gc_model;
  CLI::App* cc = app.add_subcommand("gradcheck",
                                    "compare analytic gradients with finite differences");
  cc->add_option("--samples", gc.synth.num_samples, "synthetic samples in the batch");
  cc->add_option("--frames", gc.synth.frames, "frames per video");
  cc->add_option("--regions", gc.synth.regions, "regions per frame");
  cc->add_option("--objects", gc.synth.objects, "objects per sentence");
  cc->add_option("--feature-dim", gc.synth.feature_dim, "region/word feature width");
  cc->add_option("--data-seed", gc.synth.seed, "synthetic data seed");
  gc_model.attach(cc);
  cc->add_option("--param-seed", gc.param_seed, "parameter init seed");
  cc->add_option("--init-scale", gc.init_scale, "init bound multiplier");
  cc->add_option("--fd-step", gc.fd_step, "central difference step");
  cc->add_option("--tol", gc.tol, "relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (app.got_subcommand(cg)) return run_gen(gen);
    if (app.got_subcommand(ct)) {
      if (!tr_config.empty()) {
        const nlohmann::json j = load_json_file(tr_config, "train config");
        if (!j.is_object()) throw ValidationError("train config: expected a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it)
          if (it.key() != "model" && it.key() != "train")
            throw ValidationError("train config: unknown key '" + it.key() + "'");
        if (j.contains("model")) tr.model = model_config_from_json(j.at("model"), tr.model);
        if (j.contains("train")) tr.train = train_config_from_json(j.at("train"), tr.train);
      }
      tr_model.apply(tr.model);
      if (*ot_steps) tr.train.steps = tr_steps;
      if (*ot_batch) tr.train.batch_size = tr_batch;
      if (*ot_seed) tr.train.seed = tr_seed;
      if (*ot_lr) tr.train.adam.lr = tr_lr;
      if (*ot_scale) tr.train.init_scale = tr_scale;
      return run_train(tr);
    }
    if (app.got_subcommand(ci)) return run_infer(inf);
    if (app.got_subcommand(ce)) return run_eval(ev);
    if (app.got_subcommand(cc)) {
      gc_model.apply(gc.model);
      return run_gradcheck(gc);
    }
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace omrn
