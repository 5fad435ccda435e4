#pragma once

#include <cstdint>
#include <string>

#include "omrn/config.hpp"
#include "omrn/data.hpp"

namespace omrn {

// Library-level entry points behind the command-line tool.  Each returns a
// process exit code: 0 on success, 1 for invalid inputs or a failed check,
// 2 for numerical failures.

struct GenOptions {
  SynthConfig synth;
  std::string out_dir;
};
int run_gen(const GenOptions& opt);

struct TrainOptions {
  std::string data;      // dataset manifest
  std::string out;       // checkpoint to write
  std::string loss_log;  // optional per-step CSV
  bool quiet = false;    // suppress per-step stdout lines
  ModelConfig model;
  TrainConfig train;
};
int run_train(const TrainOptions& opt);

struct InferOptions {
  std::string data;
  std::string checkpoint;
  std::string out;  // predictions JSON
};
int run_infer(const InferOptions& opt);

struct EvalOptions {
  std::string data;
  std::string predictions;
  std::string out;  // optional metrics JSON
};
int run_eval(const EvalOptions& opt);

struct GradCheckOptions {
  SynthConfig synth;  // the check runs on a synthetic problem of this size
  ModelConfig model;
  std::uint64_t param_seed = 1;
  double init_scale = 1.0;
  double fd_step = 1e-5;
  double tol = 1e-4;
};
int run_gradcheck(const GradCheckOptions& opt);

// Parses argv (subcommands gen / train / infer / eval / gradcheck) and runs
// the matching entry point, translating exceptions into exit codes.
int dispatch_main(int argc, const char* const* argv);

}  // namespace omrn
