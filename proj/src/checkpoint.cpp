#include "omrn/checkpoint.hpp"

#include <fstream>
#include <vector>

#include "omrn/json_config.hpp"

namespace omrn {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'O', 'M', 'R', 'N', 'C', 'K', 'P', 'T'};
constexpr const char* kFormat = "omrn-checkpoint-v1";

json require(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key))
    throw ValidationError(context + ": missing key '" + std::string(key) + "'");
  return j.at(key);
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return json{
      {"model_dim", cfg.model_dim},
      {"aggregation", {{"alpha", cfg.agg.alpha}, {"radius", cfg.agg.radius}}},
      {"localizer",
       {{"widths", cfg.loc.widths},
        {"smooth_l1_threshold", cfg.loc.smooth_l1_threshold},
        {"bce_epsilon", cfg.loc.bce_epsilon},
        {"loss_weights",
         {{"spatial", cfg.loc.weights.spatial},
          {"temporal", cfg.loc.weights.temporal},
          {"regression", cfg.loc.weights.regression},
          {"diversity", cfg.loc.weights.diversity}}}}}};
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& context) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ValidationError(context + ": unknown key '" + it.key() + "'");
  }
}

}  // namespace

ModelConfig model_config_from_json(const json& j, const ModelConfig& defaults) {
  ModelConfig cfg = defaults;
  if (!j.is_object()) throw ValidationError("model config: expected a JSON object");
  reject_unknown(j, {"model_dim", "aggregation", "localizer"}, "model config");
  cfg.model_dim = j.value("model_dim", cfg.model_dim);
  if (j.contains("aggregation")) {
    const json& a = j.at("aggregation");
    reject_unknown(a, {"alpha", "radius"}, "model config aggregation");
    cfg.agg.alpha = a.value("alpha", cfg.agg.alpha);
    cfg.agg.radius = a.value("radius", cfg.agg.radius);
  }
  if (j.contains("localizer")) {
    const json& l = j.at("localizer");
    reject_unknown(l, {"widths", "smooth_l1_threshold", "bce_epsilon", "loss_weights"},
                   "model config localizer");
    cfg.loc.widths = l.value("widths", cfg.loc.widths);
    cfg.loc.smooth_l1_threshold = l.value("smooth_l1_threshold", cfg.loc.smooth_l1_threshold);
    cfg.loc.bce_epsilon = l.value("bce_epsilon", cfg.loc.bce_epsilon);
    if (l.contains("loss_weights")) {
      const json& w = l.at("loss_weights");
      reject_unknown(w, {"spatial", "temporal", "regression", "diversity"},
                     "model config loss_weights");
      cfg.loc.weights.spatial = w.value("spatial", cfg.loc.weights.spatial);
      cfg.loc.weights.temporal = w.value("temporal", cfg.loc.weights.temporal);
      cfg.loc.weights.regression = w.value("regression", cfg.loc.weights.regression);
      cfg.loc.weights.diversity = w.value("diversity", cfg.loc.weights.diversity);
    }
  }
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"steps", cfg.steps},
              {"batch_size", cfg.batch_size},
              {"init_scale", cfg.init_scale},
              {"adam",
               {{"lr", cfg.adam.lr},
                {"beta1", cfg.adam.beta1},
                {"beta2", cfg.adam.beta2},
                {"epsilon", cfg.adam.epsilon}}}};
}

TrainConfig train_config_from_json(const json& j, const TrainConfig& defaults) {
  TrainConfig cfg = defaults;
  if (!j.is_object()) throw ValidationError("train config: expected a JSON object");
  reject_unknown(j, {"seed", "steps", "batch_size", "init_scale", "adam"}, "train config");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.steps = j.value("steps", cfg.steps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.init_scale = j.value("init_scale", cfg.init_scale);
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    reject_unknown(a, {"lr", "beta1", "beta2", "epsilon"}, "train config adam");
    cfg.adam.lr = a.value("lr", cfg.adam.lr);
    cfg.adam.beta1 = a.value("beta1", cfg.adam.beta1);
    cfg.adam.beta2 = a.value("beta2", cfg.adam.beta2);
    cfg.adam.epsilon = a.value("epsilon", cfg.adam.epsilon);
  }
  return cfg;
}

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const CheckpointMeta& meta) {
  json header;
  header["format"] = kFormat;
  header["dims"] = {{"region_dim", meta.dims.region_dim},
                    {"word_dim", meta.dims.word_dim},
                    {"model", meta.dims.model},
                    {"num_widths", meta.dims.num_widths}};
  header["config"] = model_config_to_json(meta.config);
  header["seed"] = meta.seed;
  header["step"] = meta.step;
  std::vector<std::string> names;
  const_cast<ModelParams<float>&>(params).visit(
      [&](const std::string& name, Tensor<float>&) { names.push_back(name); });
  header["tensors"] = names;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("save_checkpoint: cannot open '" + path + "' for writing");
  const std::string js = header.dump();
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(js.size());
  unsigned char lenb[4] = {static_cast<unsigned char>(len & 0xff),
                           static_cast<unsigned char>((len >> 8) & 0xff),
                           static_cast<unsigned char>((len >> 16) & 0xff),
                           static_cast<unsigned char>((len >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(lenb), 4);
  out.write(js.data(), static_cast<std::streamsize>(js.size()));
  const_cast<ModelParams<float>&>(params).visit(
      [&](const std::string&, Tensor<float>& t) { write_tensor_record(out, t); });
  out.flush();
  if (!out) throw ValidationError("save_checkpoint: write failed for '" + path + "'");
}

ModelParams<float> load_checkpoint(const std::string& path, CheckpointMeta& meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw ValidationError("load_checkpoint: '" + path + "' is not a checkpoint file");
  unsigned char lenb[4];
  in.read(reinterpret_cast<char*>(lenb), 4);
  if (!in) throw ValidationError("load_checkpoint: truncated header in '" + path + "'");
  const std::uint32_t len = static_cast<std::uint32_t>(lenb[0]) |
                            (static_cast<std::uint32_t>(lenb[1]) << 8) |
                            (static_cast<std::uint32_t>(lenb[2]) << 16) |
                            (static_cast<std::uint32_t>(lenb[3]) << 24);
  std::string js(len, '\0');
  in.read(js.data(), static_cast<std::streamsize>(len));
  if (!in) throw ValidationError("load_checkpoint: truncated header in '" + path + "'");

  json header;
  try {
    header = json::parse(js);
  } catch (const json::exception& e) {
    throw ValidationError("load_checkpoint: bad JSON header: " + std::string(e.what()));
  }
  if (require(header, "format", "checkpoint header").get<std::string>() != kFormat)
    throw ValidationError("load_checkpoint: unsupported format tag");

  const json dims_j = require(header, "dims", "checkpoint header");
  meta.dims.region_dim = require(dims_j, "region_dim", "checkpoint dims").get<int>();
  meta.dims.word_dim = require(dims_j, "word_dim", "checkpoint dims").get<int>();
  meta.dims.model = require(dims_j, "model", "checkpoint dims").get<int>();
  meta.dims.num_widths = require(dims_j, "num_widths", "checkpoint dims").get<int>();
  meta.dims.validate();
  meta.config = model_config_from_json(require(header, "config", "checkpoint header"),
                                       ModelConfig{});
  meta.seed = require(header, "seed", "checkpoint header").get<std::uint64_t>();
  meta.step = require(header, "step", "checkpoint header").get<long>();
  if (meta.config.model_dim != meta.dims.model ||
      static_cast<int>(meta.config.loc.widths.size()) != meta.dims.num_widths)
    throw ValidationError("load_checkpoint: dims and config disagree");

  ModelParams<float> params;
  params.resize(meta.dims);
  const auto names = require(header, "tensors", "checkpoint header").get<std::vector<std::string>>();
  std::size_t idx = 0;
  params.visit([&](const std::string& name, Tensor<float>& t) {
    if (idx >= names.size() || names[idx] != name)
      throw ValidationError("load_checkpoint: tensor order mismatch at '" + name + "'");
    Tensor<float> loaded = read_tensor_record(in, "checkpoint tensor " + name);
    if (!loaded.same_shape(t))
      throw ValidationError("load_checkpoint: unexpected shape for tensor '" + name + "'");
    t = std::move(loaded);
    ++idx;
  });
  if (idx != names.size())
    throw ValidationError("load_checkpoint: extra tensor names in header");
  in.peek();
  if (!in.eof()) throw ValidationError("load_checkpoint: trailing data after the last tensor");
  return params;
}

}  // namespace omrn
