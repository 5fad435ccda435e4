#include "omrn/metrics.hpp"

#include <fstream>
#include <map>

#include "json.hpp"

namespace omrn {

using nlohmann::json;

Metrics evaluate(const std::vector<TubePrediction>& preds,
                 const std::vector<GroundTruthTube>& gts) {
  std::map<std::string, const TubePrediction*> by_id;
  for (const auto& p : preds) {
    if (!by_id.emplace(p.id, &p).second)
      throw ValidationError("evaluate: duplicate prediction id '" + p.id + "'");
  }
  if (preds.size() != gts.size())
    throw ValidationError("evaluate: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(gts.size()) + " ground-truth samples");
  Metrics m;
  m.samples = gts.size();
  if (gts.empty()) throw ValidationError("evaluate: empty ground truth");
  double sum_t = 0.0, sum_v = 0.0;
  std::size_t above03 = 0, above05 = 0;
  for (const auto& gt : gts) {
    auto it = by_id.find(gt.id);
    if (it == by_id.end())
      throw ValidationError("evaluate: missing prediction for sample '" + gt.id + "'");
    const TubePrediction& p = *it->second;
    sum_t += temporal_iou(p.segment, gt.segment);
    double v = viou(p.segment, p.boxes, gt.segment, gt.boxes);
    sum_v += v;
    if (v > 0.3) ++above03;
    if (v > 0.5) ++above05;
  }
  double n = static_cast<double>(gts.size());
  m.m_tiou = sum_t / n;
  m.m_viou = sum_v / n;
  m.viou_at_03 = static_cast<double>(above03) / n;
  m.viou_at_05 = static_cast<double>(above05) / n;
  return m;
}

namespace {

json box_to_json(const BoundingBox& b) {
  return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

BoundingBox box_from_json(const json& j, const std::string& ctx) {
  if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j.contains("w") ||
      !j.contains("h"))
    throw ValidationError(ctx + ": box must be an object with x, y, w, h");
  BoundingBox b;
  b.x = j.at("x").get<double>();
  b.y = j.at("y").get<double>();
  b.w = j.at("w").get<double>();
  b.h = j.at("h").get<double>();
  return b;
}

}  // namespace

void write_predictions(const std::string& path, const std::vector<TubePrediction>& preds) {
  json root;
  root["predictions"] = json::array();
  for (const auto& p : preds) {
    json jp;
    jp["id"] = p.id;
    jp["segment"] = {{"s", p.segment.s}, {"e", p.segment.e}};
    jp["boxes"] = json::array();
    for (const auto& b : p.boxes) jp["boxes"].push_back(box_to_json(b));
    jp["confidence"] = p.confidence;
    jp["raw_segment"] = {{"s", p.raw_segment.s}, {"e", p.raw_segment.e}};
    jp["offsets"] = {p.offset_s, p.offset_e};
    root["predictions"].push_back(std::move(jp));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << root.dump(2) << "\n";
}

std::vector<TubePrediction> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open prediction file: " + path);
  json root;
  try {
    root = json::parse(in);  // rejects trailing content, unlike operator>>
  } catch (const json::exception& e) {
    throw ValidationError(path + ": invalid JSON (" + e.what() + ")");
  }
  if (!root.contains("predictions") || !root["predictions"].is_array())
    throw ValidationError(path + ": missing 'predictions' array");
  std::vector<TubePrediction> out;
  for (const auto& jp : root["predictions"]) {
    TubePrediction p;
    if (!jp.contains("id")) throw ValidationError(path + ": prediction without id");
    p.id = jp.at("id").get<std::string>();
    const std::string ctx = path + ": prediction '" + p.id + "'";
    if (!jp.contains("segment")) throw ValidationError(ctx + ": missing segment");
    p.segment.s = jp.at("segment").at("s").get<int>();
    p.segment.e = jp.at("segment").at("e").get<int>();
    if (p.segment.e < p.segment.s) throw ValidationError(ctx + ": segment end precedes start");
    if (!jp.contains("boxes") || !jp["boxes"].is_array())
      throw ValidationError(ctx + ": missing boxes array");
    for (const auto& jb : jp["boxes"]) p.boxes.push_back(box_from_json(jb, ctx));
    if (p.boxes.size() != static_cast<std::size_t>(p.segment.length()))
      throw ValidationError(ctx + ": box count does not match segment length");
    if (jp.contains("confidence")) p.confidence = jp.at("confidence").get<double>();
    if (jp.contains("raw_segment")) {
      p.raw_segment.s = jp.at("raw_segment").at("s").get<int>();
      p.raw_segment.e = jp.at("raw_segment").at("e").get<int>();
    }
    if (jp.contains("offsets") && jp["offsets"].is_array() && jp["offsets"].size() == 2) {
      p.offset_s = jp["offsets"][0].get<double>();
      p.offset_e = jp["offsets"][1].get<double>();
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_metrics(const std::string& path, const Metrics& m) {
  json root;
  root["samples"] = m.samples;
  root["m_tiou"] = m.m_tiou;
  root["m_viou"] = m.m_viou;
  root["viou_at_0.3"] = m.viou_at_03;
  root["viou_at_0.5"] = m.viou_at_05;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << root.dump(2) << "\n";
}

}  // namespace omrn
