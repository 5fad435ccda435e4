#include "omrn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "omrn/rng.hpp"

namespace omrn {

using nlohmann::json;
namespace fs = std::filesystem;

BoundingBox VideoSample::box(int n, int k) const {
  const float* p = boxes.data() + (static_cast<std::size_t>(n - 1) * regions + k) * 4;
  return BoundingBox{p[0], p[1], p[2], p[3]};
}

namespace {

constexpr int kFillerWords = 5;
constexpr double kCanvasW = 320.0;
constexpr double kCanvasH = 240.0;
// Feature-space separation enforced between distractors and every prototype.
constexpr double kDistractorMaxCos = 0.6;

std::vector<double> unit_gaussian(Rng& rng, int dim) {
  std::vector<double> v(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      v[i] = rng.normal();
      norm += v[i] * v[i];
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
  return d;  // both unit-norm
}

// Mutually orthonormal prototype directions via Gram-Schmidt on fresh
// Gaussian draws, so nearest-prototype assignment is unambiguous.
std::vector<std::vector<double>> make_prototypes(Rng& rng, int count, int dim) {
  std::vector<std::vector<double>> protos;
  while (static_cast<int>(protos.size()) < count) {
    std::vector<double> v = unit_gaussian(rng, dim);
    for (const auto& p : protos) {
      double d = cosine(v, p);
      for (int i = 0; i < dim; ++i) v[i] -= d * p[i];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    if (norm < 1e-6) continue;  // re-draw on (vanishingly rare) degeneracy
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    protos.push_back(std::move(v));
  }
  return protos;
}

std::vector<double> distractor_feature(Rng& rng, int dim,
                                       const std::vector<std::vector<double>>& protos) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> v = unit_gaussian(rng, dim);
    bool ok = true;
    for (const auto& p : protos)
      if (std::abs(cosine(v, p)) > kDistractorMaxCos) ok = false;
    if (ok) return v;
  }
  throw NumericError("generate_synthetic: could not sample a distractor feature");
}

void store_feature(Tensor<float>& t, int n, int k, int dim, const std::vector<double>& v,
                   double noise_std, Rng& rng) {
  float* dst = t.data() + (static_cast<std::size_t>(n) * (t.dim(1)) + k) * dim;
  for (int i = 0; i < dim; ++i)
    dst[i] = static_cast<float>(v[i] + (noise_std > 0 ? noise_std * rng.normal() : 0.0));
}

void store_box(Tensor<float>& t, int n, int k, const BoundingBox& b) {
  float* dst = t.data() + (static_cast<std::size_t>(n) * t.dim(1) + k) * 4;
  dst[0] = static_cast<float>(b.x);
  dst[1] = static_cast<float>(b.y);
  dst[2] = static_cast<float>(b.w);
  dst[3] = static_cast<float>(b.h);
}

bool disjoint(const BoundingBox& a, const BoundingBox& b) {
  return std::abs(a.x - b.x) * 2 >= a.w + b.w || std::abs(a.y - b.y) * 2 >= a.h + b.h;
}

}  // namespace

DatasetManifest generate_synthetic(const SynthConfig& cfg) {
  if (cfg.num_samples <= 0 || cfg.frames <= 0 || cfg.regions <= 0 || cfg.feature_dim <= 0)
    throw ValidationError("generate_synthetic: sample/frame/region counts and dims must be positive");
  if (cfg.objects <= 0)
    throw ValidationError("generate_synthetic: need at least one object");
  if (cfg.objects > cfg.regions)
    throw ValidationError("generate_synthetic: objects (" + std::to_string(cfg.objects) +
                          ") exceed regions per frame (" + std::to_string(cfg.regions) + ")");
  if (cfg.noise_std < 0) throw ValidationError("generate_synthetic: negative noise_std");

  Rng rng(cfg.seed);
  DatasetManifest ds;
  ds.region_dim = cfg.feature_dim;
  ds.word_dim = cfg.feature_dim;

  const int N = cfg.frames, K = cfg.regions, T = cfg.objects, D = cfg.feature_dim;
  const int M = T + kFillerWords;

  for (int si = 0; si < cfg.num_samples; ++si) {
    VideoSample s;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sample_%04d", si);
    s.id = buf;
    s.frames = N;
    s.regions = K;
    s.features.resize({static_cast<std::size_t>(N), static_cast<std::size_t>(K),
                       static_cast<std::size_t>(D)});
    s.boxes.resize({static_cast<std::size_t>(N), static_cast<std::size_t>(K), 4});
    s.embeddings.resize({static_cast<std::size_t>(M), static_cast<std::size_t>(D)});

    auto protos = make_prototypes(rng, T, D);

    // Ground-truth segment: moderate length, uniform placement.
    int lo = std::max(1, N / 3), hi = std::max(lo, (2 * N) / 3);
    int len = static_cast<int>(rng.uniform_int(lo, hi));
    int start = static_cast<int>(rng.uniform_int(1, N - len + 1));
    s.gt_segment = Segment{start, start + len - 1};

    // Main object track: fixed size, linear drift.
    BoundingBox main_box;
    main_box.w = rng.uniform(30, 60);
    main_box.h = rng.uniform(30, 60);
    double x0 = rng.uniform(80, kCanvasW - 80), y0 = rng.uniform(70, kCanvasH - 70);
    double dx = rng.uniform(-3, 3), dy = rng.uniform(-3, 3);

    // Auxiliary objects: fixed size and a fixed offset from the main box,
    // chosen so the two never overlap (keeps spatial targets binary).
    std::vector<BoundingBox> aux_size(T);
    std::vector<std::pair<double, double>> aux_off(T);
    for (int t = 1; t < T; ++t) {
      aux_size[t].w = rng.uniform(20, 50);
      aux_size[t].h = rng.uniform(20, 50);
      for (int attempt = 0; attempt < 1000; ++attempt) {
        double ox = rng.uniform(-120, 120), oy = rng.uniform(-90, 90);
        if (std::abs(ox) * 2 >= main_box.w + aux_size[t].w ||
            std::abs(oy) * 2 >= main_box.h + aux_size[t].h) {
          aux_off[t] = {ox, oy};
          break;
        }
      }
    }

    for (int n0 = 0; n0 < N; ++n0) {
      const int frame = n0 + 1;
      const bool in_gt = frame >= s.gt_segment.s && frame <= s.gt_segment.e;
      // Assign slots: inside the segment the first T slots of a per-frame
      // permutation carry main + auxiliaries, the rest are distractors.
      std::vector<int> perm(K);
      for (int k = 0; k < K; ++k) perm[k] = k;
      for (int k = K - 1; k > 0; --k)
        std::swap(perm[k], perm[static_cast<int>(rng.uniform_int(0, k))]);

      BoundingBox cur = main_box;
      cur.x = x0 + dx * (frame - s.gt_segment.s);
      cur.y = y0 + dy * (frame - s.gt_segment.s);

      int filled = 0;
      if (in_gt) {
        store_feature(s.features, n0, perm[0], D, protos[0], cfg.noise_std, rng);
        store_box(s.boxes, n0, perm[0], cur);
        // The ground truth must equal the carrier region's box bitwise, so
        // record it after the same float round-trip the tensor applies.
        s.gt_boxes.push_back(s.box(frame, perm[0]));
        for (int t = 1; t < T; ++t) {
          BoundingBox ab = aux_size[t];
          ab.x = cur.x + aux_off[t].first;
          ab.y = cur.y + aux_off[t].second;
          store_feature(s.features, n0, perm[t], D, protos[t], cfg.noise_std, rng);
          store_box(s.boxes, n0, perm[t], ab);
        }
        filled = T;
      }
      for (int k = filled; k < K; ++k) {
        store_feature(s.features, n0, perm[k], D, distractor_feature(rng, D, protos),
                      cfg.noise_std, rng);
        BoundingBox b;
        for (int attempt = 0; attempt < 1000; ++attempt) {
          b.w = rng.uniform(10, 50);
          b.h = rng.uniform(10, 50);
          b.x = rng.uniform(0, kCanvasW);
          b.y = rng.uniform(0, kCanvasH);
          if (!in_gt || disjoint(b, cur)) break;
        }
        store_box(s.boxes, n0, perm[k], b);
      }
    }

    // Sentence: noun positions are a random draw of T distinct slots among M
    // words; noun embeddings equal their prototypes, fillers stay away from
    // every prototype.
    std::vector<int> positions(M);
    for (int m = 0; m < M; ++m) positions[m] = m;
    for (int m = M - 1; m > 0; --m)
      std::swap(positions[m], positions[static_cast<int>(rng.uniform_int(0, m))]);
    s.nouns.assign(positions.begin(), positions.begin() + T);
    s.words.assign(M, 0);
    std::vector<bool> is_noun(M, false);
    for (int t = 0; t < T; ++t) {
      is_noun[s.nouns[t]] = true;
      s.words[s.nouns[t]] = 100 + t;
      float* dst = s.embeddings.data() + static_cast<std::size_t>(s.nouns[t]) * D;
      for (int i = 0; i < D; ++i) dst[i] = static_cast<float>(protos[t][i]);
    }
    for (int m = 0; m < M; ++m) {
      if (is_noun[m]) continue;
      s.words[m] = 1 + static_cast<int>(rng.uniform_int(0, 49));
      auto v = distractor_feature(rng, D, protos);
      float* dst = s.embeddings.data() + static_cast<std::size_t>(m) * D;
      for (int i = 0; i < D; ++i) dst[i] = static_cast<float>(v[i]);
    }

    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

json segment_to_json(const Segment& s) { return json{{"s", s.s}, {"e", s.e}}; }

json box_to_json(const BoundingBox& b) {
  return json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

}  // namespace

void write_dataset(const DatasetManifest& ds, const std::string& dir) {
  fs::create_directories(dir);
  json root;
  root["format"] = "omrn-dataset-v1";
  root["region_dim"] = ds.region_dim;
  root["word_dim"] = ds.word_dim;
  root["samples"] = json::array();
  for (const auto& s : ds.samples) {
    const std::string feat = s.id + ".features.bin";
    const std::string boxf = s.id + ".boxes.bin";
    const std::string embf = s.id + ".words.bin";
    write_tensor_file((fs::path(dir) / feat).string(), s.features);
    write_tensor_file((fs::path(dir) / boxf).string(), s.boxes);
    write_tensor_file((fs::path(dir) / embf).string(), s.embeddings);
    json js;
    js["id"] = s.id;
    js["frames"] = s.frames;
    js["regions"] = s.regions;
    js["features_file"] = feat;
    js["boxes_file"] = boxf;
    js["embeddings_file"] = embf;
    js["words"] = s.words;
    js["noun_indices"] = s.nouns;
    js["gt_segment"] = segment_to_json(s.gt_segment);
    js["gt_boxes"] = json::array();
    for (const auto& b : s.gt_boxes) js["gt_boxes"].push_back(box_to_json(b));
    root["samples"].push_back(std::move(js));
  }
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest under " + dir);
  out << root.dump(2) << "\n";
}

namespace {

void validate_sample(const VideoSample& s, int region_dim, int word_dim) {
  const std::string who = "sample '" + s.id + "'";
  if (s.frames <= 0 || s.regions <= 0) throw ValidationError(who + ": non-positive frame/region count");
  const std::size_t N = static_cast<std::size_t>(s.frames);
  const std::size_t K = static_cast<std::size_t>(s.regions);
  if (s.features.shape() != std::vector<std::size_t>{N, K, static_cast<std::size_t>(region_dim)})
    throw ValidationError(who + ": features shape does not match [frames, regions, region_dim]");
  if (s.boxes.shape() != std::vector<std::size_t>{N, K, 4})
    throw ValidationError(who + ": boxes shape does not match [frames, regions, 4]");
  if (s.words.empty()) throw ValidationError(who + ": empty sentence");
  const std::size_t M = s.words.size();
  if (s.embeddings.shape() != std::vector<std::size_t>{M, static_cast<std::size_t>(word_dim)})
    throw ValidationError(who + ": embeddings shape does not match [words, word_dim]");
  check_finite(s.features, (who + " features").c_str());
  check_finite(s.boxes, (who + " boxes").c_str());
  check_finite(s.embeddings, (who + " embeddings").c_str());
  for (int n = 1; n <= s.frames; ++n)
    for (int k = 0; k < s.regions; ++k) {
      BoundingBox b = s.box(n, k);
      if (!(b.w > 0) || !(b.h > 0))
        throw ValidationError(who + ": non-positive box size at frame " + std::to_string(n) +
                              ", region " + std::to_string(k));
    }
  if (s.nouns.empty()) throw ValidationError(who + ": no noun indices");
  for (std::size_t t = 0; t < s.nouns.size(); ++t)
    if (s.nouns[t] < 0 || static_cast<std::size_t>(s.nouns[t]) >= M)
      throw ValidationError(who + ": noun index " + std::to_string(s.nouns[t]) +
                            " out of range at position " + std::to_string(t));
  if (s.gt_segment.s < 1 || s.gt_segment.e > s.frames || s.gt_segment.e < s.gt_segment.s)
    throw ValidationError(who + ": ground-truth segment [" + std::to_string(s.gt_segment.s) +
                          ", " + std::to_string(s.gt_segment.e) + "] not within [1, " +
                          std::to_string(s.frames) + "]");
  if (s.gt_boxes.size() != static_cast<std::size_t>(s.gt_segment.length()))
    throw ValidationError(who + ": ground-truth box count does not match segment length");
  for (std::size_t i = 0; i < s.gt_boxes.size(); ++i)
    if (!(s.gt_boxes[i].w > 0) || !(s.gt_boxes[i].h > 0))
      throw ValidationError(who + ": non-positive ground-truth box at segment offset " +
                            std::to_string(i));
}

}  // namespace

DatasetManifest load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open manifest: " + manifest_path);
  json root;
  try {
    root = json::parse(in);  // rejects trailing content, unlike operator>>
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path + ": invalid JSON (" + e.what() + ")");
  }
  if (root.value("format", "") != "omrn-dataset-v1")
    throw ValidationError(manifest_path + ": unknown dataset format");
  DatasetManifest ds;
  ds.dir = fs::path(manifest_path).parent_path().string();
  ds.region_dim = root.at("region_dim").get<int>();
  ds.word_dim = root.at("word_dim").get<int>();
  if (ds.region_dim <= 0 || ds.word_dim <= 0)
    throw ValidationError(manifest_path + ": non-positive feature dims");
  if (!root.contains("samples") || !root["samples"].is_array() || root["samples"].empty())
    throw ValidationError(manifest_path + ": missing or empty samples array");
  for (const auto& js : root["samples"]) {
    VideoSample s;
    s.id = js.at("id").get<std::string>();
    s.frames = js.at("frames").get<int>();
    s.regions = js.at("regions").get<int>();
    auto resolve = [&](const std::string& rel) { return (fs::path(ds.dir) / rel).string(); };
    s.features = read_tensor_file(resolve(js.at("features_file").get<std::string>()));
    s.boxes = read_tensor_file(resolve(js.at("boxes_file").get<std::string>()));
    s.embeddings = read_tensor_file(resolve(js.at("embeddings_file").get<std::string>()));
    s.words = js.at("words").get<std::vector<int>>();
    s.nouns = js.at("noun_indices").get<std::vector<int>>();
    s.gt_segment.s = js.at("gt_segment").at("s").get<int>();
    s.gt_segment.e = js.at("gt_segment").at("e").get<int>();
    for (const auto& jb : js.at("gt_boxes")) {
      BoundingBox b;
      b.x = jb.at("x").get<double>();
      b.y = jb.at("y").get<double>();
      b.w = jb.at("w").get<double>();
      b.h = jb.at("h").get<double>();
      s.gt_boxes.push_back(b);
    }
    validate_sample(s, ds.region_dim, ds.word_dim);
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::vector<GroundTruthTube> ground_truth_tubes(const DatasetManifest& ds) {
  std::vector<GroundTruthTube> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) out.push_back({s.id, s.gt_segment, s.gt_boxes});
  return out;
}

}  // namespace omrn
