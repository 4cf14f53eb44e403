/*
 * Copyright 2026 The semcf Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "semcf/bundle.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <set>

#include <nlohmann/json.hpp>

#include "semcf/error.h"

namespace semcf {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kManifestName = "manifest.json";

std::uint32_t ByteSwap(std::uint32_t v) {
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string ShapeString(std::initializer_list<std::size_t> dims) {
  std::string out = "[";
  bool first = true;
  for (std::size_t d : dims) {
    if (!first) out += ", ";
    out += std::to_string(d);
    first = false;
  }
  return out + "]";
}

// Reads manifests and records what went wrong with which field.
class ManifestReader {
 public:
  ManifestReader(fs::path root, std::vector<std::string>* warnings)
      : root_(std::move(root)), warnings_(warnings) {}

  void WarnUnknown(const json& obj, std::string_view where,
                   std::initializer_list<std::string_view> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
        warnings_->push_back("ignoring unknown manifest field '" + std::string(where) + "." +
                             it.key() + "'");
      }
    }
  }

  static const json& Field(const json& obj, std::string_view where, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) {
      ThrowData("manifest is missing '" + std::string(where) + "." + key + "'");
    }
    return obj.at(key);
  }

  template <typename T>
  static T Get(const json& obj, std::string_view where, const char* key) {
    const json& v = Field(obj, where, key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      ThrowData("manifest field '" + std::string(where) + "." + key + "' has the wrong type");
    }
  }

  std::vector<float> Blob(const json& obj, std::string_view where, const char* key,
                          std::initializer_list<std::size_t> shape) {
    const auto ref = Get<std::string>(obj, where, key);
    std::size_t count = 1;
    for (std::size_t d : shape) count *= d;
    const fs::path file = root_ / ref;
    if (!fs::exists(file)) {
      ThrowData("missing blob '" + ref + "' referenced by " + std::string(where) + "." + key);
    }
    const auto bytes = fs::file_size(file);
    if (bytes != count * sizeof(float)) {
      ThrowData("blob '" + ref + "' has " + std::to_string(bytes) + " bytes, expected " +
                std::to_string(count * sizeof(float)) + " for shape " + ShapeString(shape));
    }
    return ReadBlob(file, count);
  }

 private:
  fs::path root_;
  std::vector<std::string>* warnings_;
};

void CheckFileName(const std::string& id) {
  if (id.empty() || id == "." || id == ".." ||
      id.find_first_of("/\\") != std::string::npos) {
    ThrowInvalid("image id '" + id + "' cannot be used as a file name");
  }
}

}  // namespace

std::vector<float> ReadBlob(const fs::path& file, std::size_t expected_count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) ThrowData("cannot open blob '" + file.string() + "'");
  std::vector<float> values(expected_count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(expected_count * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != expected_count * sizeof(float)) {
    ThrowData("blob '" + file.string() + "' is shorter than " +
              std::to_string(expected_count * sizeof(float)) + " bytes");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (float& v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      bits = ByteSwap(bits);
      std::memcpy(&v, &bits, sizeof bits);
    }
  }
  return values;
}

void WriteBlob(const fs::path& file, std::span<const float> values) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) ThrowData("cannot write blob '" + file.string() + "'");
  if constexpr (std::endian::native == std::endian::big) {
    for (float v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      bits = ByteSwap(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  } else {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  }
  if (!out) ThrowData("failed writing blob '" + file.string() + "'");
}

const ImageRecord& Bundle::Image(std::string_view id) const {
  for (const auto& img : images) {
    if (img.id == id) return img;
  }
  ThrowInvalid("unknown image id '" + std::string(id) + "'");
}

int Bundle::ClassIndex(std::string_view name) const {
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    if (class_names[c] == name) return static_cast<int>(c);
  }
  ThrowInvalid("unknown class '" + std::string(name) + "'");
}

int Bundle::PartIndex(std::string_view name) const {
  std::string canonical(name);
  if (auto it = part_aliases.find(canonical); it != part_aliases.end()) canonical = it->second;
  for (std::size_t p = 0; p < part_names.size(); ++p) {
    if (part_names[p] == canonical) return static_cast<int>(p);
  }
  ThrowData("unknown part '" + std::string(name) + "'");
}

Bundle LoadBundle(const fs::path& path) {
  fs::path manifest_path = path;
  if (fs::is_directory(path)) manifest_path = path / kManifestName;
  if (!fs::exists(manifest_path)) {
    ThrowData("bundle manifest not found at '" + manifest_path.string() + "'");
  }
  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      manifest = json::parse(in);
    } catch (const json::exception& e) {
      ThrowData("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }
  }
  if (!manifest.is_object()) ThrowData("manifest root must be an object");

  Bundle bundle;
  ManifestReader reader(manifest_path.parent_path(), &bundle.warnings);
  const int version = ManifestReader::Get<int>(manifest, "manifest", "schema_version");
  if (version != kBundleSchemaVersion) {
    ThrowData("unsupported schema_version " + std::to_string(version) +
              " (this reader understands " + std::to_string(kBundleSchemaVersion) + ")");
  }
  bundle.schema_version = version;
  reader.WarnUnknown(manifest, "manifest",
                     {"schema_version", "grid", "feature_channels", "embedding_channels",
                      "class_names", "parts", "part_aliases", "head", "images",
                      "attribute_bank", "class_attributes", "confusion_matrix"});

  const json& grid = ManifestReader::Field(manifest, "manifest", "grid");
  reader.WarnUnknown(grid, "grid", {"height", "width"});
  bundle.feature_shape.height = ManifestReader::Get<int>(grid, "grid", "height");
  bundle.feature_shape.width = ManifestReader::Get<int>(grid, "grid", "width");
  bundle.feature_shape.channels = ManifestReader::Get<int>(manifest, "manifest", "feature_channels");
  bundle.embedding_channels = ManifestReader::Get<int>(manifest, "manifest", "embedding_channels");
  if (bundle.feature_shape.height <= 0 || bundle.feature_shape.width <= 0 ||
      bundle.feature_shape.channels <= 0 || bundle.embedding_channels <= 0) {
    ThrowData("grid dims and channel counts must be positive");
  }
  const std::size_t h = bundle.feature_shape.height;
  const std::size_t w = bundle.feature_shape.width;
  const std::size_t d = bundle.feature_shape.channels;
  const std::size_t de = bundle.embedding_channels;

  bundle.class_names =
      ManifestReader::Get<std::vector<std::string>>(manifest, "manifest", "class_names");
  if (bundle.class_names.empty()) ThrowData("manifest declares no classes");
  const std::size_t num_classes = bundle.class_names.size();
  if (manifest.contains("parts")) {
    bundle.part_names = ManifestReader::Get<std::vector<std::string>>(manifest, "manifest", "parts");
  }
  if (manifest.contains("part_aliases")) {
    bundle.part_aliases =
        ManifestReader::Get<std::map<std::string, std::string>>(manifest, "manifest", "part_aliases");
    for (const auto& [alias, target] : bundle.part_aliases) {
      if (std::find(bundle.part_names.begin(), bundle.part_names.end(), target) ==
          bundle.part_names.end()) {
        ThrowData("part alias '" + alias + "' points at unknown part '" + target + "'");
      }
    }
  }

  // Head.
  {
    const json& head = ManifestReader::Field(manifest, "manifest", "head");
    reader.WarnUnknown(head, "head", {"kind", "layers"});
    const HeadKind kind = ParseHeadKind(ManifestReader::Get<std::string>(head, "head", "kind"));
    const json& layers = ManifestReader::Field(head, "head", "layers");
    if (!layers.is_array() || layers.empty()) ThrowData("head.layers must be a non-empty array");
    std::vector<DenseLayer> dense;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string where = "head.layers[" + std::to_string(l) + "]";
      reader.WarnUnknown(layers[l], where, {"outputs", "inputs", "weights", "bias"});
      DenseLayer layer;
      layer.outputs = ManifestReader::Get<int>(layers[l], where, "outputs");
      layer.inputs = ManifestReader::Get<int>(layers[l], where, "inputs");
      if (layer.outputs <= 0 || layer.inputs <= 0) ThrowData(where + " has a non-positive shape");
      layer.weights = reader.Blob(layers[l], where, "weights",
                                  {static_cast<std::size_t>(layer.outputs),
                                   static_cast<std::size_t>(layer.inputs)});
      layer.bias = reader.Blob(layers[l], where, "bias", {static_cast<std::size_t>(layer.outputs)});
      dense.push_back(std::move(layer));
    }
    try {
      bundle.head = DecisionHead(kind, bundle.feature_shape, std::move(dense), bundle.class_names);
    } catch (const Error& e) {
      ThrowData(std::string("invalid head: ") + e.what());
    }
  }

  // Images.
  const json& images = ManifestReader::Field(manifest, "manifest", "images");
  if (!images.is_array()) ThrowData("manifest.images must be an array");
  std::set<std::string> seen;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const json& entry = images[k];
    const std::string where = "images[" + std::to_string(k) + "]";
    reader.WarnUnknown(entry, where,
                       {"id", "class", "features", "embedding", "keypoints", "mask", "part_probs"});
    ImageRecord img;
    img.id = ManifestReader::Get<std::string>(entry, where, "id");
    if (!seen.insert(img.id).second) ThrowData("duplicate image id '" + img.id + "'");
    const auto class_name = ManifestReader::Get<std::string>(entry, where, "class");
    auto cit = std::find(bundle.class_names.begin(), bundle.class_names.end(), class_name);
    if (cit == bundle.class_names.end()) {
      ThrowData(where + " has unknown class '" + class_name + "'");
    }
    img.class_index = static_cast<int>(cit - bundle.class_names.begin());
    try {
      img.features = FeatureGrid(bundle.feature_shape, reader.Blob(entry, where, "features", {h, w, d}));
      img.embedding =
          EmbeddingGrid({bundle.feature_shape.height, bundle.feature_shape.width,
                         bundle.embedding_channels},
                        reader.Blob(entry, where, "embedding", {h, w, de}));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kData) throw;
      ThrowData(where + ": " + e.what());
    }
    if (entry.contains("keypoints")) {
      const json& kp = entry.at("keypoints");
      const std::string kwhere = where + ".keypoints";
      reader.WarnUnknown(kp, kwhere, {"width", "height", "points"});
      KeypointSet set;
      set.image_id = img.id;
      set.image_width = ManifestReader::Get<int>(kp, kwhere, "width");
      set.image_height = ManifestReader::Get<int>(kp, kwhere, "height");
      if (set.image_width <= 0 || set.image_height <= 0) {
        ThrowData(kwhere + " has zero image dimensions");
      }
      const json& points = ManifestReader::Field(kp, kwhere, "points");
      for (std::size_t p = 0; p < points.size(); ++p) {
        const std::string pwhere = kwhere + ".points[" + std::to_string(p) + "]";
        reader.WarnUnknown(points[p], pwhere, {"part", "x", "y", "visible"});
        Keypoint point;
        point.part_id = bundle.PartIndex(ManifestReader::Get<std::string>(points[p], pwhere, "part"));
        point.x = ManifestReader::Get<double>(points[p], pwhere, "x");
        point.y = ManifestReader::Get<double>(points[p], pwhere, "y");
        point.visible = points[p].contains("visible")
                            ? ManifestReader::Get<bool>(points[p], pwhere, "visible")
                            : true;
        if (point.visible && (point.x < 0 || point.x >= set.image_width || point.y < 0 ||
                              point.y >= set.image_height)) {
          ThrowData(pwhere + " lies outside the image");
        }
        set.points.push_back(point);
      }
      img.parts = ProjectKeypoints(set, bundle.feature_shape.height, bundle.feature_shape.width);
      img.keypoints = std::move(set);
    }
    if (entry.contains("mask")) {
      const auto values = reader.Blob(entry, where, "mask", {h, w});
      std::vector<bool> mask(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] != 0.0f;
      img.mask = std::move(mask);
    }
    if (entry.contains("part_probs")) {
      if (bundle.part_names.empty()) ThrowData(where + ".part_probs needs manifest.parts");
      PartProbGrid grid;
      grid.height = bundle.feature_shape.height;
      grid.width = bundle.feature_shape.width;
      grid.num_parts = static_cast<int>(bundle.part_names.size());
      grid.probs = reader.Blob(entry, where, "part_probs", {h, w, bundle.part_names.size()});
      for (float v : grid.probs) {
        if (!std::isfinite(v)) ThrowData(where + ".part_probs has a non-finite value");
      }
      img.part_probs = std::move(grid);
    }
    bundle.images.push_back(std::move(img));
  }

  if (manifest.contains("attribute_bank")) {
    const json& bank_json = manifest.at("attribute_bank");
    reader.WarnUnknown(bank_json, "attribute_bank", {"names", "parts", "weights", "biases"});
    AttributeBank bank;
    bank.dims = static_cast<int>(d);
    bank.names = ManifestReader::Get<std::vector<std::string>>(bank_json, "attribute_bank", "names");
    const auto parts =
        ManifestReader::Get<std::vector<std::string>>(bank_json, "attribute_bank", "parts");
    if (parts.size() != bank.names.size()) {
      ThrowData("attribute_bank.parts must name one part per attribute");
    }
    for (const auto& p : parts) bank.attr_to_part.push_back(bundle.PartIndex(p));
    const std::size_t t = bank.names.size();
    bank.weights = reader.Blob(bank_json, "attribute_bank", "weights", {t, d});
    bank.biases = reader.Blob(bank_json, "attribute_bank", "biases", {t});
    bundle.attributes = std::move(bank);
  }
  if (manifest.contains("class_attributes")) {
    if (!bundle.attributes) ThrowData("class_attributes needs an attribute_bank");
    const std::size_t t = bundle.attributes->names.size();
    const auto values = reader.Blob(manifest, "manifest", "class_attributes", {num_classes, t});
    Matrix m(static_cast<int>(num_classes), static_cast<int>(t));
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= 0.0f && values[i] <= 1.0f)) {
        ThrowData("class_attributes entries must lie in [0, 1]");
      }
      m.values[i] = values[i];
    }
    bundle.class_attributes = std::move(m);
  }
  if (manifest.contains("confusion_matrix")) {
    const auto values =
        reader.Blob(manifest, "manifest", "confusion_matrix", {num_classes, num_classes});
    ConfusionMatrix cm;
    cm.num_classes = static_cast<int>(num_classes);
    for (float v : values) {
      if (!(v >= 0.0f) || std::floor(v) != v) {
        ThrowData("confusion_matrix entries must be non-negative integers");
      }
      cm.counts.push_back(static_cast<std::int64_t>(v));
    }
    bundle.confusion = std::move(cm);
  }
  return bundle;
}

void WriteBundle(const Bundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json m;
  m["schema_version"] = kBundleSchemaVersion;
  m["grid"] = {{"height", bundle.feature_shape.height}, {"width", bundle.feature_shape.width}};
  m["feature_channels"] = bundle.feature_shape.channels;
  m["embedding_channels"] = bundle.embedding_channels;
  m["class_names"] = bundle.class_names;
  if (!bundle.part_names.empty()) m["parts"] = bundle.part_names;
  if (!bundle.part_aliases.empty()) {
    ordered_json aliases = ordered_json::object();
    for (const auto& [alias, target] : bundle.part_aliases) aliases[alias] = target;
    m["part_aliases"] = aliases;
  }

  ordered_json head;
  head["kind"] = std::string(HeadKindName(bundle.head.kind()));
  head["layers"] = ordered_json::array();
  for (std::size_t l = 0; l < bundle.head.layers().size(); ++l) {
    const DenseLayer& layer = bundle.head.layers()[l];
    const std::string wref = "head/layer" + std::to_string(l) + "_weights.f32";
    const std::string bref = "head/layer" + std::to_string(l) + "_bias.f32";
    WriteBlob(dir / wref, layer.weights);
    WriteBlob(dir / bref, layer.bias);
    ordered_json lj;
    lj["outputs"] = layer.outputs;
    lj["inputs"] = layer.inputs;
    lj["weights"] = wref;
    lj["bias"] = bref;
    head["layers"].push_back(lj);
  }
  m["head"] = head;

  m["images"] = ordered_json::array();
  for (const ImageRecord& img : bundle.images) {
    CheckFileName(img.id);
    ordered_json e;
    e["id"] = img.id;
    e["class"] = bundle.class_names.at(img.class_index);
    const std::string fref = "features/" + img.id + ".f32";
    const std::string eref = "embeddings/" + img.id + ".f32";
    WriteBlob(dir / fref, img.features.data());
    WriteBlob(dir / eref, img.embedding.data());
    e["features"] = fref;
    e["embedding"] = eref;
    if (img.keypoints) {
      ordered_json kp;
      kp["width"] = img.keypoints->image_width;
      kp["height"] = img.keypoints->image_height;
      kp["points"] = ordered_json::array();
      for (const Keypoint& p : img.keypoints->points) {
        ordered_json pj;
        pj["part"] = bundle.part_names.at(p.part_id);
        pj["x"] = p.x;
        pj["y"] = p.y;
        pj["visible"] = p.visible;
        kp["points"].push_back(pj);
      }
      e["keypoints"] = kp;
    }
    if (img.mask) {
      std::vector<float> values(img.mask->size());
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = (*img.mask)[i] ? 1.0f : 0.0f;
      const std::string ref = "masks/" + img.id + ".f32";
      WriteBlob(dir / ref, values);
      e["mask"] = ref;
    }
    if (img.part_probs) {
      const std::string ref = "parts/" + img.id + ".f32";
      WriteBlob(dir / ref, img.part_probs->probs);
      e["part_probs"] = ref;
    }
    m["images"].push_back(e);
  }

  if (bundle.attributes) {
    const AttributeBank& bank = *bundle.attributes;
    ordered_json bj;
    bj["names"] = bank.names;
    std::vector<std::string> parts;
    for (int p : bank.attr_to_part) parts.push_back(bundle.part_names.at(p));
    bj["parts"] = parts;
    WriteBlob(dir / "attributes/weights.f32", bank.weights);
    WriteBlob(dir / "attributes/biases.f32", bank.biases);
    bj["weights"] = "attributes/weights.f32";
    bj["biases"] = "attributes/biases.f32";
    m["attribute_bank"] = bj;
  }
  if (bundle.class_attributes) {
    std::vector<float> values(bundle.class_attributes->values.begin(),
                              bundle.class_attributes->values.end());
    WriteBlob(dir / "attributes/class_attributes.f32", values);
    m["class_attributes"] = "attributes/class_attributes.f32";
  }
  if (bundle.confusion) {
    std::vector<float> values(bundle.confusion->counts.begin(), bundle.confusion->counts.end());
    WriteBlob(dir / "confusion.f32", values);
    m["confusion_matrix"] = "confusion.f32";
  }

  std::ofstream out(dir / kManifestName, std::ios::trunc);
  if (!out) ThrowData("cannot write manifest under '" + dir.string() + "'");
  out << m.dump(2) << "\n";
}

}  // namespace semcf
