#include "dedup/coco.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace dedup {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::int64_t integer_field(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw InvalidInput(std::string("missing '") + key + "'");
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (std::floor(v) == v) return static_cast<std::int64_t>(v);
  }
  throw InvalidInput(std::string("'") + key + "' is not an integer");
}

std::int64_t optional_integer(const json& obj, const char* key, std::int64_t fallback) {
  return obj.contains(key) ? integer_field(obj, key) : fallback;
}

const json& top_level_array(const json& doc, const char* key, const std::string& source) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_array()) {
    throw InvalidInput("COCO file '" + source + "' has no '" + key + "' array");
  }
  return *it;
}

std::string polygon_problem(const std::vector<double>& poly) {
  if (poly.size() < 6) return "polygon with fewer than 3 points";
  if (poly.size() % 2 != 0) return "polygon with an odd number of coordinates";
  return {};
}

CocoAnnotation parse_annotation(const json& a) {
  CocoAnnotation ann;
  ann.id = integer_field(a, "id");
  ann.image_id = integer_field(a, "image_id");
  ann.category_id = optional_integer(a, "category_id", 0);
  if (a.contains("segmentation")) {
    const json& seg = a.at("segmentation");
    if (!seg.is_array()) throw InvalidInput("segmentation is not a polygon list");
    for (const json& poly : seg) {
      if (!poly.is_array()) throw InvalidInput("segmentation is not a polygon list");
      ann.segmentation.push_back(poly.get<std::vector<double>>());
      if (auto problem = polygon_problem(ann.segmentation.back()); !problem.empty()) {
        throw InvalidInput(problem);
      }
    }
  }
  if (a.contains("bbox")) {
    const auto bbox = a.at("bbox").get<std::vector<double>>();
    if (bbox.size() != 4) throw InvalidInput("bbox must have 4 values");
    if (bbox[2] < 0 || bbox[3] < 0) throw InvalidInput("bbox with negative extent");
    std::copy(bbox.begin(), bbox.end(), ann.bbox.begin());
  }
  ann.area = a.value("area", 0.0);
  ann.iscrowd = static_cast<int>(optional_integer(a, "iscrowd", 0));
  return ann;
}

}  // namespace

CocoDataset parse_coco(const std::string& json_text, Warnings& warnings, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput("malformed COCO JSON in '" + source + "': " + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("COCO file '" + source + "' is not a JSON object");

  CocoDataset ds;
  std::unordered_set<std::int64_t> image_ids;
  std::size_t index = 0;
  for (const json& img : top_level_array(doc, "images", source)) {
    const std::string where = source + ": images[" + std::to_string(index++) + "]";
    try {
      CocoImage image;
      image.id = integer_field(img, "id");
      image.file_name = img.at("file_name").get<std::string>();
      image.width = optional_integer(img, "width", 0);
      image.height = optional_integer(img, "height", 0);
      if (!image_ids.insert(image.id).second) {
        warnings.push_back({where, "repeated image id " + std::to_string(image.id) + "; dropped"});
        continue;
      }
      ds.images.push_back(std::move(image));
    } catch (const std::exception& e) {
      warnings.push_back({where, std::string("invalid image record (") + e.what() + "); dropped"});
    }
  }

  index = 0;
  for (const json& a : top_level_array(doc, "annotations", source)) {
    const std::string where = source + ": annotations[" + std::to_string(index++) + "]";
    try {
      CocoAnnotation ann = parse_annotation(a);
      if (!image_ids.contains(ann.image_id)) {
        warnings.push_back({where, "references missing image " + std::to_string(ann.image_id) + "; dropped"});
        continue;
      }
      ds.annotations.push_back(std::move(ann));
    } catch (const std::exception& e) {
      warnings.push_back({where, std::string("invalid annotation (") + e.what() + "); dropped"});
    }
  }

  index = 0;
  for (const json& c : top_level_array(doc, "categories", source)) {
    const std::string where = source + ": categories[" + std::to_string(index++) + "]";
    try {
      CocoCategory cat;
      cat.id = integer_field(c, "id");
      cat.name = c.at("name").get<std::string>();
      cat.supercategory = c.value("supercategory", std::string{});
      ds.categories.push_back(std::move(cat));
    } catch (const std::exception& e) {
      warnings.push_back({where, std::string("invalid category (") + e.what() + "); dropped"});
    }
  }
  return ds;
}

CocoDataset read_coco(const std::filesystem::path& path, Warnings& warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open COCO file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_coco(text.str(), warnings, path.string());
}

CocoDataset filter_coco(const CocoDataset& ds, const std::set<std::string>& kept, Warnings& warnings,
                        bool dense_remap) {
  CocoDataset out;
  out.categories = ds.categories;
  std::set<std::string> seen_names;
  std::unordered_map<std::int64_t, std::int64_t> image_map;
  for (const CocoImage& img : ds.images) {
    seen_names.insert(img.file_name);
    if (!kept.contains(img.file_name)) continue;
    CocoImage copy = img;
    if (dense_remap) copy.id = static_cast<std::int64_t>(out.images.size()) + 1;
    image_map.emplace(img.id, copy.id);
    out.images.push_back(std::move(copy));
  }
  for (const std::string& name : kept) {
    if (!seen_names.contains(name)) {
      warnings.push_back({name, "kept image has no entry in the annotation file"});
    }
  }
  for (const CocoAnnotation& ann : ds.annotations) {
    const auto it = image_map.find(ann.image_id);
    if (it == image_map.end()) continue;
    CocoAnnotation copy = ann;
    copy.image_id = it->second;
    if (dense_remap) copy.id = static_cast<std::int64_t>(out.annotations.size()) + 1;
    out.annotations.push_back(std::move(copy));
  }
  return out;
}

CocoDataset merge_coco(std::span<const CocoDataset> parts) {
  CocoDataset out;
  std::map<std::int64_t, CocoCategory> categories;
  for (const CocoDataset& part : parts) {
    std::unordered_map<std::int64_t, std::int64_t> image_map;
    for (const CocoImage& img : part.images) {
      CocoImage copy = img;
      copy.id = static_cast<std::int64_t>(out.images.size()) + 1;
      image_map.emplace(img.id, copy.id);
      out.images.push_back(std::move(copy));
    }
    for (const CocoAnnotation& ann : part.annotations) {
      const auto it = image_map.find(ann.image_id);
      if (it == image_map.end()) continue;
      CocoAnnotation copy = ann;
      copy.id = static_cast<std::int64_t>(out.annotations.size()) + 1;
      copy.image_id = it->second;
      out.annotations.push_back(std::move(copy));
    }
    for (const CocoCategory& cat : part.categories) {
      auto [it, inserted] = categories.emplace(cat.id, cat);
      if (!inserted && it->second.name != cat.name) {
        throw InvalidInput("category " + std::to_string(cat.id) + " is '" + it->second.name + "' in one file and '" +
                           cat.name + "' in another");
      }
    }
  }
  for (auto& [id, cat] : categories) out.categories.push_back(std::move(cat));
  return out;
}

std::string to_json_text(const CocoDataset& ds) {
  ordered_json doc;
  ordered_json images = ordered_json::array();
  for (const CocoImage& img : ds.images) {
    ordered_json j;
    j["id"] = img.id;
    j["file_name"] = img.file_name;
    j["width"] = img.width;
    j["height"] = img.height;
    images.push_back(std::move(j));
  }
  ordered_json annotations = ordered_json::array();
  for (const CocoAnnotation& ann : ds.annotations) {
    ordered_json j;
    j["id"] = ann.id;
    j["image_id"] = ann.image_id;
    j["category_id"] = ann.category_id;
    j["segmentation"] = ann.segmentation;
    j["area"] = ann.area;
    j["bbox"] = ann.bbox;
    j["iscrowd"] = ann.iscrowd;
    annotations.push_back(std::move(j));
  }
  ordered_json categories = ordered_json::array();
  for (const CocoCategory& cat : ds.categories) {
    ordered_json j;
    j["id"] = cat.id;
    j["name"] = cat.name;
    if (!cat.supercategory.empty()) j["supercategory"] = cat.supercategory;
    categories.push_back(std::move(j));
  }
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(annotations);
  doc["categories"] = std::move(categories);
  return doc.dump() + "\n";
}

void write_coco(const CocoDataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write COCO file '" + path.string() + "'");
  out << to_json_text(ds);
  if (!out.flush()) throw InvalidInput("cannot write COCO file '" + path.string() + "'");
}

std::vector<std::string> integrity_violations(const CocoDataset& ds) {
  std::vector<std::string> problems;
  std::unordered_set<std::int64_t> image_ids;
  for (const CocoImage& img : ds.images) {
    if (!image_ids.insert(img.id).second) problems.push_back("repeated image id " + std::to_string(img.id));
  }
  std::unordered_set<std::int64_t> ann_ids;
  for (const CocoAnnotation& ann : ds.annotations) {
    const std::string tag = "annotation " + std::to_string(ann.id);
    if (!ann_ids.insert(ann.id).second) problems.push_back("repeated " + tag);
    if (!image_ids.contains(ann.image_id)) {
      problems.push_back(tag + " references missing image " + std::to_string(ann.image_id));
    }
    for (const auto& poly : ann.segmentation) {
      if (auto p = polygon_problem(poly); !p.empty()) problems.push_back(tag + ": " + p);
    }
    if (ann.bbox[2] < 0 || ann.bbox[3] < 0) problems.push_back(tag + ": negative bbox extent");
  }
  return problems;
}

}  // namespace dedup
