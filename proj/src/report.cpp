#include "dedup/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace dedup {

using ordered_json = nlohmann::ordered_json;

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string leakage_csv(std::span<const LeakageReport> reports) {
  std::string out =
      "Needles Set,Haystack Set,Total number of images in haystack,Number of needles in haystack,Data Leakage %\n";
  for (const LeakageReport& r : reports) {
    char pct[32];
    std::snprintf(pct, sizeof pct, "%.2f", r.percent);
    out += csv_field(r.needles) + "," + csv_field(r.haystack) + "," + std::to_string(r.haystack_total) + "," +
           std::to_string(r.matched) + "," + pct + "\n";
  }
  return out;
}

std::string leakage_json(std::span<const LeakageReport> reports) {
  ordered_json doc = ordered_json::array();
  for (const LeakageReport& r : reports) {
    ordered_json j;
    j["needles"] = r.needles;
    j["haystack"] = r.haystack;
    j["haystack_total"] = r.haystack_total;
    j["matched"] = r.matched;
    j["leakage_percent"] = r.percent;
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

std::string clusters_json(const std::vector<DuplicateCluster>& clusters, std::size_t input_count,
                          std::size_t unique_count) {
  ordered_json list = ordered_json::array();
  for (const DuplicateCluster& c : clusters) {
    ordered_json j;
    j["id"] = c.id;
    j["retained"] = c.retained.id;
    ordered_json members = ordered_json::array();
    for (const ImageKey& m : c.members) members.push_back(m.id);
    j["members"] = std::move(members);
    list.push_back(std::move(j));
  }
  ordered_json doc;
  doc["input"] = input_count;
  doc["unique"] = unique_count;
  doc["clusters"] = std::move(list);
  return doc.dump(2) + "\n";
}

std::string audit_csv(const std::vector<AuditEntry>& entries) {
  std::string out = "image_id,disposition\n";
  for (const AuditEntry& e : entries) out += csv_field(e.id) + "," + csv_field(e.disposition) + "\n";
  return out;
}

std::string manifest_csv(const SplitManifest& manifest) {
  std::string out = "image_id,source_split,source_path\n";
  for (const ImageRecord& r : manifest.records) {
    out += csv_field(r.id) + "," + csv_field(r.source_split) + "," + csv_field(r.path.generic_string()) + "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out.flush()) throw InvalidInput("cannot write '" + path.string() + "'");
}

}  // namespace dedup
