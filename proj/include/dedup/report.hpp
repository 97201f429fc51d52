#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dedup/hash_index.hpp"
#include "dedup/pipeline.hpp"

namespace dedup {

// Leakage table, one row per comparison. Percent is printed with 2 decimals
// in CSV and at full precision in JSON.
std::string leakage_csv(std::span<const LeakageReport> reports);
std::string leakage_json(std::span<const LeakageReport> reports);

// {"clusters":[{"id":..,"retained":..,"members":[..]}], "unique": n, "input": n}
std::string clusters_json(const std::vector<DuplicateCluster>& clusters, std::size_t input_count,
                          std::size_t unique_count);

std::string audit_csv(const std::vector<AuditEntry>& entries);

// image_id,source_split,source_path
std::string manifest_csv(const SplitManifest& manifest);

// RFC 4180 quoting, applied only when needed.
std::string csv_field(const std::string& value);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dedup
