#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mitodet/errors.hpp"
#include "mitodet/pipeline/atomic_file.hpp"
#include "mitodet/pipeline/serialize.hpp"

namespace mitodet::pipeline {

enum class Split { Train, Validation, Test };

inline std::optional<Split> parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "validation") return Split::Validation;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "train";
}

/// One slide of a dataset. Paths are kept verbatim; they are resolved when used.
struct ManifestEntry {
  std::string slide_id;
  std::string image_path;
  std::string centroid_csv_path;
  std::string scanner;
  std::optional<double> resolution_um_per_px;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> in_split(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries) {
      if (e.split == s) out.push_back(&e);
    }
    return out;
  }
};

/// Schema: {"entries": [{"slide_id", "image_path", "centroid_csv_path",
/// "scanner", "resolution_um_per_px"?, "split"}]}.
inline DatasetManifest parse_manifest(const std::string& text, const std::string& source = "manifest") {
  Json root;
  try {
    root = parse_json(text, source);
  } catch (const ValidationError& e) {
    throw ManifestError(e.what());
  }
  if (!root.is_object() || !root.contains("entries") || !root["entries"].is_array()) {
    throw ManifestError(source + ": expected an object with an 'entries' array");
  }
  auto string_field = [&](const Json& item, const char* key, const std::string& where) {
    if (!item.contains(key) || !item[key].is_string() || item[key].get<std::string>().empty()) {
      throw ManifestError(source + ": " + where + "." + key + ": expected a nonempty string");
    }
    return item[key].get<std::string>();
  };

  DatasetManifest manifest;
  std::set<std::string> seen;
  const auto& entries = root["entries"];
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = "entries[" + std::to_string(i) + "]";
    const auto& item = entries[i];
    if (!item.is_object()) throw ManifestError(source + ": " + where + ": expected an object");
    ManifestEntry e;
    e.slide_id = string_field(item, "slide_id", where);
    e.image_path = string_field(item, "image_path", where);
    e.centroid_csv_path = string_field(item, "centroid_csv_path", where);
    if (item.contains("scanner")) e.scanner = string_field(item, "scanner", where);
    if (item.contains("resolution_um_per_px")) {
      const auto& r = item["resolution_um_per_px"];
      if (!r.is_number() || !(r.get<double>() > 0.0)) {
        throw ManifestError(source + ": " + where + ".resolution_um_per_px: expected a positive number");
      }
      e.resolution_um_per_px = r.get<double>();
    }
    const auto split_text = string_field(item, "split", where);
    const auto split = parse_split(split_text);
    if (!split) {
      throw ManifestError(source + ": " + where + ".split: unknown split '" + split_text +
                          "' (expected train, validation or test)");
    }
    e.split = *split;
    if (!seen.insert(e.slide_id).second) {
      throw ManifestError(source + ": " + where + ".slide_id: duplicate slide id '" + e.slide_id + "'");
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path), path.string());
}

}  // namespace mitodet::pipeline
