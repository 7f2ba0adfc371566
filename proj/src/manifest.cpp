// SPDX-License-Identifier: Apache-2.0
#include "qasc/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace qasc::cli {

namespace {

[[noreturn]] void line_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

DatasetManifest ingest(const std::string& manifest_path, const std::string& root_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("manifest: cannot open " + manifest_path);

  DatasetManifest out;
  out.root = root_dir.empty() ? fs::path(manifest_path).parent_path().string() : root_dir;

  std::map<std::string, int> first_line_of_path;
  bool saw_tagged = false;
  bool saw_untagged = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    const std::vector<std::string> fields = split_tabs(line);
    if (fields.size() < 2 || fields.size() > 3)
      line_error(manifest_path, line_no, "expected 2 or 3 tab-separated fields, got " +
                                             std::to_string(fields.size()));
    if (fields[0].empty()) line_error(manifest_path, line_no, "empty audio path");
    if (fields[1].empty()) line_error(manifest_path, line_no, "empty class name");

    ManifestEntry entry;
    entry.path = fields[0];
    entry.class_name = fields[1];
    if (fields.size() == 3) {
      if (fields[2] != "train" && fields[2] != "test")
        line_error(manifest_path, line_no, "split tag must be 'train' or 'test', got '" +
                                               fields[2] + "'");
      entry.split = fields[2];
      saw_tagged = true;
    } else {
      saw_untagged = true;
    }
    if (saw_tagged && saw_untagged)
      line_error(manifest_path, line_no, "split tags must be given on all lines or none");

    const auto [it, inserted] = first_line_of_path.emplace(entry.path, line_no);
    if (!inserted)
      line_error(manifest_path, line_no,
                 "duplicate path '" + entry.path + "' (first seen on line " +
                     std::to_string(it->second) + ")");

    out.entries.push_back(std::move(entry));
  }

  for (const ManifestEntry& entry : out.entries) {
    const std::string full = resolve_audio_path(out, entry);
    if (!fs::exists(full))
      throw std::runtime_error("manifest: listed audio file not found: " + full);
  }

  std::vector<std::string> names;
  for (const ManifestEntry& entry : out.entries) names.push_back(entry.class_name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  out.class_names = names;
  for (ManifestEntry& entry : out.entries) {
    const auto it = std::lower_bound(names.begin(), names.end(), entry.class_name);
    entry.label = static_cast<int>(it - names.begin());
  }
  out.has_split_tags = saw_tagged;
  return out;
}

std::string resolve_audio_path(const DatasetManifest& manifest, const ManifestEntry& entry) {
  if (manifest.root.empty()) return entry.path;
  return (fs::path(manifest.root) / entry.path).lexically_normal().string();
}

}  // namespace qasc::cli
