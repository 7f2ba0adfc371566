// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace qasc::cli {

struct ManifestEntry {
  std::string path;        // audio path as written in the manifest
  std::string class_name;  // scene label
  std::string split;       // "train", "test", or empty when untagged
  int label = 0;           // index into DatasetManifest::class_names
};

struct DatasetManifest {
  std::string root;  // directory audio paths are resolved against
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_names;  // lexicographic; defines label indices
  bool has_split_tags = false;
};

// Parses a tab-separated manifest: one clip per line, fields
//   <relative-audio-path> TAB <class-name> [TAB <train|test>]
// Blank lines are skipped. The split tag is all-or-nothing across lines.
// Class names are ordered lexicographically to assign stable label indices.
// Duplicate paths, malformed lines, and missing audio files are errors that
// name the offending line. `root_dir` overrides the default resolution root
// (the manifest's own directory).
DatasetManifest ingest(const std::string& manifest_path, const std::string& root_dir = "");

// root + "/" + entry.path with separators normalized.
std::string resolve_audio_path(const DatasetManifest& manifest, const ManifestEntry& entry);

}  // namespace qasc::cli
