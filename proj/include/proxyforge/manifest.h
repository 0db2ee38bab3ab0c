/* Copyright 2026 The ProxyForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef PROXYFORGE_MANIFEST_H_
#define PROXYFORGE_MANIFEST_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace proxyforge {

enum class Role { kSource, kTargetTrain, kTargetEval };

std::string_view RoleName(Role role);
std::optional<Role> ParseRole(std::string_view name);

// Paths are relative to the dataset root (or absolute); empty = absent.
struct ManifestEntry {
  Role role = Role::kSource;
  std::string id;
  std::string image;
  std::string gt;
  std::string scoremap;
  std::string d1;
  std::string d2;
  std::string proxy;

  bool operator==(const ManifestEntry& other) const = default;
};

// Text format, one record per line:
//
//   proxyforge-manifest 1
//   root <dir relative to the manifest file>
//   entry <role> <id> key=value ...
//
// Keys: image, gt, scoremap, d1, d2, proxy. Blank lines and '#' comments
// are skipped. Ids are unique per role. target-eval entries carry the
// held-out ground truth; an eval entry without an image refers to the
// target-train entry with the same id.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::filesystem::path root_dir);

  const std::filesystem::path& root_dir() const { return root_dir_; }
  void set_root_dir(std::filesystem::path root_dir);

  std::vector<ManifestEntry>& entries() { return entries_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

  std::vector<const ManifestEntry*> WithRole(Role role) const;
  const ManifestEntry* Find(Role role, std::string_view id) const;
  ManifestEntry* Find(Role role, std::string_view id);

  // Absolute path for a stored entry path.
  std::filesystem::path Resolve(const std::string& stored) const;
  // Stored form (root-relative) for an absolute or cwd-relative path.
  std::string Relativize(const std::filesystem::path& path) const;

  // Image path of an eval entry, following the target-train fallback.
  std::string EvalImage(const ManifestEntry& eval_entry) const;

  bool operator==(const DatasetManifest& other) const = default;

 private:
  std::filesystem::path root_dir_;
  std::vector<ManifestEntry> entries_;
};

struct ManifestOptions {
  // Check that every referenced file exists.
  bool check_files = true;
  // Reject target-train entries that carry ground truth.
  bool training_mode = false;
};

// Parses manifest text. `manifest_dir` anchors a relative root. Errors are
// kFormat (syntax) or kValidation (duplicate id, dangling path, role
// contract) and name the offending line or entry.
DatasetManifest ParseManifest(std::string_view text,
                              const std::filesystem::path& manifest_dir,
                              const ManifestOptions& options = {});
std::string FormatManifest(const DatasetManifest& manifest,
                           const std::filesystem::path& manifest_dir);

DatasetManifest LoadManifest(const std::filesystem::path& path,
                             const ManifestOptions& options = {});
void SaveManifest(const DatasetManifest& manifest,
                  const std::filesystem::path& path);

// Structural checks shared by Parse and explicit callers.
void ValidateManifest(const DatasetManifest& manifest,
                      const ManifestOptions& options);

}  // namespace proxyforge

#endif  // PROXYFORGE_MANIFEST_H_
