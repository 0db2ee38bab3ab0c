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

#include "proxyforge/manifest.h"

#include <set>
#include <sstream>
#include <utility>

#include "proxyforge/error.h"
#include "proxyforge/tensor_io.h"

namespace proxyforge {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kMagic = "proxyforge-manifest";
constexpr std::string_view kVersion = "1";

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string* FieldFor(ManifestEntry& e, std::string_view key) {
  if (key == "image") return &e.image;
  if (key == "gt") return &e.gt;
  if (key == "scoremap") return &e.scoremap;
  if (key == "d1") return &e.d1;
  if (key == "d2") return &e.d2;
  if (key == "proxy") return &e.proxy;
  return nullptr;
}

[[noreturn]] void LineError(int line, const std::string& what) {
  Fail(ErrorCode::kFormat,
       "manifest line " + std::to_string(line) + ": " + what);
}

std::string EntryName(const ManifestEntry& e) {
  return std::string(RoleName(e.role)) + " entry '" + e.id + "'";
}

}  // namespace

std::string_view RoleName(Role role) {
  switch (role) {
    case Role::kSource:
      return "source";
    case Role::kTargetTrain:
      return "target-train";
    case Role::kTargetEval:
      return "target-eval";
  }
  return "unknown";
}

std::optional<Role> ParseRole(std::string_view name) {
  for (Role r : {Role::kSource, Role::kTargetTrain, Role::kTargetEval}) {
    if (RoleName(r) == name) return r;
  }
  return std::nullopt;
}

DatasetManifest::DatasetManifest(fs::path root_dir) {
  set_root_dir(std::move(root_dir));
}

void DatasetManifest::set_root_dir(fs::path root_dir) {
  root_dir_ = fs::absolute(root_dir).lexically_normal();
}

std::vector<const ManifestEntry*> DatasetManifest::WithRole(Role role) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (e.role == role) out.push_back(&e);
  }
  return out;
}

const ManifestEntry* DatasetManifest::Find(Role role,
                                           std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.role == role && e.id == id) return &e;
  }
  return nullptr;
}

ManifestEntry* DatasetManifest::Find(Role role, std::string_view id) {
  for (auto& e : entries_) {
    if (e.role == role && e.id == id) return &e;
  }
  return nullptr;
}

fs::path DatasetManifest::Resolve(const std::string& stored) const {
  const fs::path p(stored);
  if (p.is_absolute()) return p;
  return (root_dir_ / p).lexically_normal();
}

std::string DatasetManifest::Relativize(const fs::path& path) const {
  const fs::path abs = fs::absolute(path).lexically_normal();
  const fs::path rel = abs.lexically_relative(root_dir_);
  if (rel.empty()) return abs.generic_string();
  return rel.generic_string();
}

std::string DatasetManifest::EvalImage(const ManifestEntry& eval_entry) const {
  if (!eval_entry.image.empty()) return eval_entry.image;
  const ManifestEntry* train = Find(Role::kTargetTrain, eval_entry.id);
  Require(train != nullptr, ErrorCode::kValidation,
          EntryName(eval_entry) + " has no image and no target-train twin");
  return train->image;
}

void ValidateManifest(const DatasetManifest& manifest,
                      const ManifestOptions& options) {
  std::set<std::pair<Role, std::string>> seen;
  for (const auto& e : manifest.entries()) {
    Require(!e.id.empty(), ErrorCode::kValidation, "manifest entry without id");
    Require(seen.emplace(e.role, e.id).second, ErrorCode::kValidation,
            "duplicate id in " + EntryName(e));
    switch (e.role) {
      case Role::kSource:
        Require(!e.image.empty() && !e.gt.empty(), ErrorCode::kValidation,
                EntryName(e) + " needs image and gt");
        break;
      case Role::kTargetTrain:
        Require(!e.image.empty(), ErrorCode::kValidation,
                EntryName(e) + " needs an image");
        Require(!options.training_mode || e.gt.empty(), ErrorCode::kValidation,
                EntryName(e) + " carries ground truth in training mode");
        break;
      case Role::kTargetEval:
        Require(!e.gt.empty(), ErrorCode::kValidation,
                EntryName(e) + " needs gt");
        (void)manifest.EvalImage(e);
        break;
    }
    if (!options.check_files) continue;
    const std::pair<const char*, const std::string*> fields[] = {
        {"image", &e.image}, {"gt", &e.gt},   {"scoremap", &e.scoremap},
        {"d1", &e.d1},       {"d2", &e.d2},   {"proxy", &e.proxy}};
    for (const auto& [key, value] : fields) {
      if (value->empty()) continue;
      const fs::path p = manifest.Resolve(*value);
      Require(fs::is_regular_file(p), ErrorCode::kValidation,
              EntryName(e) + " references missing " + key + " file " +
                  p.string());
    }
  }
}

DatasetManifest ParseManifest(std::string_view text,
                              const fs::path& manifest_dir,
                              const ManifestOptions& options) {
  DatasetManifest m(manifest_dir);
  bool have_header = false;
  bool have_root = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = SplitWhitespace(line);
    if (tok.empty()) continue;

    if (!have_header) {
      if (tok.size() != 2 || tok[0] != kMagic) {
        LineError(line_no, "expected '" + std::string(kMagic) + " 1' header");
      }
      if (tok[1] != kVersion) {
        LineError(line_no, "unsupported version " + std::string(tok[1]));
      }
      have_header = true;
      continue;
    }
    if (tok[0] == "root") {
      if (tok.size() != 2) LineError(line_no, "root takes one path");
      if (have_root) LineError(line_no, "root given twice");
      m.set_root_dir(manifest_dir / fs::path(std::string(tok[1])));
      have_root = true;
      continue;
    }
    if (tok[0] != "entry") {
      LineError(line_no, "unknown record '" + std::string(tok[0]) + "'");
    }
    if (tok.size() < 3) LineError(line_no, "entry needs a role and an id");
    const auto role = ParseRole(tok[1]);
    if (!role) LineError(line_no, "unknown role '" + std::string(tok[1]) + "'");
    ManifestEntry e;
    e.role = *role;
    e.id = std::string(tok[2]);
    if (e.id.find('=') != std::string::npos) {
      LineError(line_no, "id may not contain '='");
    }
    for (std::size_t i = 3; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == tok[i].size()) {
        LineError(line_no, "malformed field '" + std::string(tok[i]) + "'");
      }
      std::string* field = FieldFor(e, tok[i].substr(0, eq));
      if (field == nullptr) {
        LineError(line_no,
                  "unknown key '" + std::string(tok[i].substr(0, eq)) + "'");
      }
      if (!field->empty()) LineError(line_no, "repeated key");
      *field = std::string(tok[i].substr(eq + 1));
    }
    m.entries().push_back(std::move(e));
  }
  Require(have_header, ErrorCode::kFormat, "manifest is empty");
  ValidateManifest(m, options);
  return m;
}

std::string FormatManifest(const DatasetManifest& manifest,
                           const fs::path& manifest_dir) {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  fs::path root = manifest.root_dir().lexically_relative(
      fs::absolute(manifest_dir).lexically_normal());
  if (root.empty()) root = manifest.root_dir();
  out << "root " << root.generic_string() << '\n';
  for (const auto& e : manifest.entries()) {
    out << "entry " << RoleName(e.role) << ' ' << e.id;
    const std::pair<const char*, const std::string*> fields[] = {
        {"image", &e.image}, {"gt", &e.gt},   {"scoremap", &e.scoremap},
        {"d1", &e.d1},       {"d2", &e.d2},   {"proxy", &e.proxy}};
    for (const auto& [key, value] : fields) {
      if (!value->empty()) out << ' ' << key << '=' << *value;
    }
    out << '\n';
  }
  return out.str();
}

DatasetManifest LoadManifest(const fs::path& path,
                             const ManifestOptions& options) {
  const auto bytes = ReadFileBytes(path);
  const std::string text(bytes.begin(), bytes.end());
  return ParseManifest(text, fs::absolute(path).parent_path(), options);
}

void SaveManifest(const DatasetManifest& manifest, const fs::path& path) {
  const std::string text =
      FormatManifest(manifest, fs::absolute(path).parent_path());
  WriteFileBytes(path, std::vector<uint8_t>(text.begin(), text.end()));
}

}  // namespace proxyforge
