// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "viewforge/pipeline.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// JSON text formats. Readers throw ParseError whose where() is either
// "line L, column C" for syntax errors or a field path such as "views[3].pose.rotation".

namespace viewforge {

std::string read_text_file(const std::filesystem::path &path);
/// Writes atomically enough for our purposes: truncate then write, throwing on failure.
void write_text_file(const std::filesystem::path &path, std::string_view text);

/// {"poses": [{"rotation": [9 row-major], "translation": [3]}, ...]}
std::string poses_to_json(const std::vector<Pose> &poses);
std::vector<Pose> poses_from_json(std::string_view text);

std::string plan_to_json(const SamplingPlan &plan);
SamplingPlan plan_from_json(std::string_view text);

struct ManifestEntry {
    std::size_t id = 0;
    ViewKind kind = ViewKind::observed;
    std::string file;
    Pose pose;
    std::optional<std::size_t> step; ///< plan step that generated the view
};

struct ViewManifest {
    Intrinsics intrinsics;
    std::vector<ManifestEntry> views;
};

std::string manifest_to_json(const ViewManifest &manifest);
ViewManifest manifest_from_json(std::string_view text);

std::string report_to_json(const PipelineReport &report);
std::string metrics_to_json(const MetricReport &report);

std::string config_to_json(const PipelineConfig &config);
PipelineConfig config_from_json(std::string_view text);

/// {"loss": [...], "photometric": [...]}
std::string training_to_json(const std::vector<double> &loss, const std::vector<double> &photometric);
std::vector<double> training_loss_from_json(std::string_view text);

} // namespace viewforge
