#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tractfeat/connectome.hpp"
#include "tractfeat/regression.hpp"
#include "tractfeat/tables.hpp"
#include "tractfeat/tracker.hpp"

namespace tractfeat {

/// Settings for one pipeline run. Defaults equal the published tracking
/// and forest configuration, so an empty config reproduces it.
struct RunConfig {
    std::filesystem::path field;
    std::filesystem::path tractogram;
    std::filesystem::path atlas;
    std::filesystem::path lesion;
    std::filesystem::path lesion_dir;
    std::filesystem::path clinical;
    std::filesystem::path features;
    std::filesystem::path output;
    std::filesystem::path output_dir;

    TrackingParams tracking;
    ForestSpec forest;
    std::vector<FeatureKind> feature_kinds{std::begin(kAllFeatureKinds), std::end(kAllFeatureKinds)};
    MrsWindow mrs_window;

    std::size_t threads = 1;
    bool strict = false;
};

/// Overlays a JSON config file onto `config`. Unknown keys are rejected.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

}  // namespace tractfeat
