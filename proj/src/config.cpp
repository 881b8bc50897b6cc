#include "tractfeat/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "tractfeat/error.hpp"

namespace tractfeat {
namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& where) {
    if (!object.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (const auto& [key, _] : object.items())
        if (!known.contains(key)) throw ValidationError("config: unknown key '" + where + "." + key + "'");
}

template <typename T>
void read_if(const json& object, const char* key, T& target) {
    if (object.contains(key)) target = object.at(key).get<T>();
}

}  // namespace

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json root;
    try {
        root = json::parse(in);
        reject_unknown(root, {"paths", "tracking", "forest", "features", "mrs_window", "threads", "strict"}, "root");

        if (root.contains("paths")) {
            const json& p = root["paths"];
            reject_unknown(p, {"field", "tractogram", "atlas", "lesion", "lesion_dir", "clinical", "features", "output",
                               "output_dir"},
                           "paths");
            auto path_if = [&p](const char* key, std::filesystem::path& target) {
                if (p.contains(key)) target = p.at(key).get<std::string>();
            };
            path_if("field", config.field);
            path_if("tractogram", config.tractogram);
            path_if("atlas", config.atlas);
            path_if("lesion", config.lesion);
            path_if("lesion_dir", config.lesion_dir);
            path_if("clinical", config.clinical);
            path_if("features", config.features);
            path_if("output", config.output);
            path_if("output_dir", config.output_dir);
        }
        if (root.contains("tracking")) {
            const json& t = root["tracking"];
            reject_unknown(t, {"qa_threshold", "angular_threshold_deg", "step_mm", "smoothing", "min_length_mm",
                               "max_length_mm", "tip_iterations", "max_tracts"},
                           "tracking");
            auto& tp = config.tracking;
            read_if(t, "qa_threshold", tp.qa_threshold);
            read_if(t, "angular_threshold_deg", tp.angular_threshold_deg);
            read_if(t, "step_mm", tp.step_mm);
            read_if(t, "smoothing", tp.smoothing);
            read_if(t, "min_length_mm", tp.min_length_mm);
            read_if(t, "max_length_mm", tp.max_length_mm);
            read_if(t, "tip_iterations", tp.tip_iterations);
            if (t.contains("max_tracts")) {
                if (t["max_tracts"].is_null())
                    tp.max_tracts.reset();
                else
                    tp.max_tracts = t["max_tracts"].get<std::size_t>();
            }
        }
        if (root.contains("forest")) {
            const json& f = root["forest"];
            reject_unknown(f, {"n_trees", "max_depth", "min_samples_split", "mtry", "seed"}, "forest");
            read_if(f, "n_trees", config.forest.n_trees);
            read_if(f, "max_depth", config.forest.max_depth);
            read_if(f, "min_samples_split", config.forest.min_samples_split);
            if (f.contains("mtry") && !f["mtry"].is_null()) config.forest.mtry = f["mtry"].get<int>();
            read_if(f, "seed", config.forest.rng_seed);
        }
        if (root.contains("features")) {
            config.feature_kinds.clear();
            for (const auto& name : root["features"]) config.feature_kinds.push_back(parse_feature_kind(name.get<std::string>()));
        }
        if (root.contains("mrs_window")) {
            const auto bounds = root["mrs_window"].get<std::vector<double>>();
            if (bounds.size() != 2) throw ValidationError("config: mrs_window needs two numbers");
            config.mrs_window = {bounds[0], bounds[1]};
        }
        read_if(root, "threads", config.threads);
        read_if(root, "strict", config.strict);
    } catch (const json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
}

}  // namespace tractfeat
