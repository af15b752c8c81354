#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "longtail/config.hpp"

namespace longtail {

// Written next to the outputs of each successful stage, under
// <output_dir>/manifests/<stage>.json.
struct StageManifest {
    std::string stage;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;   // label -> sha256
    std::map<std::string, std::string> outputs;  // path relative to output_dir -> sha256
    Json counts = Json::object();
    std::string timestamp;
};

Json manifest_to_json(const StageManifest& m);
StageManifest manifest_from_json(const Json& j);

// File-based stage runner. Each stage reads its upstream outputs from the
// output directory, checks them against the upstream manifests and refuses
// to run on a mismatch.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    // Chain order used by run_all.
    static const std::vector<std::string>& stage_names();
    // Chain stages plus "embed-corpus".
    static bool is_stage(std::string_view name);

    StageManifest run_stage(const std::string& name);
    std::vector<StageManifest> run_all();

    // Blocks serving the triage UI/API until the process is stopped.
    void serve();

    const PipelineConfig& config() const { return config_; }
    std::filesystem::path manifest_path(const std::string& stage) const;

private:
    PipelineConfig config_;
};

}  // namespace longtail
