#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sceneforge/image.hpp"
#include "sceneforge/matting.hpp"
#include "sceneforge/morphology.hpp"
#include "sceneforge/outline.hpp"

namespace sceneforge {

struct IngestParams {
    int directions = 16;
    StructuringElement erode_se{ElementShape::Square, 3};
    StructuringElement dilate_se{ElementShape::Square, 3};
    MattingParams matting;
    double incomplete_iou = 0.9; // outline-vs-mask IoU below this flags the mask
};

// Paths are stored relative to the manifest location. `extra` keeps unknown
// manifest fields so load/save round trips are lossless across versions.
struct ObjectRecord {
    std::string id;
    std::string category;
    std::string image_path;
    std::string mask_path;
    std::string alpha_path;
    Point center;
    PolarOutline outline;
    bool mask_incomplete = false;
    nlohmann::json extra = nlohmann::json::object();
};

struct SceneRecord {
    std::string id;
    std::string image_path;
    std::string label;
    nlohmann::json extra = nlohmann::json::object();
};

struct Manifest {
    std::string version = "1";
    std::vector<ObjectRecord> objects;
    std::vector<SceneRecord> scenes;
    nlohmann::json extra = nlohmann::json::object();
};

// Largest 8-connected component of the mask. Throws EmptyMask.
BinaryMask largest_component(const BinaryMask& mask);

// Ingests one object photo + rough mask into pool_dir:
// selects the largest mask component, derives mass center and a K-direction
// outline, flags incomplete masks (outline polygon vs mask IoU below
// threshold), runs trimap + matting, and writes
// pool_dir/objects/<id>/{image,mask,alpha}.png. The id is a content-hash
// prefix over image and mask bytes.
ObjectRecord ingest_object(const std::filesystem::path& pool_dir,
                           const std::filesystem::path& image_path,
                           const std::filesystem::path& mask_path,
                           const std::string& category,
                           const IngestParams& params = {});

// Copies the scene bytes to pool_dir/scenes/<id>.jpg; id is a content-hash
// prefix, so re-ingesting the same file is idempotent.
SceneRecord ingest_scene(const std::filesystem::path& pool_dir,
                         const std::filesystem::path& image_path,
                         const std::string& label);

// Canonical JSON (sorted keys, version "1"). Load rejects duplicate ids and
// unsupported versions; unknown fields are preserved for the next save.
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

nlohmann::json manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

nlohmann::json outline_to_json(const PolarOutline& outline);
PolarOutline outline_from_json(const nlohmann::json& j);

} // namespace sceneforge
