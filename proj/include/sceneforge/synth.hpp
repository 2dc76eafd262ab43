#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sceneforge/blending.hpp"
#include "sceneforge/image_io.hpp"
#include "sceneforge/pool.hpp"

namespace sceneforge {

struct PlacementParams {
    double scale_min = 0.2; // of min(scene dim) / max(object dim)
    double scale_max = 0.7;
    int min_objects = 1;
    int max_objects = 3;
    int margin = 2;   // pixels kept clear of the scene border
    int retries = 3;  // placement redraws before PlacementInfeasible
};

struct BlendParams {
    GuidanceMode mode = GuidanceMode::MixedGradients;
    double alpha_threshold = 0.05; // region = placed alpha above this
    double tol = 1e-6;
    int max_iter = 0;
};

struct SynthParams {
    PlacementParams placement;
    BlendParams blend;
};

struct Placement {
    std::string object_id;
    double scale = 1.0;
    Point position; // top-left of the scaled object, integer-valued
};

// Fully resolved unit of work: all randomness is drawn at sampling time, so
// running the job is deterministic regardless of scheduling.
struct SynthJob {
    std::string scene_id;
    std::vector<Placement> placements;
    std::uint64_t seed = 0;
};

struct AnnotationRec {
    Polygon polygon;
    std::array<double, 4> bbox;
    double area = 0.0;
    std::string category;
};

struct SynthResult {
    std::string file_name; // <seed>_<scene_id>.png under out/images
    std::string image_path;
    int width = 0;
    int height = 0;
    std::vector<AnnotationRec> annotations;
    std::uint64_t seed = 0;
    std::string scene_id;
};

// Manifest bound to its directory, with cached dimension probes and decoded
// object artifacts shared across jobs.
class Pool {
public:
    Pool(Manifest manifest, std::filesystem::path root);

    static Pool open(const std::filesystem::path& root); // root/manifest.json

    const Manifest& manifest() const { return manifest_; }
    const std::filesystem::path& root() const { return root_; }

    const ObjectRecord& object(const std::string& id) const;
    const SceneRecord& scene(const std::string& id) const;

    std::filesystem::path resolve(const std::string& rel_path) const;

    ImageDims object_dims(const std::string& id) const;
    ImageDims scene_dims(const std::string& id) const;

    struct ObjectArtifacts {
        RgbImage image;
        AlphaMap alpha;
    };
    std::shared_ptr<const ObjectArtifacts> object_artifacts(const std::string& id) const;
    RgbImage load_scene_image(const std::string& id) const;

private:
    Manifest manifest_;
    std::filesystem::path root_;
    std::map<std::string, std::size_t> object_index_;
    std::map<std::string, std::size_t> scene_index_;

    mutable std::mutex cache_mutex_;
    mutable std::map<std::string, ImageDims> dims_cache_;
    mutable std::map<std::string, std::shared_ptr<const ObjectArtifacts>> artifact_cache_;
};

// Draws n_images jobs: scene and objects uniform with replacement, per-job
// sub-seed from derive_seed(seed, index), placements per PlacementParams.
// Throws EmptyPool and PlacementInfeasible.
std::vector<SynthJob> sample_jobs(const Pool& pool, int n_images,
                                  std::uint64_t seed, const SynthParams& params = {});

// Scales each placed object (bilinear), composites it over the scene, then
// Poisson-blends the composite against the pre-composite scene over the
// placed alpha support. Writes out_dir/images/<seed>_<scene_id>.png
// atomically and returns the transformed outline annotations.
SynthResult run_job(const Pool& pool, const SynthJob& job,
                    const SynthParams& params, const std::filesystem::path& out_dir);

// Runs jobs on `workers` threads; results come back in job order.
std::vector<SynthResult> run_batch(const Pool& pool, const std::vector<SynthJob>& jobs,
                                   const SynthParams& params,
                                   const std::filesystem::path& out_dir, int workers,
                                   const std::function<void(int done, int total)>& progress = {});

} // namespace sceneforge
