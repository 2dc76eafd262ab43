#include "sceneforge/synth.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace sceneforge {

namespace fs = std::filesystem;

Pool::Pool(Manifest manifest, fs::path root)
    : manifest_(std::move(manifest)), root_(std::move(root)) {
    for (std::size_t i = 0; i < manifest_.objects.size(); ++i) {
        const std::string& id = manifest_.objects[i].id;
        if (!object_index_.emplace(id, i).second)
            throw Error("pool: duplicate object id '" + id + "'");
    }
    for (std::size_t i = 0; i < manifest_.scenes.size(); ++i) {
        const std::string& id = manifest_.scenes[i].id;
        if (!scene_index_.emplace(id, i).second)
            throw Error("pool: duplicate scene id '" + id + "'");
    }
}

Pool Pool::open(const fs::path& root) {
    return Pool(load_manifest(root / "manifest.json"), root);
}

const ObjectRecord& Pool::object(const std::string& id) const {
    const auto it = object_index_.find(id);
    if (it == object_index_.end()) throw Error("pool: unknown object id '" + id + "'");
    return manifest_.objects[it->second];
}

const SceneRecord& Pool::scene(const std::string& id) const {
    const auto it = scene_index_.find(id);
    if (it == scene_index_.end()) throw Error("pool: unknown scene id '" + id + "'");
    return manifest_.scenes[it->second];
}

fs::path Pool::resolve(const std::string& rel_path) const {
    return root_ / fs::path(rel_path);
}

ImageDims Pool::object_dims(const std::string& id) const {
    const std::string key = "object:" + id;
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = dims_cache_.find(key);
        if (it != dims_cache_.end()) return it->second;
    }
    const ImageDims dims = probe_dimensions(resolve(object(id).image_path));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    dims_cache_.emplace(key, dims);
    return dims;
}

ImageDims Pool::scene_dims(const std::string& id) const {
    const std::string key = "scene:" + id;
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = dims_cache_.find(key);
        if (it != dims_cache_.end()) return it->second;
    }
    const ImageDims dims = probe_dimensions(resolve(scene(id).image_path));
    std::lock_guard<std::mutex> lock(cache_mutex_);
    dims_cache_.emplace(key, dims);
    return dims;
}

std::shared_ptr<const Pool::ObjectArtifacts>
Pool::object_artifacts(const std::string& id) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        const auto it = artifact_cache_.find(id);
        if (it != artifact_cache_.end()) return it->second;
    }
    const ObjectRecord& rec = object(id);
    auto artifacts = std::make_shared<ObjectArtifacts>();
    artifacts->image = load_rgb(resolve(rec.image_path));
    artifacts->alpha = load_alpha(resolve(rec.alpha_path));
    if (artifacts->alpha.width() != artifacts->image.width() ||
        artifacts->alpha.height() != artifacts->image.height())
        throw DimensionMismatch("pool: alpha and image dimensions differ for '" +
                                id + "'");
    std::lock_guard<std::mutex> lock(cache_mutex_);
    return artifact_cache_.emplace(id, std::move(artifacts)).first->second;
}

RgbImage Pool::load_scene_image(const std::string& id) const {
    return load_rgb(resolve(scene(id).image_path));
}

namespace {

struct ScaledDims {
    int w;
    int h;
};

ScaledDims scaled_dims(ImageDims dims, double scale) {
    return {std::max(1, static_cast<int>(std::lround(dims.width * scale))),
            std::max(1, static_cast<int>(std::lround(dims.height * scale)))};
}

void validate_placement_params(const PlacementParams& p) {
    if (!(p.scale_min > 0.0) || p.scale_max < p.scale_min)
        throw ConfigError("placement: need 0 < scale_min <= scale_max");
    if (p.min_objects < 1 || p.max_objects < p.min_objects)
        throw ConfigError("placement: need 1 <= min_objects <= max_objects");
    if (p.margin < 0) throw ConfigError("placement: margin must be >= 0");
    if (p.retries < 0) throw ConfigError("placement: retries must be >= 0");
}

} // namespace

std::vector<SynthJob> sample_jobs(const Pool& pool, int n_images, std::uint64_t seed,
                                  const SynthParams& params) {
    validate_placement_params(params.placement);
    if (n_images < 0) throw ConfigError("n_images must be >= 0");
    const Manifest& manifest = pool.manifest();
    if (manifest.objects.empty() || manifest.scenes.empty())
        throw EmptyPool("sample_jobs: pool needs at least one object and one scene");

    const PlacementParams& pp = params.placement;
    std::vector<SynthJob> jobs;
    jobs.reserve(static_cast<std::size_t>(n_images));

    for (int i = 0; i < n_images; ++i) {
        SynthJob job;
        job.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
        SplitMix64 rng(job.seed);

        const SceneRecord& scene =
            manifest.scenes[rng.next_below(manifest.scenes.size())];
        job.scene_id = scene.id;
        const ImageDims sdims = pool.scene_dims(scene.id);

        const int count =
            pp.min_objects +
            static_cast<int>(rng.next_below(
                static_cast<std::uint64_t>(pp.max_objects - pp.min_objects + 1)));

        for (int p = 0; p < count; ++p) {
            bool placed = false;
            for (int attempt = 0; attempt <= pp.retries && !placed; ++attempt) {
                const ObjectRecord& object =
                    manifest.objects[rng.next_below(manifest.objects.size())];
                const ImageDims odims = pool.object_dims(object.id);

                const double fit =
                    static_cast<double>(std::min(sdims.width, sdims.height)) /
                    std::max(odims.width, odims.height);
                const double scale = rng.next_in(pp.scale_min, pp.scale_max) * fit;
                const ScaledDims placed_dims = scaled_dims(odims, scale);

                const int max_x = sdims.width - pp.margin - placed_dims.w;
                const int max_y = sdims.height - pp.margin - placed_dims.h;
                if (max_x < pp.margin || max_y < pp.margin) continue;

                Placement placement;
                placement.object_id = object.id;
                placement.scale = scale;
                placement.position.x =
                    pp.margin + static_cast<double>(rng.next_below(
                                    static_cast<std::uint64_t>(max_x - pp.margin + 1)));
                placement.position.y =
                    pp.margin + static_cast<double>(rng.next_below(
                                    static_cast<std::uint64_t>(max_y - pp.margin + 1)));

                bool duplicate = false;
                for (const Placement& prev : job.placements)
                    if (prev.position == placement.position) duplicate = true;
                if (duplicate) continue;

                job.placements.push_back(std::move(placement));
                placed = true;
            }
            if (!placed)
                throw PlacementInfeasible(
                    "sample_jobs: no feasible placement in scene '" + scene.id +
                    "' after " + std::to_string(pp.retries + 1) + " attempts");
        }
        jobs.push_back(std::move(job));
    }
    return jobs;
}

SynthResult run_job(const Pool& pool, const SynthJob& job, const SynthParams& params,
                    const fs::path& out_dir) {
    RgbImage scene = pool.load_scene_image(job.scene_id);

    SynthResult result;
    result.seed = job.seed;
    result.scene_id = job.scene_id;
    result.width = scene.width();
    result.height = scene.height();

    for (const Placement& placement : job.placements) {
        const ObjectRecord& record = pool.object(placement.object_id);
        const auto artifacts = pool.object_artifacts(placement.object_id);

        const ScaledDims dims = scaled_dims(
            {artifacts->image.width(), artifacts->image.height()}, placement.scale);
        const RgbImage scaled_image =
            resize_bilinear(artifacts->image, dims.w, dims.h);
        const AlphaMap scaled_alpha =
            resize_bilinear(artifacts->alpha, dims.w, dims.h);

        const int px = static_cast<int>(std::lround(placement.position.x));
        const int py = static_cast<int>(std::lround(placement.position.y));

        RgbImage composite =
            composite_over(scene, scaled_image, scaled_alpha, px, py);

        BlendRegion region;
        region.mask = BinaryMask(scene.width(), scene.height());
        bool any = false;
        for (int y = 0; y < dims.h; ++y) {
            for (int x = 0; x < dims.w; ++x) {
                if (scaled_alpha.at(x, y) > params.blend.alpha_threshold) {
                    region.mask.set(px + x, py + y, true);
                    any = true;
                }
            }
        }
        if (any)
            scene = poisson_blend(scene, composite, region, params.blend.mode,
                                  params.blend.tol, params.blend.max_iter);
        else
            scene = std::move(composite);

        Polygon polygon = outline_to_polygon(record.outline);
        for (Point& v : polygon.vertices) {
            v.x = std::clamp(v.x * placement.scale + placement.position.x, 0.0,
                             static_cast<double>(scene.width()));
            v.y = std::clamp(v.y * placement.scale + placement.position.y, 0.0,
                             static_cast<double>(scene.height()));
        }
        const PolygonMetrics metrics = polygon_metrics(polygon);

        AnnotationRec annotation;
        annotation.polygon = std::move(polygon);
        annotation.bbox = metrics.bbox;
        annotation.area = metrics.area;
        annotation.category = record.category;
        result.annotations.push_back(std::move(annotation));
    }

    result.file_name = std::to_string(job.seed) + "_" + job.scene_id + ".png";
    result.image_path = "images/" + result.file_name;
    fs::create_directories(out_dir / "images");
    save_png(scene, out_dir / "images" / result.file_name);
    return result;
}

std::vector<SynthResult> run_batch(const Pool& pool, const std::vector<SynthJob>& jobs,
                                   const SynthParams& params, const fs::path& out_dir,
                                   int workers,
                                   const std::function<void(int, int)>& progress) {
    const int total = static_cast<int>(jobs.size());
    std::vector<SynthResult> results(jobs.size());
    if (jobs.empty()) return results;

    auto run_one = [&](int i) {
        const SynthJob& job = jobs[static_cast<std::size_t>(i)];
        try {
            results[static_cast<std::size_t>(i)] = run_job(pool, job, params, out_dir);
        } catch (const std::exception& e) {
            throw Error("job " + std::to_string(i) + " (seed " +
                        std::to_string(job.seed) + ", scene " + job.scene_id +
                        "): " + e.what());
        }
    };

    workers = std::clamp(workers, 1, total);
    if (workers == 1) {
        for (int i = 0; i < total; ++i) {
            run_one(i);
            if (progress) progress(i + 1, total);
        }
        return results;
    }

    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= total) return;
            try {
                run_one(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(total); // stop handing out work
                return;
            }
            const int completed = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                progress(completed, total);
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();

    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace sceneforge
