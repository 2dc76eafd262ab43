#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sceneforge/coco.hpp"
#include "sceneforge/hash.hpp"
#include "sceneforge/image_io.hpp"
#include "sceneforge/pool.hpp"
#include "sceneforge/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sceneforge;

namespace {

struct Options {
    int directions = 16;
    int erode_radius = 3;
    int dilate_radius = 3;
    std::string shape = "square";
    double epsilon = 1e-7;
    int window_radius = 1;
    double tol = 1e-6;
    int max_iter = 0;
    double incomplete_iou = 0.9;
    std::string blend_mode = "mixed";
    double alpha_threshold = 0.05;
    double scale_min = 0.2;
    double scale_max = 0.7;
    int min_objects = 1;
    int max_objects = 3;
    int margin = 2;
    int retries = 3;
    int n = 0;
    std::uint64_t seed = 0;
    int workers = 0; // 0 = all cores
    bool workers_in_config = false;
    bool log_json = false;
};

ElementShape parse_shape(const std::string& name) {
    if (name == "square") return ElementShape::Square;
    if (name == "disc") return ElementShape::Disc;
    throw ConfigError("shape must be 'square' or 'disc', got '" + name + "'");
}

GuidanceMode parse_mode(const std::string& name) {
    if (name == "source") return GuidanceMode::SourceGradients;
    if (name == "mixed") return GuidanceMode::MixedGradients;
    throw ConfigError("blend mode must be 'source' or 'mixed', got '" + name + "'");
}

MattingParams matting_params(const Options& o) {
    MattingParams params;
    params.window_radius = o.window_radius;
    params.epsilon = o.epsilon;
    params.tol = o.tol;
    params.max_iter = o.max_iter;
    return params;
}

IngestParams ingest_params(const Options& o) {
    IngestParams params;
    params.directions = o.directions;
    params.erode_se = {parse_shape(o.shape), o.erode_radius};
    params.dilate_se = {parse_shape(o.shape), o.dilate_radius};
    params.matting = matting_params(o);
    params.incomplete_iou = o.incomplete_iou;
    return params;
}

SynthParams synth_params(const Options& o) {
    SynthParams params;
    params.placement.scale_min = o.scale_min;
    params.placement.scale_max = o.scale_max;
    params.placement.min_objects = o.min_objects;
    params.placement.max_objects = o.max_objects;
    params.placement.margin = o.margin;
    params.placement.retries = o.retries;
    params.blend.mode = parse_mode(o.blend_mode);
    params.blend.alpha_threshold = o.alpha_threshold;
    params.blend.tol = o.tol;
    params.blend.max_iter = o.max_iter;
    return params;
}

void apply_config(Options& o, const fs::path& path) {
    json j;
    try {
        const auto bytes = read_file(path);
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    auto num = [&](const char* key, auto& out) {
        if (!j[key].is_number())
            throw ConfigError(std::string("config key '") + key + "' must be a number");
        out = j[key].get<std::decay_t<decltype(out)>>();
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "directions") num("directions", o.directions);
        else if (key == "erode_radius") num("erode_radius", o.erode_radius);
        else if (key == "dilate_radius") num("dilate_radius", o.dilate_radius);
        else if (key == "shape") {
            if (!value.is_string()) throw ConfigError("config key 'shape' must be a string");
            o.shape = value.get<std::string>();
            parse_shape(o.shape);
        } else if (key == "epsilon") num("epsilon", o.epsilon);
        else if (key == "window_radius") num("window_radius", o.window_radius);
        else if (key == "tol") num("tol", o.tol);
        else if (key == "max_iter") num("max_iter", o.max_iter);
        else if (key == "incomplete_iou") num("incomplete_iou", o.incomplete_iou);
        else if (key == "blend_mode") {
            if (!value.is_string())
                throw ConfigError("config key 'blend_mode' must be a string");
            o.blend_mode = value.get<std::string>();
            parse_mode(o.blend_mode);
        } else if (key == "alpha_threshold") num("alpha_threshold", o.alpha_threshold);
        else if (key == "scale_min") num("scale_min", o.scale_min);
        else if (key == "scale_max") num("scale_max", o.scale_max);
        else if (key == "min_objects") num("min_objects", o.min_objects);
        else if (key == "max_objects") num("max_objects", o.max_objects);
        else if (key == "margin") num("margin", o.margin);
        else if (key == "retries") num("retries", o.retries);
        else if (key == "n") num("n", o.n);
        else if (key == "seed") num("seed", o.seed);
        else if (key == "workers") {
            num("workers", o.workers);
            o.workers_in_config = true;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

int resolve_workers(const Options& o, bool flag_given) {
    int workers = 0;
    if (flag_given) {
        workers = o.workers;
    } else if (const char* env = std::getenv("SCENEFORGE_THREADS")) {
        try {
            workers = std::stoi(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("SCENEFORGE_THREADS is not a number: '") +
                              env + "'");
        }
    } else if (o.workers_in_config) {
        workers = o.workers;
    }
    if (workers <= 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    return workers;
}

void upsert_object(Manifest& manifest, ObjectRecord record) {
    for (ObjectRecord& existing : manifest.objects) {
        if (existing.id == record.id) {
            existing = std::move(record);
            return;
        }
    }
    manifest.objects.push_back(std::move(record));
}

void upsert_scene(Manifest& manifest, SceneRecord record) {
    for (SceneRecord& existing : manifest.scenes) {
        if (existing.id == record.id) {
            existing = std::move(record);
            return;
        }
    }
    manifest.scenes.push_back(std::move(record));
}

Manifest open_or_create_manifest(const fs::path& pool_dir) {
    const fs::path path = pool_dir / "manifest.json";
    if (fs::exists(path)) return load_manifest(path);
    return Manifest{};
}

int run_validate(const fs::path& dir) {
    coco::Dataset dataset;
    try {
        const auto bytes = read_file(dir / "annotations.json");
        dataset = coco::parse(std::string(bytes.begin(), bytes.end()));
    } catch (const Error& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return 1;
    }

    std::map<int, const coco::Image*> images_by_id;
    for (const coco::Image& image : dataset.images) {
        const fs::path path = dir / "images" / image.file_name;
        if (!fs::exists(path)) {
            std::cerr << "validate: missing image file " << path.string() << "\n";
            return 1;
        }
        ImageDims dims;
        try {
            dims = probe_dimensions(path);
        } catch (const Error& e) {
            std::cerr << "validate: " << e.what() << "\n";
            return 1;
        }
        if (dims.width != image.width || dims.height != image.height) {
            std::cerr << "validate: " << path.string() << " is " << dims.width << "x"
                      << dims.height << " but annotations say " << image.width << "x"
                      << image.height << "\n";
            return 1;
        }
        images_by_id.emplace(image.id, &image);
    }

    for (const coco::Annotation& annotation : dataset.annotations) {
        const coco::Image& image = *images_by_id.at(annotation.image_id);
        const std::string where =
            "annotation " + std::to_string(annotation.id) + " in " + image.file_name;

        double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
        bool first = true;
        for (const auto& ring : annotation.segmentation) {
            for (std::size_t i = 0; i + 1 < ring.size(); i += 2) {
                const double x = ring[i], y = ring[i + 1];
                if (first || x < min_x) min_x = x;
                if (first || y < min_y) min_y = y;
                if (first || x > max_x) max_x = x;
                if (first || y > max_y) max_y = y;
                first = false;
            }
        }
        const std::array<double, 4> expected = {min_x, min_y, max_x - min_x,
                                                max_y - min_y};
        if (annotation.bbox != expected) {
            std::cerr << "validate: " << where << ": bbox does not equal polygon "
                      << "min/max\n";
            return 1;
        }
        if (min_x < 0 || min_y < 0 || max_x > image.width || max_y > image.height) {
            std::cerr << "validate: " << where << ": polygon leaves image bounds\n";
            return 1;
        }
        if (!(annotation.area > 0)) {
            std::cerr << "validate: " << where << ": area must be positive\n";
            return 1;
        }
    }

    std::cout << "validate: OK (" << dataset.images.size() << " images, "
              << dataset.annotations.size() << " annotations, "
              << dataset.categories.size() << " categories)\n";
    return 0;
}

int run(int argc, char** argv) {
    Options opt;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) apply_config(opt, argv[i + 1]);
        else if (arg.rfind("--config=", 0) == 0) apply_config(opt, arg.substr(9));
    }

    CLI::App app{"synthesizes labeled object-in-scene images from an object pool"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file; explicit flags override its values");
    app.add_flag("--log-json", opt.log_json,
                 "progress and summaries as JSON lines on stderr");

    fs::path pool_dir, out_path, image_path, mask_path, trimap_path, target_path,
        source_path, region_path, dir_path;
    std::vector<std::string> image_list, mask_list, category_list, scene_list;
    std::string label;
    double anchor_x = 0.0, anchor_y = 0.0;
    int offset_x = 0, offset_y = 0;

    auto add_matting_flags = [&](CLI::App* cmd) {
        cmd->add_option("--epsilon", opt.epsilon, "matting regularizer")
            ->capture_default_str();
        cmd->add_option("--window-radius", opt.window_radius,
                        "matting window radius in pixels")
            ->capture_default_str();
        cmd->add_option("--tol", opt.tol, "solver relative-residual target")
            ->capture_default_str();
        cmd->add_option("--max-iter", opt.max_iter, "solver iteration cap (0 = 10n)")
            ->capture_default_str();
    };
    auto add_trimap_flags = [&](CLI::App* cmd) {
        cmd->add_option("--erode-radius", opt.erode_radius,
                        "foreground erosion radius")
            ->capture_default_str();
        cmd->add_option("--dilate-radius", opt.dilate_radius,
                        "background dilation radius")
            ->capture_default_str();
        cmd->add_option("--shape", opt.shape, "structuring element shape")
            ->check(CLI::IsMember({"square", "disc"}))
            ->capture_default_str();
    };

    CLI::App* ingest_objects =
        app.add_subcommand("ingest-objects",
                           "ingest object photos with rough masks into a pool");
    ingest_objects->add_option("--pool", pool_dir, "pool directory")->required();
    ingest_objects->add_option("--image", image_list, "object photo (repeatable)")
        ->required();
    ingest_objects->add_option("--mask", mask_list, "rough mask PNG, one per image")
        ->required();
    ingest_objects
        ->add_option("--category", category_list,
                     "category name, one per image or one for all")
        ->required();
    ingest_objects->add_option("--k", opt.directions, "outline direction count")
        ->capture_default_str();
    ingest_objects
        ->add_option("--incomplete-iou", opt.incomplete_iou,
                     "outline-vs-mask IoU below this flags the mask")
        ->capture_default_str();
    add_trimap_flags(ingest_objects);
    add_matting_flags(ingest_objects);

    CLI::App* ingest_scenes =
        app.add_subcommand("ingest-scenes", "ingest scene images into a pool");
    ingest_scenes->add_option("--pool", pool_dir, "pool directory")->required();
    ingest_scenes->add_option("--label", label, "scene category label")->required();
    ingest_scenes->add_option("images", scene_list, "scene image files")->required();

    CLI::App* outline_cmd =
        app.add_subcommand("outline", "compute a polar outline from a mask");
    outline_cmd->add_option("--mask", mask_path, "mask PNG")->required();
    outline_cmd->add_option("--out", out_path, "output outline JSON")->required();
    outline_cmd->add_option("--k", opt.directions, "direction count")
        ->capture_default_str();
    CLI::Option* ax = outline_cmd->add_option(
        "--anchor-x", anchor_x, "anchor x (default: mass center)");
    CLI::Option* ay = outline_cmd->add_option(
        "--anchor-y", anchor_y, "anchor y (default: mass center)");

    CLI::App* trimap_cmd =
        app.add_subcommand("trimap", "build a trimap PNG from a mask");
    trimap_cmd->add_option("--mask", mask_path, "mask PNG")->required();
    trimap_cmd->add_option("--out", out_path, "output trimap PNG")->required();
    add_trimap_flags(trimap_cmd);

    CLI::App* matte_cmd =
        app.add_subcommand("matte", "solve an alpha matte from image + trimap");
    matte_cmd->add_option("--image", image_path, "RGB image")->required();
    matte_cmd->add_option("--trimap", trimap_path, "trimap PNG (0/128/255)")
        ->required();
    matte_cmd->add_option("--out", out_path, "output 16-bit alpha PNG")->required();
    add_matting_flags(matte_cmd);

    CLI::App* blend_cmd =
        app.add_subcommand("blend", "Poisson-blend a source into a target");
    blend_cmd->add_option("--target", target_path, "target image")->required();
    blend_cmd->add_option("--source", source_path, "source image")->required();
    blend_cmd->add_option("--region", region_path, "region mask PNG (target space)")
        ->required();
    blend_cmd->add_option("--out", out_path, "output PNG")->required();
    blend_cmd->add_option("--mode", opt.blend_mode, "guidance mode")
        ->check(CLI::IsMember({"source", "mixed"}))
        ->capture_default_str();
    blend_cmd->add_option("--offset-x", offset_x, "source x offset in target")
        ->capture_default_str();
    blend_cmd->add_option("--offset-y", offset_y, "source y offset in target")
        ->capture_default_str();
    blend_cmd->add_option("--tol", opt.tol, "solver relative-residual target")
        ->capture_default_str();
    blend_cmd->add_option("--max-iter", opt.max_iter, "solver iteration cap (0 = 10n)")
        ->capture_default_str();

    CLI::App* synth_cmd =
        app.add_subcommand("synth", "synthesize a labeled image batch");
    synth_cmd->add_option("--pool", pool_dir, "pool directory")->required();
    synth_cmd->add_option("--out", out_path, "output directory")->required();
    synth_cmd->add_option("--n", opt.n, "number of images")->required();
    synth_cmd->add_option("--seed", opt.seed, "base seed")->capture_default_str();
    CLI::Option* workers_flag =
        synth_cmd->add_option("--workers", opt.workers,
                              "worker threads (0 = all cores; SCENEFORGE_THREADS "
                              "overrides the default)");
    synth_cmd->add_option("--scale-min", opt.scale_min, "relative scale lower bound")
        ->capture_default_str();
    synth_cmd->add_option("--scale-max", opt.scale_max, "relative scale upper bound")
        ->capture_default_str();
    synth_cmd->add_option("--min-objects", opt.min_objects, "objects per image, min")
        ->capture_default_str();
    synth_cmd->add_option("--max-objects", opt.max_objects, "objects per image, max")
        ->capture_default_str();
    synth_cmd->add_option("--margin", opt.margin, "border margin in pixels")
        ->capture_default_str();
    synth_cmd->add_option("--retries", opt.retries, "placement redraws before failing")
        ->capture_default_str();
    synth_cmd->add_option("--blend-mode", opt.blend_mode, "guidance mode")
        ->check(CLI::IsMember({"source", "mixed"}))
        ->capture_default_str();
    synth_cmd
        ->add_option("--alpha-threshold", opt.alpha_threshold,
                     "blend region = placed alpha above this")
        ->capture_default_str();
    synth_cmd->add_option("--tol", opt.tol, "solver relative-residual target")
        ->capture_default_str();
    synth_cmd->add_option("--max-iter", opt.max_iter, "solver iteration cap (0 = 10n)")
        ->capture_default_str();

    CLI::App* validate_cmd = app.add_subcommand(
        "validate", "re-check an output directory against its annotations");
    validate_cmd->add_option("--dir", dir_path, "synth output directory")->required();

    // global flags stay usable after the subcommand name
    for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (app.got_subcommand(ingest_objects)) {
        if (mask_list.size() != image_list.size())
            throw ConfigError("need exactly one --mask per --image");
        if (category_list.size() != 1 && category_list.size() != image_list.size())
            throw ConfigError("need one --category per image, or a single one");
        Manifest manifest = open_or_create_manifest(pool_dir);
        const IngestParams params = ingest_params(opt);
        for (std::size_t i = 0; i < image_list.size(); ++i) {
            const std::string& category =
                category_list.size() == 1 ? category_list[0] : category_list[i];
            upsert_object(manifest, ingest_object(pool_dir, image_list[i],
                                                  mask_list[i], category, params));
        }
        save_manifest(manifest, pool_dir / "manifest.json");
        std::cout << "ingested " << image_list.size() << " objects; pool now has "
                  << manifest.objects.size() << "\n";
        return 0;
    }

    if (app.got_subcommand(ingest_scenes)) {
        Manifest manifest = open_or_create_manifest(pool_dir);
        for (const std::string& path : scene_list)
            upsert_scene(manifest, ingest_scene(pool_dir, path, label));
        save_manifest(manifest, pool_dir / "manifest.json");
        std::cout << "ingested " << scene_list.size() << " scenes; pool now has "
                  << manifest.scenes.size() << "\n";
        return 0;
    }

    if (app.got_subcommand(outline_cmd)) {
        const BinaryMask mask = load_mask(mask_path);
        Point anchor;
        if (ax->count() || ay->count()) {
            if (!ax->count() || !ay->count())
                throw ConfigError("--anchor-x and --anchor-y must be given together");
            anchor = {anchor_x, anchor_y};
        } else {
            anchor = mass_center(mask);
        }
        const PolarOutline outline = ray_distances(mask, anchor, opt.directions);
        const std::string text = outline_to_json(outline).dump(2) + "\n";
        write_file_atomic(out_path, text.data(), text.size());
        return 0;
    }

    if (app.got_subcommand(trimap_cmd)) {
        const BinaryMask mask = load_mask(mask_path);
        const Trimap trimap =
            make_trimap(mask, {parse_shape(opt.shape), opt.erode_radius},
                        {parse_shape(opt.shape), opt.dilate_radius});
        save_png(trimap, out_path);
        return 0;
    }

    if (app.got_subcommand(matte_cmd)) {
        const RgbImage image = load_rgb(image_path);
        const Trimap trimap = load_trimap(trimap_path);
        const AlphaMap alpha = solve_alpha(image, trimap, matting_params(opt));
        save_png(alpha, out_path, 16);
        return 0;
    }

    if (app.got_subcommand(blend_cmd)) {
        const RgbImage target = load_rgb(target_path);
        const RgbImage source = load_rgb(source_path);
        BlendRegion region;
        region.mask = load_mask(region_path);
        region.offset_x = offset_x;
        region.offset_y = offset_y;
        const RgbImage out = poisson_blend(target, source, region,
                                           parse_mode(opt.blend_mode), opt.tol,
                                           opt.max_iter);
        save_png(out, out_path);
        return 0;
    }

    if (app.got_subcommand(synth_cmd)) {
        const Pool pool = Pool::open(pool_dir);
        const SynthParams params = synth_params(opt);
        const std::vector<SynthJob> jobs = sample_jobs(pool, opt.n, opt.seed, params);
        const int workers = resolve_workers(opt, workers_flag->count() > 0);

        auto progress = [&](int done, int total) {
            if (done % 100 != 0 && done != total) return;
            if (opt.log_json)
                std::cerr << json{{"event", "progress"}, {"done", done},
                                  {"total", total}}
                                 .dump()
                          << "\n";
            else
                std::cerr << "synth: " << done << "/" << total << " images\n";
        };

        const auto start = std::chrono::steady_clock::now();
        const std::vector<SynthResult> results =
            run_batch(pool, jobs, params, out_path, workers, progress);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();

        std::set<std::string> names;
        for (const ObjectRecord& record : pool.manifest().objects)
            names.insert(record.category);
        const coco::Dataset dataset = coco::build_dataset(
            results, std::vector<std::string>(names.begin(), names.end()));
        const std::string bytes = coco::serialize(dataset);
        write_file_atomic(out_path / "annotations.json", bytes.data(), bytes.size());

        const double rate = seconds > 0 ? results.size() / seconds : 0.0;
        if (opt.log_json)
            std::cerr << json{{"event", "done"},
                              {"images", results.size()},
                              {"workers", workers},
                              {"seconds", seconds},
                              {"images_per_second", rate}}
                             .dump()
                      << "\n";
        else
            std::cerr << "synth: wrote " << results.size() << " images with "
                      << workers << " workers in " << seconds << " s (" << rate
                      << " images/s)\n";
        std::cout << (out_path / "annotations.json").string() << "\n";
        return 0;
    }

    if (app.got_subcommand(validate_cmd)) return run_validate(dir_path);
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
