#include <cstring>
#include <set>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sceneforge/coco.hpp"
#include "sceneforge/hash.hpp"
#include "sceneforge/image_io.hpp"
#include "sceneforge/pool.hpp"
#include "sceneforge/synth.hpp"

namespace py = pybind11;
using namespace sceneforge;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

RgbImage image_from_array(const U8Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3)
        throw py::value_error("expected a (height, width, 3) uint8 array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    std::vector<std::uint8_t> data(a.data(), a.data() + static_cast<std::size_t>(h) * w * 3);
    return RgbImage(w, h, std::move(data));
}

py::array image_to_array(const RgbImage& image) {
    py::array_t<std::uint8_t> a({image.height(), image.width(), 3});
    std::memcpy(a.mutable_data(), image.data().data(), image.data().size());
    return a;
}

BinaryMask mask_from_array(const U8Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a (height, width) mask array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    std::vector<std::uint8_t> data(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = a.data()[i] ? 1 : 0;
    return BinaryMask(w, h, std::move(data));
}

py::array mask_to_array(const BinaryMask& mask) {
    py::array_t<bool> a({mask.height(), mask.width()});
    for (std::size_t i = 0; i < mask.data().size(); ++i)
        a.mutable_data()[i] = mask.data()[i] != 0;
    return a;
}

AlphaMap alpha_from_array(const F64Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a (height, width) alpha array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    std::vector<double> data(a.data(), a.data() + static_cast<std::size_t>(h) * w);
    return AlphaMap(w, h, std::move(data));
}

py::array alpha_to_array(const AlphaMap& alpha) {
    py::array_t<double> a({alpha.height(), alpha.width()});
    std::memcpy(a.mutable_data(), alpha.data().data(),
                alpha.data().size() * sizeof(double));
    return a;
}

Trimap trimap_from_array(const U8Array& a) {
    if (a.ndim() != 2)
        throw py::value_error("expected a (height, width) trimap array");
    const int h = static_cast<int>(a.shape(0));
    const int w = static_cast<int>(a.shape(1));
    Trimap trimap(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::uint8_t v = a.data()[static_cast<std::size_t>(y) * w + x];
            TrimapLabel label;
            if (v == 0) label = TrimapLabel::Background;
            else if (v == 128) label = TrimapLabel::Unknown;
            else if (v == 255) label = TrimapLabel::Foreground;
            else throw py::value_error("trimap values must be 0, 128 or 255");
            trimap.set(x, y, label);
        }
    }
    return trimap;
}

py::array trimap_to_array(const Trimap& trimap) {
    py::array_t<std::uint8_t> a({trimap.height(), trimap.width()});
    for (std::size_t i = 0; i < trimap.data().size(); ++i) {
        switch (trimap.data()[i]) {
        case TrimapLabel::Background: a.mutable_data()[i] = 0; break;
        case TrimapLabel::Unknown: a.mutable_data()[i] = 128; break;
        case TrimapLabel::Foreground: a.mutable_data()[i] = 255; break;
        }
    }
    return a;
}

Polygon polygon_from_array(const F64Array& a) {
    if (a.ndim() != 2 || a.shape(1) != 2)
        throw py::value_error("expected an (n, 2) vertex array");
    Polygon poly;
    for (py::ssize_t i = 0; i < a.shape(0); ++i)
        poly.vertices.push_back({a.data()[2 * i], a.data()[2 * i + 1]});
    return poly;
}

py::array polygon_to_array(const Polygon& poly) {
    py::array_t<double> a(
        {static_cast<py::ssize_t>(poly.vertices.size()), py::ssize_t{2}});
    for (std::size_t i = 0; i < poly.vertices.size(); ++i) {
        a.mutable_data()[2 * i] = poly.vertices[i].x;
        a.mutable_data()[2 * i + 1] = poly.vertices[i].y;
    }
    return a;
}

StructuringElement element(const std::string& shape, int radius) {
    if (shape == "square") return {ElementShape::Square, radius};
    if (shape == "disc") return {ElementShape::Disc, radius};
    throw py::value_error("shape must be 'square' or 'disc'");
}

GuidanceMode mode_from_name(const std::string& name) {
    if (name == "source") return GuidanceMode::SourceGradients;
    if (name == "mixed") return GuidanceMode::MixedGradients;
    throw py::value_error("mode must be 'source' or 'mixed'");
}

py::dict outline_to_dict(const PolarOutline& outline) {
    py::dict d;
    d["anchor"] = py::make_tuple(outline.anchor.x, outline.anchor.y);
    d["k"] = outline.k();
    d["d"] = outline.distances;
    return d;
}

py::dict object_record_to_dict(const ObjectRecord& rec) {
    py::dict d;
    d["id"] = rec.id;
    d["category"] = rec.category;
    d["image_path"] = rec.image_path;
    d["mask_path"] = rec.mask_path;
    d["alpha_path"] = rec.alpha_path;
    d["center"] = py::make_tuple(rec.center.x, rec.center.y);
    d["outline"] = outline_to_dict(rec.outline);
    d["mask_incomplete"] = rec.mask_incomplete;
    return d;
}

MattingParams matting_params(int window_radius, double epsilon, double tol,
                             int max_iter) {
    MattingParams params;
    params.window_radius = window_radius;
    params.epsilon = epsilon;
    params.tol = tol;
    params.max_iter = max_iter;
    return params;
}

} // namespace

PYBIND11_MODULE(_sceneforge, m) {
    m.doc() = "deterministic synthesis of labeled object-in-scene images";

    py::register_exception<Error>(m, "SceneForgeError");

    m.def(
        "erode",
        [](const U8Array& mask, int radius, const std::string& shape) {
            return mask_to_array(erode(mask_from_array(mask), element(shape, radius)));
        },
        py::arg("mask"), py::arg("radius"), py::arg("shape") = "square");

    m.def(
        "dilate",
        [](const U8Array& mask, int radius, const std::string& shape) {
            return mask_to_array(dilate(mask_from_array(mask), element(shape, radius)));
        },
        py::arg("mask"), py::arg("radius"), py::arg("shape") = "square");

    m.def(
        "make_trimap",
        [](const U8Array& mask, int erode_radius, int dilate_radius,
           const std::string& shape) {
            return trimap_to_array(make_trimap(mask_from_array(mask),
                                               element(shape, erode_radius),
                                               element(shape, dilate_radius)));
        },
        py::arg("mask"), py::arg("erode_radius") = 3, py::arg("dilate_radius") = 3,
        py::arg("shape") = "square");

    m.def(
        "mass_center",
        [](const U8Array& mask) {
            const Point c = mass_center(mask_from_array(mask));
            return py::make_tuple(c.x, c.y);
        },
        py::arg("mask"));

    m.def(
        "ray_distances",
        [](const U8Array& mask, py::object anchor, int k) {
            const BinaryMask m = mask_from_array(mask);
            Point a;
            if (anchor.is_none()) {
                a = mass_center(m);
            } else {
                const auto t = anchor.cast<std::pair<double, double>>();
                a = {t.first, t.second};
            }
            return outline_to_dict(ray_distances(m, a, k));
        },
        py::arg("mask"), py::arg("anchor") = py::none(), py::arg("k") = 16);

    m.def(
        "jittered_samples",
        [](const U8Array& mask, std::pair<double, double> center, double jitter_radius,
           int n, std::uint64_t seed, int k) {
            const BinaryMask m = mask_from_array(mask);
            SplitMix64 rng(seed);
            py::list out;
            for (const PolarOutline& outline : jittered_samples(
                     m, {center.first, center.second}, jitter_radius, n, rng, k))
                out.append(outline_to_dict(outline));
            return out;
        },
        py::arg("mask"), py::arg("center"), py::arg("jitter_radius"), py::arg("n"),
        py::arg("seed"), py::arg("k") = 16);

    m.def(
        "outline_to_polygon",
        [](std::pair<double, double> anchor, const std::vector<double>& d) {
            PolarOutline outline;
            outline.anchor = {anchor.first, anchor.second};
            outline.distances = d;
            return polygon_to_array(outline_to_polygon(outline));
        },
        py::arg("anchor"), py::arg("d"));

    m.def(
        "rasterize_polygon",
        [](const F64Array& vertices, int width, int height) {
            return mask_to_array(
                rasterize_polygon(polygon_from_array(vertices), width, height));
        },
        py::arg("vertices"), py::arg("width"), py::arg("height"));

    m.def(
        "point_in_polygon",
        [](const F64Array& vertices, double x, double y) {
            return point_in_polygon(polygon_from_array(vertices), {x, y});
        },
        py::arg("vertices"), py::arg("x"), py::arg("y"));

    m.def(
        "polygon_metrics",
        [](const F64Array& vertices) {
            const PolygonMetrics metrics = polygon_metrics(polygon_from_array(vertices));
            return py::make_tuple(py::make_tuple(metrics.bbox[0], metrics.bbox[1],
                                                 metrics.bbox[2], metrics.bbox[3]),
                                  metrics.area);
        },
        py::arg("vertices"));

    m.def(
        "solve_alpha",
        [](const U8Array& image, const U8Array& trimap, int window_radius,
           double epsilon, double tol, int max_iter) {
            return alpha_to_array(
                solve_alpha(image_from_array(image), trimap_from_array(trimap),
                            matting_params(window_radius, epsilon, tol, max_iter)));
        },
        py::arg("image"), py::arg("trimap"), py::arg("window_radius") = 1,
        py::arg("epsilon") = 1e-7, py::arg("tol") = 1e-6, py::arg("max_iter") = 0);

    m.def(
        "poisson_blend",
        [](const U8Array& target, const U8Array& source, const U8Array& region,
           std::pair<int, int> offset, const std::string& mode, double tol,
           int max_iter) {
            BlendRegion blend_region;
            blend_region.mask = mask_from_array(region);
            blend_region.offset_x = offset.first;
            blend_region.offset_y = offset.second;
            return image_to_array(poisson_blend(image_from_array(target),
                                                image_from_array(source), blend_region,
                                                mode_from_name(mode), tol, max_iter));
        },
        py::arg("target"), py::arg("source"), py::arg("region"),
        py::arg("offset") = std::pair<int, int>{0, 0}, py::arg("mode") = "mixed",
        py::arg("tol") = 1e-6, py::arg("max_iter") = 0);

    m.def(
        "composite_over",
        [](const U8Array& scene, const U8Array& object, const F64Array& alpha, int x,
           int y) {
            return image_to_array(composite_over(image_from_array(scene),
                                                 image_from_array(object),
                                                 alpha_from_array(alpha), x, y));
        },
        py::arg("scene"), py::arg("object"), py::arg("alpha"), py::arg("x"),
        py::arg("y"));

    m.def(
        "resize_image",
        [](const U8Array& image, int width, int height) {
            return image_to_array(resize_bilinear(image_from_array(image), width, height));
        },
        py::arg("image"), py::arg("width"), py::arg("height"));

    m.def(
        "resize_alpha",
        [](const F64Array& alpha, int width, int height) {
            return alpha_to_array(resize_bilinear(alpha_from_array(alpha), width, height));
        },
        py::arg("alpha"), py::arg("width"), py::arg("height"));

    m.def(
        "load_rgb",
        [](const std::filesystem::path& path) { return image_to_array(load_rgb(path)); },
        py::arg("path"));
    m.def(
        "load_mask",
        [](const std::filesystem::path& path) { return mask_to_array(load_mask(path)); },
        py::arg("path"));
    m.def(
        "load_alpha",
        [](const std::filesystem::path& path) { return alpha_to_array(load_alpha(path)); },
        py::arg("path"));
    m.def(
        "load_trimap",
        [](const std::filesystem::path& path) {
            return trimap_to_array(load_trimap(path));
        },
        py::arg("path"));
    m.def(
        "save_rgb_png",
        [](const U8Array& image, const std::filesystem::path& path) {
            save_png(image_from_array(image), path);
        },
        py::arg("image"), py::arg("path"));
    m.def(
        "save_mask_png",
        [](const U8Array& mask, const std::filesystem::path& path) {
            save_png(mask_from_array(mask), path);
        },
        py::arg("mask"), py::arg("path"));
    m.def(
        "save_alpha_png",
        [](const F64Array& alpha, const std::filesystem::path& path, int bit_depth) {
            save_png(alpha_from_array(alpha), path, bit_depth);
        },
        py::arg("alpha"), py::arg("path"), py::arg("bit_depth") = 16);
    m.def(
        "save_trimap_png",
        [](const U8Array& trimap, const std::filesystem::path& path) {
            save_png(trimap_from_array(trimap), path);
        },
        py::arg("trimap"), py::arg("path"));
    m.def(
        "save_jpeg",
        [](const U8Array& image, const std::filesystem::path& path, int quality) {
            save_jpeg(image_from_array(image), path, quality);
        },
        py::arg("image"), py::arg("path"), py::arg("quality") = 95);

    m.def("sha256_file", &sha256_file, py::arg("path"));
    m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("index"));

    m.def(
        "ingest_object",
        [](const std::filesystem::path& pool_dir, const std::filesystem::path& image,
           const std::filesystem::path& mask, const std::string& category,
           int directions, int erode_radius, int dilate_radius, const std::string& shape,
           double incomplete_iou, int window_radius, double epsilon, double tol,
           int max_iter) {
            IngestParams params;
            params.directions = directions;
            params.erode_se = element(shape, erode_radius);
            params.dilate_se = element(shape, dilate_radius);
            params.matting = matting_params(window_radius, epsilon, tol, max_iter);
            params.incomplete_iou = incomplete_iou;
            return object_record_to_dict(
                ingest_object(pool_dir, image, mask, category, params));
        },
        py::arg("pool_dir"), py::arg("image"), py::arg("mask"), py::arg("category"),
        py::arg("directions") = 16, py::arg("erode_radius") = 3,
        py::arg("dilate_radius") = 3, py::arg("shape") = "square",
        py::arg("incomplete_iou") = 0.9, py::arg("window_radius") = 1,
        py::arg("epsilon") = 1e-7, py::arg("tol") = 1e-6, py::arg("max_iter") = 0);

    m.def(
        "ingest_scene",
        [](const std::filesystem::path& pool_dir, const std::filesystem::path& image,
           const std::string& label) {
            const SceneRecord rec = ingest_scene(pool_dir, image, label);
            py::dict d;
            d["id"] = rec.id;
            d["image_path"] = rec.image_path;
            d["label"] = rec.label;
            return d;
        },
        py::arg("pool_dir"), py::arg("image"), py::arg("label"));

    m.def(
        "write_manifest",
        [](const std::filesystem::path& pool_dir, const py::list& objects,
           const py::list& scenes) {
            // records as returned by ingest_object / ingest_scene
            Manifest manifest;
            for (const auto& item : objects) {
                const py::dict d = item.cast<py::dict>();
                ObjectRecord rec;
                rec.id = d["id"].cast<std::string>();
                rec.category = d["category"].cast<std::string>();
                rec.image_path = d["image_path"].cast<std::string>();
                rec.mask_path = d["mask_path"].cast<std::string>();
                rec.alpha_path = d["alpha_path"].cast<std::string>();
                const auto center = d["center"].cast<std::pair<double, double>>();
                rec.center = {center.first, center.second};
                const py::dict o = d["outline"].cast<py::dict>();
                const auto anchor = o["anchor"].cast<std::pair<double, double>>();
                rec.outline.anchor = {anchor.first, anchor.second};
                rec.outline.distances = o["d"].cast<std::vector<double>>();
                rec.mask_incomplete = d["mask_incomplete"].cast<bool>();
                manifest.objects.push_back(std::move(rec));
            }
            for (const auto& item : scenes) {
                const py::dict d = item.cast<py::dict>();
                SceneRecord rec;
                rec.id = d["id"].cast<std::string>();
                rec.image_path = d["image_path"].cast<std::string>();
                rec.label = d["label"].cast<std::string>();
                manifest.scenes.push_back(std::move(rec));
            }
            save_manifest(manifest, pool_dir / "manifest.json");
        },
        py::arg("pool_dir"), py::arg("objects"), py::arg("scenes"));

    m.def(
        "synthesize",
        [](const std::filesystem::path& pool_dir, const std::filesystem::path& out_dir,
           int n, std::uint64_t seed, int workers, double scale_min, double scale_max,
           int min_objects, int max_objects, int margin, int retries,
           const std::string& mode, double alpha_threshold, double tol, int max_iter) {
            const Pool pool = Pool::open(pool_dir);
            SynthParams params;
            params.placement.scale_min = scale_min;
            params.placement.scale_max = scale_max;
            params.placement.min_objects = min_objects;
            params.placement.max_objects = max_objects;
            params.placement.margin = margin;
            params.placement.retries = retries;
            params.blend.mode = mode_from_name(mode);
            params.blend.alpha_threshold = alpha_threshold;
            params.blend.tol = tol;
            params.blend.max_iter = max_iter;

            const auto jobs = sample_jobs(pool, n, seed, params);
            std::vector<SynthResult> results;
            {
                py::gil_scoped_release release;
                results = run_batch(pool, jobs, params, out_dir, workers, {});
            }

            std::set<std::string> names;
            for (const ObjectRecord& record : pool.manifest().objects)
                names.insert(record.category);
            const coco::Dataset dataset = coco::build_dataset(
                results, std::vector<std::string>(names.begin(), names.end()));
            const std::string bytes = coco::serialize(dataset);
            write_file_atomic(out_dir / "annotations.json", bytes.data(), bytes.size());
            return bytes;
        },
        py::arg("pool_dir"), py::arg("out_dir"), py::arg("n"), py::arg("seed"),
        py::arg("workers") = 1, py::arg("scale_min") = 0.2, py::arg("scale_max") = 0.7,
        py::arg("min_objects") = 1, py::arg("max_objects") = 3, py::arg("margin") = 2,
        py::arg("retries") = 3, py::arg("mode") = "mixed",
        py::arg("alpha_threshold") = 0.05, py::arg("tol") = 1e-6,
        py::arg("max_iter") = 0);

    m.def(
        "coco_stats",
        [](const std::string& text) {
            const coco::Dataset dataset = coco::parse(text);
            py::dict d;
            d["images"] = dataset.images.size();
            d["annotations"] = dataset.annotations.size();
            d["categories"] = dataset.categories.size();
            return d;
        },
        py::arg("text"), "parse + validate COCO JSON, returning section counts");
}
