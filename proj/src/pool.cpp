#include "sceneforge/pool.hpp"

#include <deque>

#include "sceneforge/hash.hpp"
#include "sceneforge/image_io.hpp"

namespace sceneforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kIdLength = 12;

const json& require_field(const json& j, const char* key, const std::string& loc) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ParseError(std::string("missing field '") + key + "'", loc);
    return *it;
}

std::string require_string(const json& j, const char* key, const std::string& loc) {
    const json& v = require_field(j, key, loc);
    if (!v.is_string())
        throw ParseError(std::string("field '") + key + "' must be a string", loc);
    return v.get<std::string>();
}

bool require_bool(const json& j, const char* key, const std::string& loc) {
    const json& v = require_field(j, key, loc);
    if (!v.is_boolean())
        throw ParseError(std::string("field '") + key + "' must be a boolean", loc);
    return v.get<bool>();
}

Point point_from_json(const json& v, const std::string& loc) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ParseError("expected [x, y]", loc);
    return {v[0].get<double>(), v[1].get<double>()};
}

json point_to_json(Point p) { return json::array({p.x, p.y}); }

json strip_known(const json& j, std::initializer_list<const char*> keys) {
    json extra = j;
    for (const char* key : keys) extra.erase(key);
    return extra;
}

} // namespace

BinaryMask largest_component(const BinaryMask& mask) {
    if (!mask.any()) throw EmptyMask("largest_component: mask is empty");

    const int w = mask.width(), h = mask.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    BinaryMask best;
    std::size_t best_count = 0;

    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            if (!mask.at(sx, sy) || seen[static_cast<std::size_t>(sy) * w + sx])
                continue;
            BinaryMask component(w, h);
            std::size_t count = 0;
            seen[static_cast<std::size_t>(sy) * w + sx] = 1;
            queue.emplace_back(sx, sy);
            while (!queue.empty()) {
                const auto [x, y] = queue.front();
                queue.pop_front();
                component.set(x, y, true);
                ++count;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = x + dx, ny = y + dy;
                        if ((dx == 0 && dy == 0) || !mask.in_bounds(nx, ny)) continue;
                        std::uint8_t& mark = seen[static_cast<std::size_t>(ny) * w + nx];
                        if (mark || !mask.at(nx, ny)) continue;
                        mark = 1;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            // ties keep the first component in scanline order
            if (count > best_count) {
                best_count = count;
                best = std::move(component);
            }
        }
    }
    return best;
}

ObjectRecord ingest_object(const fs::path& pool_dir, const fs::path& image_path,
                           const fs::path& mask_path, const std::string& category,
                           const IngestParams& params) {
    const auto image_bytes = read_file(image_path);
    const auto mask_bytes = read_file(mask_path);

    const RgbImage image = load_rgb(image_path);
    const BinaryMask mask = load_mask(mask_path);
    if (mask.width() != image.width() || mask.height() != image.height())
        throw DimensionMismatch("ingest: image and mask dimensions differ");

    const BinaryMask component = largest_component(mask);
    const Point center = mass_center(component);
    const PolarOutline outline = ray_distances(component, center, params.directions);

    const BinaryMask rasterized = rasterize_polygon(
        outline_to_polygon(outline), mask.width(), mask.height());
    const bool incomplete =
        mask_iou(rasterized, component) < params.incomplete_iou;

    // Incomplete masks get a wider unknown band so matting can recover the
    // missing parts.
    StructuringElement erode_se = params.erode_se;
    StructuringElement dilate_se = params.dilate_se;
    if (incomplete) {
        erode_se.radius *= 2;
        dilate_se.radius *= 2;
    }
    Trimap trimap = make_trimap(component, erode_se, dilate_se);
    while (trimap.count(TrimapLabel::Foreground) == 0 && erode_se.radius > 0) {
        --erode_se.radius;
        trimap = make_trimap(component, erode_se, dilate_se);
    }

    const AlphaMap alpha = solve_alpha(image, trimap, params.matting);

    std::vector<std::uint8_t> hashed(image_bytes);
    hashed.insert(hashed.end(), mask_bytes.begin(), mask_bytes.end());
    const std::string id = sha256_hex(hashed).substr(0, kIdLength);

    const fs::path object_dir = pool_dir / "objects" / id;
    fs::create_directories(object_dir);
    save_png(image, object_dir / "image.png");
    save_png(component, object_dir / "mask.png");
    save_png(alpha, object_dir / "alpha.png", 16);

    ObjectRecord record;
    record.id = id;
    record.category = category;
    record.image_path = "objects/" + id + "/image.png";
    record.mask_path = "objects/" + id + "/mask.png";
    record.alpha_path = "objects/" + id + "/alpha.png";
    record.center = center;
    record.outline = outline;
    record.mask_incomplete = incomplete;
    return record;
}

SceneRecord ingest_scene(const fs::path& pool_dir, const fs::path& image_path,
                         const std::string& label) {
    const auto bytes = read_file(image_path);
    const RgbImage image = load_rgb(image_path); // validates decodability
    const std::string id = sha256_hex(bytes).substr(0, kIdLength);

    fs::create_directories(pool_dir / "scenes");
    const fs::path out = pool_dir / "scenes" / (id + ".jpg");
    const bool already_jpeg = bytes.size() >= 3 && bytes[0] == 0xFF &&
                              bytes[1] == 0xD8 && bytes[2] == 0xFF;
    if (already_jpeg)
        write_file_atomic(out, bytes.data(), bytes.size());
    else
        save_jpeg(image, out);

    SceneRecord record;
    record.id = id;
    record.image_path = "scenes/" + id + ".jpg";
    record.label = label;
    return record;
}

json outline_to_json(const PolarOutline& outline) {
    json j;
    j["anchor"] = point_to_json(outline.anchor);
    j["k"] = outline.k();
    j["d"] = outline.distances;
    return j;
}

PolarOutline outline_from_json(const json& j) {
    const std::string loc = "outline";
    PolarOutline outline;
    outline.anchor = point_from_json(require_field(j, "anchor", loc), loc);
    const json& d = require_field(j, "d", loc);
    if (!d.is_array()) throw ParseError("field 'd' must be an array", loc);
    for (const auto& v : d) {
        if (!v.is_number()) throw ParseError("distances must be numbers", loc);
        outline.distances.push_back(v.get<double>());
    }
    const json& k = require_field(j, "k", loc);
    if (!k.is_number_integer() || k.get<int>() != outline.k())
        throw ParseError("field 'k' must equal the distance count", loc);
    return outline;
}

json manifest_to_json(const Manifest& manifest) {
    json j = manifest.extra;
    j["version"] = manifest.version;

    json objects = json::array();
    for (const ObjectRecord& rec : manifest.objects) {
        json o = rec.extra;
        o["id"] = rec.id;
        o["category"] = rec.category;
        o["image_path"] = rec.image_path;
        o["mask_path"] = rec.mask_path;
        o["alpha_path"] = rec.alpha_path;
        o["center"] = point_to_json(rec.center);
        o["outline"] = outline_to_json(rec.outline);
        o["mask_incomplete"] = rec.mask_incomplete;
        objects.push_back(std::move(o));
    }
    j["objects"] = std::move(objects);

    json scenes = json::array();
    for (const SceneRecord& rec : manifest.scenes) {
        json s = rec.extra;
        s["id"] = rec.id;
        s["image_path"] = rec.image_path;
        s["label"] = rec.label;
        scenes.push_back(std::move(s));
    }
    j["scenes"] = std::move(scenes);
    return j;
}

Manifest manifest_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("manifest must be an object", "manifest");
    Manifest manifest;
    manifest.version = require_string(j, "version", "manifest");
    if (manifest.version != "1")
        throw VersionUnsupported("manifest version '" + manifest.version +
                                 "' is not supported");

    const json& objects = require_field(j, "objects", "manifest");
    const json& scenes = require_field(j, "scenes", "manifest");
    if (!objects.is_array() || !scenes.is_array())
        throw ParseError("'objects' and 'scenes' must be arrays", "manifest");

    std::size_t index = 0;
    for (const json& o : objects) {
        const std::string loc = "objects[" + std::to_string(index++) + "]";
        if (!o.is_object()) throw ParseError("object record must be an object", loc);
        ObjectRecord rec;
        rec.id = require_string(o, "id", loc);
        rec.category = require_string(o, "category", loc);
        rec.image_path = require_string(o, "image_path", loc);
        rec.mask_path = require_string(o, "mask_path", loc);
        rec.alpha_path = require_string(o, "alpha_path", loc);
        rec.center = point_from_json(require_field(o, "center", loc), loc);
        rec.outline = outline_from_json(require_field(o, "outline", loc));
        rec.mask_incomplete = require_bool(o, "mask_incomplete", loc);
        rec.extra = strip_known(o, {"id", "category", "image_path", "mask_path",
                                    "alpha_path", "center", "outline",
                                    "mask_incomplete"});
        for (const ObjectRecord& other : manifest.objects)
            if (other.id == rec.id)
                throw ParseError("duplicate object id '" + rec.id + "'", loc);
        manifest.objects.push_back(std::move(rec));
    }

    index = 0;
    for (const json& s : scenes) {
        const std::string loc = "scenes[" + std::to_string(index++) + "]";
        if (!s.is_object()) throw ParseError("scene record must be an object", loc);
        SceneRecord rec;
        rec.id = require_string(s, "id", loc);
        rec.image_path = require_string(s, "image_path", loc);
        rec.label = require_string(s, "label", loc);
        rec.extra = strip_known(s, {"id", "image_path", "label"});
        for (const SceneRecord& other : manifest.scenes)
            if (other.id == rec.id)
                throw ParseError("duplicate scene id '" + rec.id + "'", loc);
        manifest.scenes.push_back(std::move(rec));
    }

    manifest.extra = strip_known(j, {"version", "objects", "scenes"});
    return manifest;
}

void save_manifest(const Manifest& manifest, const fs::path& path) {
    const std::string text = manifest_to_json(manifest).dump(2) + "\n";
    write_file_atomic(path, text.data(), text.size());
}

Manifest load_manifest(const fs::path& path) {
    const auto bytes = read_file(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), path.string());
    }
    return manifest_from_json(j);
}

} // namespace sceneforge
