#include "sceneforge/coco.hpp"

#include <map>
#include <set>

#include <json.hpp>

namespace sceneforge::coco {

using nlohmann::json;

Dataset build_dataset(const std::vector<SynthResult>& results,
                      const std::vector<std::string>& category_names) {
    Dataset dataset;
    std::map<std::string, int> category_ids;
    for (const std::string& name : category_names) {
        if (category_ids.count(name))
            throw DuplicateCategory("coco: duplicate category '" + name + "'");
        Category category;
        category.id = static_cast<int>(dataset.categories.size()) + 1;
        category.name = name;
        category_ids.emplace(name, category.id);
        dataset.categories.push_back(std::move(category));
    }

    int annotation_id = 1;
    for (const SynthResult& result : results) {
        Image image;
        image.id = static_cast<int>(dataset.images.size()) + 1;
        image.file_name = result.file_name;
        image.width = result.width;
        image.height = result.height;

        for (const AnnotationRec& rec : result.annotations) {
            const auto it = category_ids.find(rec.category);
            if (it == category_ids.end())
                throw Error("coco: result uses unlisted category '" + rec.category +
                            "'");
            Annotation annotation;
            annotation.id = annotation_id++;
            annotation.image_id = image.id;
            annotation.category_id = it->second;
            std::vector<double> flat;
            flat.reserve(rec.polygon.vertices.size() * 2);
            for (const Point& v : rec.polygon.vertices) {
                flat.push_back(v.x);
                flat.push_back(v.y);
            }
            annotation.segmentation.push_back(std::move(flat));
            annotation.bbox = rec.bbox;
            annotation.area = rec.area;
            dataset.annotations.push_back(std::move(annotation));
        }
        dataset.images.push_back(std::move(image));
    }

    validate(dataset);
    return dataset;
}

void validate(const Dataset& dataset) {
    std::set<int> image_ids, annotation_ids, category_ids;
    for (const Image& image : dataset.images) {
        if (!image_ids.insert(image.id).second)
            throw ParseError("duplicate image id " + std::to_string(image.id),
                             "images");
        if (image.width < 1 || image.height < 1)
            throw ParseError("image " + std::to_string(image.id) +
                                 " has non-positive dimensions",
                             "images");
    }
    for (const Category& category : dataset.categories) {
        if (!category_ids.insert(category.id).second)
            throw ParseError("duplicate category id " + std::to_string(category.id),
                             "categories");
    }
    std::set<std::string> names;
    for (const Category& category : dataset.categories)
        if (!names.insert(category.name).second)
            throw DuplicateCategory("coco: duplicate category '" + category.name +
                                    "'");

    for (const Annotation& annotation : dataset.annotations) {
        const std::string loc = "annotations[id=" + std::to_string(annotation.id) + "]";
        if (!annotation_ids.insert(annotation.id).second)
            throw ParseError("duplicate annotation id", loc);
        if (!image_ids.count(annotation.image_id))
            throw ParseError("annotation references missing image " +
                                 std::to_string(annotation.image_id),
                             loc);
        if (!category_ids.count(annotation.category_id))
            throw ParseError("annotation references missing category " +
                                 std::to_string(annotation.category_id),
                             loc);
        if (annotation.segmentation.empty())
            throw ParseError("annotation has no segmentation", loc);
        for (const auto& ring : annotation.segmentation)
            if (ring.size() < 6 || ring.size() % 2 != 0)
                throw ParseError("segmentation ring needs even length >= 6", loc);
        if (annotation.iscrowd != 0)
            throw ParseError("only iscrowd = 0 is supported", loc);
    }
}

std::string serialize(const Dataset& dataset) {
    json j;
    j["info"] = {{"description", "synthesized object-in-scene dataset"},
                 {"version", "1"}};
    j["licenses"] = json::array({json{{"id", 1}, {"name", "unspecified"}}});

    json images = json::array();
    for (const Image& image : dataset.images) {
        images.push_back(json{{"id", image.id},
                              {"file_name", image.file_name},
                              {"width", image.width},
                              {"height", image.height}});
    }
    j["images"] = std::move(images);

    json annotations = json::array();
    for (const Annotation& annotation : dataset.annotations) {
        annotations.push_back(json{{"id", annotation.id},
                                   {"image_id", annotation.image_id},
                                   {"category_id", annotation.category_id},
                                   {"segmentation", annotation.segmentation},
                                   {"bbox", annotation.bbox},
                                   {"area", annotation.area},
                                   {"iscrowd", annotation.iscrowd}});
    }
    j["annotations"] = std::move(annotations);

    json categories = json::array();
    for (const Category& category : dataset.categories) {
        categories.push_back(json{{"id", category.id},
                                  {"name", category.name},
                                  {"supercategory", category.supercategory}});
    }
    j["categories"] = std::move(categories);

    return j.dump(2) + "\n";
}

namespace {

const json& require_field(const json& j, const char* key, const std::string& loc) {
    const auto it = j.find(key);
    if (it == j.end())
        throw ParseError(std::string("missing field '") + key + "'", loc);
    return *it;
}

int require_int(const json& j, const char* key, const std::string& loc) {
    const json& v = require_field(j, key, loc);
    if (!v.is_number_integer())
        throw ParseError(std::string("field '") + key + "' must be an integer", loc);
    return v.get<int>();
}

std::string require_string(const json& j, const char* key, const std::string& loc) {
    const json& v = require_field(j, key, loc);
    if (!v.is_string())
        throw ParseError(std::string("field '") + key + "' must be a string", loc);
    return v.get<std::string>();
}

double require_number(const json& j, const char* key, const std::string& loc) {
    const json& v = require_field(j, key, loc);
    if (!v.is_number())
        throw ParseError(std::string("field '") + key + "' must be a number", loc);
    return v.get<double>();
}

} // namespace

Dataset parse(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), "byte " + std::to_string(e.byte));
    }
    if (!j.is_object()) throw ParseError("dataset must be an object", "root");

    Dataset dataset;
    const json& images = require_field(j, "images", "root");
    const json& annotations = require_field(j, "annotations", "root");
    const json& categories = require_field(j, "categories", "root");
    if (!images.is_array() || !annotations.is_array() || !categories.is_array())
        throw ParseError("images/annotations/categories must be arrays", "root");

    std::size_t index = 0;
    for (const json& v : images) {
        const std::string loc = "images[" + std::to_string(index++) + "]";
        if (!v.is_object()) throw ParseError("image must be an object", loc);
        Image image;
        image.id = require_int(v, "id", loc);
        image.file_name = require_string(v, "file_name", loc);
        image.width = require_int(v, "width", loc);
        image.height = require_int(v, "height", loc);
        dataset.images.push_back(std::move(image));
    }

    index = 0;
    for (const json& v : annotations) {
        const std::string loc = "annotations[" + std::to_string(index++) + "]";
        if (!v.is_object()) throw ParseError("annotation must be an object", loc);
        Annotation annotation;
        annotation.id = require_int(v, "id", loc);
        annotation.image_id = require_int(v, "image_id", loc);
        annotation.category_id = require_int(v, "category_id", loc);
        annotation.area = require_number(v, "area", loc);
        annotation.iscrowd = require_int(v, "iscrowd", loc);

        const json& bbox = require_field(v, "bbox", loc);
        if (!bbox.is_array() || bbox.size() != 4)
            throw ParseError("bbox must be [x, y, w, h]", loc);
        for (std::size_t i = 0; i < 4; ++i) {
            if (!bbox[i].is_number()) throw ParseError("bbox must be numeric", loc);
            annotation.bbox[i] = bbox[i].get<double>();
        }

        const json& segmentation = require_field(v, "segmentation", loc);
        if (!segmentation.is_array())
            throw ParseError("segmentation must be an array of rings", loc);
        for (const json& ring : segmentation) {
            if (!ring.is_array())
                throw ParseError("segmentation ring must be an array", loc);
            std::vector<double> flat;
            flat.reserve(ring.size());
            for (const json& coord : ring) {
                if (!coord.is_number())
                    throw ParseError("segmentation coordinates must be numbers", loc);
                flat.push_back(coord.get<double>());
            }
            annotation.segmentation.push_back(std::move(flat));
        }
        dataset.annotations.push_back(std::move(annotation));
    }

    index = 0;
    for (const json& v : categories) {
        const std::string loc = "categories[" + std::to_string(index++) + "]";
        if (!v.is_object()) throw ParseError("category must be an object", loc);
        Category category;
        category.id = require_int(v, "id", loc);
        category.name = require_string(v, "name", loc);
        category.supercategory = require_string(v, "supercategory", loc);
        dataset.categories.push_back(std::move(category));
    }

    validate(dataset);
    return dataset;
}

} // namespace sceneforge::coco
