#pragma once

#include <array>
#include <string>
#include <vector>

#include "sceneforge/synth.hpp"

namespace sceneforge::coco {

struct Image {
    int id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
};

struct Annotation {
    int id = 0;
    int image_id = 0;
    int category_id = 0;
    std::vector<std::vector<double>> segmentation; // [[x1,y1,x2,y2,...]]
    std::array<double, 4> bbox{};                  // x, y, w, h
    double area = 0.0;
    int iscrowd = 0;
};

struct Category {
    int id = 0;
    std::string name;
    std::string supercategory = "object";
};

struct Dataset {
    std::vector<Image> images;
    std::vector<Annotation> annotations;
    std::vector<Category> categories;
};

// Sequential ids from 1 in input order; bbox/area from the polygons.
// Throws DuplicateCategory, and Error when a result names an unlisted category.
Dataset build_dataset(const std::vector<SynthResult>& results,
                      const std::vector<std::string>& category_names);

// Canonical bytes: sorted keys, shortest round-trip reals, static info and
// licenses placeholder blocks. serialize is a pure function of the dataset.
std::string serialize(const Dataset& dataset);

// Throws ParseError (with location) on malformed JSON, schema violations,
// duplicate ids or dangling references.
Dataset parse(const std::string& bytes);

// Referential-integrity and shape checks shared by build and parse.
void validate(const Dataset& dataset);

} // namespace sceneforge::coco
