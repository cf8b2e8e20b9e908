#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradsal/tensor.hpp"
#include "gradsal/train.hpp"

namespace gradsal {

struct SyntheticSample {
    ImageRGB image;
    std::size_t label = 0;
    Mask mask;  // exactly the pixels painted by an object
};

inline constexpr std::size_t kMinSyntheticSize = 32;

// Shape classes in label order.
const std::vector<std::string>& synthetic_class_names();

// n images of size x size showing one mildly rotated object near the centre
// on a smooth value-noise background. Labels cycle 0, 1, ..., classes-1, so
// each class gets n / classes samples (+1 for the first n % classes classes).
// Every sample is a pure function of (seed, index).
std::vector<SyntheticSample> generate_dataset(std::size_t n, std::size_t classes, std::size_t size,
                                              std::uint64_t seed);

std::vector<Sample> to_training_samples(const std::vector<SyntheticSample>& data);

// Layout: images/<id>.png, masks/<id>.png, labels.csv (id,label,class).
void write_dataset(const std::vector<SyntheticSample>& data, const std::filesystem::path& dir);

struct LabeledImage {
    std::string id;
    ImageRGB image;
    std::size_t label = 0;
    std::string class_name;
};

// Reads labels.csv and images/ from a directory written by write_dataset
// (masks are not needed for training).
std::vector<LabeledImage> read_labeled_dir(const std::filesystem::path& dir);

}  // namespace gradsal
