#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spi/image.hpp"

namespace spi {

// Where and how to ingest an image corpus. Split counts follow the
// full-scale 40000/3000/2000 convention; `scale` shrinks all three for
// desk-scale runs (counts are floored after scaling).
struct DatasetSpec {
    std::string root;
    int width = 64;
    int height = 64;
    int train_count = 40000;
    int val_count = 3000;
    int test_count = 2000;
    double scale = 1.0;
    double luma_r = 0.299;
    double luma_g = 0.587;
    double luma_b = 0.114;
    std::uint64_t shuffle_seed = 0;

    int scaled_train() const;
    int scaled_val() const;
    int scaled_test() const;
    void validate() const;  // power-of-two sides, sane counts and weights
};

struct DatasetSplits {
    std::vector<Image> train;
    std::vector<Image> val;
    std::vector<Image> test;
    int decoded = 0;
    int skipped = 0;  // files that could not be decoded
};

// Lexicographically sorted regular files directly inside dir. Throws
// std::invalid_argument when dir does not exist or is not a directory.
std::vector<std::string> list_files(const std::string& dir);

// Decodes one image file, converts to grayscale with the given luma
// weights, bilinearly resizes to width x height and rescales into [0,1].
// Throws IoError when the file cannot be decoded.
Image load_image_file(const std::string& path, int width, int height, double luma_r = 0.299,
                      double luma_g = 0.587, double luma_b = 0.114);

// Bilinear resampling with the half-pixel center convention.
Image resize_bilinear(const Image& src, int width, int height);

// Decode -> grayscale -> resize -> shuffle (by seed) -> split. Undecodable
// files are skipped (and counted); too few decodable images for the
// requested splits is an error.
DatasetSplits load_dataset(const DatasetSpec& spec);

// Bundled deterministic desk-scale dataset: each image composes a dim
// background, a few smooth Gaussian blobs and up to two soft-edged
// rectangles, clipped into [0,1]. Image i depends only on (seed, i).
std::vector<Image> synthetic_images(int count, int width, int height, std::uint64_t seed);

}  // namespace spi
