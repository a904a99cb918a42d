#include "spi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

#include "spi/errors.hpp"
#include "spi/rng.hpp"

namespace spi {

namespace {

bool power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int scaled(int count, double scale) {
    return static_cast<int>(std::floor(count * scale));
}

}  // namespace

int DatasetSpec::scaled_train() const { return scaled(train_count, scale); }
int DatasetSpec::scaled_val() const { return scaled(val_count, scale); }
int DatasetSpec::scaled_test() const { return scaled(test_count, scale); }

void DatasetSpec::validate() const {
    if (!power_of_two(width) || !power_of_two(height))
        throw std::invalid_argument("target sides must be powers of two");
    if (train_count < 0 || val_count < 0 || test_count < 0)
        throw std::invalid_argument("split counts must be non-negative");
    if (scale <= 0.0) throw std::invalid_argument("dataset scale must be positive");
    if (luma_r < 0.0 || luma_g < 0.0 || luma_b < 0.0)
        throw std::invalid_argument("luma weights must be non-negative");
}

std::vector<std::string> list_files(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw std::invalid_argument("not a directory: " + dir);
    std::vector<std::string> files;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    return files;
}

Image resize_bilinear(const Image& src, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("target size must be positive");
    if (src.width == width && src.height == height) return src;
    Image dst = Image::zeros(width, height);
    const double sx = static_cast<double>(src.width) / width;
    const double sy = static_cast<double>(src.height) / height;
    for (int r = 0; r < height; ++r) {
        const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height - 1);
        const double wy = fy - y0;
        for (int c = 0; c < width; ++c) {
            const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * src.at(y0, x0) + wx * src.at(y0, x1);
            const double bot = (1.0 - wx) * src.at(y1, x0) + wx * src.at(y1, x1);
            dst.at(r, c) = (1.0 - wy) * top + wy * bot;
        }
    }
    return dst;
}

Image load_image_file(const std::string& path, int width, int height, double luma_r,
                      double luma_g, double luma_b) {
    const cv::Mat bgr = cv::imread(path, cv::IMREAD_COLOR);
    if (bgr.empty()) throw IoError("cannot decode image: " + path);
    Image gray = Image::zeros(bgr.cols, bgr.rows);
    for (int r = 0; r < bgr.rows; ++r) {
        const cv::Vec3b* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c) {
            const double b = row[c][0] / 255.0;
            const double g = row[c][1] / 255.0;
            const double red = row[c][2] / 255.0;
            gray.at(r, c) = std::clamp(luma_r * red + luma_g * g + luma_b * b, 0.0, 1.0);
        }
    }
    return resize_bilinear(gray, width, height);
}

DatasetSplits load_dataset(const DatasetSpec& spec) {
    spec.validate();
    const std::vector<std::string> files = list_files(spec.root);

    DatasetSplits splits;
    std::vector<Image> images;
    for (const std::string& file : files) {
        try {
            images.push_back(load_image_file(file, spec.width, spec.height, spec.luma_r,
                                             spec.luma_g, spec.luma_b));
        } catch (const IoError& err) {
            std::cerr << "warning: skipping " << file << " (" << err.what() << ")\n";
            ++splits.skipped;
        }
    }
    splits.decoded = static_cast<int>(images.size());

    const int want_train = spec.scaled_train();
    const int want_val = spec.scaled_val();
    const int want_test = spec.scaled_test();
    if (splits.decoded < want_train + want_val + want_test)
        throw std::invalid_argument(
            "dataset at " + spec.root + " has " + std::to_string(splits.decoded) +
            " decodable images, need " + std::to_string(want_train + want_val + want_test));

    Rng rng = make_rng(spec.shuffle_seed);
    const std::vector<int> order = permutation(splits.decoded, rng);
    int next = 0;
    for (int i = 0; i < want_train; ++i) splits.train.push_back(images[order[next++]]);
    for (int i = 0; i < want_val; ++i) splits.val.push_back(images[order[next++]]);
    for (int i = 0; i < want_test; ++i) splits.test.push_back(images[order[next++]]);
    return splits;
}

std::vector<Image> synthetic_images(int count, int width, int height, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("image count must be non-negative");
    if (width <= 0 || height <= 0) throw std::invalid_argument("image size must be positive");
    std::vector<Image> out;
    out.reserve(count);
    const double side = std::min(width, height);
    for (int index = 0; index < count; ++index) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(index));
        Image img = Image::zeros(width, height);
        const double background = uniform(rng, 0.05, 0.2);
        for (int p = 0; p < img.n(); ++p) img.pixels[p] = background;

        const int blobs = 2 + static_cast<int>(rng() % 3);
        for (int b = 0; b < blobs; ++b) {
            const double cx = uniform(rng, 0.15, 0.85) * width;
            const double cy = uniform(rng, 0.15, 0.85) * height;
            const double sigma = uniform(rng, 0.12, 0.28) * side;
            const double amp = uniform(rng, 0.35, 0.9);
            for (int r = 0; r < height; ++r)
                for (int c = 0; c < width; ++c) {
                    const double dx = c - cx;
                    const double dy = r - cy;
                    img.at(r, c) += amp * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                }
        }

        const int rects = static_cast<int>(rng() % 3);
        for (int q = 0; q < rects; ++q) {
            const int x0 = static_cast<int>(uniform(rng, 0.05, 0.6) * width);
            const int y0 = static_cast<int>(uniform(rng, 0.05, 0.6) * height);
            const int rw = std::max(2, static_cast<int>(uniform(rng, 0.15, 0.35) * width));
            const int rh = std::max(2, static_cast<int>(uniform(rng, 0.15, 0.35) * height));
            const double amp = uniform(rng, 0.15, 0.4) * (uniform01(rng) < 0.5 ? -1.0 : 1.0);
            for (int r = y0; r < std::min(height, y0 + rh); ++r)
                for (int c = x0; c < std::min(width, x0 + rw); ++c) img.at(r, c) += amp;
        }

        for (int p = 0; p < img.n(); ++p) img.pixels[p] = std::clamp(img.pixels[p], 0.0, 1.0);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace spi
