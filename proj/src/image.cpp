#include "spi/image.hpp"

#include <stdexcept>
#include <string>

namespace spi {

Image Image::zeros(int width, int height) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("image dimensions must be positive");
    Image img;
    img.width = width;
    img.height = height;
    img.pixels = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width) * height);
    return img;
}

Image Image::from_vector(int width, int height, const Eigen::VectorXd& pixels) {
    Image img;
    img.width = width;
    img.height = height;
    img.pixels = pixels;
    img.validate();
    return img;
}

Image Image::from_vector_clipped(int width, int height, const Eigen::VectorXd& pixels) {
    return from_vector(width, height, pixels.cwiseMax(0.0).cwiseMin(1.0));
}

void Image::validate() const {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("image dimensions must be positive");
    if (pixels.size() != static_cast<Eigen::Index>(width) * height)
        throw std::invalid_argument("pixel count does not match width*height");
    if (!pixels.allFinite())
        throw std::invalid_argument("image contains non-finite pixels");
    if (pixels.minCoeff() < 0.0 || pixels.maxCoeff() > 1.0)
        throw std::invalid_argument("pixel values outside [0, 1]");
}

}  // namespace spi
