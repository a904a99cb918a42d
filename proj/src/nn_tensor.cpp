#include "spi/nn/tensor.hpp"

namespace spi::nn {

Tensor batch_from_images(const std::vector<Image>& images) {
    if (images.empty()) throw std::invalid_argument("cannot batch zero images");
    const int w = images.front().width;
    const int h = images.front().height;
    Tensor t(static_cast<int>(images.size()), 1, h, w);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].width != w || images[i].height != h)
            throw std::invalid_argument("all images in a batch must share dimensions");
        t.data.segment(static_cast<Eigen::Index>(i) * h * w, h * w) = images[i].pixels;
    }
    return t;
}

Image image_from_tensor(const Tensor& t, int index) {
    if (t.c != 1) throw std::invalid_argument("image extraction expects a 1-channel tensor");
    if (index < 0 || index >= t.n) throw std::invalid_argument("batch index out of range");
    const Eigen::VectorXd pixels =
        t.data.segment(static_cast<Eigen::Index>(index) * t.h * t.w, t.h * t.w);
    return Image::from_vector_clipped(t.w, t.h, pixels);
}

}  // namespace spi::nn
