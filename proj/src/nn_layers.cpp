#include "spi/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "spi/errors.hpp"

namespace spi::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

void check_finite(const Tensor& t, const std::string& layer) {
    if (!t.data.allFinite())
        throw NumericalError("non-finite activation in layer '" + layer + "'");
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel, int stride)
    : name_(std::move(name)),
      in_c_(in_channels),
      out_c_(out_channels),
      kernel_(kernel),
      stride_(stride) {
    if (in_c_ <= 0 || out_c_ <= 0 || kernel_ <= 0 || stride_ <= 0)
        throw std::invalid_argument("convolution dimensions must be positive");
    if (kernel_ % 2 == 0)
        throw std::invalid_argument("convolution kernels must be odd for symmetric padding");
    weight.resize(out_c_ * in_c_ * kernel_ * kernel_);
    weight.decay = true;
    bias.resize(out_c_);
}

void Conv2d::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / (in_c_ * kernel_ * kernel_));
    for (int i = 0; i < weight.value.size(); ++i) weight.value(i) = stddev * gaussian(rng);
    bias.value.setZero();
}

Tensor Conv2d::forward(const Tensor& x) {
    if (x.c != in_c_)
        throw std::invalid_argument("layer '" + name_ + "' expects " + std::to_string(in_c_) +
                                    " input channels, got " + std::to_string(x.c));
    input_ = x;
    const int pad = kernel_ / 2;
    const int oh = out_height(x.h);
    const int ow = out_width(x.w);
    const int patch = in_c_ * kernel_ * kernel_;

    cols_.resize(patch, static_cast<Eigen::Index>(x.n) * oh * ow);
    for (int ni = 0; ni < x.n; ++ni) {
        const Eigen::Index col0 = static_cast<Eigen::Index>(ni) * oh * ow;
        for (int ic = 0; ic < in_c_; ++ic) {
            for (int kh = 0; kh < kernel_; ++kh) {
                for (int kw = 0; kw < kernel_; ++kw) {
                    const int row = (ic * kernel_ + kh) * kernel_ + kw;
                    for (int hi = 0; hi < oh; ++hi) {
                        const int src_h = hi * stride_ + kh - pad;
                        for (int wi = 0; wi < ow; ++wi) {
                            const int src_w = wi * stride_ + kw - pad;
                            double v = 0.0;
                            if (src_h >= 0 && src_h < x.h && src_w >= 0 && src_w < x.w)
                                v = x.at(ni, ic, src_h, src_w);
                            cols_(row, col0 + hi * ow + wi) = v;
                        }
                    }
                }
            }
        }
    }

    const Eigen::Map<const RowMat> w(weight.value.data(), out_c_, patch);
    Tensor out(x.n, out_c_, oh, ow);
    for (int ni = 0; ni < x.n; ++ni) {
        const Eigen::Index col0 = static_cast<Eigen::Index>(ni) * oh * ow;
        Eigen::Map<RowMat> dst(out.data.data() + static_cast<Eigen::Index>(ni) * out.per_image(),
                               out_c_, oh * ow);
        dst.noalias() = w * cols_.middleCols(col0, oh * ow);
        dst.colwise() += bias.value;
    }
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const Tensor& x = input_;
    const int pad = kernel_ / 2;
    const int oh = grad_out.h;
    const int ow = grad_out.w;
    const int patch = in_c_ * kernel_ * kernel_;

    // Gather the batch gradient as an (out_c x n*oh*ow) matrix matching cols_.
    Eigen::MatrixXd g(out_c_, static_cast<Eigen::Index>(x.n) * oh * ow);
    for (int ni = 0; ni < x.n; ++ni) {
        const Eigen::Map<const RowMat> src(
            grad_out.data.data() + static_cast<Eigen::Index>(ni) * grad_out.per_image(), out_c_,
            oh * ow);
        g.middleCols(static_cast<Eigen::Index>(ni) * oh * ow, oh * ow) = src;
    }

    if (!frozen_) {
        Eigen::Map<RowMat> wgrad(weight.grad.data(), out_c_, patch);
        wgrad.noalias() += g * cols_.transpose();
        bias.grad.noalias() += g.rowwise().sum();
    }

    const Eigen::Map<const RowMat> w(weight.value.data(), out_c_, patch);
    const Eigen::MatrixXd grad_cols = w.transpose() * g;

    Tensor grad_in(x.n, x.c, x.h, x.w);
    for (int ni = 0; ni < x.n; ++ni) {
        const Eigen::Index col0 = static_cast<Eigen::Index>(ni) * oh * ow;
        for (int ic = 0; ic < in_c_; ++ic) {
            for (int kh = 0; kh < kernel_; ++kh) {
                for (int kw = 0; kw < kernel_; ++kw) {
                    const int row = (ic * kernel_ + kh) * kernel_ + kw;
                    for (int hi = 0; hi < oh; ++hi) {
                        const int src_h = hi * stride_ + kh - pad;
                        if (src_h < 0 || src_h >= x.h) continue;
                        for (int wi = 0; wi < ow; ++wi) {
                            const int src_w = wi * stride_ + kw - pad;
                            if (src_w < 0 || src_w >= x.w) continue;
                            grad_in.at(ni, ic, src_h, src_w) += grad_cols(row, col0 + hi * ow + wi);
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

std::vector<NamedTensor> Conv2d::named_tensors() {
    return {{name_ + ".weight", {out_c_, in_c_, kernel_, kernel_}, &weight.value},
            {name_ + ".bias", {out_c_}, &bias.value}};
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(std::string name, int channels)
    : name_(std::move(name)), channels_(channels) {
    gamma.resize(channels_);
    gamma.value.setOnes();
    beta.resize(channels_);
    running_mean = Eigen::VectorXd::Zero(channels_);
    running_var = Eigen::VectorXd::Ones(channels_);
}

Tensor BatchNorm2d::forward(const Tensor& x, Mode mode, bool update_stats) {
    if (x.c != channels_)
        throw std::invalid_argument("layer '" + name_ + "' expects " + std::to_string(channels_) +
                                    " channels");
    constexpr double kEps = 1e-5;
    constexpr double kMomentum = 0.1;
    const int m = x.n * x.h * x.w;  // samples per channel
    const int hw = x.h * x.w;

    Eigen::VectorXd mean(channels_), var(channels_);
    if (mode == Mode::train) {
        for (int ci = 0; ci < channels_; ++ci) {
            double sum = 0.0, sq = 0.0;
            for (int ni = 0; ni < x.n; ++ni) {
                const double* p = x.data.data() + (static_cast<Eigen::Index>(ni) * x.c + ci) * hw;
                for (int i = 0; i < hw; ++i) {
                    sum += p[i];
                    sq += p[i] * p[i];
                }
            }
            mean(ci) = sum / m;
            var(ci) = sq / m - mean(ci) * mean(ci);  // biased, used for normalization
            if (var(ci) < 0.0) var(ci) = 0.0;
        }
        if (update_stats) {
            const double bessel = m > 1 ? static_cast<double>(m) / (m - 1) : 1.0;
            running_mean = (1.0 - kMomentum) * running_mean + kMomentum * mean;
            running_var = (1.0 - kMomentum) * running_var + kMomentum * (bessel * var.array()).matrix();
        }
    } else {
        mean = running_mean;
        var = running_var;
    }

    cached_mode_ = mode;
    inv_std_ = (var.array() + kEps).rsqrt();
    xhat_ = Tensor(x.n, x.c, x.h, x.w);
    Tensor out(x.n, x.c, x.h, x.w);
    for (int ni = 0; ni < x.n; ++ni) {
        for (int ci = 0; ci < channels_; ++ci) {
            const Eigen::Index base = (static_cast<Eigen::Index>(ni) * x.c + ci) * hw;
            const double mu = mean(ci);
            const double is = inv_std_(ci);
            const double gc = gamma.value(ci);
            const double bc = beta.value(ci);
            for (int i = 0; i < hw; ++i) {
                const double xn = (x.data[base + i] - mu) * is;
                xhat_.data[base + i] = xn;
                out.data[base + i] = gc * xn + bc;
            }
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
    const Tensor& xh = xhat_;
    const int m = xh.n * xh.h * xh.w;
    const int hw = xh.h * xh.w;
    Tensor grad_in(xh.n, xh.c, xh.h, xh.w);

    for (int ci = 0; ci < channels_; ++ci) {
        double dgamma = 0.0, dbeta = 0.0;
        for (int ni = 0; ni < xh.n; ++ni) {
            const Eigen::Index base = (static_cast<Eigen::Index>(ni) * xh.c + ci) * hw;
            for (int i = 0; i < hw; ++i) {
                dgamma += grad_out.data[base + i] * xh.data[base + i];
                dbeta += grad_out.data[base + i];
            }
        }
        gamma.grad(ci) += dgamma;
        beta.grad(ci) += dbeta;

        const double gc = gamma.value(ci);
        const double is = inv_std_(ci);
        if (cached_mode_ == Mode::train) {
            // Batch statistics participate in the gradient.
            const double scale = gc * is / m;
            for (int ni = 0; ni < xh.n; ++ni) {
                const Eigen::Index base = (static_cast<Eigen::Index>(ni) * xh.c + ci) * hw;
                for (int i = 0; i < hw; ++i)
                    grad_in.data[base + i] =
                        scale * (m * grad_out.data[base + i] - dbeta - xh.data[base + i] * dgamma);
            }
        } else {
            // Running statistics are constants.
            const double scale = gc * is;
            for (int ni = 0; ni < xh.n; ++ni) {
                const Eigen::Index base = (static_cast<Eigen::Index>(ni) * xh.c + ci) * hw;
                for (int i = 0; i < hw; ++i)
                    grad_in.data[base + i] = scale * grad_out.data[base + i];
            }
        }
    }
    return grad_in;
}

std::vector<NamedTensor> BatchNorm2d::named_tensors() {
    return {{name_ + ".gamma", {channels_}, &gamma.value},
            {name_ + ".beta", {channels_}, &beta.value},
            {name_ + ".running_mean", {channels_}, &running_mean},
            {name_ + ".running_var", {channels_}, &running_var}};
}

// ---------------------------------------------------------------------------
// Activations

PReLU::PReLU(std::string name, int channels, double initial_slope) : name_(std::move(name)) {
    slope.resize(channels);
    slope.value.setConstant(initial_slope);
}

Tensor PReLU::forward(const Tensor& x) {
    if (x.c != slope.value.size())
        throw std::invalid_argument("rectifier '" + name_ + "' channel mismatch");
    input_ = x;
    Tensor out(x.n, x.c, x.h, x.w);
    const int hw = x.h * x.w;
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            const double a = slope.value(ci);
            const Eigen::Index base = (static_cast<Eigen::Index>(ni) * x.c + ci) * hw;
            for (int i = 0; i < hw; ++i) {
                const double v = x.data[base + i];
                out.data[base + i] = v > 0.0 ? v : a * v;
            }
        }
    return out;
}

Tensor PReLU::backward(const Tensor& grad_out) {
    const Tensor& x = input_;
    Tensor grad_in(x.n, x.c, x.h, x.w);
    const int hw = x.h * x.w;
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci) {
            const double a = slope.value(ci);
            double da = 0.0;
            const Eigen::Index base = (static_cast<Eigen::Index>(ni) * x.c + ci) * hw;
            for (int i = 0; i < hw; ++i) {
                const double v = x.data[base + i];
                const double g = grad_out.data[base + i];
                if (v > 0.0) {
                    grad_in.data[base + i] = g;
                } else {
                    grad_in.data[base + i] = a * g;
                    da += g * v;
                }
            }
            slope.grad(ci) += da;
        }
    return grad_in;
}

std::vector<NamedTensor> PReLU::named_tensors() {
    return {{name_ + ".slope", {static_cast<int>(slope.value.size())}, &slope.value}};
}

Tensor LeakyReLU::forward(const Tensor& x) {
    input_ = x;
    Tensor out = x;
    for (int i = 0; i < out.size(); ++i)
        if (out.data[i] < 0.0) out.data[i] *= slope_;
    return out;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (int i = 0; i < grad_in.size(); ++i)
        if (input_.data[i] <= 0.0) grad_in.data[i] *= slope_;
    return grad_in;
}

Tensor ReLU::forward(const Tensor& x) {
    input_ = x;
    Tensor out = x;
    for (int i = 0; i < out.size(); ++i)
        if (out.data[i] < 0.0) out.data[i] = 0.0;
    return out;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (int i = 0; i < grad_in.size(); ++i)
        if (input_.data[i] <= 0.0) grad_in.data[i] = 0.0;
    return grad_in;
}

Tensor Sigmoid::forward(const Tensor& x) {
    output_ = Tensor(x.n, x.c, x.h, x.w);
    for (int i = 0; i < x.size(); ++i) {
        const double v = x.data[i];
        output_.data[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                   : std::exp(v) / (1.0 + std::exp(v));
    }
    return output_;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
    Tensor grad_in = grad_out;
    for (int i = 0; i < grad_in.size(); ++i) {
        const double y = output_.data[i];
        grad_in.data[i] *= y * (1.0 - y);
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// MaxPool2d

Tensor MaxPool2d::forward(const Tensor& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw std::invalid_argument("max pooling expects even spatial dimensions, got " +
                                    x.shape_string());
    input_ = x;
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor out(x.n, x.c, oh, ow);
    argmax_.assign(out.size(), 0);
    int oi = 0;
    for (int ni = 0; ni < x.n; ++ni)
        for (int ci = 0; ci < x.c; ++ci)
            for (int hi = 0; hi < oh; ++hi)
                for (int wi = 0; wi < ow; ++wi, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    int best_idx = 0;
                    for (int dh = 0; dh < 2; ++dh)
                        for (int dw = 0; dw < 2; ++dw) {
                            const int idx =
                                ((ni * x.c + ci) * x.h + 2 * hi + dh) * x.w + 2 * wi + dw;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    out.data[oi] = best;
                    argmax_[oi] = best_idx;
                }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    Tensor grad_in(input_.n, input_.c, input_.h, input_.w);
    for (int oi = 0; oi < grad_out.size(); ++oi) grad_in.data[argmax_[oi]] += grad_out.data[oi];
    return grad_in;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(std::string name, int in_features, int out_features)
    : name_(std::move(name)), in_f_(in_features), out_f_(out_features) {
    weight.resize(out_f_ * in_f_);
    weight.decay = true;
    bias.resize(out_f_);
}

void Linear::init_he(Rng& rng) {
    const double stddev = std::sqrt(2.0 / in_f_);
    for (int i = 0; i < weight.value.size(); ++i) weight.value(i) = stddev * gaussian(rng);
    bias.value.setZero();
}

Eigen::MatrixXd Linear::forward(const Tensor& x) {
    if (x.per_image() != in_f_)
        throw std::invalid_argument("layer '" + name_ + "' expects " + std::to_string(in_f_) +
                                    " features, got " + std::to_string(x.per_image()));
    input_ = x;
    const Eigen::Map<const RowMat> xm(x.data.data(), x.n, in_f_);
    const Eigen::Map<const RowMat> w(weight.value.data(), out_f_, in_f_);
    Eigen::MatrixXd out = xm * w.transpose();
    out.rowwise() += bias.value.transpose();
    return out;  // n x out
}

Tensor Linear::backward(const Eigen::MatrixXd& grad_out) {
    const Eigen::Map<const RowMat> xm(input_.data.data(), input_.n, in_f_);
    const Eigen::Map<const RowMat> w(weight.value.data(), out_f_, in_f_);

    Eigen::Map<RowMat> wgrad(weight.grad.data(), out_f_, in_f_);
    wgrad.noalias() += grad_out.transpose() * xm;
    bias.grad.noalias() += grad_out.colwise().sum().transpose();

    Tensor grad_in(input_.n, input_.c, input_.h, input_.w);
    Eigen::Map<RowMat> gm(grad_in.data.data(), input_.n, in_f_);
    gm.noalias() = grad_out * w;
    return grad_in;
}

std::vector<NamedTensor> Linear::named_tensors() {
    return {{name_ + ".weight", {out_f_, in_f_}, &weight.value},
            {name_ + ".bias", {out_f_}, &bias.value}};
}

}  // namespace spi::nn
