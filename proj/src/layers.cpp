#include <algorithm>
#include <cmath>

#include "fedspectra/errors.hpp"
#include "fedspectra/nn.hpp"

namespace fedspectra {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
    if (x.ndim() != rank) {
        throw ShapeError(std::string(layer) + ": expected rank " + std::to_string(rank) + " input, got " +
                         shape_to_string(x.shape()));
    }
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : in_(in_channels), out_(out_channels), k_(kernel) {
    if (in_ == 0 || out_ == 0 || k_ == 0) throw ShapeError("Conv2d: sizes must be positive");
    params_.push_back({"weight", Tensor({out_, in_, k_, k_}), Tensor({out_, in_, k_, k_}), ParamKind::Conv4d});
    params_.push_back({"bias", Tensor({out_}), Tensor({out_}), ParamKind::Vector1d});
}

Shape Conv2d::output_shape(const Shape& in) const {
    if (in.size() != 3 || in[0] != in_ || in[1] < k_ || in[2] < k_) {
        throw ShapeError("Conv2d: cannot apply " + std::to_string(k_) + "x" + std::to_string(k_) + " kernel with " +
                         std::to_string(in_) + " input channels to " + shape_to_string(in));
    }
    return {out_, in[1] - k_ + 1, in[2] - k_ + 1};
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
    require_rank(x, 4, "Conv2d");
    const std::size_t n = x.dim(0), H = x.dim(2), W = x.dim(3);
    const Shape os = output_shape({x.dim(1), H, W});
    const std::size_t Ho = os[1], Wo = os[2];
    Tensor out({n, out_, Ho, Wo});
    const double* w = params_[0].value.data().data();
    const double* bias = params_[1].value.data().data();
    const double* xd = x.data().data();
    double* od = out.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < out_; ++a) {
            double* o = od + (s * out_ + a) * Ho * Wo;
            std::fill(o, o + Ho * Wo, bias[a]);
            for (std::size_t b = 0; b < in_; ++b) {
                const double* xin = xd + (s * in_ + b) * H * W;
                for (std::size_t i = 0; i < k_; ++i) {
                    for (std::size_t j = 0; j < k_; ++j) {
                        const double wv = w[((a * in_ + b) * k_ + i) * k_ + j];
                        for (std::size_t y = 0; y < Ho; ++y) {
                            const double* xr = xin + (y + i) * W + j;
                            double* orow = o + y * Wo;
                            for (std::size_t c = 0; c < Wo; ++c) orow[c] += wv * xr[c];
                        }
                    }
                }
            }
        }
    }
    if (training) input_ = x;
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const std::size_t n = input_.dim(0), H = input_.dim(2), W = input_.dim(3);
    const std::size_t Ho = grad_out.dim(2), Wo = grad_out.dim(3);
    Tensor dx(input_.shape());
    auto& dw_t = params_[0].grad;
    auto& db_t = params_[1].grad;
    std::fill(dw_t.data().begin(), dw_t.data().end(), 0.0);
    std::fill(db_t.data().begin(), db_t.data().end(), 0.0);
    double* dw = dw_t.data().data();
    double* db = db_t.data().data();
    const double* w = params_[0].value.data().data();
    const double* xd = input_.data().data();
    const double* gd = grad_out.data().data();
    double* dxd = dx.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < out_; ++a) {
            const double* g = gd + (s * out_ + a) * Ho * Wo;
            double bsum = 0.0;
            for (std::size_t p = 0; p < Ho * Wo; ++p) bsum += g[p];
            db[a] += bsum;
            for (std::size_t b = 0; b < in_; ++b) {
                const double* xin = xd + (s * in_ + b) * H * W;
                double* dxin = dxd + (s * in_ + b) * H * W;
                for (std::size_t i = 0; i < k_; ++i) {
                    for (std::size_t j = 0; j < k_; ++j) {
                        const std::size_t widx = ((a * in_ + b) * k_ + i) * k_ + j;
                        const double wv = w[widx];
                        double acc = 0.0;
                        for (std::size_t y = 0; y < Ho; ++y) {
                            const double* xr = xin + (y + i) * W + j;
                            double* dxr = dxin + (y + i) * W + j;
                            const double* grow = g + y * Wo;
                            for (std::size_t c = 0; c < Wo; ++c) {
                                acc += grow[c] * xr[c];
                                dxr[c] += wv * grow[c];
                            }
                        }
                        dw[widx] += acc;
                    }
                }
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------- Dense

Dense::Dense(std::size_t in_features, std::size_t out_features) : in_(in_features), out_(out_features) {
    if (in_ == 0 || out_ == 0) throw ShapeError("Dense: sizes must be positive");
    params_.push_back({"weight", Tensor({out_, in_}), Tensor({out_, in_}), ParamKind::Matrix2d});
    params_.push_back({"bias", Tensor({out_}), Tensor({out_}), ParamKind::Vector1d});
}

Shape Dense::output_shape(const Shape& in) const {
    if (in.size() != 1 || in[0] != in_) {
        throw ShapeError("Dense: expected flattened input of " + std::to_string(in_) + " features, got " +
                         shape_to_string(in));
    }
    return {out_};
}

Tensor Dense::forward(const Tensor& x, bool training) {
    require_rank(x, 2, "Dense");
    output_shape({x.dim(1)});
    const std::size_t n = x.dim(0);
    Tensor out({n, out_});
    const double* w = params_[0].value.data().data();
    const double* bias = params_[1].value.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        const double* xr = x.data().data() + s * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double* wr = w + o * in_;
            double acc = bias[o];
            for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
            out.at(s, o) = acc;
        }
    }
    if (training) input_ = x;
    return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const std::size_t n = input_.dim(0);
    Tensor dx({n, in_});
    auto& dw_t = params_[0].grad;
    auto& db_t = params_[1].grad;
    std::fill(dw_t.data().begin(), dw_t.data().end(), 0.0);
    std::fill(db_t.data().begin(), db_t.data().end(), 0.0);
    double* dw = dw_t.data().data();
    double* db = db_t.data().data();
    const double* w = params_[0].value.data().data();
    for (std::size_t s = 0; s < n; ++s) {
        const double* xr = input_.data().data() + s * in_;
        double* dxr = dx.data().data() + s * in_;
        for (std::size_t o = 0; o < out_; ++o) {
            const double g = grad_out.at(s, o);
            db[o] += g;
            double* dwr = dw + o * in_;
            const double* wr = w + o * in_;
            for (std::size_t i = 0; i < in_; ++i) {
                dwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------- Relu

Tensor Relu::forward(const Tensor& x, bool training) {
    Tensor out = x;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    if (training) input_ = x;
    return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(input_[i] > 0.0)) dx[i] = 0.0;
    }
    return dx;
}

// ---------------------------------------------------------------- MaxPool2

Shape MaxPool2::output_shape(const Shape& in) const {
    if (in.size() != 3 || in[1] < 2 || in[2] < 2) throw ShapeError("MaxPool2: cannot pool " + shape_to_string(in));
    return {in[0], in[1] / 2, in[2] / 2};
}

Tensor MaxPool2::forward(const Tensor& x, bool training) {
    require_rank(x, 4, "MaxPool2");
    const std::size_t n = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const Shape os = output_shape({C, H, W});
    const std::size_t Ho = os[1], Wo = os[2];
    Tensor out({n, C, Ho, Wo});
    std::vector<std::size_t> arg(out.size());
    const double* xd = x.data().data();
    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * C; ++plane) {
        const std::size_t base = plane * H * W;
        for (std::size_t y = 0; y < Ho; ++y) {
            for (std::size_t c = 0; c < Wo; ++c, ++o) {
                std::size_t best = base + (2 * y) * W + 2 * c;
                for (std::size_t dy = 0; dy < 2; ++dy) {
                    for (std::size_t dc = 0; dc < 2; ++dc) {
                        const std::size_t idx = base + (2 * y + dy) * W + 2 * c + dc;
                        if (xd[idx] > xd[best]) best = idx;
                    }
                }
                out[o] = xd[best];
                arg[o] = best;
            }
        }
    }
    if (training) {
        input_shape_ = x.shape();
        argmax_ = std::move(arg);
    }
    return out;
}

Tensor MaxPool2::backward(const Tensor& grad_out) {
    Tensor dx(input_shape_);
    for (std::size_t o = 0; o < grad_out.size(); ++o) dx[argmax_[o]] += grad_out[o];
    return dx;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double momentum, double eps)
    : channels_(channels), momentum_(momentum), eps_(eps),
      running_mean_({channels}, 0.0), running_var_({channels}, 1.0) {
    if (channels == 0) throw ShapeError("BatchNorm: zero channels");
    params_.push_back({"gamma", Tensor({channels}, 1.0), Tensor({channels}), ParamKind::Vector1d, true});
    params_.push_back({"beta", Tensor({channels}), Tensor({channels}), ParamKind::Vector1d, true});
}

Shape BatchNorm::output_shape(const Shape& in) const {
    if ((in.size() != 3 && in.size() != 1) || in[0] != channels_) {
        throw ShapeError("BatchNorm: expected " + std::to_string(channels_) + " channels, got " + shape_to_string(in));
    }
    return in;
}

void BatchNorm::set_running_stats(const Tensor& mean, const Tensor& var) {
    require_same_shape(running_mean_, mean, "BatchNorm running mean");
    require_same_shape(running_var_, var, "BatchNorm running var");
    running_mean_ = mean;
    running_var_ = var;
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    if (x.ndim() != 2 && x.ndim() != 4) throw ShapeError("BatchNorm: expected rank 2 or 4 input");
    if (x.dim(1) != channels_) throw ShapeError("BatchNorm: channel mismatch");
    const std::size_t n = x.dim(0);
    const std::size_t plane = x.ndim() == 4 ? x.dim(2) * x.dim(3) : 1;
    const std::size_t count = n * plane;
    const double* gamma = params_[0].value.data().data();
    const double* beta = params_[1].value.data().data();
    Tensor out(x.shape());
    Tensor xhat(x.shape());
    std::vector<double> inv_std(channels_);
    for (std::size_t c = 0; c < channels_; ++c) {
        double mu, var;
        if (training) {
            double sum = 0.0;
            for (std::size_t s = 0; s < n; ++s)
                for (std::size_t p = 0; p < plane; ++p) sum += x[(s * channels_ + c) * plane + p];
            mu = sum / static_cast<double>(count);
            double sq = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                for (std::size_t p = 0; p < plane; ++p) {
                    const double d = x[(s * channels_ + c) * plane + p] - mu;
                    sq += d * d;
                }
            }
            var = sq / static_cast<double>(count);
            const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
            running_mean_[c] = (1.0 - momentum_) * running_mean_[c] + momentum_ * mu;
            running_var_[c] = (1.0 - momentum_) * running_var_[c] + momentum_ * unbiased;
        } else {
            mu = running_mean_[c];
            var = running_var_[c];
        }
        inv_std[c] = 1.0 / std::sqrt(var + eps_);
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t i = (s * channels_ + c) * plane + p;
                xhat[i] = (x[i] - mu) * inv_std[c];
                out[i] = gamma[c] * xhat[i] + beta[c];
            }
        }
    }
    if (training) {
        normalized_ = std::move(xhat);
        inv_std_ = std::move(inv_std);
    }
    return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    const std::size_t n = normalized_.dim(0);
    const std::size_t plane = normalized_.ndim() == 4 ? normalized_.dim(2) * normalized_.dim(3) : 1;
    const auto count = static_cast<double>(n * plane);
    const double* gamma = params_[0].value.data().data();
    double* dgamma = params_[0].grad.data().data();
    double* dbeta = params_[1].grad.data().data();
    Tensor dx(normalized_.shape());
    for (std::size_t c = 0; c < channels_; ++c) {
        double sg = 0.0, sgx = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t i = (s * channels_ + c) * plane + p;
                sg += grad_out[i];
                sgx += grad_out[i] * normalized_[i];
            }
        }
        dgamma[c] = sgx;
        dbeta[c] = sg;
        const double k = gamma[c] * inv_std_[c] / count;
        for (std::size_t s = 0; s < n; ++s) {
            for (std::size_t p = 0; p < plane; ++p) {
                const std::size_t i = (s * channels_ + c) * plane + p;
                dx[i] = k * (count * grad_out[i] - sg - normalized_[i] * sgx);
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& x, bool training) {
    if (x.ndim() < 2) throw ShapeError("Flatten: expected a batch");
    if (training) input_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor Flatten::backward(const Tensor& grad_out) { return grad_out.reshaped(input_shape_); }

}  // namespace fedspectra
