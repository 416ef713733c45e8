#pragma once

#include <memory>
#include <span>
#include <string>

#include "emrecon/nn/kernels.hpp"
#include "emrecon/rng.hpp"

namespace emrecon::nn {

template <class T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string kind() const = 0;
    virtual Tensor<T> forward(const Tensor<T>& x, bool training) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
    virtual std::vector<std::span<T>> params() { return {}; }
    virtual std::vector<std::span<T>> grads() { return {}; }
    void zero_grads() {
        for (auto g : grads()) std::fill(g.begin(), g.end(), T(0));
    }
};

/// 3^ndim convolution, zero padding 1, stride 1, cross-correlation convention.
template <class T>
class Conv : public Layer<T> {
public:
    Conv(int ndim, int in_ch, int out_ch, Rng& rng)
        : ndim_(ndim), in_ch_(in_ch), out_ch_(out_ch), kvol_(ndim == 2 ? 9 : 27) {
        w_.resize(static_cast<std::size_t>(out_ch) * in_ch * kvol_);
        b_.assign(out_ch, T(0));
        gw_.assign(w_.size(), T(0));
        gb_.assign(out_ch, T(0));
        const double bound = std::sqrt(6.0 / (static_cast<double>(in_ch) * kvol_));
        for (auto& w : w_) w = static_cast<T>(rng.uniform(-bound, bound));
    }

    std::string kind() const override { return ndim_ == 2 ? "conv2d" : "conv3d"; }

    Tensor<T> forward(const Tensor<T>& x, bool) override {
        if (x.c != in_ch_) throw std::invalid_argument("Conv: input channel mismatch");
        x_ = x;
        Tensor<T> y(x.n, out_ch_, x.sp);
        conv_forward(x, y, w_.data(), b_.data(), kvol_);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        conv_backward_params(x_, gout, gw_.data(), gb_.data(), kvol_);
        Tensor<T> gin(x_.n, in_ch_, x_.sp);
        conv_backward_input(gout, gin, w_.data(), kvol_);
        return gin;
    }

    std::vector<std::span<T>> params() override { return {std::span<T>(w_), std::span<T>(b_)}; }
    std::vector<std::span<T>> grads() override { return {std::span<T>(gw_), std::span<T>(gb_)}; }

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

private:
    int ndim_, in_ch_, out_ch_, kvol_;
    std::vector<T> w_, b_, gw_, gb_;
    Tensor<T> x_;
};

template <class T>
class ReLU : public Layer<T> {
public:
    std::string kind() const override { return "relu"; }

    Tensor<T> forward(const Tensor<T>& x, bool) override {
        y_ = x;
        for (auto& v : y_.data) v = v > T(0) ? v : T(0);
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        Tensor<T> gin = gout;
        for (std::size_t i = 0; i < gin.data.size(); ++i)
            if (y_.data[i] <= T(0)) gin.data[i] = T(0);
        return gin;
    }

private:
    Tensor<T> y_;
};

template <class T>
class Sigmoid : public Layer<T> {
public:
    std::string kind() const override { return "sigmoid"; }

    Tensor<T> forward(const Tensor<T>& x, bool) override {
        y_ = x;
        for (auto& v : y_.data) v = T(1) / (T(1) + std::exp(-v));
        return y_;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        Tensor<T> gin = gout;
        for (std::size_t i = 0; i < gin.data.size(); ++i)
            gin.data[i] *= y_.data[i] * (T(1) - y_.data[i]);
        return gin;
    }

private:
    Tensor<T> y_;
};

/// 2^ndim max pooling with stride 2; argmax kept for the backward pass.
/// Spatial dims must be even (the model pads inputs to guarantee this).
template <class T>
class MaxPool2 : public Layer<T> {
public:
    std::string kind() const override { return "maxpool2"; }

    Tensor<T> forward(const Tensor<T>& x, bool) override {
        const int ndim = static_cast<int>(x.sp.size());
        for (int d : x.sp)
            if (d % 2 != 0) throw std::invalid_argument("MaxPool2: spatial dims must be even");
        in_sp_ = x.sp;
        std::vector<int> osp(x.sp);
        for (auto& d : osp) d /= 2;
        Tensor<T> y(x.n, x.c, osp);
        argmax_.assign(y.size(), 0);

        const int nx = x.sp[0], ny = x.sp[1], nz = ndim == 3 ? x.sp[2] : 1;
        const int ox = osp[0], oy = osp[1], oz = ndim == 3 ? osp[2] : 1;
        const std::size_t planes = static_cast<std::size_t>(x.n) * x.c;
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::size_t pc = 0; pc < planes; ++pc) {
            const T* in = x.data.data() + pc * x.voxels();
            T* out = y.data.data() + pc * y.voxels();
            std::size_t* am = argmax_.data() + pc * y.voxels();
            for (int z = 0; z < oz; ++z)
                for (int yy = 0; yy < oy; ++yy)
                    for (int xx = 0; xx < ox; ++xx) {
                        T best{};
                        std::size_t best_i = 0;
                        bool first = true;
                        for (int dz = 0; dz < (ndim == 3 ? 2 : 1); ++dz)
                            for (int dy = 0; dy < 2; ++dy)
                                for (int dx = 0; dx < 2; ++dx) {
                                    const std::size_t i =
                                        static_cast<std::size_t>(2 * xx + dx) +
                                        static_cast<std::size_t>(nx) *
                                            ((2 * yy + dy) +
                                             static_cast<std::size_t>(ny) * (2 * z + dz));
                                    if (first || in[i] > best) {
                                        best = in[i];
                                        best_i = i;
                                        first = false;
                                    }
                                }
                        const std::size_t o = static_cast<std::size_t>(xx) +
                                              static_cast<std::size_t>(ox) *
                                                  (yy + static_cast<std::size_t>(oy) * z);
                        out[o] = best;
                        am[o] = best_i;
                    }
        }
        (void)nz;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        Tensor<T> gin(gout.n, gout.c, in_sp_);
        const std::size_t planes = static_cast<std::size_t>(gout.n) * gout.c;
        const std::size_t ovox = gout.voxels();
        const std::size_t ivox = gin.voxels();
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::size_t pc = 0; pc < planes; ++pc) {
            const T* g = gout.data.data() + pc * ovox;
            T* gi = gin.data.data() + pc * ivox;
            const std::size_t* am = argmax_.data() + pc * ovox;
            for (std::size_t i = 0; i < ovox; ++i) gi[am[i]] += g[i];
        }
        return gin;
    }

private:
    std::vector<int> in_sp_;
    std::vector<std::size_t> argmax_;
};

/// Nearest-neighbor doubling along every spatial axis; carries no parameters.
template <class T>
class Upsample2 : public Layer<T> {
public:
    std::string kind() const override { return "upsample2"; }

    Tensor<T> forward(const Tensor<T>& x, bool) override {
        const int ndim = static_cast<int>(x.sp.size());
        in_sp_ = x.sp;
        std::vector<int> osp(x.sp);
        for (auto& d : osp) d *= 2;
        Tensor<T> y(x.n, x.c, osp);
        const int nx = x.sp[0], ny = x.sp[1];
        const int ox = osp[0], oy = osp[1], oz = ndim == 3 ? osp[2] : 1;
        const std::size_t planes = static_cast<std::size_t>(x.n) * x.c;
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::size_t pc = 0; pc < planes; ++pc) {
            const T* in = x.data.data() + pc * x.voxels();
            T* out = y.data.data() + pc * y.voxels();
            for (int z = 0; z < oz; ++z)
                for (int yy = 0; yy < oy; ++yy) {
                    const T* src = in + static_cast<std::size_t>(nx) * ((yy / 2) +
                                       static_cast<std::size_t>(ny) * (z / 2));
                    T* dst = out + static_cast<std::size_t>(ox) * (yy + static_cast<std::size_t>(oy) * z);
                    for (int xx = 0; xx < ox; ++xx) dst[xx] = src[xx / 2];
                }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        const int ndim = static_cast<int>(in_sp_.size());
        Tensor<T> gin(gout.n, gout.c, in_sp_);
        const int nx = in_sp_[0], ny = in_sp_[1];
        const int ox = gout.sp[0], oy = gout.sp[1], oz = ndim == 3 ? gout.sp[2] : 1;
        const std::size_t planes = static_cast<std::size_t>(gout.n) * gout.c;
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (std::size_t pc = 0; pc < planes; ++pc) {
            const T* g = gout.data.data() + pc * gout.voxels();
            T* gi = gin.data.data() + pc * gin.voxels();
            for (int z = 0; z < oz; ++z)
                for (int yy = 0; yy < oy; ++yy) {
                    const T* src = g + static_cast<std::size_t>(ox) * (yy + static_cast<std::size_t>(oy) * z);
                    T* dst = gi + static_cast<std::size_t>(nx) * ((yy / 2) +
                                      static_cast<std::size_t>(ny) * (z / 2));
                    for (int xx = 0; xx < ox; ++xx) dst[xx / 2] += src[xx];
                }
        }
        return gin;
    }

private:
    std::vector<int> in_sp_;
};

/// Per-channel batch normalization over (batch, spatial). Batch statistics in
/// training; exponentially averaged running statistics at inference.
template <class T>
class BatchNorm : public Layer<T> {
public:
    explicit BatchNorm(int channels, double momentum = 0.99)
        : c_(channels), momentum_(momentum) {
        gamma_.assign(c_, T(1));
        beta_.assign(c_, T(0));
        ggamma_.assign(c_, T(0));
        gbeta_.assign(c_, T(0));
        run_mean_.assign(c_, T(0));
        run_var_.assign(c_, T(1));
    }

    std::string kind() const override { return "batchnorm"; }

    Tensor<T> forward(const Tensor<T>& x, bool training) override {
        if (x.c != c_) throw std::invalid_argument("BatchNorm: channel mismatch");
        const std::size_t vox = x.voxels();
        const std::size_t per_ch = static_cast<std::size_t>(x.n) * vox;
        Tensor<T> y(x.n, x.c, x.sp);
        if (training) {
            xhat_ = Tensor<T>(x.n, x.c, x.sp);
            mean_.assign(c_, T(0));
            inv_std_.assign(c_, T(0));
            count_ = static_cast<double>(per_ch);
#pragma omp parallel for schedule(static) num_threads(worker_count())
            for (int ch = 0; ch < c_; ++ch) {
                double m = 0.0;
                for (int s = 0; s < x.n; ++s) {
                    const T* p = x.plane(s, ch);
                    for (std::size_t i = 0; i < vox; ++i) m += static_cast<double>(p[i]);
                }
                m /= count_;
                double var = 0.0;
                for (int s = 0; s < x.n; ++s) {
                    const T* p = x.plane(s, ch);
                    for (std::size_t i = 0; i < vox; ++i) {
                        const double d = static_cast<double>(p[i]) - m;
                        var += d * d;
                    }
                }
                var /= count_;
                const double inv = 1.0 / std::sqrt(var + kEps);
                mean_[ch] = static_cast<T>(m);
                inv_std_[ch] = static_cast<T>(inv);
                for (int s = 0; s < x.n; ++s) {
                    const T* p = x.plane(s, ch);
                    T* xh = xhat_.plane(s, ch);
                    T* o = y.plane(s, ch);
                    for (std::size_t i = 0; i < vox; ++i) {
                        xh[i] = static_cast<T>((static_cast<double>(p[i]) - m) * inv);
                        o[i] = gamma_[ch] * xh[i] + beta_[ch];
                    }
                }
                run_mean_[ch] = static_cast<T>(momentum_ * run_mean_[ch] + (1.0 - momentum_) * m);
                run_var_[ch] = static_cast<T>(momentum_ * run_var_[ch] + (1.0 - momentum_) * var);
            }
        } else {
#pragma omp parallel for schedule(static) num_threads(worker_count())
            for (int ch = 0; ch < c_; ++ch) {
                const double inv = 1.0 / std::sqrt(static_cast<double>(run_var_[ch]) + kEps);
                for (int s = 0; s < x.n; ++s) {
                    const T* p = x.plane(s, ch);
                    T* o = y.plane(s, ch);
                    for (std::size_t i = 0; i < vox; ++i)
                        o[i] = static_cast<T>(gamma_[ch] *
                                                  ((static_cast<double>(p[i]) - run_mean_[ch]) * inv) +
                                              beta_[ch]);
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& gout) override {
        const std::size_t vox = gout.voxels();
        Tensor<T> gin(gout.n, gout.c, gout.sp);
#pragma omp parallel for schedule(static) num_threads(worker_count())
        for (int ch = 0; ch < c_; ++ch) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int s = 0; s < gout.n; ++s) {
                const T* g = gout.plane(s, ch);
                const T* xh = xhat_.plane(s, ch);
                for (std::size_t i = 0; i < vox; ++i) {
                    sum_g += static_cast<double>(g[i]);
                    sum_gx += static_cast<double>(g[i]) * xh[i];
                }
            }
            ggamma_[ch] += static_cast<T>(sum_gx);
            gbeta_[ch] += static_cast<T>(sum_g);
            const double inv_n = 1.0 / count_;
            const double gamma_inv_std = static_cast<double>(gamma_[ch]) * inv_std_[ch];
            for (int s = 0; s < gout.n; ++s) {
                const T* g = gout.plane(s, ch);
                const T* xh = xhat_.plane(s, ch);
                T* gi = gin.plane(s, ch);
                for (std::size_t i = 0; i < vox; ++i)
                    gi[i] = static_cast<T>(gamma_inv_std *
                                           (static_cast<double>(g[i]) -
                                            inv_n * (sum_g + static_cast<double>(xh[i]) * sum_gx)));
            }
        }
        return gin;
    }

    std::vector<std::span<T>> params() override {
        return {std::span<T>(gamma_), std::span<T>(beta_)};
    }
    std::vector<std::span<T>> grads() override {
        return {std::span<T>(ggamma_), std::span<T>(gbeta_)};
    }
    std::vector<std::span<T>> running_stats() {
        return {std::span<T>(run_mean_), std::span<T>(run_var_)};
    }

private:
    static constexpr double kEps = 1e-5;
    int c_;
    double momentum_;
    double count_ = 1.0;
    std::vector<T> gamma_, beta_, ggamma_, gbeta_, run_mean_, run_var_, mean_, inv_std_;
    Tensor<T> xhat_;
};

}  // namespace emrecon::nn
