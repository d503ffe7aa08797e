#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dinf/domain.hpp"
#include "dinf/errors.hpp"
#include "dinf/field.hpp"
#include "dinf/image.hpp"
#include "dinf/interp.hpp"
#include "dinf/pointcloud.hpp"
#include "dinf/reference.hpp"
#include "dinf/rng.hpp"

namespace dinf {

// Problem definitions couple a field model to a residual operator, a sampling
// plan, and a held-out accuracy metric. train() in optim.hpp is generic over
// this shape:
//
//   static constexpr int order;          jet order the residual needs
//   field_model fm;
//   void begin_iteration(it, gen);       draws a fresh batch or keeps a fixed one
//   std::size_t batch_size() const;
//   sample_point(i), sample_rings(i);    normalized coordinates and rings
//   T sample_loss(span<jet<T, order>>, i)  per-sample term; any reweighting is
//                                          folded in so that the plain mean over
//                                          the batch is the training loss
//   double metric(store) const;          held-out scalar logged in the history
//   metric_name(), final_metrics(store)
//
// sample_loss is a template over the scalar type so the same code path runs on
// recorded variables during training and on plain doubles when closed-form
// jets are pushed through it in tests.

// ---- residual operators ------------------------------------------------------
// All operate on jets in physical units; model jets come out of eval_field in
// normalized coordinates and go through to_physical first.

// u_t - alpha u_xx on axes (x, t)
template <class T>
T heat_residual(const jet<T, 2>& u, double alpha) {
    return u.g[1] - alpha * u.h[hess_index(0, 0)];
}

// u_t + vel . grad u on axes (x[, y], t); time is the last axis
template <class T, int P>
T advect_residual(const jet<T, P>& u, std::span<const double> vel) {
    T r = u.g[vel.size()];
    for (std::size_t k = 0; k < vel.size(); ++k) r = r + vel[k] * u.g[k];
    return r;
}

// Complex coordinate stretch for one axis of an absorbing layer. Inside
// |x| <= band the stretch is the identity; outside, a quadratic absorber
// sigma = a0 * omega * ((|x| - band) / band)^2 enters as e = 1 - i sigma/omega,
// so omega cancels and e depends only on position.
struct pml_axis {
    std::complex<double> stretch;
    std::complex<double> d_stretch;  // d(stretch)/dx
};

inline pml_axis pml_stretch(double x, double a0, double band) {
    double a = std::abs(x);
    if (a <= band) return {{1.0, 0.0}, {0.0, 0.0}};
    double s = (a - band) / band;
    double sign = x < 0.0 ? -1.0 : 1.0;
    return {{1.0, -a0 * s * s}, {0.0, -2.0 * a0 * s * sign / band}};
}

template <class T>
struct complex_pair {
    T re, im;
};

// Absorbing-layer Helmholtz residual, expanded so only real coefficients
// multiply field terms:
//   R = E lap(u) + dE1 u_1 + dE2 u_2 + E omega^2 u + g,  E = e1 e2
// with u = u_re + i u_im. Zero exactly where (lap + omega^2) u = -g holds and
// the stretches are trivial.
template <class T>
complex_pair<T> helmholtz_residual(const jet<T, 2>& u_re, const jet<T, 2>& u_im,
                                   std::span<const double> x, double omega, double source,
                                   double a0 = 5.0, double band = 0.5) {
    pml_axis p0 = pml_stretch(x[0], a0, band);
    pml_axis p1 = pml_stretch(x[1], a0, band);
    std::complex<double> e = p0.stretch * p1.stretch;
    std::complex<double> d0 = p0.d_stretch * p1.stretch;
    std::complex<double> d1 = p0.stretch * p1.d_stretch;
    std::complex<double> ek2 = e * (omega * omega);

    const std::size_t xx = hess_index(0, 0), yy = hess_index(1, 1);
    T lap_re = u_re.h[xx] + u_re.h[yy];
    T lap_im = u_im.h[xx] + u_im.h[yy];

    T r_re = T(source);
    T r_im = T(0.0);
    // c * (fr + i fi) accumulated into (r_re, r_im), skipping zero parts
    auto add = [&r_re, &r_im](const std::complex<double>& c, const T& fr, const T& fi) {
        if (c.real() != 0.0) {
            r_re = r_re + c.real() * fr;
            r_im = r_im + c.real() * fi;
        }
        if (c.imag() != 0.0) {
            r_re = r_re - c.imag() * fi;
            r_im = r_im + c.imag() * fr;
        }
    };
    add(e, lap_re, lap_im);
    add(d0, u_re.g[0], u_im.g[0]);
    add(d1, u_re.g[1], u_im.g[1]);
    add(ek2, u_re.v, u_im.v);
    return {r_re, r_im};
}

// |grad u| with a tiny floor inside the root so the derivative stays finite
// when the gradient vanishes
template <class T, int P>
T grad_norm(const jet<T, P>& u) {
    using std::sqrt;
    T q = u.g[0] * u.g[0];
    for (int k = 1; k < u.dim; ++k) q = q + u.g[k] * u.g[k];
    return sqrt(q + 1e-24);
}

// ---- batch helpers -----------------------------------------------------------

namespace detail {

// per-point neighbor rings for every sample of a batch
inline void batch_rings(const multigrid& mg, const rbf_config& rbf, const sample_batch& b,
                        std::vector<cell_ring>& out) {
    std::size_t scales = std::size_t(mg.scales);
    out.resize(b.count * scales);
    for (std::size_t i = 0; i < b.count; ++i)
        for (int s = 0; s < mg.scales; ++s)
            out[i * scales + std::size_t(s)] = scale_ring(mg, s, b.at(i), rbf.ring);
}

inline bool unit_axes(const domain_map& d) {
    for (int k = 0; k < d.dim; ++k)
        if (d.axes[std::size_t(k)].lo != -1.0 || d.axes[std::size_t(k)].hi != 1.0) return false;
    return true;
}

}  // namespace detail

// Pixel-center batch in row-major pixel order: sample i*width + j sits at the
// center of pixel (i, j), axis 0 horizontal, axis 1 vertical.
inline sample_batch pixel_batch(int width, int height) {
    sample_batch b;
    b.dim = 2;
    b.count = std::size_t(width) * std::size_t(height);
    b.x.resize(b.count * 2);
    b.cell.resize(b.count);
    for (int i = 0; i < height; ++i)
        for (int j = 0; j < width; ++j) {
            std::size_t n = std::size_t(i) * std::size_t(width) + std::size_t(j);
            b.cell[n] = std::uint32_t(n);
            b.x[n * 2 + 0] = pixel_center_norm(j, width);
            b.x[n * 2 + 1] = pixel_center_norm(i, height);
        }
    return b;
}

// Mean absolute error of the first field component against a reference
// function of physical coordinates, over a regular held-out grid.
template <class Ref>
double field_mae(const field_model& fm, const param_store& store, std::span<const int> res,
                 Ref&& ref) {
    sample_batch b = regular_sample(res);
    std::array<double, 3> xp{};
    double acc = 0.0;
    for (std::size_t i = 0; i < b.count; ++i) {
        auto xn = b.at(i);
        for (int k = 0; k < b.dim; ++k) xp[std::size_t(k)] = fm.dom.to_phys(k, xn[std::size_t(k)]);
        double u = field_values(fm, store, xn)[0];
        acc += std::fabs(u - ref(std::span<const double>(xp.data(), std::size_t(b.dim))));
    }
    return acc / double(b.count);
}

namespace detail {

// Shared state for problems supervised on a fixed pixel grid: the batch visits
// every pixel center each iteration and never changes.
struct pixel_base {
    image target;
    sample_batch batch;
    std::vector<cell_ring> rings;
    std::size_t scales = 0;

    void init(const field_model& fm, image im) {
        if (fm.mg.dim != 2) throw config_error("image problems need a 2-d field");
        if (!detail::unit_axes(fm.dom))
            throw config_error("image problems use the unit domain; pixel centers define the "
                               "coordinates");
        target = std::move(im);
        batch = pixel_batch(target.w, target.h);
        scales = std::size_t(fm.mg.scales);
        batch_rings(fm.mg, fm.rbf, batch, rings);
    }

    std::span<const cell_ring> rings_of(std::size_t i) const {
        return {rings.data() + i * scales, scales};
    }

    // field values at the pixel centers, one image channel per output
    image render(const field_model& fm, const param_store& store) const {
        image out = make_image(target.w, target.h, fm.dec.out_width);
        direct_params dp{&store};
        std::vector<jet<double, 1>> u(std::size_t(fm.dec.out_width));
        for (std::size_t i = 0; i < batch.count; ++i) {
            eval_field<1>(fm, dp, batch.at(i), rings_of(i), std::span<jet<double, 1>>(u));
            for (int c = 0; c < fm.dec.out_width; ++c)
                out.pix[i * std::size_t(fm.dec.out_width) + std::size_t(c)] = u[std::size_t(c)].v;
        }
        return out;
    }
};

}  // namespace detail

// ---- direct signal fit -------------------------------------------------------

struct signal_fit_problem {
    static constexpr int order = 1;
    field_model fm;

    signal_fit_problem(field_model model, image target) : fm(std::move(model)) {
        if (fm.dec.out_width != target.channels)
            throw config_error("fit: decoder has " + std::to_string(fm.dec.out_width) +
                               " outputs but the target has " + std::to_string(target.channels) +
                               " channels");
        px_.init(fm, std::move(target));
    }

    void begin_iteration(std::uint64_t, rng&) {}
    std::size_t batch_size() const { return px_.batch.count; }
    std::span<const double> sample_point(std::size_t i) const { return px_.batch.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const { return px_.rings_of(i); }

    template <class T>
    T sample_loss(std::span<const jet<T, 1>> u, std::size_t i) const {
        int ch = px_.target.channels;
        T loss = abs_sub(u[0].v - px_.target.pix[i * std::size_t(ch)]);
        for (int c = 1; c < ch; ++c)
            loss = loss + abs_sub(u[std::size_t(c)].v - px_.target.pix[i * std::size_t(ch) + std::size_t(c)]);
        return loss;
    }

    double metric(const param_store& store) const { return psnr(render(store), px_.target); }
    const char* metric_name() const { return "psnr_db"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        image r = render(store);
        return {{"psnr_db", psnr(r, px_.target)}, {"mae", mae(r, px_.target)}};
    }

    image render(const param_store& store) const { return px_.render(fm, store); }
    const image& target() const { return px_.target; }

  private:
    detail::pixel_base px_;
};

// ---- gradient-supervised reconstruction ---------------------------------------

// Matches scaled per-pixel slopes of the target image. The model's
// normalized-coordinate gradient times 2/extent is a per-pixel derivative, so
// both sides of the residual carry the same units and the same target_scale.
struct poisson_grad_problem {
    static constexpr int order = 1;
    field_model fm;

    poisson_grad_problem(field_model model, image target, double target_scale = 10.0)
        : fm(std::move(model)) {
        if (fm.dec.out_width != 1 || target.channels != 1)
            throw config_error("gradient reconstruction needs one output and a gray target");
        px_.init(fm, std::move(target));
        grads_ = sobel_gradients(px_.target, target_scale);
        cx_ = target_scale * 2.0 / double(px_.target.w);
        cy_ = target_scale * 2.0 / double(px_.target.h);
    }

    void begin_iteration(std::uint64_t, rng&) {}
    std::size_t batch_size() const { return px_.batch.count; }
    std::span<const double> sample_point(std::size_t i) const { return px_.batch.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const { return px_.rings_of(i); }

    template <class T>
    T sample_loss(std::span<const jet<T, 1>> u, std::size_t i) const {
        return abs_sub(cx_ * u[0].g[0] - grads_.gx.pix[i]) +
               abs_sub(cy_ * u[0].g[1] - grads_.gy.pix[i]);
    }

    // reconstruction is defined up to a constant, so the metric aligns means
    double metric(const param_store& store) const {
        image r = px_.render(fm, store);
        return psnr(dc_align(r, px_.target), px_.target);
    }
    const char* metric_name() const { return "psnr_dc_db"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        image r = dc_align(px_.render(fm, store), px_.target);
        return {{"psnr_dc_db", psnr(r, px_.target)}, {"mae_dc", mae(r, px_.target)}};
    }

    image render(const param_store& store) const { return px_.render(fm, store); }
    const image& target() const { return px_.target; }

  private:
    detail::pixel_base px_;
    gradient_images grads_;
    double cx_ = 0.0, cy_ = 0.0;
};

// ---- laplacian-supervised reconstruction --------------------------------------

struct poisson_lapl_problem {
    static constexpr int order = 2;
    field_model fm;

    poisson_lapl_problem(field_model model, image target, double target_scale = 1e4)
        : fm(std::move(model)) {
        if (fm.dec.out_width != 1 || target.channels != 1)
            throw config_error("laplacian reconstruction needs one output and a gray target");
        px_.init(fm, std::move(target));
        lap_ = laplace_filter(px_.target, target_scale);
        cxx_ = target_scale * 4.0 / (double(px_.target.w) * double(px_.target.w));
        cyy_ = target_scale * 4.0 / (double(px_.target.h) * double(px_.target.h));
    }

    void begin_iteration(std::uint64_t, rng&) {}
    std::size_t batch_size() const { return px_.batch.count; }
    std::span<const double> sample_point(std::size_t i) const { return px_.batch.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const { return px_.rings_of(i); }

    template <class T>
    T sample_loss(std::span<const jet<T, 2>> u, std::size_t i) const {
        const std::size_t xx = hess_index(0, 0), yy = hess_index(1, 1);
        return abs_sub(cxx_ * u[0].h[xx] + cyy_ * u[0].h[yy] - lap_.pix[i]);
    }

    double metric(const param_store& store) const {
        image r = px_.render(fm, store);
        return psnr(dc_align(r, px_.target), px_.target);
    }
    const char* metric_name() const { return "psnr_dc_db"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        image r = dc_align(px_.render(fm, store), px_.target);
        return {{"psnr_dc_db", psnr(r, px_.target)}, {"mae_dc", mae(r, px_.target)}};
    }

    image render(const param_store& store) const { return px_.render(fm, store); }
    const image& target() const { return px_.target; }

  private:
    detail::pixel_base px_;
    image lap_;
    double cxx_ = 0.0, cyy_ = 0.0;
};

// ---- heat equation -------------------------------------------------------------

// u_t = alpha u_xx on axes (x, t); fresh stratified batch every iteration;
// held-out accuracy against the decaying sine mode.
struct heat_problem {
    static constexpr int order = 2;
    field_model fm;
    double alpha = 1.0;

    heat_problem(field_model model, double alpha_, std::span<const int> batch_res)
        : fm(std::move(model)), alpha(alpha_) {
        if (fm.mg.dim != 2 || fm.dec.out_width != 1)
            throw config_error("heat: needs a 2-d field (x, t) with one output");
        if (batch_res.size() != 2) throw config_error("heat: batch resolution needs 2 entries");
        for (int r : batch_res)
            if (r < 1) throw config_error("heat: batch resolution entries must be positive");
        res_ = {batch_res[0], batch_res[1]};
    }

    void begin_iteration(std::uint64_t, rng& gen) {
        batch_ = stratified_sample(std::span<const int>(res_.data(), 2), gen);
        detail::batch_rings(fm.mg, fm.rbf, batch_, rings_);
    }
    std::size_t batch_size() const { return batch_.count; }
    std::span<const double> sample_point(std::size_t i) const { return batch_.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const {
        return {rings_.data() + i * std::size_t(fm.mg.scales), std::size_t(fm.mg.scales)};
    }

    template <class T>
    T sample_loss(std::span<const jet<T, 2>> u, std::size_t) const {
        return abs_sub(heat_residual(to_physical(u[0], fm.dom), alpha));
    }

    double metric(const param_store& store) const {
        std::array<int, 2> res{256, 256};
        return field_mae(fm, store, res, [this](std::span<const double> xp) {
            return heat_solution(xp[0], xp[1], alpha);
        });
    }
    const char* metric_name() const { return "mae"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        return {{"mae", metric(store)}};
    }

  private:
    std::array<int, 2> res_{};
    sample_batch batch_;
    std::vector<cell_ring> rings_;
};

// ---- advection -----------------------------------------------------------------

// u_t + vel . grad u = 0 for a Gaussian pulse pinned by the initial blend;
// accuracy is judged at the final time, where transport errors accumulate.
struct advect_problem {
    static constexpr int order = 1;
    field_model fm;
    std::vector<double> vel;

    advect_problem(field_model model, std::vector<double> velocity, std::span<const int> batch_res)
        : fm(std::move(model)), vel(std::move(velocity)) {
        int sd = fm.mg.dim - 1;
        if (sd < 1 || fm.dec.out_width != 1)
            throw config_error("advect: needs axes (x[, y], t) and one output");
        if (int(vel.size()) != sd)
            throw config_error("advect: velocity needs one entry per spatial axis");
        if (fm.bc.profile != initial_profile::gauss)
            throw config_error("advect: the initial profile must be the gaussian pulse");
        if (batch_res.size() != std::size_t(fm.mg.dim))
            throw config_error("advect: batch resolution needs one entry per axis");
        for (int r : batch_res)
            if (r < 1) throw config_error("advect: batch resolution entries must be positive");
        for (std::size_t k = 0; k < batch_res.size(); ++k) res_[k] = batch_res[k];
    }

    void begin_iteration(std::uint64_t, rng& gen) {
        batch_ = stratified_sample(std::span<const int>(res_.data(), std::size_t(fm.mg.dim)), gen);
        detail::batch_rings(fm.mg, fm.rbf, batch_, rings_);
    }
    std::size_t batch_size() const { return batch_.count; }
    std::span<const double> sample_point(std::size_t i) const { return batch_.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const {
        return {rings_.data() + i * std::size_t(fm.mg.scales), std::size_t(fm.mg.scales)};
    }

    template <class T>
    T sample_loss(std::span<const jet<T, 1>> u, std::size_t) const {
        return abs_sub(advect_residual(to_physical(u[0], fm.dom), vel));
    }

    // mean error over space at the final time
    double metric(const param_store& store) const { return final_time_mae(store, 256); }
    const char* metric_name() const { return "mae_final_time"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        return {{"mae_final_time", final_time_mae(store, 256)},
                {"amplitude_loss", amplitude_loss(store)}};
    }

    double final_time_mae(const param_store& store, int res) const {
        int sd = fm.mg.dim - 1;
        std::size_t total = 1;
        for (int k = 0; k < sd; ++k) total *= std::size_t(res);
        std::array<double, 3> xn{}, xp{};
        xn[std::size_t(sd)] = 1.0;  // final time
        double t_end = fm.dom.axes[std::size_t(sd)].hi;
        double acc = 0.0;
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t rest = i;
            for (int k = sd - 1; k >= 0; --k) {
                int idx = int(rest % std::size_t(res));
                rest /= std::size_t(res);
                xn[std::size_t(k)] = -1.0 + 2.0 * (double(idx) + 0.5) / double(res);
                xp[std::size_t(k)] = fm.dom.to_phys(k, xn[std::size_t(k)]);
            }
            double u = field_values(fm, store, std::span<const double>(xn.data(),
                                                                       std::size_t(fm.mg.dim)))[0];
            double want = advect_solution_nd(std::span<const double>(xp.data(), std::size_t(sd)),
                                             t_end, vel,
                                             std::span<const double>(fm.bc.profile_center.data(),
                                                                     std::size_t(sd)),
                                             fm.bc.profile_width, fm.bc.profile_amp);
            acc += std::fabs(u - want);
        }
        return acc / double(total);
    }

    // fraction of the pulse height lost at the final time, from a coarse scan
    // refined around the best cell (positive means the peak decayed)
    double amplitude_loss(const param_store& store) const {
        int sd = fm.mg.dim - 1;
        std::array<double, 3> best{};
        best[std::size_t(sd)] = 1.0;
        double coarse = scan_max(store, 256, best);
        double spacing = 2.0 / 256.0;
        std::array<double, 3> center = best;
        double fine = refine_max(store, center, spacing);
        return 1.0 - std::max(coarse, fine) / fm.bc.profile_amp;
    }

  private:
    double scan_max(const param_store& store, int res, std::array<double, 3>& argmax) const {
        int sd = fm.mg.dim - 1;
        std::size_t total = 1;
        for (int k = 0; k < sd; ++k) total *= std::size_t(res);
        std::array<double, 3> xn{};
        xn[std::size_t(sd)] = 1.0;
        double best = -1e300;
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t rest = i;
            for (int k = sd - 1; k >= 0; --k) {
                int idx = int(rest % std::size_t(res));
                rest /= std::size_t(res);
                xn[std::size_t(k)] = -1.0 + 2.0 * (double(idx) + 0.5) / double(res);
            }
            double u = field_values(fm, store, std::span<const double>(xn.data(),
                                                                       std::size_t(fm.mg.dim)))[0];
            if (u > best) {
                best = u;
                argmax = xn;
            }
        }
        return best;
    }

    double refine_max(const param_store& store, const std::array<double, 3>& center,
                      double spacing) const {
        int sd = fm.mg.dim - 1;
        std::size_t total = 1;
        const int fine = 33;
        for (int k = 0; k < sd; ++k) total *= std::size_t(fine);
        std::array<double, 3> xn = center;
        double best = -1e300;
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t rest = i;
            for (int k = sd - 1; k >= 0; --k) {
                int idx = int(rest % std::size_t(fine));
                rest /= std::size_t(fine);
                double off = (double(idx) / double(fine - 1) - 0.5) * 2.0 * spacing;
                xn[std::size_t(k)] = std::clamp(center[std::size_t(k)] + off, -1.0, 1.0);
            }
            double u = field_values(fm, store, std::span<const double>(xn.data(),
                                                                       std::size_t(fm.mg.dim)))[0];
            best = std::max(best, u);
        }
        return best;
    }

    std::array<int, 3> res_{};
    sample_batch batch_;
    std::vector<cell_ring> rings_;
};

// ---- helmholtz with absorbing layer --------------------------------------------

// Two-channel (re, im) scattering field driven by a narrow Gaussian source at
// the origin; the quadratic absorber acts outside |x_k| > band. Samples close
// to the source get a separate weight so the localized drive is not washed
// out by the mean.
struct helmholtz_problem {
    static constexpr int order = 2;
    field_model fm;
    double omega = 20.0;
    double a0 = 5.0;
    double band = 0.5;
    double source_variance = 1e-4;

    helmholtz_problem(field_model model, double omega_, std::span<const int> batch_res,
                      double source_weight = 0.0)
        : fm(std::move(model)), omega(omega_) {
        if (fm.mg.dim != 2 || fm.dec.out_width != 2)
            throw config_error("helmholtz: needs a 2-d field with outputs (re, im)");
        if (!detail::unit_axes(fm.dom))
            throw config_error("helmholtz: the absorber is tied to the unit domain");
        if (!(omega > 0.0)) throw config_error("helmholtz: omega must be positive");
        if (batch_res.size() != 2)
            throw config_error("helmholtz: batch resolution needs 2 entries");
        for (int r : batch_res)
            if (r < 1) throw config_error("helmholtz: batch resolution entries must be positive");
        res_ = {batch_res[0], batch_res[1]};
        peak_ = gauss_source(std::array<double, 2>{0.0, 0.0}, source_variance);
        std::size_t batch = std::size_t(res_[0]) * std::size_t(res_[1]);
        // default near-source weight: batch / 5000, so larger batches push the
        // localized drive harder
        weight_ = source_weight > 0.0 ? source_weight : double(batch) / 5000.0;
    }

    void begin_iteration(std::uint64_t, rng& gen) {
        batch_ = stratified_sample(std::span<const int>(res_.data(), 2), gen);
        detail::batch_rings(fm.mg, fm.rbf, batch_, rings_);
        src_.resize(batch_.count);
        for (std::size_t i = 0; i < batch_.count; ++i)
            src_[i] = gauss_source(batch_.at(i), source_variance);
    }
    std::size_t batch_size() const { return batch_.count; }
    std::span<const double> sample_point(std::size_t i) const { return batch_.at(i); }
    std::span<const cell_ring> sample_rings(std::size_t i) const {
        return {rings_.data() + i * std::size_t(fm.mg.scales), std::size_t(fm.mg.scales)};
    }

    // weight applied to sample i's residual; the source region counts as
    // everything above a fixed fraction of the peak drive
    double source_weight(std::size_t i) const {
        return src_[i] > 1e-8 * peak_ ? weight_ : 1.0;
    }

    template <class T>
    T sample_loss(std::span<const jet<T, 2>> u, std::size_t i) const {
        complex_pair<T> r =
            helmholtz_residual(u[0], u[1], batch_.at(i), omega, src_[i], a0, band);
        return source_weight(i) * (abs_sub(r.re) + abs_sub(r.im));
    }

    // L1 distance to the radiating point-source response over the inner box,
    // after one joint least-squares amplitude fit; the source ball is excluded
    double metric(const param_store& store) const {
        double re = 0.0, im = 0.0, scale = 0.0;
        green_errors(store, 96, re, im, scale);
        return std::max(re, im);
    }
    const char* metric_name() const { return "green_l1"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        double re = 0.0, im = 0.0, scale = 0.0;
        green_errors(store, 128, re, im, scale);
        return {{"green_l1_re", re}, {"green_l1_im", im}, {"amplitude_scale", scale}};
    }

    void green_errors(const param_store& store, int res, double& l1_re, double& l1_im,
                      double& scale, double box = 0.5, double r_min = 0.05) const {
        std::vector<double> ur, ui, gr, gi;
        for (int i = 0; i < res; ++i)
            for (int j = 0; j < res; ++j) {
                double x = -box + (double(j) + 0.5) * 2.0 * box / double(res);
                double y = -box + (double(i) + 0.5) * 2.0 * box / double(res);
                double r = std::hypot(x, y);
                if (r < r_min) continue;
                std::array<double, 2> xn{x, y};
                auto u = field_values(fm, store, xn);
                complex_value g = helmholtz_green(omega, r, r_min);
                ur.push_back(u[0]);
                ui.push_back(u[1]);
                gr.push_back(g.re);
                gi.push_back(g.im);
            }
        double uu = 0.0, ug = 0.0;
        for (std::size_t k = 0; k < ur.size(); ++k) {
            uu += ur[k] * ur[k] + ui[k] * ui[k];
            ug += ur[k] * gr[k] + ui[k] * gi[k];
        }
        scale = uu > 0.0 ? ug / uu : 1.0;
        l1_re = l1_im = 0.0;
        for (std::size_t k = 0; k < ur.size(); ++k) {
            l1_re += std::fabs(scale * ur[k] - gr[k]);
            l1_im += std::fabs(scale * ui[k] - gi[k]);
        }
        l1_re /= double(ur.size());
        l1_im /= double(ur.size());
    }

  private:
    std::array<int, 2> res_{};
    double peak_ = 0.0;
    double weight_ = 1.0;
    sample_batch batch_;
    std::vector<cell_ring> rings_;
    std::vector<double> src_;
};

// ---- eikonal distance field ------------------------------------------------------

// |grad u| = 1 in the volume, u = 0 and grad u = n on the oriented surface
// samples, plus a decay term that keeps the zero set from spreading off the
// surface. Per-sample terms are scaled so each group contributes its own mean.
struct eikonal_problem {
    static constexpr int order = 1;
    field_model fm;
    double decay = 100.0;

    eikonal_problem(field_model model, oriented_points surface, std::span<const int> batch_res)
        : fm(std::move(model)), surf_(std::move(surface)) {
        if (fm.dec.out_width != 1) throw config_error("eikonal: needs one output");
        if (surf_.dim != fm.mg.dim)
            throw config_error("eikonal: surface dimension does not match the field");
        if (!detail::unit_axes(fm.dom))
            throw config_error("eikonal: distances are measured in unit-domain coordinates");
        if (batch_res.size() != std::size_t(fm.mg.dim))
            throw config_error("eikonal: batch resolution needs one entry per axis");
        n_dom_ = 1;
        for (std::size_t k = 0; k < batch_res.size(); ++k) {
            if (batch_res[k] < 1)
                throw config_error("eikonal: batch resolution entries must be positive");
            res_[k] = batch_res[k];
            n_dom_ *= std::size_t(batch_res[k]);
        }
        for (std::size_t i = 0; i < surf_.count(); ++i)
            for (int k = 0; k < surf_.dim; ++k)
                if (std::fabs(surf_.point(i)[std::size_t(k)]) > 1.0)
                    throw data_error("eikonal: surface point " + std::to_string(i) +
                                     " lies outside the unit domain");
        std::size_t scales = std::size_t(fm.mg.scales);
        surf_rings_.resize(surf_.count() * scales);
        for (std::size_t i = 0; i < surf_.count(); ++i)
            for (int s = 0; s < fm.mg.scales; ++s)
                surf_rings_[i * scales + std::size_t(s)] =
                    scale_ring(fm.mg, s, surf_.point(i), fm.rbf.ring);
        double total = double(n_dom_ + surf_.count());
        w_dom_ = total / double(n_dom_);
        w_surf_ = total / double(surf_.count());
    }

    // enables the signed-distance metric for analytically known shapes
    void set_reference_sphere(std::span<const double> center, double radius) {
        for (int k = 0; k < fm.mg.dim; ++k) ref_center_[std::size_t(k)] = center[std::size_t(k)];
        ref_radius_ = radius;
        has_ref_ = true;
    }

    void begin_iteration(std::uint64_t, rng& gen) {
        batch_ = stratified_sample(std::span<const int>(res_.data(), std::size_t(fm.mg.dim)), gen);
        detail::batch_rings(fm.mg, fm.rbf, batch_, rings_);
    }
    std::size_t batch_size() const { return n_dom_ + surf_.count(); }
    std::span<const double> sample_point(std::size_t i) const {
        return i < n_dom_ ? batch_.at(i) : surf_.point(i - n_dom_);
    }
    std::span<const cell_ring> sample_rings(std::size_t i) const {
        std::size_t scales = std::size_t(fm.mg.scales);
        if (i < n_dom_) return {rings_.data() + i * scales, scales};
        return {surf_rings_.data() + (i - n_dom_) * scales, scales};
    }

    template <class T>
    T sample_loss(std::span<const jet<T, 1>> u, std::size_t i) const {
        using std::exp;
        if (i < n_dom_) {
            T unit = abs_sub(grad_norm(u[0]) - 1.0);
            T off_surface = exp(-decay * abs_sub(u[0].v));
            return w_dom_ * (unit + off_surface);
        }
        auto n = surf_.normal(i - n_dom_);
        T aligned = n[0] * u[0].g[0];
        for (int k = 1; k < fm.mg.dim; ++k) aligned = aligned + n[std::size_t(k)] * u[0].g[k];
        // score the gradient direction only: the raw inner product is unbounded
        // below, so inflating the surface gradient would be pure reward
        return w_surf_ * (abs_sub(u[0].v) + (1.0 - aligned / grad_norm(u[0])));
    }

    double metric(const param_store& store) const {
        return has_ref_ ? sdf_mae(store, 200, 0.8) : grad_deviation(store, 100, 0.8);
    }
    const char* metric_name() const { return has_ref_ ? "sdf_mae" : "grad_deviation"; }

    std::vector<std::pair<std::string, double>> final_metrics(const param_store& store) const {
        std::vector<std::pair<std::string, double>> out;
        if (has_ref_) out.emplace_back("sdf_mae", sdf_mae(store, 200, 0.8));
        out.emplace_back("grad_deviation", grad_deviation(store, 100, 0.8));
        out.emplace_back("surface_mae", surface_mae(store));
        return out;
    }

    // mean |u - signed distance| over the box |x|_inf <= extent
    double sdf_mae(const param_store& store, int res, double extent) const {
        double acc = 0.0;
        std::size_t total = each_box_point(res, extent, [&](std::span<const double> x) {
            double u = field_values(fm, store, x)[0];
            acc += std::fabs(u - sphere_sdf(x, std::span<const double>(ref_center_.data(),
                                                                       std::size_t(fm.mg.dim)),
                                            ref_radius_));
        });
        return acc / double(total);
    }

    // mean | |grad u| - 1 | over the same box
    double grad_deviation(const param_store& store, int res, double extent) const {
        double acc = 0.0;
        std::size_t total = each_box_point(res, extent, [&](std::span<const double> x) {
            auto u = eval_field_at<1>(fm, store, x);
            acc += std::fabs(grad_norm(u[0]) - 1.0);
        });
        return acc / double(total);
    }

    double surface_mae(const param_store& store) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < surf_.count(); ++i)
            acc += std::fabs(field_values(fm, store, surf_.point(i))[0]);
        return acc / double(surf_.count());
    }

    const oriented_points& surface() const { return surf_; }
    std::size_t domain_count() const { return n_dom_; }
    double domain_weight() const { return w_dom_; }
    double surface_weight() const { return w_surf_; }

  private:
    template <class Fn>
    std::size_t each_box_point(int res, double extent, Fn&& fn) const {
        int dim = fm.mg.dim;
        std::size_t total = 1;
        for (int k = 0; k < dim; ++k) total *= std::size_t(res);
        std::array<double, 3> x{};
        for (std::size_t i = 0; i < total; ++i) {
            std::size_t rest = i;
            for (int k = dim - 1; k >= 0; --k) {
                int idx = int(rest % std::size_t(res));
                rest /= std::size_t(res);
                x[std::size_t(k)] = -extent + (double(idx) + 0.5) * 2.0 * extent / double(res);
            }
            fn(std::span<const double>(x.data(), std::size_t(dim)));
        }
        return total;
    }

    oriented_points surf_;
    std::array<int, 3> res_{};
    std::size_t n_dom_ = 0;
    double w_dom_ = 1.0, w_surf_ = 1.0;
    std::array<double, 3> ref_center_{};
    double ref_radius_ = 0.0;
    bool has_ref_ = false;
    sample_batch batch_;
    std::vector<cell_ring> rings_;
    std::vector<cell_ring> surf_rings_;
};

}  // namespace dinf
