#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dinf/checkpoint.hpp"
#include "dinf/config.hpp"
#include "dinf/csv.hpp"
#include "dinf/optim.hpp"
#include "dinf/pde.hpp"

namespace dinf {

// Subcommand drivers. Each one assembles a model and a problem from a
// run_config, trains, and writes the run artifacts into the output directory:
// history.csv, field.csv, field renders, metrics.txt, and checkpoint.bin.
// metrics.txt holds no timing, so reruns with the same seed compare bit-exact.

// ---------------------------------------------------------------- schemas

struct schema_defaults {
    std::string n_max = "64";
    std::string s = "3";
    std::string f = "2";
    std::string kind = "linear";
    std::string hidden = "64";
    std::string act = "tanh";
    std::string output_scale = "1";
    std::string iterations = "2000";
    std::string lr = "0.005";
    std::string chunk = "64";
    std::string batch;  // empty: the subcommand samples a fixed pixel grid
    std::string out_dir = "runs/run";
    std::string field_res = "128";
    bool boundary_keys = false;
    std::string sigma_spatial = "0.05";
    std::string sigma_initial = "0.05";
    bool profile_keys = false;
    std::string profile_center = "-1.5";
    std::string profile_width = "0.1";
    std::string profile_amp = "1";
};

inline config_schema base_schema(const schema_defaults& d) {
    config_schema s;
    s.add("grid.n_max", d.n_max, "finest grid resolution per axis");
    s.add("grid.s", d.s, "number of scales; each halves the resolution");
    s.add("grid.f", d.f, "features per scale");
    s.add("rbf.epsilon", "1", "kernel sharpness in cell units");
    s.add("rbf.ring", "3", "kernel neighborhood half-width in cells");
    s.add("decoder.kind", d.kind, "decoder: linear or mlp");
    s.add("decoder.hidden", d.hidden, "mlp hidden widths, comma separated");
    s.add("decoder.activation", d.act, "mlp activation: tanh or swish");
    s.add("decoder.output_scale", d.output_scale, "constant factor on the decoder output");
    s.add("train.iterations", d.iterations, "optimization steps");
    s.add("train.lr", d.lr, "adam learning rate");
    if (!d.batch.empty())
        s.add("train.batch", d.batch, "stratified sampling cells per axis, comma separated");
    s.add("train.chunk", d.chunk, "samples recorded per tape");
    s.add("train.seed", "1", "seed for parameter init and batch draws");
    s.add("train.threads", "1", "worker threads");
    s.add("train.metric_every", "100", "history cadence in iterations, 0 for endpoints only");
    s.add("train.time_budget", "0", "wall-clock cutoff in seconds, 0 to disable");
    s.add("io.out", d.out_dir, "output directory; the DINF_OUT env var wins");
    s.add("io.field_res", d.field_res, "field.csv and render samples per axis");
    if (d.boundary_keys) {
        s.add("boundary.sigma_spatial", d.sigma_spatial,
              "spatial boundary blend width, normalized units");
        s.add("boundary.sigma_initial", d.sigma_initial,
              "initial-time blend width, normalized units");
    }
    if (d.profile_keys) {
        s.add("boundary.profile_center", d.profile_center,
              "initial pulse center per spatial axis, comma separated, physical units");
        s.add("boundary.profile_width", d.profile_width, "initial pulse width, physical units");
        s.add("boundary.profile_amp", d.profile_amp, "initial pulse amplitude");
    }
    return s;
}

inline config_schema fit_schema() {
    schema_defaults d;
    d.n_max = "128";
    d.s = "4";
    d.iterations = "1000";
    d.out_dir = "runs/fit";
    config_schema s = base_schema(d);
    s.add("io.image", "", "target image, pgm or ppm");
    return s;
}

inline config_schema poisson_schema() {
    schema_defaults d;
    d.n_max = "128";
    d.s = "4";
    d.iterations = "2000";
    d.out_dir = "runs/poisson";
    config_schema s = base_schema(d);
    s.add("io.image", "", "target image, pgm or ppm, grayscale");
    s.add("poisson.source", "grad", "supervision: grad (sobel) or lapl (5-point laplacian)");
    s.add("poisson.target_scale", "0", "factor on the derivative targets; 0 picks the default");
    return s;
}

inline config_schema heat_schema() {
    schema_defaults d;
    d.n_max = "64";
    d.s = "3";
    d.iterations = "2000";
    d.batch = "64,64";
    d.out_dir = "runs/heat";
    d.boundary_keys = true;
    config_schema s = base_schema(d);
    s.add("heat.alpha", "1", "diffusivity");
    s.add("heat.t_end", "4", "end of the time axis");
    return s;
}

inline config_schema advect_schema() {
    schema_defaults d;
    d.n_max = "64";
    d.s = "3";
    d.iterations = "2000";
    d.batch = "64,64";
    d.out_dir = "runs/advect";
    d.boundary_keys = true;
    d.profile_keys = true;
    config_schema s = base_schema(d);
    s.add("advect.velocity", "0.25", "transport speed per spatial axis, comma separated");
    s.add("advect.x_lo", "-2", "spatial axis lower bound");
    s.add("advect.x_hi", "2", "spatial axis upper bound");
    s.add("advect.t_end", "4", "end of the time axis");
    return s;
}

inline config_schema helmholtz_schema() {
    schema_defaults d;
    d.n_max = "128";
    d.s = "4";
    d.kind = "mlp";
    d.act = "swish";
    d.iterations = "2500";
    d.lr = "0.001";
    d.batch = "48,48";
    d.out_dir = "runs/helmholtz";
    config_schema s = base_schema(d);
    s.add("helmholtz.omega", "20", "angular frequency; the wavenumber at unit speed");
    s.add("helmholtz.source_weight", "0",
          "weight on samples inside the source peak; 0 derives it from the batch size");
    return s;
}

inline config_schema eikonal_schema() {
    schema_defaults d;
    d.iterations = "2000";
    d.batch = "32,32";
    d.out_dir = "runs/eikonal";
    config_schema s = base_schema(d);
    s.add("eikonal.surface", "circle", "surface samples: circle, sphere, or file");
    s.add("eikonal.count", "512", "generated surface sample count");
    s.add("eikonal.radius", "0.5", "generated surface radius");
    s.add("eikonal.center", "0,0", "generated surface center, comma separated");
    s.add("eikonal.dim", "2", "field dimension when reading surface samples from a file");
    s.add("io.points", "", "oriented point file for eikonal.surface = file");
    return s;
}

inline config_schema check_schema() {
    config_schema s;
    s.add("check.points", "200", "probe points per dimension");
    s.add("check.seed", "1", "seed for models and probes");
    return s;
}

inline config_schema schema_for(const std::string& sub) {
    if (sub == "fit") return fit_schema();
    if (sub == "poisson") return poisson_schema();
    if (sub == "heat") return heat_schema();
    if (sub == "advect") return advect_schema();
    if (sub == "helmholtz") return helmholtz_schema();
    if (sub == "eikonal") return eikonal_schema();
    if (sub == "check") return check_schema();
    throw config_error("unknown subcommand '" + sub + "'");
}

// ------------------------------------------------------------ model build

struct built_model {
    param_store store;
    field_model fm;
    decoder_config dec;
};

inline built_model build_model(const run_config& c, int dim, int out_width,
                               std::span<const axis_range> axes, const boundary_config& bc) {
    built_model bm;
    const int n_max = int(c.integer("grid.n_max"));
    const int scales = int(c.integer("grid.s"));
    const int feat = int(c.integer("grid.f"));

    decoder_config dc;
    dc.kind = c.choice<decoder_kind>("decoder.kind",
                                     {{"linear", decoder_kind::linear}, {"mlp", decoder_kind::mlp}});
    if (dc.kind == decoder_kind::mlp) dc.hidden = c.integers("decoder.hidden");
    dc.act = c.choice<activation>("decoder.activation",
                                  {{"tanh", activation::tanh_act}, {"swish", activation::swish}});
    dc.out = out_width;
    dc.output_scale = c.number("decoder.output_scale");

    rng gen(std::uint64_t(c.integer("train.seed")));
    bm.fm.mg = create_multigrid(bm.store, dim, n_max, scales, feat, gen);
    bm.fm.dec = create_decoder(bm.store, scales * feat, dc, gen);
    bm.fm.rbf.epsilon = c.number("rbf.epsilon");
    bm.fm.rbf.ring = int(c.integer("rbf.ring"));
    bm.fm.dom = make_domain(dim, axes);
    bm.fm.bc = bc;
    validate_field(bm.fm);
    bm.dec = dc;
    return bm;
}

inline std::vector<int> batch_res_from(const run_config& c, int dim) {
    std::vector<int> res = c.integers("train.batch");
    if (int(res.size()) != dim)
        throw config_error("train.batch: expected " + std::to_string(dim) +
                           " comma-separated cell counts, got " + std::to_string(res.size()));
    return res;
}

inline train_config train_config_from(const run_config& c) {
    train_config tc;
    std::int64_t iters = c.integer("train.iterations");
    if (iters < 0) throw config_error("train.iterations: must be nonnegative");
    tc.iterations = std::uint64_t(iters);
    tc.adam.lr = c.number("train.lr");
    if (!(tc.adam.lr > 0.0)) throw config_error("train.lr: must be positive");
    std::int64_t chunk = c.integer("train.chunk");
    if (chunk < 1) throw config_error("train.chunk: must be positive");
    tc.chunk = std::size_t(chunk);
    tc.seed = std::uint64_t(c.integer("train.seed"));
    std::int64_t threads = c.integer("train.threads");
    if (threads < 1) throw config_error("train.threads: must be positive");
    tc.threads = int(threads);
    std::int64_t cadence = c.integer("train.metric_every");
    if (cadence < 0) throw config_error("train.metric_every: must be nonnegative");
    tc.metric_every = std::uint64_t(cadence);
    tc.time_budget = c.number("train.time_budget");
    return tc;
}

// ------------------------------------------------------------- artifacts

inline std::string resolve_out_dir(const run_config& c) {
    const char* env = std::getenv("DINF_OUT");
    std::string dir = (env && *env) ? std::string(env) : c.text("io.out");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory " + dir + ": " + ec.message());
    return dir;
}

inline void write_metrics_file(const std::string& path,
                               std::span<const std::pair<std::string, double>> metrics) {
    std::string out;
    for (const auto& [key, value] : metrics) out += key + "=" + format_double(value) + "\n";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw io_error("write failure on " + path);
}

inline std::vector<std::pair<std::string, double>> read_metrics_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path + " for reading");
    std::vector<std::pair<std::string, double>> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw data_error(path + ": line " + std::to_string(lineno) + ": expected key=value");
        double v = 0.0;
        const char* b = line.data() + eq + 1;
        auto [end, ec] = std::from_chars(b, line.data() + line.size(), v);
        if (ec != std::errc() || end != line.data() + line.size())
            throw data_error(path + ": line " + std::to_string(lineno) + ": not a number: '" +
                             line.substr(eq + 1) + "'");
        out.emplace_back(line.substr(0, eq), v);
    }
    return out;
}

// field values on a regular grid in physical coordinates, axis d-1 fastest
inline void write_field_csv(const std::string& path, const field_model& fm,
                            const param_store& store, int res) {
    if (res < 2) throw config_error("io.field_res: must be at least 2");
    const int d = fm.mg.dim;
    const int k = fm.dec.out_width;
    std::vector<std::string> header;
    for (int a = 0; a < d; ++a) header.push_back("x" + std::to_string(a));
    for (int c = 0; c < k; ++c) header.push_back("u" + std::to_string(c));
    csv_writer out(path, header);

    std::vector<int> idx(std::size_t(d), 0);
    std::vector<double> xn(std::size_t(d), 0.0);
    std::vector<double> row(std::size_t(d + k), 0.0);
    while (true) {
        for (int a = 0; a < d; ++a) {
            xn[std::size_t(a)] = -1.0 + 2.0 * (double(idx[std::size_t(a)]) + 0.5) / double(res);
            row[std::size_t(a)] = fm.dom.to_phys(a, xn[std::size_t(a)]);
        }
        auto u = field_values(fm, store, xn);
        for (int c = 0; c < k; ++c) row[std::size_t(d + c)] = u[std::size_t(c)];
        out.row(row);
        int a = d - 1;
        for (; a >= 0; --a) {
            if (++idx[std::size_t(a)] < res) break;
            idx[std::size_t(a)] = 0;
        }
        if (a < 0) break;
    }
    out.close();
}

// grayscale renders of a 2-d field, one per channel, min-max normalized
inline void write_field_renders(const std::string& dir, const field_model& fm,
                                const param_store& store, int res) {
    if (fm.mg.dim != 2) return;
    const int k = fm.dec.out_width;
    std::vector<image> ims(std::size_t(k), make_image(res, res));
    std::array<double, 2> xn;
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            xn[0] = pixel_center_norm(j, res);
            xn[1] = pixel_center_norm(i, res);
            auto u = field_values(fm, store, xn);
            for (int c = 0; c < k; ++c) ims[std::size_t(c)].at(i, j) = u[std::size_t(c)];
        }
    for (int c = 0; c < k; ++c) {
        image& im = ims[std::size_t(c)];
        auto [lo, hi] = std::minmax_element(im.pix.begin(), im.pix.end());
        double span = *hi - *lo;
        for (double& v : im.pix) v = span > 0.0 ? (v - *lo) / span : 0.5;
        std::string name = k == 1 ? "field.pgm" : "field_" + std::to_string(c) + ".pgm";
        write_pnm(dir + "/" + name, im);
    }
}

struct run_outputs {
    std::string dir;
    train_result result;
};

// the common tail of every training subcommand
template <class Problem, class ExtraArtifacts>
run_outputs run_and_write(const run_config& c, built_model& bm, Problem& prob,
                          ExtraArtifacts&& extra) {
    train_config tc = train_config_from(c);
    run_outputs out;
    out.dir = resolve_out_dir(c);  // fail on a bad directory before training
    out.result = train(prob, bm.store, tc);

    write_history_csv(out.dir + "/history.csv", out.result.history);
    const int res = int(c.integer("io.field_res"));
    write_field_csv(out.dir + "/field.csv", bm.fm, bm.store, res);
    write_field_renders(out.dir, bm.fm, bm.store, res);

    std::vector<std::pair<std::string, double>> metrics;
    metrics.emplace_back("iterations", double(out.result.iterations));
    metrics.emplace_back("initial_loss", out.result.initial_loss);
    metrics.emplace_back("final_loss", out.result.final_loss);
    auto fin = prob.final_metrics(bm.store);
    metrics.insert(metrics.end(), fin.begin(), fin.end());
    write_metrics_file(out.dir + "/metrics.txt", metrics);
    write_checkpoint(out.dir + "/checkpoint.bin", bm.fm.mg, bm.dec, bm.store);
    extra(out.dir);

    std::printf("%s=%s loss %.3g -> %.3g in %llu iterations (%.1f s), wrote %s\n",
                prob.metric_name(), format_double(out.result.final_metric).c_str(),
                out.result.initial_loss, out.result.final_loss,
                static_cast<unsigned long long>(out.result.iterations), out.result.seconds,
                out.dir.c_str());
    return out;
}

// -------------------------------------------------------------- drivers

inline int run_fit(const run_config& c) {
    image target = read_pnm(c.text("io.image"));
    const std::array<axis_range, 2> axes{{{-1.0, 1.0}, {-1.0, 1.0}}};
    built_model bm = build_model(c, 2, target.channels, axes, boundary_config{});
    signal_fit_problem prob(bm.fm, target);
    run_and_write(c, bm, prob, [&](const std::string& dir) {
        write_pnm(dir + "/render.pgm", prob.render(bm.store));
    });
    return 0;
}

inline int run_poisson(const run_config& c) {
    image target = read_pnm(c.text("io.image"));
    const bool grad = c.choice<bool>("poisson.source", {{"grad", true}, {"lapl", false}});
    double scale = c.number("poisson.target_scale");
    if (scale == 0.0) scale = grad ? 10.0 : 1e4;
    if (!(scale > 0.0)) throw config_error("poisson.target_scale: must be positive");

    const std::array<axis_range, 2> axes{{{-1.0, 1.0}, {-1.0, 1.0}}};
    built_model bm = build_model(c, 2, 1, axes, boundary_config{});
    auto finish = [&](auto& prob) {
        run_and_write(c, bm, prob, [&](const std::string& dir) {
            image render = prob.render(bm.store);
            write_pnm(dir + "/render.pgm", render);
            write_pnm(dir + "/render_dc.pgm", dc_align(render, prob.target()));
        });
    };
    if (grad) {
        poisson_grad_problem prob(bm.fm, target, scale);
        finish(prob);
    } else {
        poisson_lapl_problem prob(bm.fm, target, scale);
        finish(prob);
    }
    return 0;
}

inline int run_heat(const run_config& c) {
    const double alpha = c.number("heat.alpha");
    if (!(alpha > 0.0)) throw config_error("heat.alpha: must be positive");
    const double t_end = c.number("heat.t_end");
    if (!(t_end > 0.0)) throw config_error("heat.t_end: must be positive");

    boundary_config bc;
    bc.mode = blend_mode::initial_spatial;
    bc.profile = initial_profile::sine_pi;
    bc.sigma_spatial = c.number("boundary.sigma_spatial");
    bc.sigma_initial = c.number("boundary.sigma_initial");

    const std::array<axis_range, 2> axes{{{-1.0, 1.0}, {0.0, t_end}}};
    built_model bm = build_model(c, 2, 1, axes, bc);
    auto batch = batch_res_from(c, 2);
    heat_problem prob(bm.fm, alpha, batch);
    run_and_write(c, bm, prob, [](const std::string&) {});
    return 0;
}

inline int run_advect(const run_config& c) {
    std::vector<double> vel = c.numbers("advect.velocity");
    const int sd = int(vel.size());
    if (sd < 1 || sd > 2)
        throw config_error("advect.velocity: expected 1 or 2 speeds, got " + std::to_string(sd));
    const double x_lo = c.number("advect.x_lo");
    const double x_hi = c.number("advect.x_hi");
    if (!(x_hi > x_lo)) throw config_error("advect.x_lo/advect.x_hi: need x_hi > x_lo");
    const double t_end = c.number("advect.t_end");
    if (!(t_end > 0.0)) throw config_error("advect.t_end: must be positive");

    boundary_config bc;
    bc.mode = blend_mode::initial_spatial;
    bc.profile = initial_profile::gauss;
    bc.sigma_spatial = c.number("boundary.sigma_spatial");
    bc.sigma_initial = c.number("boundary.sigma_initial");
    auto center = c.numbers("boundary.profile_center");
    if (int(center.size()) != sd)
        throw config_error("boundary.profile_center: expected " + std::to_string(sd) +
                           " values, got " + std::to_string(center.size()));
    for (int k = 0; k < sd; ++k) bc.profile_center[std::size_t(k)] = center[std::size_t(k)];
    bc.profile_width = c.number("boundary.profile_width");
    bc.profile_amp = c.number("boundary.profile_amp");

    std::vector<axis_range> axes(std::size_t(sd), axis_range{x_lo, x_hi});
    axes.push_back({0.0, t_end});
    built_model bm = build_model(c, sd + 1, 1, axes, bc);
    auto batch = batch_res_from(c, sd + 1);
    advect_problem prob(bm.fm, vel, batch);
    run_and_write(c, bm, prob, [](const std::string&) {});
    return 0;
}

inline int run_helmholtz(const run_config& c) {
    const double omega = c.number("helmholtz.omega");
    const double source_weight = c.number("helmholtz.source_weight");
    if (source_weight < 0.0) throw config_error("helmholtz.source_weight: must be nonnegative");

    const std::array<axis_range, 2> axes{{{-1.0, 1.0}, {-1.0, 1.0}}};
    built_model bm = build_model(c, 2, 2, axes, boundary_config{});
    auto batch = batch_res_from(c, 2);
    helmholtz_problem prob(bm.fm, omega, batch, source_weight);
    run_and_write(c, bm, prob, [](const std::string&) {});
    return 0;
}

inline int run_eikonal(const run_config& c) {
    const int kind =
        c.choice<int>("eikonal.surface", {{"circle", 0}, {"sphere", 1}, {"file", 2}});
    oriented_points surf;
    bool has_ref = false;
    std::vector<double> center;
    double radius = 0.0;
    if (kind == 2) {
        surf = read_pointcloud(c.text("io.points"), int(c.integer("eikonal.dim")));
    } else {
        const int want_dim = kind == 0 ? 2 : 3;
        center = c.numbers("eikonal.center");
        if (int(center.size()) != want_dim)
            throw config_error("eikonal.center: expected " + std::to_string(want_dim) +
                               " values, got " + std::to_string(center.size()));
        radius = c.number("eikonal.radius");
        if (!(radius > 0.0)) throw config_error("eikonal.radius: must be positive");
        const int count = int(c.integer("eikonal.count"));
        if (count < 4) throw config_error("eikonal.count: need at least 4 samples");
        surf = kind == 0 ? circle_points(std::size_t(count), center, radius)
                         : sphere_points(std::size_t(count), center, radius);
        has_ref = true;
    }

    const int dim = surf.dim;
    std::vector<axis_range> axes(std::size_t(dim), axis_range{-1.0, 1.0});
    built_model bm = build_model(c, dim, 1, axes, boundary_config{});
    auto batch = batch_res_from(c, dim);
    eikonal_problem prob(bm.fm, surf, batch);
    if (has_ref) prob.set_reference_sphere(center, radius);
    run_and_write(c, bm, prob, [](const std::string&) {});
    return 0;
}

// --------------------------------------------------------------- check

// finite-difference validation of the jet derivatives on random models;
// returns the largest relative error seen so the caller can print it
struct check_report {
    double max_rel_d1 = 0.0;
    double max_rel_d2 = 0.0;
    bool pass = false;
};

// Keeps a probe point at least margin away from the nearest grid line of an
// n_max-cell axis. FD stencils must not straddle cell boundaries: there the
// neighbor set switches and derivative continuity is only fringe-deep, a
// designed property that the partition-of-unity checks measure separately.
inline double away_from_grid_lines(double xn, int n_max, double margin) {
    const double cell = 2.0 / double(n_max);
    const double f = (xn + 1.0) / cell;
    const double base = std::floor(f);
    double off = f - base;
    const double m = margin / cell;
    if (off < m) off = m;
    if (off > 1.0 - m) off = 1.0 - m;
    return -1.0 + (base + off) * cell;
}

inline check_report run_derivative_check(int points_per_dim, std::uint64_t seed) {
    check_report rep;
    auto rel = [](double got, double want, double floor) {
        double denom = std::max(std::fabs(want), floor);
        return std::fabs(got - want) / denom;
    };
    for (int d = 1; d <= 3; ++d) {
        param_store store;
        rng gen(seed + std::uint64_t(d));
        field_model fm;
        fm.mg = create_multigrid(store, d, 8, 2, 2, gen);
        fm.dec = create_decoder(store, 4, decoder_config{}, gen);
        fm.dom = unit_domain(d);
        validate_field(fm);
        for (double& v : store.values()) v = gen.uniform(-0.5, 0.5);

        std::vector<double> xn(std::size_t(d), 0.0);
        std::vector<double> xp(std::size_t(d), 0.0);
        auto value_at = [&](std::span<const double> q) {
            return field_values(fm, store, q)[0];
        };
        for (int n = 0; n < points_per_dim; ++n) {
            const double h1 = 1e-5;
            const double h2 = 1e-4;
            for (int k = 0; k < d; ++k)
                xn[std::size_t(k)] =
                    away_from_grid_lines(gen.uniform(-0.95, 0.95), fm.mg.n_max, 5.0 * h2);
            auto u = eval_field_at<2>(fm, store, xn)[0];
            for (int k = 0; k < d; ++k) {
                xp = xn;
                xp[std::size_t(k)] = xn[std::size_t(k)] + h1;
                double up = value_at(xp);
                xp[std::size_t(k)] = xn[std::size_t(k)] - h1;
                double dn = value_at(xp);
                rep.max_rel_d1 =
                    std::max(rep.max_rel_d1, rel(u.g[std::size_t(k)], (up - dn) / (2.0 * h1), 1e-6));

                xp[std::size_t(k)] = xn[std::size_t(k)] + h2;
                double u2p = value_at(xp);
                xp[std::size_t(k)] = xn[std::size_t(k)] - h2;
                double u2n = value_at(xp);
                double want_kk = (u2p + u2n - 2.0 * u.v) / (h2 * h2);
                rep.max_rel_d2 = std::max(
                    rep.max_rel_d2, rel(u.h[std::size_t(hess_index(k, k))], want_kk, 1e-2));
                for (int m = k + 1; m < d; ++m) {
                    auto corner = [&](double sk, double sm) {
                        xp = xn;
                        xp[std::size_t(k)] += sk * h2;
                        xp[std::size_t(m)] += sm * h2;
                        return value_at(xp);
                    };
                    double want_km = (corner(1, 1) + corner(-1, -1) - corner(1, -1) -
                                      corner(-1, 1)) /
                                     (4.0 * h2 * h2);
                    rep.max_rel_d2 = std::max(
                        rep.max_rel_d2, rel(u.h[std::size_t(hess_index(k, m))], want_km, 1e-2));
                }
            }
        }
    }
    rep.pass = rep.max_rel_d1 < 1e-5 && rep.max_rel_d2 < 1e-3;
    return rep;
}

inline int run_check(const run_config& c) {
    const int points = int(c.integer("check.points"));
    if (points < 1) throw config_error("check.points: must be positive");
    auto rep = run_derivative_check(points, std::uint64_t(c.integer("check.seed")));
    std::printf("max relative derivative error: first %.3g (tol 1e-5), second %.3g (tol 1e-3)\n",
                rep.max_rel_d1, rep.max_rel_d2);
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

inline int run_subcommand(const std::string& sub, const run_config& c) {
    if (sub == "fit") return run_fit(c);
    if (sub == "poisson") return run_poisson(c);
    if (sub == "heat") return run_heat(c);
    if (sub == "advect") return run_advect(c);
    if (sub == "helmholtz") return run_helmholtz(c);
    if (sub == "eikonal") return run_eikonal(c);
    if (sub == "check") return run_check(c);
    throw config_error("unknown subcommand '" + sub + "'");
}

}  // namespace dinf
