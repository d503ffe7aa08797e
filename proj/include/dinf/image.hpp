#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dinf/errors.hpp"

namespace dinf {

// Images are dense double buffers in [0, 1], row-major with the channel
// fastest. Grayscale is one channel, color three.
struct image {
    int w = 0;
    int h = 0;
    int channels = 1;
    std::vector<double> pix;

    double& at(int i, int j, int c = 0) {
        return pix[(std::size_t(i) * std::size_t(w) + std::size_t(j)) * std::size_t(channels) +
                   std::size_t(c)];
    }
    double at(int i, int j, int c = 0) const {
        return pix[(std::size_t(i) * std::size_t(w) + std::size_t(j)) * std::size_t(channels) +
                   std::size_t(c)];
    }
};

inline image make_image(int w, int h, int channels = 1) {
    if (w < 1 || h < 1 || (channels != 1 && channels != 3))
        throw config_error("image: bad shape " + std::to_string(w) + "x" + std::to_string(h) +
                           "x" + std::to_string(channels));
    image im;
    im.w = w;
    im.h = h;
    im.channels = channels;
    im.pix.assign(std::size_t(w) * std::size_t(h) * std::size_t(channels), 0.0);
    return im;
}

// Center of pixel index idx on an axis with `extent` pixels, in [-1, 1].
inline double pixel_center_norm(int idx, int extent) {
    return -1.0 + 2.0 * (double(idx) + 0.5) / double(extent);
}

namespace detail {

struct pnm_cursor {
    const std::string& buf;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw data_error("pnm parse error at byte " + std::to_string(pos) + ": " + what);
    }
    bool eof() const { return pos >= buf.size(); }
    // whitespace and '#' comments separate header tokens
    void skip_separators() {
        while (!eof()) {
            char c = buf[pos];
            if (c == '#') {
                while (!eof() && buf[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }
    long parse_uint(const char* name) {
        skip_separators();
        if (eof()) fail(std::string("missing ") + name);
        if (buf[pos] < '0' || buf[pos] > '9')
            fail(std::string("expected an unsigned integer for ") + name);
        long v = 0;
        while (!eof() && buf[pos] >= '0' && buf[pos] <= '9') {
            v = v * 10 + (buf[pos] - '0');
            if (v > 1000000000L) fail(std::string(name) + " out of range");
            ++pos;
        }
        return v;
    }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path + " for reading");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failure on " + path);
    return buf;
}

}  // namespace detail

// Parses P2/P5 (grayscale) and P3/P6 (color) with maxval up to 65535; sample
// values are scaled by maxval and clamped to [0, 1]. Malformed content is
// reported with the byte offset where parsing stopped.
inline image parse_pnm(const std::string& buf) {
    detail::pnm_cursor cur{buf};
    if (buf.size() < 2 || buf[0] != 'P') cur.fail("missing PNM magic");
    char kind = buf[1];
    if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
        cur.fail("unsupported PNM type 'P" + std::string(1, kind) + "'");
    cur.pos = 2;
    bool ascii = kind == '2' || kind == '3';
    int channels = (kind == '3' || kind == '6') ? 3 : 1;

    long w = cur.parse_uint("width");
    long h = cur.parse_uint("height");
    long maxval = cur.parse_uint("maxval");
    if (w < 1 || h < 1 || w > 1 << 16 || h > 1 << 16) cur.fail("bad image dimensions");
    if (maxval < 1 || maxval > 65535) cur.fail("maxval must be in [1, 65535]");

    image im = make_image(int(w), int(h), channels);
    std::size_t samples = im.pix.size();

    if (ascii) {
        for (std::size_t s = 0; s < samples; ++s) {
            long v = cur.parse_uint("sample");
            im.pix[s] = std::clamp(double(v) / double(maxval), 0.0, 1.0);
        }
    } else {
        // exactly one separator byte after maxval, then the payload
        if (cur.eof()) cur.fail("missing separator after maxval");
        char sep = buf[cur.pos];
        if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
            cur.fail("expected a whitespace separator after maxval");
        ++cur.pos;
        int bytes = maxval > 255 ? 2 : 1;
        std::size_t need = samples * std::size_t(bytes);
        std::size_t have = buf.size() - cur.pos;
        if (have < need) {
            cur.pos = buf.size();
            cur.fail("payload truncated: need " + std::to_string(need) + " bytes, have " +
                     std::to_string(have));
        }
        for (std::size_t s = 0; s < samples; ++s) {
            unsigned long v = static_cast<unsigned char>(buf[cur.pos++]);
            if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(buf[cur.pos++]);
            im.pix[s] = std::clamp(double(v) / double(maxval), 0.0, 1.0);
        }
    }
    return im;
}

inline image read_pnm(const std::string& path) {
    try {
        return parse_pnm(detail::read_file_bytes(path));
    } catch (const data_error& e) {
        throw data_error(path + ": " + e.what());
    }
}

// Writes PGM for one channel, PPM for three; binary P5/P6 or ASCII P2/P3.
inline void write_pnm(const std::string& path, const image& im, bool binary = true,
                      int maxval = 255) {
    if (maxval != 255 && maxval != 65535)
        throw config_error("write_pnm: maxval must be 255 or 65535");
    if (im.channels != 1 && im.channels != 3)
        throw config_error("write_pnm: images must have 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open " + path + " for writing");
    char kind = im.channels == 1 ? (binary ? '5' : '2') : (binary ? '6' : '3');
    out << 'P' << kind << '\n' << im.w << ' ' << im.h << '\n' << maxval << '\n';
    auto quant = [&](double v) {
        long q = std::lround(std::clamp(v, 0.0, 1.0) * double(maxval));
        return std::clamp(q, 0L, long(maxval));
    };
    if (binary) {
        std::string payload;
        payload.reserve(im.pix.size() * (maxval > 255 ? 2 : 1));
        for (double v : im.pix) {
            long q = quant(v);
            if (maxval > 255) payload.push_back(char((q >> 8) & 0xff));
            payload.push_back(char(q & 0xff));
        }
        out.write(payload.data(), std::streamsize(payload.size()));
    } else {
        int per_line = 0;
        for (std::size_t s = 0; s < im.pix.size(); ++s) {
            out << quant(im.pix[s]);
            if (++per_line == 12) {
                out << '\n';
                per_line = 0;
            } else if (s + 1 < im.pix.size()) {
                out << ' ';
            }
        }
        if (per_line != 0) out << '\n';
    }
    if (!out) throw io_error("write failure on " + path);
}

namespace detail {
inline int clamp_idx(int i, int n) { return std::clamp(i, 0, n - 1); }
}  // namespace detail

// 3x3 correlation with replicate padding, applied per channel.
inline image correlate3(const image& im, const double k[3][3], double scale) {
    image out = make_image(im.w, im.h, im.channels);
    for (int i = 0; i < im.h; ++i)
        for (int j = 0; j < im.w; ++j)
            for (int c = 0; c < im.channels; ++c) {
                double acc = 0.0;
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        acc += k[di + 1][dj + 1] * im.at(detail::clamp_idx(i + di, im.h),
                                                         detail::clamp_idx(j + dj, im.w), c);
                out.at(i, j, c) = acc * scale;
            }
    return out;
}

struct gradient_images {
    image gx, gy;
};

// Sobel derivative estimates in pixel units (kernel / 8), times scale.
// gx differentiates along the width axis, gy along the height axis.
inline gradient_images sobel_gradients(const image& im, double scale = 1.0) {
    const double kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const double ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    return {correlate3(im, kx, scale / 8.0), correlate3(im, ky, scale / 8.0)};
}

// 5-point second-difference estimate of the Laplacian in pixel units, times
// scale.
inline image laplace_filter(const image& im, double scale = 1.0) {
    const double kl[3][3] = {{0, 1, 0}, {1, -4, 1}, {0, 1, 0}};
    return correlate3(im, kl, scale);
}

namespace detail {
inline void check_same_shape(const image& a, const image& b, const char* who) {
    if (a.w != b.w || a.h != b.h || a.channels != b.channels)
        throw numeric_error(std::string(who) + ": image shapes differ");
}
}  // namespace detail

inline double mse(const image& a, const image& b) {
    detail::check_same_shape(a, b, "mse");
    double acc = 0.0;
    for (std::size_t s = 0; s < a.pix.size(); ++s) {
        double d = a.pix[s] - b.pix[s];
        acc += d * d;
    }
    return acc / double(a.pix.size());
}

inline double mae(const image& a, const image& b) {
    detail::check_same_shape(a, b, "mae");
    double acc = 0.0;
    for (std::size_t s = 0; s < a.pix.size(); ++s) acc += std::fabs(a.pix[s] - b.pix[s]);
    return acc / double(a.pix.size());
}

// Returns a copy of `a` shifted so that mean(a - b) = 0; used before PSNR when
// the reconstruction is only defined up to a constant.
inline image dc_align(const image& a, const image& b) {
    detail::check_same_shape(a, b, "dc_align");
    double mean = 0.0;
    for (std::size_t s = 0; s < a.pix.size(); ++s) mean += a.pix[s] - b.pix[s];
    mean /= double(a.pix.size());
    image out = a;
    for (double& v : out.pix) v -= mean;
    return out;
}

// Peak signal-to-noise ratio against a unit dynamic range; identical images
// give +infinity.
inline double psnr(const image& a, const image& b) {
    double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

}  // namespace dinf
