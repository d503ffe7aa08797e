#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "dinf/decoder.hpp"
#include "dinf/errors.hpp"
#include "dinf/grid.hpp"
#include "dinf/params.hpp"

namespace dinf {

// Binary model snapshot: a fixed magic, the grid and decoder description, and
// the full parameter vector as little-endian 64-bit floats. The header is
// enough to rebuild the parameter layout; everything else (domain, blend,
// kernel) still comes from the run configuration.
inline constexpr char checkpoint_magic[5] = {'D', 'I', 'N', 'F', '1'};

struct checkpoint_data {
    int dim = 0;
    int n_max = 0;
    int scales = 0;
    int feat = 0;
    decoder_config dec;
    std::vector<double> params;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(char((v >> (8 * b)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(char((v >> (8 * b)) & 0xff));
}
inline void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct byte_reader {
    const std::string& buf;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw data_error("checkpoint parse error at byte " + std::to_string(pos) + ": " + what);
    }
    void need(std::size_t n, const char* what) {
        if (buf.size() - pos < n) fail(std::string("truncated while reading ") + what);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= std::uint32_t(static_cast<unsigned char>(buf[pos++])) << (8 * b);
        return v;
    }
    std::uint64_t u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int b = 0; b < 8; ++b) v |= std::uint64_t(static_cast<unsigned char>(buf[pos++])) << (8 * b);
        return v;
    }
    double f64(const char* what) {
        std::uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace detail

inline void write_checkpoint(const std::string& path, const multigrid& mg,
                             const decoder_config& dc, const param_store& store) {
    std::string out;
    out.reserve(64 + store.size() * 8);
    out.append(checkpoint_magic, 5);
    detail::put_u32(out, std::uint32_t(mg.dim));
    detail::put_u32(out, std::uint32_t(mg.n_max));
    detail::put_u32(out, std::uint32_t(mg.scales));
    detail::put_u32(out, std::uint32_t(mg.feat));
    detail::put_u32(out, dc.kind == decoder_kind::linear ? 0u : 1u);
    detail::put_u32(out, std::uint32_t(dc.hidden.size()));
    for (int hw : dc.hidden) detail::put_u32(out, std::uint32_t(hw));
    detail::put_u32(out, dc.act == activation::tanh_act ? 0u : 1u);
    detail::put_u32(out, std::uint32_t(dc.out));
    detail::put_f64(out, dc.output_scale);
    detail::put_u64(out, store.size());
    for (std::size_t i = 0; i < store.size(); ++i) detail::put_f64(out, store[i]);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open " + path + " for writing");
    f.write(out.data(), std::streamsize(out.size()));
    if (!f) throw io_error("write failure on " + path);
}

inline checkpoint_data parse_checkpoint(const std::string& buf) {
    detail::byte_reader r{buf};
    r.need(5, "magic");
    if (std::memcmp(buf.data(), checkpoint_magic, 5) != 0) r.fail("bad magic");
    r.pos = 5;
    checkpoint_data cp;
    cp.dim = int(r.u32("dim"));
    cp.n_max = int(r.u32("n_max"));
    cp.scales = int(r.u32("scales"));
    cp.feat = int(r.u32("feat"));
    std::uint32_t kind = r.u32("decoder kind");
    if (kind > 1) r.fail("unknown decoder kind " + std::to_string(kind));
    cp.dec.kind = kind == 0 ? decoder_kind::linear : decoder_kind::mlp;
    std::uint32_t nh = r.u32("hidden count");
    if (nh > 16) r.fail("implausible hidden layer count " + std::to_string(nh));
    for (std::uint32_t i = 0; i < nh; ++i) cp.dec.hidden.push_back(int(r.u32("hidden width")));
    std::uint32_t act = r.u32("activation");
    if (act > 1) r.fail("unknown activation " + std::to_string(act));
    cp.dec.act = act == 0 ? activation::tanh_act : activation::swish;
    cp.dec.out = int(r.u32("output width"));
    cp.dec.output_scale = r.f64("output scale");
    std::uint64_t count = r.u64("parameter count");
    if (count > (1u << 30)) r.fail("implausible parameter count");
    r.need(std::size_t(count) * 8, "parameters");
    cp.params.resize(std::size_t(count));
    for (std::size_t i = 0; i < cp.params.size(); ++i) cp.params[i] = r.f64("parameter");
    if (r.pos != buf.size()) r.fail("trailing bytes after the parameter block");
    return cp;
}

inline checkpoint_data read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path + " for reading");
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failure on " + path);
    try {
        return parse_checkpoint(buf);
    } catch (const data_error& e) {
        throw data_error(path + ": " + e.what());
    }
}

}  // namespace dinf
