#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "dinf/checkpoint.hpp"
#include "dinf/csv.hpp"
#include "dinf/image.hpp"
#include "dinf/pointcloud.hpp"
#include "dinf/rng.hpp"

namespace fs = std::filesystem;

namespace {
fs::path tmpdir() {
    auto dir = fs::temp_directory_path() / "dinf_io_test";
    fs::create_directories(dir);
    return dir;
}

dinf::image quantized_noise(int w, int h, int channels, int maxval, unsigned seed) {
    dinf::rng gen(seed);
    auto im = dinf::make_image(w, h, channels);
    for (double& v : im.pix) v = double(gen.below(std::size_t(maxval) + 1)) / double(maxval);
    return im;
}
}  // namespace

TEST_CASE("pnm round trips are lossless for quantized images") {
    struct spec {
        int channels, maxval;
        bool binary;
    };
    for (auto [channels, maxval, binary] : {spec{1, 255, true}, spec{1, 255, false},
                                            spec{1, 65535, true}, spec{3, 255, true},
                                            spec{3, 65535, false}, spec{3, 65535, true}}) {
        auto im = quantized_noise(7, 5, channels, maxval, 11);
        auto path = (tmpdir() / "rt.pnm").string();
        dinf::write_pnm(path, im, binary, maxval);
        auto back = dinf::read_pnm(path);
        REQUIRE(back.w == im.w);
        REQUIRE(back.h == im.h);
        REQUIRE(back.channels == im.channels);
        for (std::size_t s = 0; s < im.pix.size(); ++s) REQUIRE(back.pix[s] == im.pix[s]);
    }
}

TEST_CASE("pnm header comments and clamping are honored") {
    auto im = dinf::parse_pnm("P2 # kind\n# a comment line\n2 1 # shape\n100\n50 200\n");
    REQUIRE(im.w == 2);
    REQUIRE(im.h == 1);
    CHECK(im.at(0, 0) == 0.5);
    CHECK(im.at(0, 1) == 1.0);  // 200 exceeds maxval, clamped on load
}

TEST_CASE("pnm parse errors carry the byte offset") {
    auto offset_of = [](const std::string& buf) -> long {
        try {
            dinf::parse_pnm(buf);
        } catch (const dinf::data_error& e) {
            std::string msg = e.what();
            auto at = msg.find("byte ");
            REQUIRE(at != std::string::npos);
            return std::stol(msg.substr(at + 5));
        }
        FAIL("expected data_error");
        return -1;
    };
    CHECK_THROWS_AS(dinf::parse_pnm("Q5 1 1 255 x"), dinf::data_error);
    CHECK_THROWS_AS(dinf::parse_pnm("P7 1 1 255 x"), dinf::data_error);
    CHECK(offset_of("P2\n2 2 255\n1 2 3") >= 15);   // missing last sample
    CHECK(offset_of("P2\n2 2\n") >= 6);             // missing maxval
    CHECK_THROWS_AS(dinf::parse_pnm("P2\n1 1 0\n0"), dinf::data_error);     // maxval 0
    CHECK_THROWS_AS(dinf::parse_pnm("P2\n1 1 70000\n0"), dinf::data_error); // maxval too big

    // truncated binary payload reports what is missing
    std::string p5 = "P5\n3 2 255\n";
    p5 += std::string(4, '\x10');
    try {
        dinf::parse_pnm(p5);
        FAIL("expected data_error");
    } catch (const dinf::data_error& e) {
        std::string msg = e.what();
        CHECK(msg.find("need 6") != std::string::npos);
        CHECK(msg.find("have 4") != std::string::npos);
    }

    // 16-bit samples are big-endian within the payload
    std::string p5be = "P5\n1 1 65535\n";
    p5be.push_back('\x01');
    p5be.push_back('\x00');
    auto im = dinf::parse_pnm(p5be);
    CHECK(im.at(0, 0) == 256.0 / 65535.0);
}

TEST_CASE("sobel kernels measure per-pixel slopes") {
    // linear ramp: interior gx equals the slope along the width axis
    auto ramp = dinf::make_image(6, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 6; ++j) ramp.at(i, j) = 0.1 * j + 0.05 * i;
    auto g = dinf::sobel_gradients(ramp);
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 5; ++j) {
            CHECK(g.gx.at(i, j) == Catch::Approx(0.1).margin(1e-14));
            CHECK(g.gy.at(i, j) == Catch::Approx(0.05).margin(1e-14));
        }
    // replicate padding halves the one-sided estimate at the edge
    CHECK(g.gx.at(2, 0) == Catch::Approx(0.05).margin(1e-14));

    // hand-computed 3x3 stencil pins the orientation
    auto im = dinf::make_image(3, 3);
    double vals[3][3] = {{0.1, 0.2, 0.0}, {0.0, 0.5, 0.1}, {0.3, 0.1, 0.4}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) im.at(i, j) = vals[i][j];
    auto g2 = dinf::sobel_gradients(im, 10.0);
    CHECK(g2.gx.at(1, 1) == Catch::Approx(10.0 * 0.025).margin(1e-13));
    CHECK(g2.gy.at(1, 1) == Catch::Approx(10.0 * 0.05).margin(1e-13));
}

TEST_CASE("laplace filter is exact on quadratics") {
    auto im = dinf::make_image(7, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 7; ++j) im.at(i, j) = 0.01 * j * j + 0.02 * i * i + 0.003 * i * j;
    auto lap = dinf::laplace_filter(im, 100.0);
    for (int i = 1; i < 5; ++i)
        for (int j = 1; j < 6; ++j)
            CHECK(lap.at(i, j) == Catch::Approx(100.0 * (0.02 + 0.04)).margin(1e-11));
}

TEST_CASE("psnr and alignment behave around known values") {
    auto a = dinf::make_image(4, 4);
    auto b = dinf::make_image(4, 4);
    for (double& v : a.pix) v = 0.5;
    for (double& v : b.pix) v = 0.25;
    CHECK(dinf::mse(a, b) == Catch::Approx(0.0625));
    CHECK(dinf::psnr(a, b) == Catch::Approx(10.0 * std::log10(16.0)));
    CHECK(dinf::mae(a, b) == Catch::Approx(0.25));
    CHECK(std::isinf(dinf::psnr(a, a)));
    CHECK(dinf::psnr(dinf::dc_align(a, b), b) == std::numeric_limits<double>::infinity());

    auto c = dinf::make_image(4, 5);
    CHECK_THROWS_AS(dinf::psnr(a, c), dinf::numeric_error);
}

TEST_CASE("pixel centers map into the open unit square") {
    CHECK(dinf::pixel_center_norm(0, 4) == -0.75);
    CHECK(dinf::pixel_center_norm(3, 4) == 0.75);
    CHECK(dinf::pixel_center_norm(63, 128) == Catch::Approx(-0.0078125));
}

TEST_CASE("pointcloud files round trip and validate") {
    auto dir = tmpdir();
    std::array<double, 2> center{0.1, -0.2};
    auto pts = dinf::circle_points(17, center, 0.5);
    auto path = (dir / "pts2.txt").string();
    dinf::write_pointcloud(path, pts);
    auto back = dinf::read_pointcloud(path, 2);
    REQUIRE(back.count() == 17);
    for (std::size_t i = 0; i < back.x.size(); ++i) {
        CHECK(back.x[i] == pts.x[i]);
        CHECK(back.n[i] == pts.n[i]);
    }

    // comments and near-unit normals are accepted; normals come back unit
    auto path2 = (dir / "pts_manual.txt").string();
    {
        std::ofstream f(path2);
        f << "# oriented samples\n\n";
        f << "0.5 0.25 1.0005 0.0\n";
        f << "  -0.25 0 0 -0.9996\n";
    }
    auto manual = dinf::read_pointcloud(path2, 2);
    REQUIRE(manual.count() == 2);
    CHECK(manual.normal(0)[0] == 1.0);
    CHECK(manual.normal(0)[1] == 0.0);
    CHECK(manual.normal(1)[1] == -1.0);

    CHECK_THROWS_AS(dinf::read_pointcloud((dir / "missing.txt").string(), 2), dinf::io_error);
    CHECK_THROWS_AS(dinf::read_pointcloud(path, 4), dinf::config_error);
}

TEST_CASE("pointcloud rejects bad rows with their line number") {
    auto dir = tmpdir();
    auto expect_line = [&](const std::string& body, const std::string& needle) {
        auto path = (dir / "bad.txt").string();
        std::ofstream(path) << body;
        try {
            dinf::read_pointcloud(path, 2);
            FAIL("expected data_error");
        } catch (const dinf::data_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_line("# ok\n0 0 1 0\n0.5 0.5 1\n", "line 3");
    expect_line("0 0 1 0\n\n\n0 0 0.9 0\n", "line 4");
    expect_line("0 0 one 0\n", "line 1");
    expect_line("# only comments\n", "no points");
}

TEST_CASE("sampled surfaces sit on their spheres with outward normals") {
    std::array<double, 2> c2{0.1, -0.2};
    auto circle = dinf::circle_points(64, c2, 0.5);
    for (std::size_t i = 0; i < circle.count(); ++i) {
        auto x = circle.point(i);
        auto n = circle.normal(i);
        double r = std::hypot(x[0] - c2[0], x[1] - c2[1]);
        CHECK(r == Catch::Approx(0.5).margin(1e-14));
        double outward = (x[0] - c2[0]) * n[0] + (x[1] - c2[1]) * n[1];
        CHECK(outward == Catch::Approx(0.5).margin(1e-14));
    }

    std::array<double, 3> c3{0.0, 0.1, 0.0};
    auto sphere = dinf::sphere_points(200, c3, 0.4);
    double zmin = 1.0, zmax = -1.0;
    for (std::size_t i = 0; i < sphere.count(); ++i) {
        auto x = sphere.point(i);
        auto n = sphere.normal(i);
        double q = 0.0, outward = 0.0, nn = 0.0;
        for (int k = 0; k < 3; ++k) {
            double d = x[k] - c3[k];
            q += d * d;
            outward += d * n[k];
            nn += n[k] * n[k];
        }
        CHECK(std::sqrt(q) == Catch::Approx(0.4).margin(1e-14));
        CHECK(nn == Catch::Approx(1.0).margin(1e-14));
        CHECK(outward > 0.39);
        zmin = std::min(zmin, n[2]);
        zmax = std::max(zmax, n[2]);
    }
    CHECK(zmin < -0.99);
    CHECK(zmax > 0.99);
}

TEST_CASE("csv writes read back bit-exactly") {
    auto path = (tmpdir() / "hist.csv").string();
    std::array<std::string, 3> header{"iteration", "loss", "metric"};
    dinf::csv_writer w(path, header);
    std::array<double, 3> r0{0.0, 0.12345678901234567, -1e-300};
    std::array<double, 3> r1{1.0, 3.0000000000000004, 7.1e299};
    w.row(r0);
    w.row(r1);
    w.close();

    auto data = dinf::read_csv(path);
    REQUIRE(data.header.size() == 3);
    CHECK(data.header[0] == "iteration");
    REQUIRE(data.rows.size() == 2);
    for (int j = 0; j < 3; ++j) {
        CHECK(data.rows[0][j] == r0[j]);
        CHECK(data.rows[1][j] == r1[j]);
    }

    auto short_write = [&] {
        dinf::csv_writer bad(path, header);
        std::array<double, 2> short_row{1.0, 2.0};
        bad.row(short_row);
    };
    CHECK_THROWS_AS(short_write(), dinf::internal_error);
}

TEST_CASE("checkpoints round trip the model description and parameters") {
    dinf::param_store store;
    dinf::rng gen(5);
    auto mg = dinf::create_multigrid(store, 2, 16, 2, 2, gen);
    dinf::decoder_config dc;
    dc.kind = dinf::decoder_kind::mlp;
    dc.hidden = {8, 4};
    dc.act = dinf::activation::swish;
    dc.out = 2;
    dc.output_scale = 10.0;
    dinf::create_decoder(store, 4, dc, gen);
    for (std::size_t i = 0; i < store.size(); ++i) store[i] = gen.uniform(-2.0, 2.0);

    auto path = (tmpdir() / "model.ckpt").string();
    dinf::write_checkpoint(path, mg, dc, store);
    auto cp = dinf::read_checkpoint(path);
    CHECK(cp.dim == 2);
    CHECK(cp.n_max == 16);
    CHECK(cp.scales == 2);
    CHECK(cp.feat == 2);
    CHECK(cp.dec.kind == dinf::decoder_kind::mlp);
    REQUIRE(cp.dec.hidden == std::vector<int>{8, 4});
    CHECK(cp.dec.act == dinf::activation::swish);
    CHECK(cp.dec.out == 2);
    CHECK(cp.dec.output_scale == 10.0);
    REQUIRE(cp.params.size() == store.size());
    for (std::size_t i = 0; i < store.size(); ++i) CHECK(cp.params[i] == store[i]);
}

TEST_CASE("checkpoint corruption is rejected") {
    CHECK_THROWS_AS(dinf::parse_checkpoint("DINF2xxxxxxx"), dinf::data_error);
    CHECK_THROWS_AS(dinf::parse_checkpoint("DI"), dinf::data_error);

    dinf::param_store store;
    dinf::rng gen(5);
    auto mg = dinf::create_multigrid(store, 1, 4, 1, 1, gen);
    auto path = (tmpdir() / "trunc.ckpt").string();
    dinf::write_checkpoint(path, mg, dinf::decoder_config{}, store);
    std::string bytes = dinf::detail::read_file_bytes(path);

    try {
        dinf::parse_checkpoint(bytes.substr(0, bytes.size() - 3));
        FAIL("expected data_error");
    } catch (const dinf::data_error& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    CHECK_THROWS_AS(dinf::parse_checkpoint(bytes + "x"), dinf::data_error);
}
