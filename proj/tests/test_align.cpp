#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "burstdn/align.hpp"
#include "burstdn/vst.hpp"
#include "test_util.hpp"

using namespace burstdn;

// ---------------------------------------------------------------- pyramid

TEST_CASE("pyramid of a constant image stays constant") {
    ImagePlane img(32, 32, Domain::RawLinear, 0.7f);
    auto pyr = build_pyramid(img, 4);
    REQUIRE(pyr.levels.size() == 4);
    for (const auto& level : pyr.levels)
        for (float v : level.samples)
            CHECK(v == Catch::Approx(0.7f));
}

TEST_CASE("pyramid box average is the 2x2 mean") {
    auto img = make_plane(2, 2, {0, 2, 4, 6});
    auto pyr = build_pyramid(img, 2);
    REQUIRE(pyr.levels[1].width == 1);
    CHECK(pyr.levels[1].at(0, 0) == Catch::Approx(3.0f));
}

TEST_CASE("pyramid floors odd dimensions") {
    ImagePlane img(17, 17, Domain::RawLinear, 1.0f);
    auto pyr = build_pyramid(img, 2);
    CHECK(pyr.levels[1].width == 8);
    CHECK(pyr.levels[1].height == 8);
}

TEST_CASE("pyramid rejects images too small for the level count") {
    ImagePlane img(4, 4, Domain::RawLinear, 0.0f);
    CHECK_THROWS_AS(build_pyramid(img, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_pyramid(img, 1), std::invalid_argument);
}

// ---------------------------------------------------------------- FAST

namespace {
// Independent segment test: walks the ring directly.
bool oracle_fast9(const ImagePlane& img, int x, int y, float t) {
    static const int ring[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},   {3, 1},
                                    {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2},  {-3, 1},
                                    {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};
    const float p = img.at(x, y);
    for (int mode = 0; mode < 2; ++mode) {
        for (int start = 0; start < 16; ++start) {
            int run = 0;
            for (int k = 0; k < 16 && run < 9; ++k) {
                const int i = (start + k) % 16;
                const float v = img.at(x + ring[i][0], y + ring[i][1]);
                const bool hit = mode == 0 ? v > p + t : v < p - t;
                if (hit)
                    ++run;
                else
                    break;
            }
            if (run >= 9)
                return true;
        }
    }
    return false;
}
} // namespace

TEST_CASE("fast returns nothing on a constant image") {
    ImagePlane img(32, 32, Domain::RawLinear, 0.5f);
    CHECK(detect_fast(img, 0.05f, 100).empty());
}

TEST_CASE("fast fires on an isolated bright dot") {
    ImagePlane img(21, 21, Domain::RawLinear, 0.0f);
    img.at(10, 10) = 1.0f;
    auto kps = detect_fast(img, 0.1f, 10);
    REQUIRE(kps.size() == 1);
    CHECK(kps[0].x == 10);
    CHECK(kps[0].y == 10);
    CHECK(oracle_fast9(img, 10, 10, 0.1f));
    CHECK_FALSE(oracle_fast9(img, 9, 10, 0.1f));
}

TEST_CASE("fast agrees with the direct ring oracle on textured input") {
    auto img = testutil::textured_plane(48, 48, 77);
    auto kps = detect_fast(img, 0.08f, 1000);
    REQUIRE(!kps.empty());
    for (const auto& kp : kps)
        CHECK(oracle_fast9(img, kp.x, kp.y, 0.08f));
}

TEST_CASE("fast finds corners of a rotated checkerboard") {
    // ideal axis-aligned checkerboards are saddle points which the segment
    // test rejects by design; a slight rotation exposes the square tips
    ImagePlane img(64, 64, Domain::RawLinear);
    const double c = std::cos(0.2), s = std::sin(0.2);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double u = c * (x - 32) - s * (y - 32);
            const double v = s * (x - 32) + c * (y - 32);
            const int iu = static_cast<int>(std::floor(u / 8.0));
            const int iv = static_cast<int>(std::floor(v / 8.0));
            img.at(x, y) = ((iu + iv) & 1) ? 1.0f : 0.0f;
        }
    auto kps = detect_fast(img, 0.1f, 100);
    CHECK(kps.size() >= 4);
}

TEST_CASE("fast respects the max_points cap and returns empty on tiny input") {
    auto img = testutil::textured_plane(48, 48, 77);
    CHECK(detect_fast(img, 0.02f, 5).size() == 5);
    ImagePlane tiny(6, 6, Domain::RawLinear, 0.0f);
    CHECK(detect_fast(tiny, 0.1f, 10).empty());
}

// ---------------------------------------------------------------- BRIEF

TEST_CASE("brief is deterministic and drops border keypoints") {
    auto img = testutil::textured_plane(64, 64, 5);
    std::vector<Keypoint> kps{{30, 30, 1.f}, {5, 30, 1.f}, {30, 60, 1.f}};
    auto a = brief_describe(img, kps);
    auto b = brief_describe(img, kps);
    REQUIRE(a.keypoints.size() == 1); // only (30,30) is >= 15 px from borders
    CHECK(a.descriptors[0].hamming(b.descriptors[0]) == 0);
}

TEST_CASE("brief descriptor is invariant to integer translation") {
    auto base = testutil::textured_plane(96, 96, 9);
    auto a = testutil::crop(base, 0, 0, 64, 64, base.domain);
    auto b = testutil::crop(base, 5, 3, 64, 64, base.domain);
    // content at a(30,30) sits at b(25,27)
    auto da = brief_describe(a, {{30, 30, 1.f}});
    auto db = brief_describe(b, {{25, 27, 1.f}});
    REQUIRE(da.descriptors.size() == 1);
    REQUIRE(db.descriptors.size() == 1);
    CHECK(da.descriptors[0].hamming(db.descriptors[0]) == 0);
}

TEST_CASE("brief descriptor of an inverted patch flips every bit") {
    auto img = testutil::random_plane(64, 64, 123, 0.0f, 1.0f);
    ImagePlane inv = img;
    for (auto& v : inv.samples) v = -v;
    auto da = brief_describe(img, {{32, 32, 1.f}});
    auto db = brief_describe(inv, {{32, 32, 1.f}});
    CHECK(da.descriptors[0].hamming(db.descriptors[0]) == 256);
}

// ---------------------------------------------------------------- matching

namespace {
Descriptor desc_of(std::initializer_list<int> set_bits) {
    Descriptor d;
    for (int b : set_bits)
        d.bits[b >> 6] |= uint64_t(1) << (b & 63);
    return d;
}
} // namespace

TEST_CASE("identical descriptor lists match one-to-one") {
    std::vector<Descriptor> a{desc_of({1}), desc_of({2, 3}), desc_of({4, 5, 6})};
    auto m = match_descriptors(a, a);
    REQUIRE(m.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(m[i].first == i);
        CHECK(m[i].second == i);
    }
}

TEST_CASE("a unique zero-distance partner is matched") {
    std::vector<Descriptor> a{desc_of({10, 20, 30})};
    std::vector<Descriptor> b{desc_of({1, 2, 3, 4, 5, 6, 7, 8}), desc_of({10, 20, 30}),
                              desc_of({100, 120, 130, 140})};
    auto m = match_descriptors(a, b);
    REQUIRE(m.size() == 1);
    CHECK(m[0] == std::pair<int, int>(0, 1));
}

TEST_CASE("duplicate candidates are suppressed by the ratio test") {
    std::vector<Descriptor> a{desc_of({10, 20, 30})};
    std::vector<Descriptor> b{desc_of({10, 20, 30}), desc_of({10, 20, 30})};
    CHECK(match_descriptors(a, b).empty());
    CHECK(match_descriptors({}, b).empty());
    CHECK(match_descriptors(a, {}).empty());
}

// ---------------------------------------------------------------- homography

TEST_CASE("identity homography from perfect correspondences") {
    std::vector<PointPair> pairs;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x)
            pairs.push_back({x * 10.0, y * 10.0, x * 10.0, y * 10.0});
    auto h = estimate_homography(pairs);
    REQUIRE(h.has_value());
    const Homography id = Homography::identity();
    for (int i = 0; i < 9; ++i)
        CHECK(h->m[i] == Catch::Approx(id.m[i]).margin(1e-6));
}

TEST_CASE("pure translation is recovered by DLT") {
    std::vector<PointPair> pairs;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x)
            pairs.push_back({x * 7.0 + 1, y * 9.0 + 2, x * 7.0 + 6, y * 9.0 - 1});
    auto h = estimate_homography(pairs);
    REQUIRE(h.has_value());
    CHECK(h->m[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(h->m[2] == Catch::Approx(5.0).margin(1e-5));
    CHECK(h->m[5] == Catch::Approx(-3.0).margin(1e-5));
    CHECK(h->m[6] == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("ransac survives 30 percent outliers") {
    Homography truth = Homography::translation(4.0, -2.0);
    truth.m[0] = 1.02; // slight scale so the model is not a pure shift
    truth.m[4] = 0.98;

    std::vector<PointPair> pairs;
    PixelRng rng(4242);
    for (int i = 0; i < 42; ++i) {
        const double x = rng.uniform() * 200.0;
        const double y = rng.uniform() * 200.0;
        const auto [u, v] = truth.apply(x, y);
        pairs.push_back({x, y, u, v});
    }
    for (int i = 0; i < 18; ++i)
        pairs.push_back({rng.uniform() * 200.0, rng.uniform() * 200.0, rng.uniform() * 200.0,
                         rng.uniform() * 200.0});

    RansacParams rp;
    rp.inlier_px = 1.0;
    auto h = estimate_homography(pairs, rp);
    REQUIRE(h.has_value());
    for (int i = 0; i < 42; ++i) {
        const auto [u, v] = h->apply(pairs[i].ax, pairs[i].ay);
        CHECK(std::hypot(u - pairs[i].bx, v - pairs[i].by) < 1.0);
    }
}

TEST_CASE("estimate_homography raises on fewer than four pairs") {
    std::vector<PointPair> pairs{{0, 0, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}};
    CHECK_THROWS_AS(estimate_homography(pairs), InsufficientFeatures);
}

TEST_CASE("weak support yields failure instead of a bogus model") {
    std::vector<PointPair> pairs;
    PixelRng rng(7);
    for (int i = 0; i < 6; ++i)
        pairs.push_back({rng.uniform() * 100, rng.uniform() * 100, rng.uniform() * 100,
                         rng.uniform() * 100});
    RansacParams rp;
    rp.min_inliers = 8;
    rp.inlier_px = 0.25;
    CHECK_FALSE(estimate_homography(pairs, rp).has_value());
}

// ---------------------------------------------------------------- warps

TEST_CASE("identity warp is bit exact") {
    auto img = testutil::textured_plane(40, 30, 3);
    auto out = warp_homography(img, Homography::identity());
    CHECK(out.samples == img.samples);
}

TEST_CASE("warp_homography rejects singular maps") {
    Homography h;
    h.m = {1, 0, 0, 2, 0, 0, 0, 0, 1}; // rank deficient
    ImagePlane img(8, 8, Domain::RawLinear, 0.0f);
    CHECK_THROWS_AS(warp_homography(img, h), std::invalid_argument);
}

TEST_CASE("homography round trip on a smooth image") {
    // gentle waves keep the interpolation error well under the bound
    ImagePlane img(64, 64, Domain::RawLinear);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            img.at(x, y) = 0.5f + 0.3f * std::sin(2.0f * 3.14159265f * x / 96.0f) *
                                      std::cos(2.0f * 3.14159265f * y / 80.0f);
    Homography h = Homography::translation(1.6, -2.3);
    auto there = warp_homography(img, h);
    auto back = warp_homography(there, h.inverse());
    for (int y = 8; y < 56; ++y)
        for (int x = 8; x < 56; ++x)
            REQUIRE(std::abs(back.at(x, y) - img.at(x, y)) < 1e-3f);
}

TEST_CASE("uniform tile flow shifts columns and replicates the edge") {
    auto img = testutil::textured_plane(32, 32, 8);
    TileFlow flow = TileFlow::zeros(32, 32, 16);
    for (auto& o : flow.offsets) o = {1, 0};
    auto out = warp_tiles(img, flow);
    for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 31; ++x)
            CHECK(out.at(x, y) == img.at(x + 1, y));
        CHECK(out.at(31, y) == img.at(31, y));
    }
}

// ---------------------------------------------------------------- tile match

TEST_CASE("tile match recovers an integer shift") {
    auto ref = testutil::textured_plane(64, 64, 21);
    auto alt = testutil::integer_shift(ref, 1, -2);
    auto flow = tile_block_match(ref, alt, 16, 2);
    for (int ty = 1; ty < flow.grid_h - 1; ++ty)
        for (int tx = 1; tx < flow.grid_w - 1; ++tx) {
            CHECK(flow.at(tx, ty)[0] == 1);
            CHECK(flow.at(tx, ty)[1] == -2);
        }
}

TEST_CASE("tile match of identical frames stays at zero via the tie-break") {
    ImagePlane flat(64, 64, Domain::RawLinear, 0.4f);
    auto flow = tile_block_match(flat, flat, 16, 2);
    for (const auto& o : flow.offsets) {
        CHECK(o[0] == 0);
        CHECK(o[1] == 0);
    }
    auto ref = testutil::textured_plane(64, 64, 22);
    auto flow2 = tile_block_match(ref, ref, 16, 2);
    for (const auto& o : flow2.offsets) {
        CHECK(o[0] == 0);
        CHECK(o[1] == 0);
    }
}

TEST_CASE("an out-of-radius shift is reachable through a coarser init") {
    auto ref = testutil::textured_plane(64, 64, 23);
    auto alt = testutil::integer_shift(ref, 3, 0);
    auto blind = tile_block_match(ref, alt, 16, 2);
    bool all_found = true;
    for (int ty = 1; ty < blind.grid_h - 1; ++ty)
        for (int tx = 1; tx < blind.grid_w - 1; ++tx)
            all_found = all_found && blind.at(tx, ty)[0] == 3;
    CHECK_FALSE(all_found); // 3 px exceeds the +/-2 window from zero

    TileFlow init = TileFlow::zeros(64, 64, 16);
    for (auto& o : init.offsets) o = {2, 0};
    auto seeded = tile_block_match(ref, alt, 16, 2, &init);
    for (int ty = 1; ty < seeded.grid_h - 1; ++ty)
        for (int tx = 1; tx < seeded.grid_w - 1; ++tx) {
            CHECK(seeded.at(tx, ty)[0] == 3);
            CHECK(seeded.at(tx, ty)[1] == 0);
        }
}

TEST_CASE("tile match validates its inputs") {
    auto ref = testutil::textured_plane(64, 64, 2);
    ImagePlane small(32, 32, Domain::RawLinear, 0.0f);
    CHECK_THROWS_AS(tile_block_match(ref, small, 16, 2), std::invalid_argument);
    TileFlow wrong = TileFlow::zeros(32, 32, 16);
    CHECK_THROWS_AS(tile_block_match(ref, ref, 16, 2, &wrong), std::invalid_argument);
    CHECK_THROWS_AS(warp_tiles(small, TileFlow::zeros(64, 64, 16)), std::invalid_argument);
}

// ---------------------------------------------------------------- block flow

TEST_CASE("block homography flow follows a global translation") {
    auto ref = testutil::textured_plane(128, 128, 31);
    auto alt = testutil::integer_shift(ref, 3, 2);
    std::array<bool, 4> fb{};
    auto blocks = block_homography_flow(ref, alt, Homography::translation(1.5, 1.0), {}, &fb);
    for (int b = 0; b < 4; ++b) {
        INFO("block " << b);
        REQUIRE_FALSE(fb[b]);
        const double cx = (b % 2 == 0) ? 32.0 : 96.0;
        const double cy = (b / 2 == 0) ? 32.0 : 96.0;
        const auto [u, v] = blocks[b].apply(cx, cy);
        CHECK(std::abs(u - cx - 3.0) < 0.75);
        CHECK(std::abs(v - cy - 2.0) < 0.75);
    }
}

TEST_CASE("a textureless block falls back to the rescaled parent") {
    auto ref = testutil::textured_plane(128, 128, 33);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            ref.at(x, y) = 0.5f; // top-left quadrant has no features
    auto alt = testutil::integer_shift(ref, 2, 1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            alt.at(x, y) = 0.5f;

    Homography parent = Homography::translation(1.0, 0.5); // coarser-level coords
    std::array<bool, 4> fb{};
    auto blocks = block_homography_flow(ref, alt, parent, {}, &fb);
    CHECK(fb[0]);
    const Homography expect = parent.rescaled(2.0);
    for (int i = 0; i < 9; ++i)
        CHECK(blocks[0].m[i] == Catch::Approx(expect.m[i]).margin(1e-9));
    CHECK_FALSE(fb[3]); // textured quadrants still estimate their own motion
}

TEST_CASE("block flow of an identical pair is four identities") {
    auto ref = testutil::textured_plane(128, 128, 35);
    std::array<bool, 4> fb{};
    auto blocks = block_homography_flow(ref, ref, Homography::identity(), {}, &fb);
    for (int b = 0; b < 4; ++b) {
        const auto [u, v] = blocks[b].apply(40.0, 40.0);
        CHECK(std::abs(u - 40.0) < 0.1);
        CHECK(std::abs(v - 40.0) < 0.1);
    }
}

// ---------------------------------------------------------------- align_burst

namespace {
Burst make_burst(const ImagePlane& ref, std::vector<ImagePlane> alts,
                 NoiseParams p = {0.01, 0.005}) {
    Burst b;
    b.reference = ref;
    b.alternates = std::move(alts);
    b.params = p;
    return b;
}
} // namespace

TEST_CASE("aligning duplicated frames is the identity") {
    auto ref = testutil::textured_plane(128, 128, 41);
    auto res = align_burst(make_burst(ref, {ref, ref}));
    REQUIRE(res.aligned.alternates.size() == 2);
    for (const auto& alt : res.aligned.alternates)
        CHECK(alt.samples == ref.samples);
    CHECK(res.diag.tile_size == 16);
}

TEST_CASE("align_burst requires at least two frames") {
    auto ref = testutil::textured_plane(64, 64, 1);
    CHECK_THROWS_AS(align_burst(make_burst(ref, {})), std::invalid_argument);
}

TEST_CASE("integer global shifts are recovered exactly on clean frames") {
    auto ref = testutil::textured_plane(512, 512, 47);
    for (auto shift : {std::pair{5, 9}, std::pair{-16, 7}, std::pair{12, -12}}) {
        auto alt = testutil::integer_shift(ref, shift.first, shift.second);
        auto res = align_burst(make_burst(ref, {alt}));
        const TileFlow& flow = res.diag.alternates[0].flows.back();
        const int margin = 48; // stay clear of clamped borders
        int total = 0, good = 0;
        for (int ty = 0; ty < flow.grid_h; ++ty)
            for (int tx = 0; tx < flow.grid_w; ++tx) {
                const int x0 = tx * flow.tile_size, y0 = ty * flow.tile_size;
                const int x1 = x0 + flow.tile_size, y1 = y0 + flow.tile_size;
                if (x0 < margin || y0 < margin || x1 > 512 - margin || y1 > 512 - margin)
                    continue;
                ++total;
                if (flow.at(tx, ty)[0] == shift.first && flow.at(tx, ty)[1] == shift.second)
                    ++good;
            }
        INFO("shift " << shift.first << "," << shift.second);
        REQUIRE(total > 100);
        CHECK(good == total);
    }
}

TEST_CASE("composed flow stays within the search-radius budget") {
    auto ref = testutil::textured_plane(256, 256, 53);
    auto alt = testutil::integer_shift(ref, 6, -4);
    AlignConfig cfg;
    auto res = align_burst(make_burst(ref, {alt}), cfg);
    const auto& d = res.diag.alternates[0];
    const int tile_levels = static_cast<int>(d.flows.size());
    REQUIRE(d.init_flows.size() == d.flows.size());

    // each refinement moves at most `radius` from its search-window centre
    for (int k = 0; k < tile_levels; ++k) {
        const TileFlow& f = d.flows[k];
        const TileFlow& i = d.init_flows[k];
        for (size_t t = 0; t < f.offsets.size(); ++t) {
            REQUIRE(std::abs(f.offsets[t][0] - i.offsets[t][0]) <= cfg.search_radius);
            REQUIRE(std::abs(f.offsets[t][1] - i.offsets[t][1]) <= cfg.search_radius);
        }
    }

    // composed: level-0 flow within radius*(2^L - 1) of the doubled-up
    // homography contribution that seeded the coarsest tile level
    const int spread = cfg.search_radius * ((1 << tile_levels) - 1);
    const TileFlow& flow = d.flows.back();
    const TileFlow& seed = d.init_flows.front();
    const int scale = 1 << (tile_levels - 1);
    for (int ty = 0; ty < flow.grid_h; ++ty)
        for (int tx = 0; tx < flow.grid_w; ++tx) {
            const int px = std::min(tx / scale, seed.grid_w - 1);
            const int py = std::min(ty / scale, seed.grid_h - 1);
            REQUIRE(std::abs(flow.at(tx, ty)[0] - scale * seed.at(px, py)[0]) <= spread);
            REQUIRE(std::abs(flow.at(tx, ty)[1] - scale * seed.at(px, py)[1]) <= spread);
        }
}

TEST_CASE("rotation plus translation aligns within a pixel at the block level") {
    auto ref = testutil::textured_plane(512, 512, 59);
    // truth maps reference coords into the alternate frame
    const double deg = 2.0, rad = deg * 3.14159265358979 / 180.0;
    Homography truth;
    const double c = std::cos(rad), s = std::sin(rad);
    const double cx = 256.0, cy = 256.0, tx = 3.5, ty = -2.0;
    truth.m = {c, -s, cx - c * cx + s * cy + tx, s, c, cy - s * cx - c * cy + ty, 0, 0, 1};
    auto alt = warp_homography(ref, truth.inverse()); // alt(q) = ref(inv(q))

    auto res = align_burst(make_burst(ref, {alt}));
    const auto& d = res.diag.alternates[0];
    REQUIRE(d.has_blocks);

    const Homography truth_l2 = truth.rescaled(0.25); // full res -> level 2
    double err_sum = 0.0;
    int err_n = 0;
    for (int b = 0; b < 4; ++b) {
        const double bx = (b % 2 == 0) ? 32.0 : 96.0;
        const double by = (b / 2 == 0) ? 32.0 : 96.0;
        for (auto [px, py] : {std::pair{bx - 24, by - 24}, std::pair{bx + 24, by - 24},
                              std::pair{bx - 24, by + 24}, std::pair{bx + 24, by + 24}}) {
            const auto [u1, v1] = d.blocks[b].apply(px, py);
            const auto [u2, v2] = truth_l2.apply(px, py);
            err_sum += std::hypot(u1 - u2, v1 - v2);
            ++err_n;
        }
    }
    CHECK(err_sum / err_n <= 1.0);
}

TEST_CASE("noisy global translation is recovered for most interior tiles") {
    auto clean = testutil::textured_plane(512, 512, 71);
    auto moved = testutil::integer_shift(clean, 8, 8);
    const NoiseParams p{0.014, 0.036}; // strong signal-dependent noise
    Burst burst;
    burst.reference = synth_noise(clean, p, 100);
    burst.alternates = {synth_noise(moved, p, 101)};
    burst.params = p;
    // match in the stabilized domain, as the pipeline does
    Burst vst = burst;
    vst.reference = vst_forward(VstKind::FreemanTukey, burst.reference, p);
    vst.alternates[0] = vst_forward(VstKind::FreemanTukey, burst.alternates[0], p);
    auto res = align_burst(vst);
    const TileFlow& flow = res.diag.alternates[0].flows.back();
    int total = 0, good = 0;
    for (int ty = 0; ty < flow.grid_h; ++ty)
        for (int tx = 0; tx < flow.grid_w; ++tx) {
            const int x0 = tx * flow.tile_size, y0 = ty * flow.tile_size;
            if (x0 < 48 || y0 < 48 || x0 + flow.tile_size > 464 || y0 + flow.tile_size > 464)
                continue;
            ++total;
            if (std::hypot(flow.at(tx, ty)[0] - 8.0, flow.at(tx, ty)[1] - 8.0) <= 1.0)
                ++good;
        }
    REQUIRE(total > 50);
    CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("alignment is deterministic") {
    auto ref = testutil::textured_plane(256, 256, 61);
    auto alt = testutil::integer_shift(ref, 4, 3);
    auto burst = make_burst(ref, {alt});
    auto a = align_burst(burst);
    auto b = align_burst(burst);
    CHECK(a.aligned.alternates[0].samples == b.aligned.alternates[0].samples);
    CHECK(a.diag.alternates[0].flows.back().offsets == b.diag.alternates[0].flows.back().offsets);
}

TEST_CASE("apply_alignment reuses flows computed on a different domain") {
    auto ref = testutil::textured_plane(128, 128, 69);
    auto alt = testutil::integer_shift(ref, 3, -1);
    auto burst = make_burst(ref, {alt});
    auto res = align_burst(burst);
    // re-applying the recorded flows to the same frames reproduces the warp
    auto replay = apply_alignment(burst, res.diag);
    CHECK(replay.alternates[0].samples == res.aligned.alternates[0].samples);

    Burst mismatched = burst;
    mismatched.alternates.push_back(alt);
    CHECK_THROWS_AS(apply_alignment(mismatched, res.diag), std::invalid_argument);
}

TEST_CASE("low-light parameter switch selects 32px tiles") {
    AlignConfig cfg;
    CHECK(effective_tile_size(cfg, NoiseParams{0.014, 0.036}) == 32); // acute^2 ~ 6.6
    CHECK(effective_tile_size(cfg, NoiseParams{0.014, 0.010}) == 16);
    cfg.low_light_tile32 = false;
    CHECK(effective_tile_size(cfg, NoiseParams{0.014, 0.036}) == 16);
}

TEST_CASE("bayer bursts align on the green plane and warp evenly") {
    auto base = testutil::textured_plane(128, 128, 67);
    // RGGB mosaic whose four phases carry scaled copies of the scene
    auto make_mosaic = [&](const ImagePlane& scene) {
        ImagePlane m(128, 128, Domain::RawLinear);
        for (int y = 0; y < 128; ++y)
            for (int x = 0; x < 128; ++x) {
                const float v = scene.at(x, y);
                const bool ex = x % 2 == 0, ey = y % 2 == 0;
                m.at(x, y) = ex && ey ? 0.8f * v : (!ex && !ey ? 0.6f * v : v);
            }
        return m;
    };
    auto ref = make_mosaic(base);
    auto alt = make_mosaic(testutil::integer_shift(base, 4, -2)); // even full-res shift

    Burst burst = make_burst(ref, {alt});
    burst.layout = BayerLayout::BayerRGGB;
    auto res = align_burst(burst);
    const auto& warped = res.aligned.alternates[0];
    for (int y = 32; y < 96; ++y)
        for (int x = 32; x < 96; ++x)
            REQUIRE(warped.at(x, y) == Catch::Approx(ref.at(x, y)).margin(1e-6));
}
