#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "sceneforge/matting.hpp"
#include "sceneforge/morphology.hpp"
#include "sceneforge/rng.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

using namespace sceneforge;

namespace {

double entry(const SparseMatrix& m, int i, int j) {
    for (int k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k)
        if (m.cols()[k] == j) return m.values()[k];
    return 0.0;
}

// FG left column, BG right column, unknown in between.
Trimap strip_trimap(int w, int h, int fg_cols, int bg_cols) {
    Trimap t(w, h, TrimapLabel::Unknown);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < fg_cols; ++x) t.set(x, y, TrimapLabel::Foreground);
        for (int x = w - bg_cols; x < w; ++x) t.set(x, y, TrimapLabel::Background);
    }
    return t;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

} // namespace

TEST_CASE("full laplacian annihilates constants: row sums are zero") {
    SplitMix64 rng(600);
    for (const auto [w, h] : {std::pair{6, 6}, std::pair{8, 8}, std::pair{5, 7}, std::pair{11, 1}}) {
        const RgbImage img = fixtures::random_image(w, h, rng);
        const SparseMatrix L = matting_laplacian_full(img);
        std::vector<double> ones(static_cast<std::size_t>(w) * h, 1.0), out;
        L.apply(ones, out);
        for (const double v : out) CHECK(std::abs(v) <= 1e-9);
    }
}

TEST_CASE("constant-color image reduces to window-count accumulation") {
    // Sigma = 0 and d_i = 0, so each shared window contributes
    // delta_ij - 1/|w| and nothing else.
    const RgbImage img = fixtures::constant_image(5, 5, 120, 64, 200);
    const SparseMatrix L = matting_laplacian_full(img);

    const auto windows_sharing = [](int xi, int yi, int xj, int yj) {
        int count = 0;
        for (int wy = 1; wy <= 3; ++wy)
            for (int wx = 1; wx <= 3; ++wx) {
                const bool has_i = std::abs(xi - wx) <= 1 && std::abs(yi - wy) <= 1;
                const bool has_j = std::abs(xj - wx) <= 1 && std::abs(yj - wy) <= 1;
                if (has_i && has_j) ++count;
            }
        return count;
    };

    for (int yi = 0; yi < 5; ++yi)
        for (int xi = 0; xi < 5; ++xi)
            for (int yj = 0; yj < 5; ++yj)
                for (int xj = 0; xj < 5; ++xj) {
                    const int i = yi * 5 + xi, j = yj * 5 + xj;
                    const double delta = i == j ? 1.0 : 0.0;
                    const double want = windows_sharing(xi, yi, xj, yj) * (delta - 1.0 / 9.0);
                    CHECK(entry(L, i, j) == doctest::Approx(want).epsilon(1e-12));
                }
}

TEST_CASE("full laplacian matches the dense oracle") {
    SplitMix64 rng(601);
    const RgbImage two_tone = fixtures::two_tone_image(8, 8, 4, 200, 30, 30, 20, 20, 220);
    const RgbImage random6 = fixtures::random_image(6, 6, rng);
    const RgbImage random12 = fixtures::random_image(12, 12, rng);
    const RgbImage strip = fixtures::constant_image(11, 1, 128, 128, 128);
    const RgbImage narrow = fixtures::random_image(2, 5, rng);

    for (const RgbImage* img : {&two_tone, &random6, &random12, &strip, &narrow}) {
        const SparseMatrix L = matting_laplacian_full(*img);
        const std::vector<double> ref = oracles::dense_matting_laplacian(*img, 1e-7, 1);
        const int n = L.n();
        REQUIRE(n == img->width() * img->height());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                CHECK(std::abs(entry(L, i, j) - ref[static_cast<std::size_t>(i) * n + j]) <= 1e-10);
    }
}

TEST_CASE("reduced system equals the dense reduction of the full laplacian") {
    SplitMix64 rng(602);
    const RgbImage img = fixtures::two_tone_image(8, 8, 4, 180, 60, 40, 35, 35, 210);
    const Trimap trimap = strip_trimap(8, 8, 2, 2);

    const MattingSystem sys = matting_laplacian(img, trimap);
    const std::vector<double> full = oracles::dense_matting_laplacian(img, 1e-7, 1);
    const int n = 64;

    REQUIRE(sys.unknown_pixels.size() == 32); // 4 unknown columns
    for (std::size_t r = 0; r < sys.unknown_pixels.size(); ++r) {
        for (std::size_t c = 0; c < sys.unknown_pixels.size(); ++c) {
            const double want =
                full[static_cast<std::size_t>(sys.unknown_pixels[r]) * n + sys.unknown_pixels[c]];
            CHECK(std::abs(entry(sys.system.matrix, static_cast<int>(r), static_cast<int>(c)) -
                           want) <= 1e-10);
        }
        double want_rhs = 0.0;
        for (int j = 0; j < n; ++j)
            if (trimap.data()[static_cast<std::size_t>(j)] == TrimapLabel::Foreground)
                want_rhs -= full[static_cast<std::size_t>(sys.unknown_pixels[r]) * n + j];
        CHECK(sys.system.rhs[0][r] == doctest::Approx(want_rhs).epsilon(1e-10));
    }
}

TEST_CASE("assembly is traversal-direction independent: mirrored inputs give "
          "the mirrored matrix bitwise") {
    SplitMix64 rng(603);
    const int w = 9, h = 7;
    const RgbImage img = fixtures::random_image(w, h, rng);
    Trimap trimap = strip_trimap(w, h, 2, 2);

    RgbImage mimg(w, h);
    Trimap mtrimap(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) mimg.at(x, y, c) = img.at(w - 1 - x, y, c);
            mtrimap.set(x, y, trimap.at(w - 1 - x, y));
        }

    const MattingSystem a = matting_laplacian(img, trimap);
    const MattingSystem b = matting_laplacian(mimg, mtrimap);
    REQUIRE(a.unknown_pixels.size() == b.unknown_pixels.size());

    // unknown index in b for the mirror image of a's unknown pixel
    const auto mirrored_index = [&](int flat) {
        const int y = flat / w, x = flat % w;
        const int target = y * w + (w - 1 - x);
        const auto it =
            std::find(b.unknown_pixels.begin(), b.unknown_pixels.end(), target);
        REQUIRE(it != b.unknown_pixels.end());
        return static_cast<int>(it - b.unknown_pixels.begin());
    };

    for (std::size_t r = 0; r < a.unknown_pixels.size(); ++r) {
        const int br = mirrored_index(a.unknown_pixels[r]);
        for (std::size_t c = 0; c < a.unknown_pixels.size(); ++c) {
            const int bc = mirrored_index(a.unknown_pixels[c]);
            CHECK(entry(a.system.matrix, static_cast<int>(r), static_cast<int>(c)) ==
                  entry(b.system.matrix, br, bc)); // exact, not approximate
        }
        CHECK(a.system.rhs[0][r] ==
              doctest::Approx(b.system.rhs[0][static_cast<std::size_t>(br)]).epsilon(1e-12));
    }
}

TEST_CASE("solve_alpha on the constant strip matches the dense oracle") {
    const RgbImage img = fixtures::constant_image(11, 1, 128, 128, 128);
    const Trimap trimap = strip_trimap(11, 1, 1, 1);

    MattingParams params;
    params.tol = 1e-12;
    const AlphaMap alpha = solve_alpha(img, trimap, params);
    const std::vector<double> ref = oracles::dense_matting_solve(img, trimap, 1e-7, 1);

    CHECK(max_abs_diff(alpha.data(), ref) <= 1e-6);
    CHECK(alpha.at(0, 0) == 1.0);
    CHECK(alpha.at(10, 0) == 0.0);
    for (int x = 1; x < 11; ++x) CHECK(alpha.at(x, 0) <= alpha.at(x - 1, 0) + 1e-12);
}

TEST_CASE("solve_alpha on the two-region band matches the dense oracle") {
    const RgbImage img = fixtures::two_tone_image(16, 16, 8, 210, 40, 40, 30, 30, 190);
    const Trimap trimap = strip_trimap(16, 16, 7, 7); // unknown band: columns 7-8

    MattingParams params;
    params.tol = 1e-12;
    MattingStats stats;
    const AlphaMap alpha = solve_alpha(img, trimap, params, &stats);
    const std::vector<double> ref = oracles::dense_matting_solve(img, trimap, 1e-7, 1);

    CHECK(max_abs_diff(alpha.data(), ref) <= 1e-6);

    int high = 0;
    for (int y = 0; y < 16; ++y)
        if (alpha.at(7, y) > 0.9) ++high; // FG-colored side of the band
    CHECK(high >= 16 * 99 / 100 + (16 * 99 % 100 ? 1 : 0));

    CHECK(stats.overshoot < 0.1);
    CHECK(stats.cg.relative_residual <= 1e-12);
}

TEST_CASE("constraints are exact on FG and BG pixels") {
    SplitMix64 rng(604);
    const RgbImage img = fixtures::random_image(10, 10, rng);
    const Trimap trimap = strip_trimap(10, 10, 3, 3);
    const AlphaMap alpha = solve_alpha(img, trimap);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x) {
            if (trimap.at(x, y) == TrimapLabel::Foreground) CHECK(alpha.at(x, y) == 1.0);
            if (trimap.at(x, y) == TrimapLabel::Background) CHECK(alpha.at(x, y) == 0.0);
            CHECK(alpha.at(x, y) >= 0.0);
            CHECK(alpha.at(x, y) <= 1.0);
        }
}

TEST_CASE("empty unknown set short-circuits to the FG indicator") {
    const RgbImage img = fixtures::constant_image(6, 6, 99, 99, 99);
    Trimap trimap(6, 6, TrimapLabel::Background);
    trimap.set(2, 2, TrimapLabel::Foreground);
    trimap.set(3, 2, TrimapLabel::Foreground);

    const AlphaMap alpha = solve_alpha(img, trimap);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            CHECK(alpha.at(x, y) == ((trimap.at(x, y) == TrimapLabel::Foreground) ? 1.0 : 0.0));

    CHECK_THROWS_AS(matting_laplacian(img, trimap), NoUnknownPixels);
}

TEST_CASE("matting validates inputs") {
    const RgbImage img = fixtures::constant_image(6, 6, 1, 2, 3);
    const Trimap small(5, 5, TrimapLabel::Unknown);
    CHECK_THROWS_AS(matting_laplacian(img, small), DimensionMismatch);
    CHECK_THROWS_AS(solve_alpha(img, small), DimensionMismatch);

    MattingParams bad;
    bad.window_radius = 0;
    CHECK_THROWS_AS(matting_laplacian_full(img, bad), Error);
    bad.window_radius = 1;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(matting_laplacian_full(img, bad), Error);
}

TEST_CASE("solve_alpha is deterministic bit for bit") {
    SplitMix64 rng(605);
    const RgbImage img = fixtures::random_image(12, 12, rng);
    const Trimap trimap = strip_trimap(12, 12, 4, 4);
    const AlphaMap a = solve_alpha(img, trimap);
    const AlphaMap b = solve_alpha(img, trimap);
    CHECK(a == b);
}
