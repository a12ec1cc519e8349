#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "signet/finite_diff.hpp"
#include "signet/rng.hpp"
#include "signet/transforms.hpp"

using namespace signet;

namespace {

void check_matrix(const Tensor& got, const std::vector<std::vector<double>>& expect,
                  double eps = 1e-12) {
    REQUIRE(got.rank() == 2);
    REQUIRE(got.dim(0) == expect.size());
    REQUIRE(got.dim(1) == expect[0].size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        for (std::size_t j = 0; j < expect[i].size(); ++j) {
            CAPTURE(i);
            CAPTURE(j);
            CHECK(got.at(i, j) == doctest::Approx(expect[i][j]).epsilon(eps));
        }
    }
}

}  // namespace

TEST_CASE("slice builds overlapping windows") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    check_matrix(s.values, {{1, 2}, {2, 3}, {3, 4}});
    CHECK(s.window == 2);
    CHECK(s.stride == 1);
    CHECK(s.source_len == 4);
}

TEST_CASE("slice with stride two drops overlap") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 2);
    check_matrix(s.values, {{1, 2}, {3, 4}});
}

TEST_CASE("slice row count for long signals") {
    CHECK(slice_rows(128, 3, 1) == 126);
    CHECK(slice_rows(512, 3, 1) == 510);
    Tensor sig = Tensor::zeros({128});
    CHECK(slice(sig, 3, 1).values.dim(0) == 126);
}

TEST_CASE("slice rejects oversized window") {
    Tensor sig = Tensor::zeros({4});
    CHECK_THROWS_AS(slice(sig, 5, 1), ShapeError);
    CHECK_THROWS_AS(slice(sig, 0, 1), ShapeError);
    CHECK_THROWS_AS(slice(sig, 2, 0), ShapeError);
}

TEST_CASE("s2m with identity filter degenerates to the Gram matrix") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    Tensor eye = Tensor::matrix({{1, 0}, {0, 1}});
    Tensor m = s2m_forward(s, eye);
    check_matrix(m, {{5, 8, 11}, {8, 13, 18}, {11, 18, 25}});

    // bitwise identical to S * S^T
    Tensor gram_direct = matmul_bt(s.values, s.values);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == gram_direct[i]);
}

TEST_CASE("s2m with an asymmetric filter breaks symmetry") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    Tensor f = Tensor::matrix({{0, 1}, {0, 0}});
    Tensor m = s2m_forward(s, f);
    check_matrix(m, {{2, 3, 4}, {4, 6, 8}, {6, 9, 12}});
    bool symmetric = true;
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            if (m.at(a, b) != m.at(b, a)) symmetric = false;
    CHECK_FALSE(symmetric);
}

TEST_CASE("s2m output size for paper-scale inputs") {
    Tensor sig = Tensor::zeros({512});
    for (std::size_t i = 0; i < 512; ++i) sig[i] = std::sin(0.01 * static_cast<double>(i));
    Tensor f = Tensor::zeros({3, 3});
    Tensor m = s2m_forward(slice(sig, 3, 1), f);
    CHECK(m.dim(0) == 510);
    CHECK(m.dim(1) == 510);
}

TEST_CASE("s2m rejects mismatched filter") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    CHECK_THROWS_AS(s2m_forward(s, Tensor::zeros({3, 3})), ShapeError);
}

TEST_CASE("s2m filter gradient of the all-ones loss") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    Tensor f = Tensor::matrix({{1, 0}, {0, 1}});
    Tensor dm = Tensor::ones({3, 3});  // L = sum(M)
    S2mGradients g = s2m_backward(s, f, dm);
    check_matrix(g.d_filter, {{36, 54}, {54, 81}});
}

TEST_CASE("s2m zero upstream gradient yields zero gradients") {
    Tensor sig({4}, {1, 2, 3, 4});
    SliceMatrix s = slice(sig, 2, 1);
    Tensor f = Tensor::matrix({{1, 2}, {3, 4}});
    S2mGradients g = s2m_backward(s, f, Tensor::zeros({3, 3}));
    CHECK(g.d_filter.abs_max() == 0.0);
    CHECK(g.d_signal.abs_max() == 0.0);
}

TEST_CASE("s2m gradients match finite differences") {
    Rng rng(101);
    Tensor sig = Tensor::random_uniform({16}, rng, -1.0, 1.0);
    Tensor f = Tensor::random_uniform({3, 3}, rng, -1.0, 1.0);
    Tensor weights = Tensor::random_uniform({14, 14}, rng, -1.0, 1.0);

    SliceMatrix s = slice(sig, 3, 1);
    S2mGradients g = s2m_backward(s, f, weights);

    auto loss_of = [&](const Tensor& signal, const Tensor& filter) {
        Tensor m = s2m_forward(slice(signal, 3, 1), filter);
        double acc = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i) acc += m[i] * weights[i];
        return acc;
    };
    GradCheckResult rf = finite_diff_check(
        [&](const Tensor& probe) { return loss_of(sig, probe); }, f, g.d_filter);
    INFO("filter: " << rf.describe());
    CHECK(rf.ok);
    GradCheckResult rs = finite_diff_check(
        [&](const Tensor& probe) { return loss_of(probe, f); }, sig, g.d_signal);
    INFO("signal: " << rs.describe());
    CHECK(rs.ok);
}

TEST_CASE("s2m gradient exactness across window and stride grid") {
    Rng rng(103);
    for (std::size_t n : {8, 17, 32}) {
        for (std::size_t k : {2, 3, 5}) {
            for (std::size_t h : {1, 2}) {
                if (k > n) continue;
                CAPTURE(n);
                CAPTURE(k);
                CAPTURE(h);
                Tensor sig = Tensor::random_uniform({n}, rng, -1.0, 1.0);
                Tensor f = Tensor::random_uniform({k, k}, rng, -1.0, 1.0);
                const std::size_t m = slice_rows(n, k, h);
                Tensor weights = Tensor::random_uniform({m, m}, rng, -1.0, 1.0);
                S2mGradients g = s2m_backward(slice(sig, k, h), f, weights);
                auto loss_of = [&](const Tensor& signal, const Tensor& filter) {
                    Tensor mm = s2m_forward(slice(signal, k, h), filter);
                    double acc = 0.0;
                    for (std::size_t i = 0; i < mm.size(); ++i) acc += mm[i] * weights[i];
                    return acc;
                };
                GradCheckResult rf = finite_diff_check(
                    [&](const Tensor& probe) { return loss_of(sig, probe); }, f, g.d_filter);
                INFO("filter: " << rf.describe());
                CHECK(rf.ok);
                GradCheckResult rs = finite_diff_check(
                    [&](const Tensor& probe) { return loss_of(probe, f); }, sig, g.d_signal);
                INFO("signal: " << rs.describe());
                CHECK(rs.ok);
            }
        }
    }
}

TEST_CASE("strided s2m leaves uncovered tail samples with zero gradient") {
    Rng rng(105);
    Tensor sig = Tensor::random_uniform({9}, rng, -1.0, 1.0);  // k=2, h=2 covers indices 0..7
    Tensor f = Tensor::random_uniform({2, 2}, rng, -1.0, 1.0);
    SliceMatrix s = slice(sig, 2, 2);
    S2mGradients g = s2m_backward(s, f, Tensor::ones({4, 4}));
    CHECK(g.d_signal.dim(0) == 9);
    CHECK(g.d_signal[8] == 0.0);
}

TEST_CASE("two-channel s2m image shape and symmetry") {
    Rng rng(107);
    Tensor i = Tensor::random_uniform({128}, rng, -1.0, 1.0);
    Tensor fi = Tensor::random_normal({3, 3}, rng);
    Tensor img = s2m_sample(i, i, fi, fi, 1);
    CHECK(img.rank() == 3);
    CHECK(img.dim(0) == 2);
    CHECK(img.dim(1) == 126);
    CHECK(img.dim(2) == 126);
    // identical channels when I == Q and F_I == F_Q
    const std::size_t plane = 126 * 126;
    for (std::size_t t = 0; t < plane; ++t) CHECK(img[t] == img[plane + t]);
}

TEST_CASE("s2m_image tape op matches finite differences and isolates channels") {
    Rng rng(109);
    const std::size_t B = 2, C = 2, L = 10, k = 3;
    Tensor x0 = Tensor::random_uniform({B, C, L}, rng, -1.0, 1.0);
    Tensor f0 = Tensor::random_normal({C, k, k}, rng);
    const std::size_t m = slice_rows(L, k, 1);
    Tensor weights = Tensor::random_uniform({B, C, m, m}, rng, -1.0, 1.0);

    Tape t;
    Var x = t.param(x0);
    Var f = t.param(f0);
    Var y = s2m_image(x, f, 1);
    CHECK(t.value(y).shape_str() == Tensor::zeros({B, C, m, m}).shape_str());
    t.backward(weighted_sum(y, weights));

    auto eval_x = [&](const Tensor& probe) {
        Tape t2;
        Var y2 = s2m_image(t2.leaf(probe, false), t2.leaf(f0, false), 1);
        double acc = 0.0;
        const Tensor& yv = t2.value(y2);
        for (std::size_t i = 0; i < yv.size(); ++i) acc += yv[i] * weights[i];
        return acc;
    };
    auto eval_f = [&](const Tensor& probe) {
        Tape t2;
        Var y2 = s2m_image(t2.leaf(x0, false), t2.leaf(probe, false), 1);
        double acc = 0.0;
        const Tensor& yv = t2.value(y2);
        for (std::size_t i = 0; i < yv.size(); ++i) acc += yv[i] * weights[i];
        return acc;
    };
    GradCheckResult rx = finite_diff_check(eval_x, x0, t.grad(x.id));
    INFO("x: " << rx.describe());
    CHECK(rx.ok);
    GradCheckResult rf = finite_diff_check(eval_f, f0, t.grad(f.id));
    INFO("filters: " << rf.describe());
    CHECK(rf.ok);

    // a loss touching only channel 0 must leave channel 1's filter untouched
    Tensor mask = Tensor::zeros({B, C, m, m});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t ij = 0; ij < m * m; ++ij) mask[(b * C + 0) * m * m + ij] = 1.0;
    Tape t3;
    Var f3 = t3.param(f0);
    Var y3 = s2m_image(t3.leaf(x0, false), f3, 1);
    t3.backward(weighted_sum(y3, mask));
    const Tensor& gf = t3.grad(f3.id);
    double ch0 = 0.0, ch1 = 0.0;
    for (std::size_t i = 0; i < k * k; ++i) {
        ch0 += std::abs(gf[i]);
        ch1 += std::abs(gf[k * k + i]);
    }
    CHECK(ch0 > 0.0);
    CHECK(ch1 == 0.0);
}

TEST_CASE("gram of a constant signal is k times c squared") {
    Tensor sig = Tensor::full({6}, 0.5);
    Tensor m = gram(sig, 3, 1);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(3 * 0.25));
}

TEST_CASE("gram hand example and exact symmetry") {
    Tensor sig({4}, {1, 2, 3, 4});
    Tensor m = gram(sig, 2, 1);
    check_matrix(m, {{5, 8, 11}, {8, 13, 18}, {11, 18, 25}});
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b) CHECK(m.at(a, b) == m.at(b, a));
}

TEST_CASE("symmetric filters give symmetric feature matrices") {
    Rng rng(113);
    Tensor sig = Tensor::random_uniform({20}, rng, -1.0, 1.0);
    Tensor f = Tensor::random_uniform({3, 3}, rng, -1.0, 1.0);
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) f.at(b, a) = f.at(a, b);
    Tensor m = s2m_forward(slice(sig, 3, 1), f);
    for (std::size_t a = 0; a < m.dim(0); ++a)
        for (std::size_t b = 0; b < m.dim(1); ++b)
            CHECK(m.at(a, b) == doctest::Approx(m.at(b, a)).epsilon(1e-12));
}

TEST_CASE("gramian factorized filters give positive semidefinite feature matrices") {
    Rng rng(127);
    Tensor sig = Tensor::random_uniform({24}, rng, -1.0, 1.0);
    Tensor g = Tensor::random_uniform({3, 3}, rng, -1.0, 1.0);
    Tensor f = matmul_at(g, g);  // F = G^T G
    Tensor m = s2m_forward(slice(sig, 3, 1), f);
    const std::size_t mm = m.dim(0);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor v = Tensor::random_uniform({mm}, rng, -1.0, 1.0);
        double quad = 0.0;
        for (std::size_t a = 0; a < mm; ++a)
            for (std::size_t b = 0; b < mm; ++b) quad += v[a] * m.at(a, b) * v[b];
        CHECK(quad >= -1e-10);
    }
}

TEST_CASE("gasf of the canonical three-point series") {
    Tensor series({3}, {1, 0, -1});
    Tensor m = gaf(series, GafVariant::Summation);
    check_matrix(m, {{1, 0, -1}, {0, -1, 0}, {-1, 0, 1}}, 1e-9);
}

TEST_CASE("gasf diagonal equals two x squared minus one") {
    Rng rng(131);
    Tensor series = Tensor::random_uniform({12}, rng, -2.0, 3.0);
    Tensor m = gaf(series, GafVariant::Summation);
    // recompute the rescaled values independently
    const double lo = series.min(), hi = series.max();
    for (std::size_t i = 0; i < 12; ++i) {
        const double x = (series[i] - lo) / (hi - lo) * 2.0 - 1.0;
        CHECK(m.at(i, i) == doctest::Approx(2.0 * x * x - 1.0).epsilon(1e-10));
    }
}

TEST_CASE("gaf variants match angle-by-angle evaluation") {
    Rng rng(137);
    Tensor series = Tensor::random_uniform({8}, rng, -1.0, 1.0);
    Tensor gasf = gaf(series, GafVariant::Summation);
    Tensor gadf = gaf(series, GafVariant::Difference);
    const double lo = series.min(), hi = series.max();
    for (std::size_t i = 0; i < 8; ++i) {
        const double pi_ = std::acos((series[i] - lo) / (hi - lo) * 2.0 - 1.0);
        for (std::size_t j = 0; j < 8; ++j) {
            const double pj = std::acos((series[j] - lo) / (hi - lo) * 2.0 - 1.0);
            CHECK(gasf.at(i, j) == doctest::Approx(std::cos(pi_ + pj)).epsilon(1e-12));
            CHECK(gadf.at(i, j) == doctest::Approx(std::sin(pi_ - pj)).epsilon(1e-12));
            CHECK(gasf.at(i, j) >= -1.0 - 1e-12);
            CHECK(gasf.at(i, j) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("gaf rejects constant series") {
    CHECK_THROWS_AS(gaf(Tensor::full({5}, 2.0)), DegenerateInputError);
}

TEST_CASE("mtf of an alternating series") {
    Tensor series({4}, {0, 1, 0, 1});
    Tensor m = mtf(series, 2);
    check_matrix(m, {{0, 1, 0, 1}, {1, 0, 1, 0}, {0, 1, 0, 1}, {1, 0, 1, 0}});
}

TEST_CASE("mtf of a monotone series has one upward inter-bin transition") {
    Tensor series({6}, {1, 2, 3, 4, 5, 6});
    Tensor w = mtf_transitions(series, 2);
    // bins: [0,0,0,1,1,1]; transitions 0->0 x2, 0->1 x1, 1->1 x2
    CHECK(w.at(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(w.at(0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(w.at(1, 0) == 0.0);
    CHECK(w.at(1, 1) == 1.0);
}

TEST_CASE("mtf transition rows sum to one or zero") {
    Rng rng(139);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor series = Tensor::random_uniform({23}, rng, -1.0, 1.0);
        for (std::size_t bins : {2, 4, 8}) {
            Tensor w = mtf_transitions(series, bins);
            for (std::size_t p = 0; p < bins; ++p) {
                double s = 0.0;
                for (std::size_t q = 0; q < bins; ++q) s += w.at(p, q);
                CHECK((std::abs(s - 1.0) < 1e-12 || s == 0.0));
            }
        }
    }
}

TEST_CASE("mtf rejects degenerate configuration") {
    CHECK_THROWS_AS(mtf(Tensor::zeros({8}), 1), ConfigError);
    CHECK_THROWS_AS(mtf(Tensor::zeros({1}), 2), ShapeError);
}

TEST_CASE("constellation density piles boundary points into the lower cell") {
    Tensor i = Tensor::zeros({5});
    Tensor q = Tensor::zeros({5});
    Tensor d = constellation_density(i, q, 2, 1.0);
    CHECK(d.at(0, 0) == 1.0);
    CHECK(d.sum() == doctest::Approx(1.0));
}

TEST_CASE("constellation density spreads quadrant centers uniformly") {
    Tensor i({4}, {0.5, 0.5, -0.5, -0.5});
    Tensor q({4}, {0.5, -0.5, 0.5, -0.5});
    Tensor d = constellation_density(i, q, 2, 1.0);
    for (std::size_t t = 0; t < 4; ++t) CHECK(d[t] == doctest::Approx(0.25));
}

TEST_CASE("constellation density total mass is one even with outliers") {
    Rng rng(149);
    Tensor i = Tensor::random_uniform({64}, rng, -3.0, 3.0);  // many outside [-1,1]
    Tensor q = Tensor::random_uniform({64}, rng, -3.0, 3.0);
    Tensor d = constellation_density(i, q, 8, 1.0);
    CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("reshape_square lays out I then Q row-major") {
    Rng rng(151);
    Tensor i = Tensor::random_uniform({128}, rng, -1.0, 1.0);
    Tensor q = Tensor::random_uniform({128}, rng, -1.0, 1.0);
    Tensor r = reshape_square(i, q);
    CHECK(r.dim(0) == 16);
    CHECK(r.dim(1) == 16);
    for (std::size_t c = 0; c < 16; ++c) CHECK(r.at(0, c) == i[c]);

    Tensor i512 = Tensor::random_uniform({512}, rng, -1.0, 1.0);
    Tensor r512 = reshape_square(i512, i512);
    CHECK(r512.dim(0) == 32);

    Tensor bad = Tensor::zeros({6});  // 2N = 12, not a perfect square
    CHECK_THROWS_AS(reshape_square(bad, bad), ShapeError);
}

TEST_CASE("transform_image emits the documented channel layouts") {
    Rng rng(157);
    Tensor i = Tensor::random_uniform({32}, rng, -1.0, 1.0);
    Tensor q = Tensor::random_uniform({32}, rng, -1.0, 1.0);
    TransformParams p;
    p.window = 3;
    p.stride = 1;
    p.bins = 4;
    p.grid = 8;
    p.range = 1.0;

    Tensor g = transform_image(TransformKind::Gram, i, q, p);
    CHECK(g.shape_str() == "[2x30x30]");
    Tensor s = transform_image(TransformKind::GafSummation, i, q, p);
    CHECK(s.shape_str() == "[2x32x32]");
    Tensor m = transform_image(TransformKind::Mtf, i, q, p);
    CHECK(m.shape_str() == "[2x32x32]");
    Tensor c = transform_image(TransformKind::Constellation, i, q, p);
    CHECK(c.shape_str() == "[1x8x8]");
    Tensor r = transform_image(TransformKind::ReshapeSquare, i, q, p);
    CHECK(r.shape_str() == "[1x8x8]");

    CHECK(parse_transform_kind("gram") == TransformKind::Gram);
    CHECK(parse_transform_kind(transform_kind_name(TransformKind::Mtf)) == TransformKind::Mtf);
    CHECK_THROWS_AS(parse_transform_kind("wavelet"), ConfigError);
}

TEST_CASE("slice-built transforms obey the output size law") {
    Rng rng(163);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 4 + rng.uniform_int(60);
        const std::size_t k = 1 + rng.uniform_int(5);
        const std::size_t h = 1 + rng.uniform_int(3);
        if (k > n) continue;
        const std::size_t expect = (n - k) / h + 1;
        Tensor sig = Tensor::random_uniform({n}, rng, -1.0, 1.0);
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(h);
        CHECK(slice(sig, k, h).values.dim(0) == expect);
        CHECK(gram(sig, k, h).dim(0) == expect);
    }
}
