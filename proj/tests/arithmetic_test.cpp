#include <doctest.h>

#include <algorithm>
#include <random>

#include "formfunc/arithmetic/latent_json.hpp"

using namespace formfunc;
using Eigen::VectorXd;

namespace {

LatentCode random_code(std::mt19937& rng, int J) {
    std::normal_distribution<double> n(0, 1);
    LatentCode c;
    c.means = VectorXd::NullaryExpr(J, [&] { return 2 * n(rng); });
    c.log_variances = VectorXd::NullaryExpr(J, [&] { return n(rng); });
    return c;
}

Mask random_mask(std::mt19937& rng, int J) {
    std::bernoulli_distribution b(0.5);
    return Mask::NullaryExpr(J, [&] { return b(rng); });
}

}  // namespace

TEST_CASE("class essence is the component-wise mean") {
    std::mt19937 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int J = 1 + trial % 17, n = 1 + trial % 9;
        std::vector<LatentCode> codes;
        for (int i = 0; i < n; ++i) codes.push_back(random_code(rng, J));
        const ClassEssence e = class_essence(codes, "x");
        CHECK(e.sample_count == n);
        CHECK(e.class_label == "x");
        for (int j = 0; j < J; ++j) {
            double mean = 0, var = 0;
            for (const auto& c : codes) {
                mean += c.means[j];
                var += std::exp(c.log_variances[j]);
            }
            REQUIRE(std::abs(e.code.means[j] - mean / n) <= 1e-12);
            REQUIRE(std::abs(e.code.variances()[j] - var / n) <= 1e-12 * (var / n));
        }
    }
    CHECK_THROWS_AS(class_essence(std::vector<LatentCode>{}), Error);
    std::vector<LatentCode> mixed{random_code(rng, 3), random_code(rng, 4)};
    CHECK_THROWS_AS(class_essence(mixed), ShapeError);
}

TEST_CASE("gaussian KL") {
    CHECK(gaussian_kl(0, 1, 1, 1) == doctest::Approx(0.5));
    CHECK(gaussian_kl(0.3, 2, 0.3, 2) == 0);
    // KL(N(0, 4) || N(0, 1)) = 1/2 (4 - 1 - log 4)
    CHECK(gaussian_kl(0, 4, 0, 1) == doctest::Approx(0.5 * (3 - std::log(4.0))));
    CHECK(gaussian_kl(0, 1, 0, 4) != doctest::Approx(gaussian_kl(0, 4, 0, 1)));
    CHECK_THROWS_AS(gaussian_kl(0, 0, 0, 1), Error);
}

TEST_CASE("importance vector mixes normalized divergences") {
    std::mt19937 rng(2);
    const int J = 12;
    const LatentCode code = random_code(rng, J), void_code = random_code(rng, J);
    const ImportanceVector iv = importance_vector(code, void_code, 0.25);
    VectorXd dv(J), dp(J);
    for (int j = 0; j < J; ++j) {
        const double v = std::exp(code.log_variances[j]);
        dv[j] = gaussian_kl(code.means[j], v, void_code.means[j], std::exp(void_code.log_variances[j]));
        dp[j] = gaussian_kl(code.means[j], v, 0, 1);
    }
    const VectorXd expected = 0.25 * dv / dv.norm() + 0.75 * dp / dp.norm();
    CHECK((iv.scores - expected).norm() <= 1e-12);
    CHECK(iv.w_prior == 0.75);
    CHECK(importance_vector(code, void_code).w_void == doctest::Approx(2.0 / 3.0));

    // A code equal to both references scores zero everywhere.
    const LatentCode prior(VectorXd::Zero(J), VectorXd::Zero(J));
    CHECK(importance_vector(prior, prior).scores.norm() == 0);
    CHECK_THROWS_AS(importance_vector(code, random_code(rng, J + 1)), ShapeError);
}

TEST_CASE("importance masks") {
    ImportanceVector iv;
    iv.scores = (VectorXd(6) << 0.1, 0.9, 0.5, 0.5, 0.0, 0.7).finished();
    CHECK(importance_mask(iv, 0).count() == 0);
    CHECK(importance_mask(iv, 1).count() == 6);
    const Mask half = importance_mask(iv, 0.5);
    CHECK((half == (Mask(6) << false, true, true, false, false, true).finished()).all());  // tie at 0.5 keeps index 2
    CHECK(importance_mask(iv, 0.34).count() == 3);  // ceil(2.04)
    CHECK(mask_size(0.3, 10) == 3);
    CHECK(mask_size(0.31, 10) == 4);
    CHECK_THROWS_AS(mask_size(1.5, 4), Error);
    CHECK_THROWS_AS(mask_size(-0.1, 4), Error);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        iv.scores = VectorXd::NullaryExpr(20, [&] { return u(rng); });
        const double p = u(rng);
        const Mask m = importance_mask(iv, p);
        REQUIRE(m.count() == mask_size(p, 20));
        if (m.count() > 0 && m.count() < 20) {
            double lowest_in = 1e9, highest_out = -1e9;
            for (int j = 0; j < 20; ++j) {
                if (m[j])
                    lowest_in = std::min(lowest_in, iv.scores[j]);
                else
                    highest_out = std::max(highest_out, iv.scores[j]);
            }
            REQUIRE(lowest_in >= highest_out);
        }
    }
}

TEST_CASE("combine follows the four-case rule table") {
    std::mt19937 rng(4);
    for (int trial = 0; trial < 1000; ++trial) {
        const int J = 1 + trial % 33;
        const LatentCode base = random_code(rng, J), top = random_code(rng, J);
        const Mask bm = random_mask(rng, J), tm = random_mask(rng, J);
        const LatentCode out = combine(base, top, bm, tm);
        for (int j = 0; j < J; ++j) {
            double mean, var;
            const double vb = std::exp(base.log_variances[j]), vt = std::exp(top.log_variances[j]);
            switch (int(bm[j]) * 2 + int(tm[j])) {
                case 0b00: mean = base.means[j], var = vb; break;  // neither important
                case 0b10: mean = base.means[j], var = vb; break;  // base only
                case 0b01: mean = top.means[j], var = vt; break;   // top only
                default: mean = (base.means[j] + top.means[j]) / 2, var = (vb + vt) / 2;
            }
            REQUIRE(out.means[j] == mean);
            REQUIRE(std::exp(out.log_variances[j]) == doctest::Approx(var).epsilon(1e-12));
            if (int(bm[j]) * 2 + int(tm[j]) != 0b11) REQUIRE(out.log_variances[j] == (tm[j] && !bm[j] ? top : base).log_variances[j]);
        }
    }
}

TEST_CASE("combine is not commutative") {
    const LatentCode a((VectorXd(2) << 1, 2).finished(), VectorXd::Zero(2));
    const LatentCode b((VectorXd(2) << -1, 5).finished(), VectorXd::Zero(2));
    const Mask first = (Mask(2) << true, false).finished(), second = (Mask(2) << false, true).finished();
    // a as base keeps its first variable and takes b's second; swapping roles does the opposite.
    const LatentCode ab = combine(a, b, first, second), ba = combine(b, a, first, second);
    CHECK(ab.means == (VectorXd(2) << 1, 5).finished());
    CHECK(ba.means == (VectorXd(2) << -1, 2).finished());
    CHECK_FALSE(ab == ba);
}

TEST_CASE("combine degenerates to the base with 100/0 percents") {
    std::mt19937 rng(5);
    const LatentCode base = random_code(rng, 10), top = random_code(rng, 10);
    ImportanceVector ib, it;
    ib.scores = VectorXd::LinSpaced(10, 0, 1);
    it.scores = VectorXd::LinSpaced(10, 1, 0);
    CHECK(combine(CombineRequest{base, top, 1.0, 0.0}, ib, it) == base);
    // 0/100 hands over every top variable.
    CHECK(combine(CombineRequest{base, top, 0.0, 1.0}, ib, it) == top);
    CHECK_THROWS_AS(combine(base, random_code(rng, 9), Mask::Zero(10), Mask::Zero(10)), ShapeError);
}

TEST_CASE("nearest neighbours by feature distance") {
    std::vector<VectorXd> features{VectorXd::Constant(3, 0.0), VectorXd::Constant(3, 2.0), VectorXd::Constant(3, 1.0),
                                   VectorXd::Constant(3, 1.0)};
    const auto near = nearest_by_features(VectorXd::Constant(3, 1.0), features, 3);
    REQUIRE(near.size() == 3);
    CHECK(near[0] == Neighbor{2, 0.0});
    CHECK(near[1] == Neighbor{3, 0.0});
    CHECK(near[2].index == 0);  // distance sqrt(3) ties with index 1; lower index first
    CHECK(near[2].distance == doctest::Approx(std::sqrt(3.0)));
    CHECK_THROWS_AS(nearest_by_features(VectorXd::Zero(3), features, 5), Error);
    CHECK_THROWS_AS(nearest_by_features(VectorXd::Zero(2), features, 1), ShapeError);
}

TEST_CASE("nearest in dataset compares decoder features") {
    ModelConfig cfg;
    cfg.input_dim = 8;
    cfg.latent_dim = 4;
    cfg.channel_widths = {4, 4};
    const Model model(cfg, 3);
    std::mt19937 rng(6);
    std::vector<LatentCode> data;
    for (int i = 0; i < 5; ++i) data.push_back(random_code(rng, 4));
    const auto near = nearest_in_dataset(data[3], data, model, 2);
    CHECK(near[0] == Neighbor{3, 0.0});
    CHECK(near[1].distance > 0);
}

TEST_CASE("latent JSON documents round trip") {
    std::mt19937 rng(7);
    const LatentCode code = random_code(rng, 9);
    const nlohmann::json j = code;
    CHECK(j["kind"] == "latent_code");
    CHECK(j["schema_version"] == kSchemaVersion);
    CHECK(nlohmann::json::parse(j.dump()).get<LatentCode>() == code);

    const ImportanceVector iv = importance_vector(code, random_code(rng, 9), 0.5);
    const auto iv_back = nlohmann::json::parse(nlohmann::json(iv).dump()).get<ImportanceVector>();
    CHECK(iv_back.scores == iv.scores);
    CHECK(iv_back.w_void == 0.5);

    ClassEssence e{code, "tub", 12};
    const auto e_back = nlohmann::json(e).get<ClassEssence>();
    CHECK(e_back.code == code);
    CHECK(e_back.class_label == "tub");
    CHECK(e_back.sample_count == 12);

    CHECK_THROWS_AS(nlohmann::json(iv).get<LatentCode>(), Error);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"means": [1, "x"], "log_variances": [0, 0]})").get<LatentCode>(), Error);
    CHECK_THROWS_AS(nlohmann::json::parse(R"({"means": [1], "log_variances": [0, 0]})").get<LatentCode>(), ShapeError);
}

TEST_CASE("combine of a code with itself is the code") {
    std::mt19937 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const LatentCode x = random_code(rng, 1 + trial % 20);
        const Mask m = random_mask(rng, int(x.size()));
        const LatentCode out = combine(x, x, m, m);
        CHECK(out.means == x.means);
        CHECK((out.log_variances - x.log_variances).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("class essence ignores input order") {
    std::mt19937 rng(9);
    std::vector<LatentCode> codes;
    for (int i = 0; i < 12; ++i) codes.push_back(random_code(rng, 7));
    const ClassEssence e = class_essence(codes);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(codes.begin(), codes.end(), rng);
        const ClassEssence s = class_essence(codes);
        CHECK((s.code.means - e.code.means).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((s.code.log_variances - e.code.log_variances).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("gaussian KL is nonnegative and zero only for equal distributions") {
    std::mt19937 rng(10);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const double mp = n(rng), vp = std::exp(n(rng));
        const bool same = trial % 4 == 0;
        const double mq = same ? mp : n(rng), vq = same ? vp : std::exp(n(rng));
        const double kl = gaussian_kl(mp, vp, mq, vq);
        REQUIRE((same ? kl == 0 : kl > 0));
    }
    // ln 2 + 1/8 - 1/2 and -ln 2 + 2 - 1/2
    CHECK(gaussian_kl(0, 1, 0, 4) == doctest::Approx(std::log(2.0) - 0.375).epsilon(1e-12));
    CHECK(gaussian_kl(0, 4, 0, 1) == doctest::Approx(1.5 - std::log(2.0)).epsilon(1e-12));
}
