#include <doctest.h>

#include <chrono>
#include <random>
#include <set>
#include <sstream>

#include "formfunc/arithmetic/arithmetic.hpp"
#include "formfunc/vae/checkpoint.hpp"
#include "formfunc/vae/grad_check.hpp"
#include "formfunc/vae/loss.hpp"
#include "formfunc/vae/train.hpp"

using namespace formfunc;
using Eigen::VectorXd;

namespace {

ModelConfig tiny_config() {
    ModelConfig c;
    c.input_dim = 8;
    c.latent_dim = 8;
    c.channel_widths = {4, 8};
    return c;
}

// Hollow boxes of varying size, an easy family to learn.
std::vector<VoxelGrid> box_family(int dim, int n) {
    std::vector<VoxelGrid> out;
    for (int i = 0; i < n; ++i) {
        VoxelGrid g(dim);
        const int lo = i % 2, hi = dim - 1 - (i / 2) % 3;
        for (int y = lo; y <= hi; ++y)
            for (int z = lo; z <= hi; ++z)
                for (int x = lo; x <= hi; ++x)
                    if (y == lo || x == lo || x == hi || z == lo || z == hi) g(x, y, z) = 1;
        out.push_back(g);
    }
    return out;
}

template <typename Scalar>
void jitter_offsets(Vae<Scalar>& model, std::uint32_t seed) {
    // Zero biases put empty receptive fields exactly on the ReLU kink, where
    // central differences are meaningless.
    std::mt19937 rng(seed);
    std::normal_distribution<double> n(0, 0.1);
    for (auto* p : model.parameters())
        if (p->name.ends_with("bias") || p->name.ends_with("beta"))
            for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += Scalar(n(rng));
}

}  // namespace

TEST_CASE("reconstruction loss matches a term-by-term evaluation") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial;
        VectorXd x(n), p(n);
        for (int i = 0; i < n; ++i) {
            x[i] = u(rng) < 0.3 ? 1.0 : 0.0;
            p[i] = u(rng);
        }
        double expected = 0;
        for (int i = 0; i < n; ++i) expected -= x[i] * std::log(p[i]) + (1 - x[i]) * std::log(1 - p[i]);
        CHECK(recon_loss(x, p, 1.0) == doctest::Approx(expected).epsilon(1e-12));
        double weighted = 0;
        for (int i = 0; i < n; ++i) weighted -= 10 * x[i] * std::log(p[i]) + (1 - x[i]) * std::log(1 - p[i]);
        CHECK(recon_loss(x, p, 10.0) == doctest::Approx(weighted).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction loss clips probabilities") {
    VoxelGrid x(4);
    x.values.head(20).setOnes();
    ProbabilityGrid p(4);
    for (Eigen::Index i = 0; i < p.voxel_count(); ++i) p.values[i] = float(x.values[i]);
    const double alpha = 10;
    const double bound = 64 * (alpha + 1) * -std::log(1 - kProbabilityEpsilon);
    CHECK(recon_loss(x, p, alpha) <= bound);
    // Fully wrong predictions are finite thanks to the clip.
    for (Eigen::Index i = 0; i < p.voxel_count(); ++i) p.values[i] = 1.0f - float(x.values[i]);
    CHECK(recon_loss(x, p, alpha) == doctest::Approx(-(20 * alpha + 44) * std::log(kProbabilityEpsilon)));
    CHECK_THROWS_AS(recon_loss(x, ProbabilityGrid(2), 1.0), ShapeError);
}

TEST_CASE("KL against the unit Gaussian") {
    LatentCode c(VectorXd::Ones(1), VectorXd::Zero(1));
    CHECK(kl_components(c)[0] == doctest::Approx(0.5));
    LatentCode prior(VectorXd::Zero(3), VectorXd::Zero(3));
    CHECK(kl_components(prior).norm() == 0);
    std::mt19937 rng(2);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 100; ++i) {
        const double mu = n(rng), lv = n(rng);
        LatentCode code(VectorXd::Constant(1, mu), VectorXd::Constant(1, lv));
        const double k = kl_components(code)[0];
        CHECK(k >= 0);
        CHECK(k == doctest::Approx(gaussian_kl(mu, std::exp(lv), 0, 1)).epsilon(1e-12));
    }
}

TEST_CASE("reparameterization") {
    LatentCode c(VectorXd::Constant(2, 1.0), VectorXd::Constant(2, std::log(4.0)));
    const VectorXd z = reparameterize(c, VectorXd::Constant(2, 0.5));
    CHECK(z[0] == doctest::Approx(2.0));
    CHECK_THROWS_AS(reparameterize(c, VectorXd::Zero(3)), ShapeError);
}

TEST_CASE("soft free bits keeps gamma in bounds and moves it monotonically") {
    const double floor = 0.01, lambda = 0.1, rate = 0.05;
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(0, 0.2);
    const int J = 16;
    VectorXd gamma = VectorXd::Constant(J, floor);
    // Each component keeps one side of lambda throughout, chosen per component.
    std::vector<bool> high(J);
    for (int j = 0; j < J; ++j) high[std::size_t(j)] = j % 2 == 0;
    for (int step = 0; step < 200; ++step) {
        VectorXd kl(J);
        for (int j = 0; j < J; ++j) kl[j] = high[std::size_t(j)] ? lambda + u(rng) : lambda * u(rng) * 4.9;
        const auto next = soft_free_bits_step(kl, gamma, lambda, rate, floor);
        CHECK(next.regularizer == doctest::Approx(gamma.dot(kl)));
        for (int j = 0; j < J; ++j) {
            REQUIRE(next.gamma[j] >= floor);
            REQUIRE(next.gamma[j] <= 1.0);
            if (high[std::size_t(j)])
                REQUIRE((gamma[j] == 1.0 ? next.gamma[j] == 1.0 : next.gamma[j] > gamma[j]));
            else
                REQUIRE((gamma[j] == floor ? next.gamma[j] == floor : next.gamma[j] < gamma[j]));
        }
        gamma = next.gamma;
        if (step == 100)
            for (int j = 0; j < J; ++j) high[std::size_t(j)] = !high[std::size_t(j)];
    }
    // Arbitrary sequences never leave the bounds.
    std::uniform_real_distribution<double> any(0, 3);
    for (int step = 0; step < 1000; ++step) {
        VectorXd kl(J);
        for (int j = 0; j < J; ++j) kl[j] = any(rng);
        gamma = soft_free_bits_step(kl, gamma, lambda, rate, floor).gamma;
        REQUIRE(gamma.minCoeff() >= floor);
        REQUIRE(gamma.maxCoeff() <= 1.0);
    }
}

TEST_CASE("config validation") {
    ModelConfig c = tiny_config();
    CHECK_NOTHROW(c.validate());
    c.input_dim = 12;
    CHECK_THROWS_AS(c.validate(), ShapeError);
    c = tiny_config();
    c.channel_widths = {4, 4, 4, 4};
    CHECK_THROWS_AS(c.validate(), ShapeError);
    TrainConfig t;
    t.alpha = 0.5;
    CHECK_THROWS_AS(t.validate(), Error);
    CHECK(optimizer_from_string(to_string(Optimizer::sgd)) == Optimizer::sgd);
    CHECK_THROWS_AS(optimizer_from_string("rmsprop"), Error);
}

TEST_CASE("model shapes and seeded initialization") {
    const Model a(tiny_config(), 3), b(tiny_config(), 3), c(tiny_config(), 4);
    const VoxelGrid g = box_family(8, 1).front();
    const LatentCode code = a.encode(g);
    CHECK(code.size() == 8);
    CHECK(code == b.encode(g));
    CHECK_FALSE(code == c.encode(g));
    const ProbabilityGrid p = a.decode(code.means);
    CHECK(p.dim == 8);
    CHECK(p.values.minCoeff() > 0);
    CHECK(p.values.maxCoeff() < 1);
    CHECK(a.parameter_count() > 0);
    CHECK_THROWS_AS(a.encode(VoxelGrid(4)), ShapeError);
}

TEST_CASE("evaluate agrees with encode, decode and the loss functions") {
    Model model(tiny_config(), 5);
    model.gamma = VectorXd::LinSpaced(8, 0.1, 0.8);
    const auto grids = box_family(8, 3);
    std::vector<VectorXd> noise;
    std::mt19937 rng(6);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 3; ++i) noise.push_back(VectorXd::NullaryExpr(8, [&] { return n(rng); }));
    PassOptions running;
    running.norm = NormMode::running;
    const LossBreakdown loss = model.evaluate(grids, noise, 10.0, running);
    double recon = 0, reg = 0;
    for (int i = 0; i < 3; ++i) {
        const LatentCode code = model.encode(grids[std::size_t(i)]);
        recon += recon_loss(grids[std::size_t(i)], model.decode(reparameterize(code, noise[std::size_t(i)])), 10.0);
        reg += model.gamma.dot(kl_components(code));
    }
    CHECK(loss.reconstruction == doctest::Approx(recon / 3).epsilon(1e-5));
    CHECK(loss.regularizer == doctest::Approx(reg / 3).epsilon(1e-5));
    CHECK(loss.total == doctest::Approx(loss.reconstruction + loss.regularizer));
}

TEST_CASE("analytic gradients match central differences") {
    const auto start = std::chrono::steady_clock::now();
    Vae<double> model(tiny_config(), 2);
    jitter_offsets(model, 102);
    VoxelGrid sample(8);
    std::mt19937 rng(2);
    for (Eigen::Index i = 0; i < sample.voxel_count(); ++i) sample.values[i] = rng() % 5 == 0;
    std::normal_distribution<double> n(0, 1);
    const VectorXd noise = VectorXd::NullaryExpr(8, [&] { return n(rng); });
    const GradCheckResult r = grad_check(model, sample, noise, 1e-5, 150, 2);
    CHECK(r.entries.size() >= 100);
    CHECK(r.max_relative_error <= 1e-4);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(seconds < 60);
    // Every trainable tensor is represented.
    std::set<std::string> names;
    for (const auto& e : r.entries) names.insert(e.parameter);
    CHECK(names.size() == model.parameters().size());
}

TEST_CASE("gradient relative error") {
    CHECK(gradient_relative_error(1.0, 1.0) == 0);
    CHECK(gradient_relative_error(1.0, 3.0) == doctest::Approx(0.5));
    CHECK(gradient_relative_error(0.0, 1e-9) == doctest::Approx(1e-2));
}

TEST_CASE("training is deterministic and reduces the loss") {
    const auto data = box_family(8, 12);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 4;
    cfg.rng_seed = 9;
    Model a(tiny_config(), 9), b(tiny_config(), 9);
    const auto ha = train(a, data, cfg), hb = train(b, data, cfg);
    CHECK(ha.losses() == hb.losses());
    std::ostringstream sa, sb;
    write_checkpoint(sa, a);
    write_checkpoint(sb, b);
    CHECK(sa.str() == sb.str());
    CHECK(ha.epochs.back().loss < 0.5 * ha.epochs.front().loss);
    CHECK(mean_reconstruction_iou(a, data) > 0.3);
    CHECK_THROWS_AS(train(a, std::vector<VoxelGrid>{}, cfg), Error);
    CHECK_THROWS_AS(train(a, box_family(16, 2), cfg), Error);
}

TEST_CASE("higher filled-voxel weight predicts more occupancy") {
    const auto data = box_family(8, 12);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 4;
    Model weighted(tiny_config(), 1), plain(tiny_config(), 1);
    cfg.alpha = 10;
    const auto hw = train(weighted, data, cfg);
    cfg.alpha = 1;
    const auto hp = train(plain, data, cfg);
    CHECK(hw.epochs.back().predicted_occupancy > hp.epochs.back().predicted_occupancy);
}

TEST_CASE("SGD also trains") {
    const auto data = box_family(8, 8);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 4;
    cfg.optimizer = Optimizer::sgd;
    cfg.learning_rate = 1e-4;
    Model m(tiny_config(), 2);
    const auto h = train(m, data, cfg);
    CHECK(h.epochs.back().loss < h.epochs.front().loss);
}

TEST_CASE("checkpoint round trip is byte identical") {
    const auto data = box_family(8, 4);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 2;
    cfg.alpha = 7;
    Model m(tiny_config(), 11);
    train(m, data, cfg);
    std::stringstream first;
    write_checkpoint(first, m, &cfg);
    const std::string bytes = first.str();
    CHECK(bytes.rfind(std::string(kCheckpointMagic), 0) == 0);
    std::istringstream in(bytes);
    const Checkpoint back = read_checkpoint(in);
    REQUIRE(back.train.has_value());
    CHECK(back.train->alpha == 7);
    CHECK(back.model.config() == m.config());
    CHECK(back.model.gamma == m.gamma);
    std::ostringstream second;
    write_checkpoint(second, back.model, &*back.train);
    CHECK(second.str() == bytes);
    CHECK(back.model.decode(VectorXd::Zero(8)).values == m.decode(VectorXd::Zero(8)).values);

    std::istringstream bad_magic("formfunc-vae 9\n" + bytes.substr(kCheckpointMagic.size()));
    CHECK_THROWS_AS(read_checkpoint(bad_magic), FormatError);
    std::istringstream truncated(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(read_checkpoint(truncated), FormatError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_checkpoint(empty), FormatError);
}

TEST_CASE("norm recalibration uses the data's statistics") {
    const auto data = box_family(8, 6);
    Model m(tiny_config(), 3);
    const LatentCode before = m.encode(data.front());
    recalibrate_norms(m, data, 3);
    const LatentCode after = m.encode(data.front());
    CHECK_FALSE(before == after);
    // Recalibrating twice changes nothing: statistics come from the zero-noise pass only.
    recalibrate_norms(m, data, 3);
    CHECK(m.encode(data.front()) == after);
}

TEST_CASE("KL is zero exactly at the prior") {
    std::mt19937 rng(14);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        LatentCode code(VectorXd::NullaryExpr(6, [&] { return n(rng); }), VectorXd::NullaryExpr(6, [&] { return n(rng); }));
        // Some components sit exactly at the prior.
        for (int j = 0; j < 6; j += 2 + trial % 3) code.means[j] = code.log_variances[j] = 0;
        const VectorXd kl = kl_components(code);
        for (int j = 0; j < 6; ++j) {
            const bool at_prior = code.means[j] == 0 && code.log_variances[j] == 0;
            REQUIRE((at_prior ? kl[j] == 0 : kl[j] > 0));
        }
    }
}

TEST_CASE("with zero noise a training step is repeatable") {
    const auto data = box_family(8, 4);
    const std::vector<VectorXd> zeros(4, VectorXd::Zero(8));
    PassOptions step;
    step.gradients = true;
    std::vector<std::vector<double>> grads;
    std::vector<double> losses;
    for (int run = 0; run < 2; ++run) {
        Model m(tiny_config(), 12);
        m.zero_grad();
        losses.push_back(m.evaluate(data, zeros, 10.0, step).total);
        std::vector<double> g;
        for (auto* p : m.parameters()) g.insert(g.end(), p->grad.data(), p->grad.data() + p->grad.size());
        grads.push_back(g);
    }
    CHECK(losses[0] == losses[1]);
    CHECK(grads[0] == grads[1]);
    // Noise is the only stochastic input: changing it changes the step.
    Model m(tiny_config(), 12);
    const std::vector<VectorXd> ones(4, VectorXd::Ones(8));
    CHECK(m.evaluate(data, ones, 10.0, step).total != losses[0]);
}
