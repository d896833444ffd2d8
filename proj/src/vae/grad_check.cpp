#include "formfunc/vae/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace formfunc {

double gradient_relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

GradCheckResult grad_check(Vae<double>& model, const VoxelGrid& sample, const Eigen::VectorXd& noise, double epsilon,
                           int count, std::uint64_t seed, double alpha) {
    if (!(epsilon > 0)) throw Error("grad_check: epsilon must be > 0");
    const std::vector<VoxelGrid> batch{sample};
    const std::vector<Eigen::VectorXd> noises{noise};
    PassOptions pass;
    pass.norm = NormMode::batch;

    auto objective = [&] { return model.evaluate(batch, noises, alpha, pass).total; };

    model.zero_grad();
    pass.gradients = true;
    objective();
    pass.gradients = false;

    const auto params = model.parameters();
    std::vector<std::pair<std::size_t, Eigen::Index>> picks;
    std::mt19937_64 rng(seed);
    // One entry from every tensor first, then uniform over all entries.
    for (std::size_t k = 0; k < params.size() && int(picks.size()) < count; ++k)
        picks.emplace_back(k, std::uniform_int_distribution<Eigen::Index>(0, params[k]->value.size() - 1)(rng));
    Eigen::Index total = 0;
    for (const auto* p : params) total += p->value.size();
    std::uniform_int_distribution<Eigen::Index> any(0, total - 1);
    while (int(picks.size()) < count) {
        Eigen::Index flat = any(rng);
        std::size_t k = 0;
        while (flat >= params[k]->value.size()) flat -= params[k++]->value.size();
        picks.emplace_back(k, flat);
    }

    GradCheckResult result;
    for (const auto& [k, i] : picks) {
        double& w = params[k]->value.data()[i];
        const double saved = w;
        w = saved + epsilon;
        const double up = objective();
        w = saved - epsilon;
        const double down = objective();
        w = saved;
        GradCheckEntry e;
        e.parameter = params[k]->name;
        e.index = i;
        e.analytic = params[k]->grad.data()[i];
        e.numeric = (up - down) / (2 * epsilon);
        e.relative_error = gradient_relative_error(e.analytic, e.numeric);
        result.max_relative_error = std::max(result.max_relative_error, e.relative_error);
        result.entries.push_back(e);
    }
    return result;
}

}  // namespace formfunc
