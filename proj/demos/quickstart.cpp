// Train on 40 points of the quadrant problem and score on 10 000 fresh points.

#include <cstdio>
#include <cstdlib>

#include "casimac/casimac.hpp"

int main(int argc, char** argv) {
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;
    const double gamma = argc > 2 ? std::atof(argv[2]) : 1.0;

    const casimac::LabeledData train = casimac::synth_quadrants(40, seed);
    const casimac::LabeledData test = casimac::synth_quadrants(10000, seed + 1000);

    const casimac::GprBackend backend;
    const casimac::CasimacModel model =
        casimac::fit(train, casimac::gamma_config(gamma, 1, 1), backend, seed);

    const Eigen::MatrixXd probs = model.predict_proba(test.features, {10000, seed});
    const auto predicted = model.predict_index(test.features);
    const auto report = casimac::evaluate(test.labels, predicted, probs);

    std::printf("accuracy   %.4f\nproba-loss %.4f\nlog-loss   %.4f\n", report.accuracy, report.proba_loss,
                report.log_loss);
    for (const auto& p : dynamic_cast<const casimac::FittedGpr&>(model.regressor()).kernel_params()) {
        std::printf("l=%.4g sf2=%.4g sn2=%.4g\n", p.length_scale, p.signal_variance, p.noise_variance);
    }
    return 0;
}
