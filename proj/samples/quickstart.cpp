// Generates a small synthetic market, runs the with/without-sentiment
// comparison in memory and prints the two test MSEs.

#include <iostream>

#include "stockcast/stockcast.hpp"

int main() {
    using namespace stockcast;

    SyntheticSpec spec;
    spec.days = 300;
    spec.seed = 7;
    const auto data = generate_synthetic(spec);

    PipelineConfig cfg;
    cfg.set_seed(7);
    cfg.forest.trees = 15;
    cfg.network.hidden = 8;
    cfg.network.filters = 4;
    cfg.training.epochs = 40;

    const auto report = compare(cfg, data.candles, data.tweets);
    std::cout << "holdout sentiment accuracy: " << report.sentiment.holdout_report.accuracy << '\n'
              << "test MSE with sentiment:    " << report.with_nlp.report.mse << '\n'
              << "test MSE without sentiment: " << report.without_nlp.report.mse << '\n';
}
