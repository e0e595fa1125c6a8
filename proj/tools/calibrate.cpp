// Calibration run for the constants frozen in the statistical ensemble and
// coherence tests. Prints, for each statistic, the observed ratio to its
// theoretical scaling over the seeds used by the tests.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "mcomplete/mcomplete.hpp"

using namespace mcomplete;

namespace {

void report(const char* name, std::vector<double> ratios) {
    std::sort(ratios.begin(), ratios.end());
    const auto at = [&](double q) { return ratios[static_cast<std::size_t>(q * (ratios.size() - 1))]; };
    std::printf("%-40s median %.4f  p99 %.4f  max %.4f\n", name, at(0.5), at(0.99), ratios.back());
}

double max_row_energy(const Matrix& f) {
    double best = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        double s = 0.0;
        for (double x : f.row(i)) s += x * x;
        best = std::max(best, s);
    }
    return best;
}

} // namespace

int main() {
    const std::size_t n = 200;
    const double logn = std::log(static_cast<double>(n));

    {
        const std::size_t r = 10;
        const double rbar = std::max(static_cast<double>(r), logn);
        std::vector<double> row_energy;
        std::vector<double> mu0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const LowRankFactors f = random_orthogonal_model(n, n, r, {}, seed);
            row_energy.push_back(max_row_energy(f.U) / (rbar / n));
            mu0.push_back(coherence_profile(f).mu0 / (rbar / r));
        }
        report("max_i |P_U e_i|^2 / (rbar/n), r=10", row_energy);
        report("mu0 / (rbar/r), r=10", mu0);
    }

    for (std::size_t r : {5, 10, 20}) {
        const double rbar = std::max(static_cast<double>(r), logn);
        std::vector<double> ratios;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const LowRankFactors f = random_orthogonal_model(n, n, r, {}, seed);
            ratios.push_back(max_abs(f.sign_matrix()) / (logn * std::sqrt(rbar) / n));
        }
        char name[64];
        std::snprintf(name, sizeof name, "|E|_inf / (log n sqrt(rbar)/n), r=%zu", r);
        report(name, ratios);
    }

    {
        const std::size_t nb = 256;
        const std::size_t r = 16;
        const Matrix u = dct_frame(nb, r, 1);
        const Matrix v = dct_frame(nb, r, 1 + r);
        const double mu_b = nb * std::max(max_abs(u) * max_abs(u), max_abs(v) * max_abs(v));
        std::vector<double> ratios;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const LowRankFactors f = incoherent_basis_model(u, v, std::vector<double>(r, 1.0), seed);
            ratios.push_back(coherence_profile(f).mu1 / (mu_b * std::sqrt(std::log(static_cast<double>(nb)))));
        }
        std::printf("mu_B of the cosine frames: %.4f\n", mu_b);
        report("mu1 / (mu_B sqrt(log n)), n=256 r=16", ratios);
    }
}
