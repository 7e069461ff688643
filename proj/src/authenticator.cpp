#include "phyauth/authenticator.hpp"

#include <algorithm>
#include <string>

#include "phyauth/csv.hpp"

namespace phyauth {

std::vector<SweepPoint> sweep_threshold(const std::vector<double>& scores_alice,
                                        const std::vector<double>& scores_eve,
                                        const std::vector<double>& grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] < 1.0))
            throw ParameterError("sweep: grid values must lie in [0,1)");
        if (i > 0 && grid[i] < grid[i - 1])
            throw ParameterError("sweep: grid must be sorted ascending");
    }

    // |1 - score| once per trial, then each grid point is a counting pass.
    std::vector<double> da(scores_alice.size()), de(scores_eve.size());
    for (std::size_t i = 0; i < da.size(); ++i) da[i] = std::abs(1.0 - scores_alice[i]);
    for (std::size_t i = 0; i < de.size(); ++i) de[i] = std::abs(1.0 - scores_eve[i]);
    std::sort(da.begin(), da.end());
    std::sort(de.begin(), de.end());

    std::vector<SweepPoint> out;
    out.reserve(grid.size());
    for (double nu : grid) {
        SweepPoint p;
        p.nu = nu;
        const auto accepted_a = std::upper_bound(da.begin(), da.end(), nu) - da.begin();
        const auto accepted_e = std::upper_bound(de.begin(), de.end(), nu) - de.begin();
        p.fa_rate = da.empty() ? NAN
                               : static_cast<double>(da.size() - accepted_a) /
                                     static_cast<double>(da.size());
        p.md_rate = de.empty() ? NAN
                               : static_cast<double>(accepted_e) / static_cast<double>(de.size());
        out.push_back(p);
    }
    return out;
}

double threshold_for_fa_budget(const std::vector<double>& scores_alice, double fa_budget) {
    if (scores_alice.empty()) throw InsufficientDataError("FA calibration needs scores");
    if (!(fa_budget >= 0.0 && fa_budget < 1.0))
        throw ParameterError("FA budget must lie in [0,1)");
    std::vector<double> d(scores_alice.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(1.0 - scores_alice[i]);
    std::sort(d.begin(), d.end());
    // Smallest nu with empirical P(|1-score| > nu) <= budget.
    const std::size_t keep = static_cast<std::size_t>(
        std::ceil((1.0 - fa_budget) * static_cast<double>(d.size())));
    const std::size_t idx = keep == 0 ? 0 : keep - 1;
    double nu = d[idx];
    if (!(nu < 1.0)) nu = std::nextafter(1.0, 0.0);
    return nu;
}

double trade_off_area(const std::vector<SweepPoint>& sweep) {
    if (sweep.empty()) throw InsufficientDataError("trade-off area needs sweep points");
    // Points sorted by FA ascending; MD is then non-increasing along the curve.
    std::vector<std::pair<double, double>> pts;
    pts.reserve(sweep.size() + 2);
    for (const auto& p : sweep) pts.emplace_back(p.fa_rate, p.md_rate);
    std::sort(pts.begin(), pts.end());
    // Flat extrapolation to FA = 0 and FA = 1.
    std::vector<std::pair<double, double>> full;
    full.emplace_back(0.0, pts.front().second);
    for (const auto& p : pts) full.push_back(p);
    full.emplace_back(1.0, pts.back().second);
    double area = 0.0;
    for (std::size_t i = 1; i < full.size(); ++i) {
        const double w = full[i].first - full[i - 1].first;
        area += 0.5 * w * (full[i].second + full[i - 1].second);
    }
    return area;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepPoint>& sweep,
                     long alice_trials, long eve_trials) {
    CsvWriter w(path, {"nu", "fa_rate", "md_rate", "alice_trials", "eve_trials"});
    for (const auto& p : sweep)
        w.row({p.nu, p.fa_rate, p.md_rate, static_cast<double>(alice_trials),
               static_cast<double>(eve_trials)});
}

} // namespace phyauth
