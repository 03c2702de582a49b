#include "srlbench/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace srlbench::metrics {

namespace {

double kahan_sum(std::span<const double> v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
    Mat m;
    m.rows = static_cast<int64_t>(rows.size());
    m.cols = rows.empty() ? 0 : static_cast<int64_t>(rows.front().size());
    m.values.reserve(static_cast<size_t>(m.rows * m.cols));
    for (const auto& r : rows) {
        if (static_cast<int64_t>(r.size()) != m.cols) {
            throw std::invalid_argument("matrix rows have inconsistent lengths");
        }
        m.values.insert(m.values.end(), r.begin(), r.end());
    }
    return m;
}

PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: length mismatch (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    const double n = static_cast<double>(x.size());
    const double mx = kahan_sum(x) / n;
    const double my = kahan_sum(y) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return {0.0, true};
    return {sxy / std::sqrt(sxx * syy), false};
}

GtcReport gtc(const Mat& learned_states, const Mat& gt_states) {
    if (learned_states.rows != gt_states.rows) {
        throw std::invalid_argument("gtc: row count mismatch (" +
                                    std::to_string(learned_states.rows) + " vs " +
                                    std::to_string(gt_states.rows) + ")");
    }
    if (learned_states.rows < 2) throw std::invalid_argument("gtc: need at least 2 samples");
    const int64_t n = learned_states.rows;
    const int64_t dl = learned_states.cols;
    const int64_t dg = gt_states.cols;

    // column-wise extraction keeps pearson() as the single correlation path
    auto column = [n](const Mat& m, int64_t c) {
        std::vector<double> col(static_cast<size_t>(n));
        for (int64_t r = 0; r < n; ++r) col[static_cast<size_t>(r)] = m.at(r, c);
        return col;
    };

    auto is_constant = [](const std::vector<double>& v) {
        for (double x : v) {
            if (x != v.front()) return false;
        }
        return true;
    };

    std::vector<std::vector<double>> learned_cols(static_cast<size_t>(dl));
    GtcReport report;
    report.gtc.resize(static_cast<size_t>(dg), 0.0);
    report.argmax.resize(static_cast<size_t>(dg), 0);
    report.gt_zero_variance.resize(static_cast<size_t>(dg), false);
    report.learned_zero_variance.resize(static_cast<size_t>(dl), false);

    for (int64_t j = 0; j < dl; ++j) {
        learned_cols[static_cast<size_t>(j)] = column(learned_states, j);
        report.learned_zero_variance[static_cast<size_t>(j)] =
            is_constant(learned_cols[static_cast<size_t>(j)]);
    }

    for (int64_t i = 0; i < dg; ++i) {
        const std::vector<double> g = column(gt_states, i);
        report.gt_zero_variance[static_cast<size_t>(i)] = is_constant(g);
        double best = 0.0;
        int best_j = 0;
        for (int64_t j = 0; j < dl; ++j) {
            // pearson returns 0 with a flag for constant columns, so dead
            // units cannot win the max
            const double a = std::abs(pearson(g, learned_cols[static_cast<size_t>(j)]).rho);
            if (a > best) {
                best = a;
                best_j = static_cast<int>(j);
            }
        }
        report.gtc[static_cast<size_t>(i)] = best;
        report.argmax[static_cast<size_t>(i)] = best_j;
    }
    report.gtc_mean = kahan_sum(report.gtc) / static_cast<double>(dg);
    return report;
}

EvalResult evaluate_policy(const std::function<int(const env::StepResult&)>& policy,
                           const env::NavConfig& cfg, int episodes, uint64_t seed) {
    if (episodes < 1) throw std::invalid_argument("evaluate_policy: need at least one episode");
    env::NavEnv e(cfg);
    EvalResult result;
    result.episode_rewards.reserve(static_cast<size_t>(episodes));
    for (int ep = 0; ep < episodes; ++ep) {
        env::StepResult sr = e.reset(mix_seed(seed, 0xE7A1000 + static_cast<uint64_t>(ep)));
        double total = 0.0;
        while (!sr.done) {
            sr = e.step(policy(sr));
            total += sr.reward;
        }
        result.episode_rewards.push_back(total);
    }
    const double n = static_cast<double>(episodes);
    result.mean_reward = kahan_sum(result.episode_rewards) / n;
    double ss = 0.0;
    for (double r : result.episode_rewards) {
        const double d = r - result.mean_reward;
        ss += d * d;
    }
    const double sample_var = episodes > 1 ? ss / (n - 1.0) : 0.0;
    result.std_error = std::sqrt(sample_var) / std::sqrt(n);
    return result;
}

}  // namespace srlbench::metrics
