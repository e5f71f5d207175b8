#include "spomdp/experiment.hpp"

#include <algorithm>
#include <cmath>

namespace spomdp {

std::vector<std::size_t> ExperimentLog::episode_starts() const {
    std::vector<std::size_t> out;
    out.reserve(episodes.size());
    for (const auto& e : episodes) out.push_back(e.start);
    return out;
}

std::vector<std::uint32_t> ExperimentLog::episode_of_step() const {
    std::vector<std::uint32_t> out(rewards.size(), 0);
    for (const auto& e : episodes)
        for (std::size_t t = e.start; t < std::min(e.start + e.length, out.size()); ++t)
            out[t] = static_cast<std::uint32_t>(e.index);
    return out;
}

double ExperimentLog::average_reward() const {
    if (rewards.empty()) return 0.0;
    double s = 0.0;
    for (double r : rewards) s += r;
    return s / static_cast<double>(rewards.size());
}

std::vector<double> regret_curve(const ExperimentLog& log) {
    std::vector<double> out(log.rewards.size() + 1, 0.0);
    double prefix = 0.0;
    for (std::size_t t = 0; t < log.rewards.size(); ++t) {
        prefix += log.rewards[t];
        out[t + 1] = static_cast<double>(t + 1) * log.eta_plus - prefix;
    }
    return out;
}

std::vector<double> running_average(const std::vector<double>& rewards) {
    std::vector<double> out(rewards.size());
    double prefix = 0.0;
    for (std::size_t t = 0; t < rewards.size(); ++t) {
        prefix += rewards[t];
        out[t] = prefix / static_cast<double>(t + 1);
    }
    return out;
}

std::vector<double> window_average(const std::vector<double>& rewards, std::size_t window) {
    std::vector<double> out;
    if (window == 0) return out;
    for (std::size_t start = 0; start < rewards.size(); start += window) {
        const std::size_t end = std::min(start + window, rewards.size());
        double s = 0.0;
        for (std::size_t t = start; t < end; ++t) s += rewards[t];
        out.push_back(s / static_cast<double>(end - start));
    }
    return out;
}

std::vector<std::string> audit_episodes(const ExperimentLog& log, std::size_t A) {
    std::vector<std::string> bad;
    std::vector<std::size_t> best(A, 0);
    const std::size_t K = log.episodes.size();
    for (std::size_t k = 0; k < K; ++k) {
        const EpisodeRecord& e = log.episodes[k];
        if (e.N.size() != A || e.v.size() != A) {
            bad.push_back("episode " + std::to_string(k) + ": count vectors have the wrong size");
            continue;
        }
        if (k > 0 && e.N != best) bad.push_back("episode " + std::to_string(k) + ": retained counts differ from the running max");
        if (k > 0 && k + 1 < K) {
            std::size_t crossed = 0;
            for (std::size_t l = 0; l < A; ++l)
                if (e.v[l] >= 2 * std::max<std::size_t>(e.N[l], 1)) ++crossed;
            // One action crosses on the final step; before it none had.
            if (crossed != 1) bad.push_back("episode " + std::to_string(k) + ": " + std::to_string(crossed) + " actions hit the stopping rule");
        }
        for (std::size_t l = 0; l < A; ++l) best[l] = std::max(best[l], e.v[l]);
    }
    if (log.horizon > 1) {
        const double cap = static_cast<double>(A) * std::log2(static_cast<double>(log.horizon)) + static_cast<double>(A);
        if (static_cast<double>(K) > cap) bad.push_back("episode count " + std::to_string(K) + " exceeds A log2 N + A");
    }
    return bad;
}

}  // namespace spomdp
