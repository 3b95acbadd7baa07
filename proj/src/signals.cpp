#include "hc/signals.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace hc {

namespace {

// "{ip}-{index}" -> ip; plain ip keys pass through.
std::string ip_of_key(const std::string& key) {
    size_t dash = key.rfind('-');
    if (dash == std::string::npos || dash + 1 >= key.size()) return key;
    for (size_t i = dash + 1; i < key.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(key[i]))) return key;
    }
    return key.substr(0, dash);
}

}  // namespace

std::vector<Signal> build_signals(const std::vector<SessionEmbedding>& embeddings) {
    std::vector<Signal> signals;
    std::unordered_map<std::string, size_t> slot;
    for (const auto& emb : embeddings) {
        std::string ip = ip_of_key(emb.key);
        auto [it, inserted] = slot.try_emplace(ip, signals.size());
        if (inserted) signals.push_back(Signal{ip, {}});
        signals[it->second].points.push_back(SignalPoint{emb.ts, emb.y, std::nullopt});
    }
    for (auto& sig : signals) {
        std::stable_sort(sig.points.begin(), sig.points.end(),
                         [](const SignalPoint& a, const SignalPoint& b) { return a.ts < b.ts; });
    }
    return signals;
}

DistanceSeries distance_series(const Signal& signal) {
    if (signal.points.empty()) throw EmptySignal(signal.ip);
    DistanceSeries series;
    series.ip = signal.ip;
    const auto& first = signal.points.front().y;
    for (const auto& pt : signal.points) {
        double s = 0.0;
        for (size_t i = 0; i < first.size(); ++i) {
            double diff = pt.y[i] - first[i];
            s += diff * diff;
        }
        series.points.emplace_back(pt.ts, std::sqrt(s));
    }
    return series;
}

double co_activity(const Signal& a, const Signal& b, int64_t bin_seconds) {
    if (bin_seconds <= 0) throw Error("co_activity: bin must be positive");
    std::set<int64_t> bins_a, bins_b;
    for (const auto& pt : a.points) bins_a.insert(pt.ts / bin_seconds);
    for (const auto& pt : b.points) bins_b.insert(pt.ts / bin_seconds);
    if (bins_a.empty() && bins_b.empty()) return 0.0;
    size_t inter = 0;
    for (int64_t bin : bins_a) inter += bins_b.count(bin);
    size_t uni = bins_a.size() + bins_b.size() - inter;
    return double(inter) / double(uni);
}

size_t shared_signature_count(const DistanceSeries& a, const DistanceSeries& b, double q) {
    if (q <= 0.0) throw Error("shared_signature_count: quantization must be positive");
    std::set<long long> levels_a, levels_b;
    for (const auto& [ts, d] : a.points) levels_a.insert(llround(d / q));
    for (const auto& [ts, d] : b.points) levels_b.insert(llround(d / q));
    size_t shared = 0;
    for (long long lvl : levels_a) shared += levels_b.count(lvl);
    return shared;
}

}  // namespace hc
