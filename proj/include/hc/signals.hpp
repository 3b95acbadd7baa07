#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hc/autoencoder.hpp"

namespace hc {

struct SignalPoint {
    int64_t ts = 0;
    std::vector<double> y;
    std::optional<uint32_t> cluster;
};

// Per-IP time series of embedded sessions, ts non-decreasing.
struct Signal {
    std::string ip;
    std::vector<SignalPoint> points;
};

struct DistanceSeries {
    std::string ip;
    std::vector<std::pair<int64_t, double>> points;  // (ts, distance from first embedding)
};

// One Signal per ip, points sorted by ts. Keys of the embeddings must be
// "{ip}-{index}" session ids or plain ip strings.
std::vector<Signal> build_signals(const std::vector<SessionEmbedding>& embeddings);

DistanceSeries distance_series(const Signal& signal);

// Jaccard similarity of the active time-bin sets; 0 when both are empty.
double co_activity(const Signal& a, const Signal& b, int64_t bin_seconds);

// Number of quantized distance levels the two series share (level = round(d/q)).
size_t shared_signature_count(const DistanceSeries& a, const DistanceSeries& b, double q);

}  // namespace hc
