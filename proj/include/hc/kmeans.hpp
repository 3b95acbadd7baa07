#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hc/errors.hpp"

namespace hc {

// Row-major n x d point set.
struct Points {
    size_t n = 0;
    size_t d = 0;
    std::vector<double> data;

    const double* row(size_t i) const { return data.data() + i * d; }
    double* row(size_t i) { return data.data() + i * d; }
};

struct KMeansResult {
    uint32_t k = 0;
    size_t d = 0;
    std::vector<double> centroids;       // k x d row-major
    std::vector<uint32_t> assignment;    // point -> cluster id (nearest, ties -> lowest id)
    double inertia = 0.0;
    uint32_t iterations = 0;
    std::vector<double> inertia_trace;   // non-increasing over Lloyd iterations
};

KMeansResult kmeans(const Points& points, uint32_t k, uint32_t max_iters, uint64_t seed,
                    uint32_t restarts = 5);

// Partition agreement scores against a reference labelling.
struct Agreement {
    double ari = 0.0;
    double nmi = 0.0;
    double purity = 0.0;
};

// Keys must match exactly between the two labellings.
Agreement agreement(const std::map<std::string, uint32_t>& assignment,
                    const std::map<std::string, uint32_t>& ground_truth);

Agreement agreement(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b);

// Per-cluster member listing with a representative (member nearest the cluster
// center) and a raw-text excerpt truncated to excerpt_bytes.
struct ClusterEntry {
    uint32_t cluster = 0;
    std::vector<std::string> members;
    std::string representative;
    std::string excerpt;
};

struct ClusterReport {
    std::vector<ClusterEntry> clusters;
};

ClusterReport make_report(const std::vector<std::string>& keys,
                          const std::vector<uint32_t>& assignment, const Points& embeddings,
                          const std::map<std::string, std::string>& raw_text,
                          size_t excerpt_bytes = 512);

void write_report(std::ostream& out, const ClusterReport& report);

}  // namespace hc
