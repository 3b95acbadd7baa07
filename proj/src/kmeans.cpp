#include "hc/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "hc/rng.hpp"

namespace hc {

namespace {

double sqdist(const double* a, const double* b, size_t d) {
    double s = 0.0;
    for (size_t i = 0; i < d; ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

// Greedy k-means++ seeding: first center uniform, then for each new center
// sample 2 + log2(k) candidates d^2-weighted and keep the candidate that
// minimizes the resulting potential.
enum class SeedStrategy { GreedyPP, Uniform, FarthestFirst };

std::vector<double> seed_centroids(const Points& pts, uint32_t k, Rng& rng, SeedStrategy strat) {
    std::vector<double> centroids(size_t(k) * pts.d);
    if (strat == SeedStrategy::FarthestFirst) {
        // k-center style traversal: start at a random point, then repeatedly
        // take the point farthest from the chosen set. Finds outlier
        // singletons that d^2-weighted sampling rarely isolates.
        size_t cur = uniform_index(rng, pts.n);
        std::copy_n(pts.row(cur), pts.d, centroids.begin());
        std::vector<double> d2(pts.n);
        for (size_t i = 0; i < pts.n; ++i) d2[i] = sqdist(pts.row(i), pts.row(cur), pts.d);
        for (uint32_t c = 1; c < k; ++c) {
            size_t far = 0;
            for (size_t i = 1; i < pts.n; ++i)
                if (d2[i] > d2[far]) far = i;
            std::copy_n(pts.row(far), pts.d, centroids.begin() + size_t(c) * pts.d);
            for (size_t i = 0; i < pts.n; ++i)
                d2[i] = std::min(d2[i], sqdist(pts.row(i), pts.row(far), pts.d));
        }
        return centroids;
    }
    if (strat == SeedStrategy::Uniform) {
        // Uniform sample of k distinct points; diversifies restarts, since the
        // greedy potential-minimizing seeding below is nearly deterministic.
        std::vector<size_t> idx(pts.n);
        for (size_t i = 0; i < pts.n; ++i) idx[i] = i;
        for (uint32_t c = 0; c < k; ++c) {
            size_t j = c + uniform_index(rng, pts.n - c);
            std::swap(idx[c], idx[j]);
            std::copy_n(pts.row(idx[c]), pts.d, centroids.begin() + size_t(c) * pts.d);
        }
        return centroids;
    }
    size_t first = uniform_index(rng, pts.n);
    std::copy_n(pts.row(first), pts.d, centroids.begin());

    size_t n_trials = 2 + size_t(std::log2(double(std::max(2u, k))));
    std::vector<double> d2(pts.n);
    for (size_t i = 0; i < pts.n; ++i) d2[i] = sqdist(pts.row(i), centroids.data(), pts.d);

    std::vector<double> cand_d2(pts.n);
    std::vector<double> best_d2(pts.n);
    for (uint32_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (size_t i = 0; i < pts.n; ++i) total += d2[i];

        size_t best_pick = pts.n;
        double best_pot = std::numeric_limits<double>::max();
        for (size_t trial = 0; trial < n_trials; ++trial) {
            size_t pick;
            if (total <= 0.0) {
                pick = uniform_index(rng, pts.n);
            } else {
                double u = uniform01(rng) * total;
                double acc = 0.0;
                pick = pts.n - 1;
                for (size_t i = 0; i < pts.n; ++i) {
                    acc += d2[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
            }
            double pot = 0.0;
            for (size_t i = 0; i < pts.n; ++i) {
                cand_d2[i] = std::min(d2[i], sqdist(pts.row(i), pts.row(pick), pts.d));
                pot += cand_d2[i];
            }
            if (pot < best_pot) {
                best_pot = pot;
                best_pick = pick;
                best_d2 = cand_d2;
            }
        }
        std::copy_n(pts.row(best_pick), pts.d, centroids.begin() + size_t(c) * pts.d);
        d2 = best_d2;
    }
    return centroids;
}

KMeansResult lloyd(const Points& pts, uint32_t k, uint32_t max_iters, Rng& rng,
                   SeedStrategy strat) {
    KMeansResult res;
    res.k = k;
    res.d = pts.d;
    res.centroids = seed_centroids(pts, k, rng, strat);
    res.assignment.assign(pts.n, 0);

    std::vector<double> sums(size_t(k) * pts.d);
    std::vector<size_t> counts(k);

    double prev_inertia = std::numeric_limits<double>::max();
    for (uint32_t iter = 0; iter < max_iters; ++iter) {
        // Assign to nearest centroid, ties to the lowest id.
        double inertia = 0.0;
        for (size_t i = 0; i < pts.n; ++i) {
            double best = std::numeric_limits<double>::max();
            uint32_t arg = 0;
            for (uint32_t j = 0; j < k; ++j) {
                double dd = sqdist(pts.row(i), &res.centroids[size_t(j) * pts.d], pts.d);
                if (dd < best) {
                    best = dd;
                    arg = j;
                }
            }
            res.assignment[i] = arg;
            inertia += best;
        }
        res.inertia_trace.push_back(inertia);
        res.inertia = inertia;
        res.iterations = iter + 1;

        // Update means; repair empty clusters by reseeding to the farthest point.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < pts.n; ++i) {
            uint32_t j = res.assignment[i];
            counts[j]++;
            for (size_t c = 0; c < pts.d; ++c) sums[size_t(j) * pts.d + c] += pts.row(i)[c];
        }
        bool repaired = false;
        for (uint32_t j = 0; j < k; ++j) {
            if (counts[j] > 0) {
                for (size_t c = 0; c < pts.d; ++c) {
                    res.centroids[size_t(j) * pts.d + c] = sums[size_t(j) * pts.d + c] / counts[j];
                }
            } else {
                size_t far = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < pts.n; ++i) {
                    double dd = sqdist(pts.row(i),
                                       &res.centroids[size_t(res.assignment[i]) * pts.d], pts.d);
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                std::copy_n(pts.row(far), pts.d, res.centroids.begin() + size_t(j) * pts.d);
                repaired = true;
            }
        }
        if (!repaired && inertia >= prev_inertia - 1e-12) break;
        prev_inertia = inertia;
    }

    // Final assignment against the last centroid update.
    double inertia = 0.0;
    for (size_t i = 0; i < pts.n; ++i) {
        double best = std::numeric_limits<double>::max();
        uint32_t arg = 0;
        for (uint32_t j = 0; j < k; ++j) {
            double dd = sqdist(pts.row(i), &res.centroids[size_t(j) * pts.d], pts.d);
            if (dd < best) {
                best = dd;
                arg = j;
            }
        }
        res.assignment[i] = arg;
        inertia += best;
    }
    if (inertia <= res.inertia) {
        res.inertia_trace.push_back(inertia);
        res.inertia = inertia;
    }

    // Hartigan-style refinement: apply single-point moves with exact inertia
    // deltas until none improves. Strictly stronger than Lloyd alone and
    // escapes its fixed points on small instances.
    std::vector<size_t> cnt(k, 0);
    std::vector<double> mean(size_t(k) * pts.d, 0.0);
    for (size_t i = 0; i < pts.n; ++i) {
        cnt[res.assignment[i]]++;
        for (size_t c = 0; c < pts.d; ++c)
            mean[size_t(res.assignment[i]) * pts.d + c] += pts.row(i)[c];
    }
    for (uint32_t j = 0; j < k; ++j)
        if (cnt[j] > 0)
            for (size_t c = 0; c < pts.d; ++c) mean[size_t(j) * pts.d + c] /= double(cnt[j]);

    size_t move_budget = 10 * pts.n * k;
    bool improved = true;
    while (improved && move_budget > 0) {
        improved = false;
        for (size_t i = 0; i < pts.n && move_budget > 0; ++i) {
            uint32_t cur = res.assignment[i];
            if (cnt[cur] <= 1) continue;  // never empty a cluster
            double leave = (double(cnt[cur]) / double(cnt[cur] - 1)) *
                           sqdist(pts.row(i), &mean[size_t(cur) * pts.d], pts.d);
            double best_delta = -1e-12;
            uint32_t best_j = cur;
            for (uint32_t j = 0; j < k; ++j) {
                if (j == cur) continue;
                double enter = (double(cnt[j]) / double(cnt[j] + 1)) *
                               sqdist(pts.row(i), &mean[size_t(j) * pts.d], pts.d);
                double delta = enter - leave;
                if (delta < best_delta) {
                    best_delta = delta;
                    best_j = j;
                }
            }
            if (best_j != cur) {
                for (size_t c = 0; c < pts.d; ++c) {
                    mean[size_t(cur) * pts.d + c] =
                        (mean[size_t(cur) * pts.d + c] * double(cnt[cur]) - pts.row(i)[c]) /
                        double(cnt[cur] - 1);
                    mean[size_t(best_j) * pts.d + c] =
                        (mean[size_t(best_j) * pts.d + c] * double(cnt[best_j]) + pts.row(i)[c]) /
                        double(cnt[best_j] + 1);
                }
                cnt[cur]--;
                cnt[best_j]++;
                res.assignment[i] = best_j;
                improved = true;
                --move_budget;
            }
        }
    }
    // Recompute centroids/assignment/inertia from the refined partition.
    res.centroids = mean;
    inertia = 0.0;
    for (size_t i = 0; i < pts.n; ++i) {
        double best = std::numeric_limits<double>::max();
        uint32_t arg = 0;
        for (uint32_t j = 0; j < k; ++j) {
            double dd = sqdist(pts.row(i), &res.centroids[size_t(j) * pts.d], pts.d);
            if (dd < best) {
                best = dd;
                arg = j;
            }
        }
        res.assignment[i] = arg;
        inertia += best;
    }
    if (inertia <= res.inertia) {
        res.inertia_trace.push_back(inertia);
        res.inertia = inertia;
    }
    return res;
}

}  // namespace

KMeansResult kmeans(const Points& points, uint32_t k, uint32_t max_iters, uint64_t seed,
                    uint32_t restarts) {
    if (k < 1) throw Error("kmeans: k must be >= 1");
    if (points.n < k) throw TooFewPoints("kmeans needs n >= k");
    restarts = std::max(1u, restarts);

    KMeansResult best;
    best.inertia = std::numeric_limits<double>::max();
    for (uint32_t r = 0; r < restarts; ++r) {
        Rng rng = make_rng(derive_seed(seed, "kmeans-restart", r));
        // Rotate seeding strategies across restarts for diversity.
        SeedStrategy strat = r % 3 == 0   ? SeedStrategy::GreedyPP
                             : r % 3 == 1 ? SeedStrategy::Uniform
                                          : SeedStrategy::FarthestFirst;
        KMeansResult res = lloyd(points, k, max_iters, rng, strat);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

namespace {

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

Agreement agreement(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
    if (a.size() != b.size()) throw KeyMismatch("label vectors differ in length");
    const size_t n = a.size();
    if (n == 0) throw KeyMismatch("empty labellings");

    std::unordered_map<uint64_t, size_t> cells;
    std::unordered_map<uint32_t, size_t> rows, cols;
    for (size_t i = 0; i < n; ++i) {
        cells[(uint64_t(a[i]) << 32) | b[i]]++;
        rows[a[i]]++;
        cols[b[i]]++;
    }

    double sum_cells = 0.0;
    for (const auto& [_, c] : cells) sum_cells += comb2(double(c));
    double sum_rows = 0.0;
    for (const auto& [_, c] : rows) sum_rows += comb2(double(c));
    double sum_cols = 0.0;
    for (const auto& [_, c] : cols) sum_cols += comb2(double(c));

    Agreement res;
    double expected = sum_rows * sum_cols / comb2(double(n));
    double maximum = 0.5 * (sum_rows + sum_cols);
    res.ari = (maximum - expected) == 0.0 ? 1.0 : (sum_cells - expected) / (maximum - expected);

    double h_a = 0.0, h_b = 0.0, mi = 0.0;
    for (const auto& [_, c] : rows) {
        double p = double(c) / n;
        h_a -= p * std::log(p);
    }
    for (const auto& [_, c] : cols) {
        double p = double(c) / n;
        h_b -= p * std::log(p);
    }
    for (const auto& [key, c] : cells) {
        double p = double(c) / n;
        double pa = double(rows[uint32_t(key >> 32)]) / n;
        double pb = double(cols[uint32_t(key & 0xffffffff)]) / n;
        mi += p * std::log(p / (pa * pb));
    }
    res.nmi = (h_a + h_b) == 0.0 ? 1.0 : std::max(0.0, 2.0 * mi / (h_a + h_b));

    std::unordered_map<uint32_t, std::unordered_map<uint32_t, size_t>> by_cluster;
    for (size_t i = 0; i < n; ++i) by_cluster[a[i]][b[i]]++;
    double pure = 0.0;
    for (const auto& [_, hist] : by_cluster) {
        size_t top = 0;
        for (const auto& [__, c] : hist) top = std::max(top, c);
        pure += double(top);
    }
    res.purity = pure / n;
    return res;
}

Agreement agreement(const std::map<std::string, uint32_t>& assignment,
                    const std::map<std::string, uint32_t>& ground_truth) {
    if (assignment.size() != ground_truth.size())
        throw KeyMismatch("assignment and truth differ in size");
    std::vector<uint32_t> a, b;
    auto it = ground_truth.begin();
    for (const auto& [key, label] : assignment) {
        if (it->first != key) throw KeyMismatch(key);
        a.push_back(label);
        b.push_back(it->second);
        ++it;
    }
    return agreement(a, b);
}

ClusterReport make_report(const std::vector<std::string>& keys,
                          const std::vector<uint32_t>& assignment, const Points& embeddings,
                          const std::map<std::string, std::string>& raw_text,
                          size_t excerpt_bytes) {
    if (keys.size() != assignment.size() || keys.size() != embeddings.n)
        throw KeyMismatch("make_report inputs differ in size");

    std::map<uint32_t, std::vector<size_t>> members;
    for (size_t i = 0; i < keys.size(); ++i) members[assignment[i]].push_back(i);

    ClusterReport report;
    for (const auto& [cluster, idxs] : members) {
        ClusterEntry entry;
        entry.cluster = cluster;

        std::vector<double> center(embeddings.d, 0.0);
        for (size_t i : idxs) {
            for (size_t c = 0; c < embeddings.d; ++c) center[c] += embeddings.row(i)[c];
        }
        for (auto& v : center) v /= double(idxs.size());

        double best = std::numeric_limits<double>::max();
        size_t rep = idxs.front();
        for (size_t i : idxs) {
            double dd = sqdist(embeddings.row(i), center.data(), embeddings.d);
            // Ties go to the lexicographically lowest key.
            if (dd < best - 1e-15 ||
                (std::abs(dd - best) <= 1e-15 && keys[i] < keys[rep])) {
                best = dd;
                rep = i;
            }
        }
        entry.representative = keys[rep];
        for (size_t i : idxs) entry.members.push_back(keys[i]);
        std::sort(entry.members.begin(), entry.members.end());

        auto it = raw_text.find(entry.representative);
        if (it != raw_text.end()) {
            entry.excerpt = it->second.substr(0, excerpt_bytes);
        }
        report.clusters.push_back(std::move(entry));
    }
    return report;
}

void write_report(std::ostream& out, const ClusterReport& report) {
    for (const auto& entry : report.clusters) {
        out << "== cluster " << entry.cluster << " (" << entry.members.size() << " members) ==\n";
        out << "representative: " << entry.representative << "\n";
        if (!entry.excerpt.empty()) out << entry.excerpt << "\n";
        out << "members:";
        for (const auto& m : entry.members) out << " " << m;
        out << "\n\n";
    }
}

}  // namespace hc
