#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hc/corpus.hpp"
#include "hc/rng.hpp"

namespace hc {

struct ActiveInterval {
    int64_t start = 0;
    int64_t end = 0;       // exclusive
    int64_t mean_gap = 600;  // mean inter-session gap within the interval
};

// A bot family: command templates with mutation slots ({host}, {file}, {num}),
// an ip pool, and an activity schedule.
struct FamilySpec {
    uint32_t id = 0;
    std::vector<std::vector<std::string>> templates;  // each template = command lines
    uint32_t ip_pool = 10;
    uint32_t sessions_per_ip = 20;
    std::vector<ActiveInterval> intervals;  // non-overlapping
};

struct LabeledCorpus {
    std::vector<SessionRecord> records;
    std::map<std::string, uint32_t> ip_truth;                       // ip -> family
    std::map<std::string, std::pair<uint32_t, uint32_t>> session_truth;  // sid -> (family, template)
};

// Fills {host}/{file}/{num} slots from the RNG; unknown slot names throw.
std::string mutate_template(const std::string& tmpl, Rng& rng);
std::string mutate_template(const std::string& tmpl, uint64_t seed);

LabeledCorpus generate(const std::vector<FamilySpec>& specs, uint64_t seed);

// Desk-scale benchmark specs.
std::vector<FamilySpec> default_spec(uint32_t families = 6, uint32_t ips = 10,
                                     uint32_t sessions_per_ip = 20);

std::vector<FamilySpec> load_spec(std::istream& in);
void save_spec(std::ostream& out, const std::vector<FamilySpec>& specs);

}  // namespace hc
