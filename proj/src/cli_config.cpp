#include "metamob/cli_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace metamob {

ModelSpec parse_method(const std::string& name) {
    if (name == "mob") return ModelSpec{ModelVariant::M0};
    if (name == "mob-ri") return ModelSpec{ModelVariant::M1};
    if (name == "metamob-ri") return ModelSpec{ModelVariant::M2};
    if (name == "metamob-si") return ModelSpec{ModelVariant::M3};
    throw std::runtime_error("unknown method '" + name +
                             "' (expected mob, mob-ri, metamob-ri, metamob-si)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Scenario parse_scenario_name(const std::string& s) {
    if (s == "null") return Scenario::Null;
    if (s == "sima") return Scenario::SimA;
    if (s == "simb") return Scenario::SimB;
    throw std::runtime_error("grid: unknown scenario '" + s + "'");
}

CorrTarget parse_corr(const std::string& s) {
    if (s == "none") return CorrTarget::None;
    if (s == "b0_splitter") return CorrTarget::B0WithSplitter;
    if (s == "b0_nonsplitter") return CorrTarget::B0WithNonsplitter;
    if (s == "b1_splitter") return CorrTarget::B1WithSplitter;
    if (s == "b1_nonsplitter") return CorrTarget::B1WithNonsplitter;
    throw std::runtime_error("grid: unknown corr target '" + s + "'");
}

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Null: return "null";
        case Scenario::SimA: return "sima";
        case Scenario::SimB: return "simb";
    }
    return "?";
}

const char* corr_name(CorrTarget c) {
    switch (c) {
        case CorrTarget::None: return "none";
        case CorrTarget::B0WithSplitter: return "b0_splitter";
        case CorrTarget::B0WithNonsplitter: return "b0_nonsplitter";
        case CorrTarget::B1WithSplitter: return "b1_splitter";
        case CorrTarget::B1WithNonsplitter: return "b1_nonsplitter";
    }
    return "?";
}

template <typename T>
void check_domain(const std::vector<T>& values, const std::vector<T>& domain,
                  const char* key) {
    for (const T& v : values)
        if (std::find(domain.begin(), domain.end(), v) == domain.end())
            throw std::runtime_error(
                std::string("grid: value for '") + key +
                "' outside the default domain (use --allow-custom to override)");
}

} // namespace

ScenarioGrid parse_scenario_grid(std::istream& in, bool allow_custom) {
    std::map<std::string, std::vector<std::string>> kv;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("grid: line " + std::to_string(lineno) +
                                     ": expected key = values");
        kv[trim(line.substr(0, eq))] = split_csv(line.substr(eq + 1));
    }
    for (const auto& [key, _] : kv) {
        static const std::vector<std::string> known = {
            "scenario", "K", "N", "tau0", "tau1", "corr", "tau_gamma"};
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw std::runtime_error("grid: unknown key '" + key + "'");
    }

    auto get = [&](const char* key,
                   std::vector<std::string> fallback) -> std::vector<std::string> {
        const auto it = kv.find(key);
        return it != kv.end() && !it->second.empty() ? it->second : fallback;
    };
    const auto scenarios = get("scenario", {"null"});
    std::vector<int> Ks, Ns;
    for (const auto& s : get("K", {"5"})) Ks.push_back(std::stoi(s));
    for (const auto& s : get("N", {"500"})) Ns.push_back(std::stoi(s));
    std::vector<double> t0s, t1s, tgs;
    for (const auto& s : get("tau0", {"0"})) t0s.push_back(std::stod(s));
    for (const auto& s : get("tau1", {"0"})) t1s.push_back(std::stod(s));
    for (const auto& s : get("tau_gamma", {"5"})) tgs.push_back(std::stod(s));
    const auto corrs = get("corr", {"none"});

    if (!allow_custom) {
        check_domain(Ks, {5, 10}, "K");
        check_domain(Ns, {200, 500, 1000, 2000}, "N");
        check_domain(t0s, {0.0, 5.0, 10.0}, "tau0");
        check_domain(t1s, {0.0, 2.5, 5.0, 10.0}, "tau1");
        check_domain(tgs, {2.5, 5.0, 10.0}, "tau_gamma");
    }

    ScenarioGrid grid;
    for (const auto& sc : scenarios)
        for (int K : Ks)
            for (int N : Ns)
                for (double t0 : t0s)
                    for (double t1 : t1s)
                        for (const auto& corr : corrs)
                            for (double tg : tgs) {
                                ScenarioConfig c;
                                c.scenario = parse_scenario_name(sc);
                                c.K = K;
                                c.N_total = N;
                                c.tau0 = t0;
                                c.tau1 = t1;
                                c.corr_target = parse_corr(corr);
                                c.tau_gamma = tg;
                                c.validate();
                                std::ostringstream label;
                                label << sc << "_K" << K << "_N" << N << "_t0-"
                                      << t0 << "_t1-" << t1 << "_" << corr;
                                if (c.scenario == Scenario::SimB)
                                    label << "_tg-" << tg;
                                grid.cells.push_back(c);
                                grid.cell_labels.push_back(label.str());
                                if (c.scenario != Scenario::SimB) break;
                            }
    return grid;
}

ScenarioGrid parse_scenario_grid_file(const std::string& path,
                                      bool allow_custom) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("grid: cannot open " + path);
    return parse_scenario_grid(in, allow_custom);
}

const char* kResultsCsvHeader =
    "cell,scenario,K,N,tau0,tau1,corr,tau_gamma,method,reps,included,excluded,"
    "discovery_rate,discovery_se,mean_subgroups,accuracy_rate,mean_effect_corr,"
    "corr_n,corr_excluded,warning_rate,convergence_rate,frac_within_3_iters,"
    "wall_seconds";

std::string results_csv_row(const std::string& cell_label,
                            const ScenarioAggregate& agg) {
    std::ostringstream os;
    os << std::setprecision(10);
    const ScenarioConfig& c = agg.config;
    os << cell_label << ',' << scenario_name(c.scenario) << ',' << c.K << ','
       << c.N_total << ',' << c.tau0 << ',' << c.tau1 << ','
       << corr_name(c.corr_target) << ','
       << (c.scenario == Scenario::SimB ? c.tau_gamma : 0.0) << ','
       << agg.spec.name() << ',' << agg.reps << ',' << agg.included << ','
       << agg.excluded << ',' << agg.discovery_rate << ',' << agg.discovery_se
       << ',' << agg.mean_subgroups << ',' << agg.accuracy_rate << ','
       << agg.mean_effect_corr << ',' << agg.corr_n << ',' << agg.corr_excluded
       << ',' << agg.warning_rate << ',' << agg.convergence_rate << ','
       << agg.frac_within_3_iters << ',' << agg.wall_seconds;
    return os.str();
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("results: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultsCsvHeader)
        throw std::runtime_error("results: schema mismatch in header");
    const std::vector<std::string> cols = split_csv(line);
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != cols.size())
            throw std::runtime_error("results: malformed row");
        ResultRow r;
        r.cell_label = fields[0];
        r.scenario = fields[1];
        r.K = std::stoi(fields[2]);
        r.N = std::stoi(fields[3]);
        r.tau0 = std::stod(fields[4]);
        r.tau1 = std::stod(fields[5]);
        r.corr = fields[6];
        r.tau_gamma = std::stod(fields[7]);
        r.method = fields[8];
        for (size_t i = 9; i < cols.size(); ++i)
            r.metrics[cols[i]] = std::stod(fields[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace metamob
