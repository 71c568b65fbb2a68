#include "spillover/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace spillover {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.flush()) throw ValidationError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ParseError("parameter " + key + ": expected a number, got '" + value + "'");
    }
}

}  // namespace

ModelParams parse_params(const std::string& text) {
    ModelParams p;
    bool seen[7] = {false, false, false, false, false, false, false};
    const char* keys[7] = {"sigma", "wage", "discount", "gamma", "alpha", "z_max", "price_mode"};

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "line " << lineno << ": expected 'key = value'";
            throw ParseError(os.str());
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);

        int idx = -1;
        for (int i = 0; i < 7; ++i)
            if (key == keys[i]) idx = i;
        if (idx < 0) throw ValidationError("unknown parameter key: " + key);
        if (seen[idx]) throw ValidationError("duplicate parameter key: " + key);
        seen[idx] = true;

        switch (idx) {
            case 0: p.sigma = parse_number(value, key); break;
            case 1: p.wage = parse_number(value, key); break;
            case 2: p.discount = parse_number(value, key); break;
            case 3: p.gamma = parse_number(value, key); break;
            case 4: p.alpha = parse_number(value, key); break;
            case 5: p.z_max = parse_number(value, key); break;
            case 6:
                if (value == "endogenous") {
                    p.price_mode = PriceMode::Endogenous;
                } else {
                    p.price_mode = PriceMode::Fixed;
                    p.fixed_price = parse_number(value, key);
                }
                break;
        }
    }
    for (int i = 0; i < 7; ++i)
        if (!seen[i]) throw ValidationError(std::string("missing parameter key: ") + keys[i]);
    validate_params(p);
    return p;
}

ModelParams load_params_file(const fs::path& path) {
    return parse_params(read_text_file(path));
}

std::string params_to_text(const ModelParams& p) {
    std::ostringstream os;
    os << "sigma = " << format_double(p.sigma) << "\n";
    os << "wage = " << format_double(p.wage) << "\n";
    os << "discount = " << format_double(p.discount) << "\n";
    os << "gamma = " << format_double(p.gamma) << "\n";
    os << "alpha = " << format_double(p.alpha) << "\n";
    os << "z_max = " << format_double(p.z_max) << "\n";
    if (p.price_mode == PriceMode::Endogenous)
        os << "price_mode = \"endogenous\"\n";
    else
        os << "price_mode = " << format_double(p.fixed_price) << "\n";
    return os.str();
}

json params_to_json(const ModelParams& p) {
    json j{{"sigma", p.sigma},   {"wage", p.wage},   {"discount", p.discount},
           {"gamma", p.gamma},   {"alpha", p.alpha}, {"z_max", p.z_max}};
    if (p.price_mode == PriceMode::Endogenous)
        j["price_mode"] = "endogenous";
    else
        j["price_mode"] = p.fixed_price;
    return j;
}

SpilloverNetwork load_network_file(const fs::path& path) {
    return load_network(read_text_file(path));
}

json network_to_json(const SpilloverNetwork& net) {
    json j{{"sectors", net.n_sectors}, {"weights", net.weights}, {"kernel", net.kernel}};
    if (!net.label.empty()) j["label"] = net.label;
    return j;
}

std::string spillover_matrix_csv(const SpilloverMatrix& S) {
    std::ostringstream os;
    const int L = static_cast<int>(S.entries.size());
    os << "sector";
    for (int c = 1; c <= L; ++c) os << "," << c;
    os << "\n";
    for (int l = 0; l < L; ++l) {
        os << (l + 1);
        for (int c = 0; c < L; ++c) os << "," << format_double(S.entries[l][c]);
        os << "\n";
    }
    return os.str();
}

std::string sector_solution_csv(const MfgSolution& sol, int sector) {
    const ValueFunction& V = sol.values.at(sector);
    const Density& m = sol.densities.at(sector);
    std::ostringstream os;
    os << "z,V,dV,m\n";
    for (int i = 0; i < V.grid.n; ++i)
        os << format_double(V.grid.z[i]) << "," << format_double(V.values[i]) << ","
           << format_double(V.derivative[i]) << "," << format_double(m.values[i]) << "\n";
    return os.str();
}

json solution_summary_json(const MfgSolution& sol) {
    json uniq{{"zeta", sol.uniqueness.zeta},
              {"sector_products", sol.uniqueness.sector_products},
              {"contraction_warning", sol.uniqueness.contraction_warning}};
    if (sol.uniqueness.contraction_ratio)
        uniq["contraction_ratio"] = *sol.uniqueness.contraction_ratio;

    std::vector<double> means;
    means.reserve(sol.densities.size());
    for (const auto& m : sol.densities) means.push_back(mean_productivity(m));

    return json{{"k_star", sol.k_star},
                {"B", sol.price},
                {"price_mode", sol.price_mode == PriceMode::Endogenous ? "endogenous" : "fixed"},
                {"mean_productivity", means},
                {"iterations", sol.iterations},
                {"final_gap", sol.final_gap},
                {"gap_history", sol.gap_history},
                {"clamp_activated", sol.clamp_activated},
                {"cache_hits", sol.cache_hits},
                {"uniqueness", uniq}};
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "param_value,sector,mean_productivity\n";
    for (const auto& p : points) {
        if (!p.ok) {
            os << format_double(p.value) << ",failed,\n";
            continue;
        }
        for (std::size_t l = 0; l < p.mean_productivity.size(); ++l)
            os << format_double(p.value) << "," << (l + 1) << ","
               << format_double(p.mean_productivity[l]) << "\n";
    }
    return os.str();
}

std::string density_csv(const Density& m) {
    std::ostringstream os;
    os << "z,m\n";
    for (int i = 0; i < m.grid.n; ++i)
        os << format_double(m.grid.z[i]) << "," << format_double(m.values[i]) << "\n";
    return os.str();
}

std::string density_comparison_csv(const DensityComparison& cmp) {
    std::ostringstream os;
    os << "z,delta_m\n";
    for (std::size_t i = 0; i < cmp.z.size(); ++i)
        os << format_double(cmp.z[i]) << "," << format_double(cmp.delta[i]) << "\n";
    return os.str();
}

std::string ensemble_records_csv(const std::vector<EnsembleRecord>& records) {
    std::ostringstream os;
    os << "run,sector,path_class,row_sum_S,k_star,mean_prod,B\n";
    for (const auto& rec : records) {
        for (int l = 0; l < rec.net.n_sectors; ++l)
            os << rec.run << "," << (l + 1) << "," << to_string(rec.classes[l]) << ","
               << format_double(spillover_row_sum(rec.S, l)) << ","
               << format_double(rec.k_star[l]) << "," << format_double(rec.mean_prod[l]) << ","
               << format_double(rec.price) << "\n";
    }
    return os.str();
}

std::string regression_summary_csv(const std::vector<RegressionFit>& fits) {
    std::ostringstream os;
    os << "model,param,estimate,std_err,r_squared\n";
    for (const auto& fit : fits)
        for (std::size_t j = 0; j < fit.parameter_names.size(); ++j)
            os << to_string(fit.model) << "," << fit.parameter_names[j] << ","
               << format_double(fit.estimates[j]) << "," << format_double(fit.std_errors[j])
               << "," << format_double(fit.r_squared) << "\n";
    return os.str();
}

std::string k_mean_curve_csv(const std::vector<std::pair<double, double>>& samples) {
    std::ostringstream os;
    os << "k,mean_productivity\n";
    for (const auto& [k, mean] : samples)
        os << format_double(k) << "," << format_double(mean) << "\n";
    return os.str();
}

json ensemble_to_json(const EnsembleResult& result) {
    json runs = json::array();
    for (const auto& rec : result.records) {
        json classes = json::array();
        for (PathClass c : rec.classes) classes.push_back(to_string(c));
        runs.push_back(json{{"run", rec.run},
                            {"network", network_to_json(rec.net)},
                            {"S", rec.S.entries},
                            {"zeta", rec.zeta},
                            {"k_star", rec.k_star},
                            {"mean_prod", rec.mean_prod},
                            {"path_class", classes},
                            {"B", rec.price}});
    }
    return json{{"records", runs},
                {"failures", result.failures},
                {"failure_messages", result.failure_messages}};
}

EnsembleResult ensemble_from_json(const json& doc) {
    EnsembleResult result;
    try {
        result.failures = doc.value("failures", 0);
        if (doc.contains("failure_messages"))
            result.failure_messages = doc.at("failure_messages").get<std::vector<std::string>>();
        for (const auto& run : doc.at("records")) {
            EnsembleRecord rec;
            rec.run = run.at("run").get<int>();
            rec.net = load_network(run.at("network").dump());
            rec.S.entries = run.at("S").get<std::vector<std::vector<double>>>();
            rec.zeta = run.at("zeta").get<double>();
            rec.S.zeta = rec.zeta;
            rec.S.column_sums.assign(rec.net.n_sectors, 0.0);
            for (int l = 0; l < rec.net.n_sectors; ++l)
                for (int s = 0; s < rec.net.n_sectors; ++s)
                    rec.S.column_sums[s] += rec.net.kernel[l][s];
            rec.k_star = run.at("k_star").get<std::vector<double>>();
            rec.mean_prod = run.at("mean_prod").get<std::vector<double>>();
            for (const auto& c : run.at("path_class")) {
                std::string name = c.get<std::string>();
                if (name == "none")
                    rec.classes.push_back(PathClass::NoSpillover);
                else if (name == "direct")
                    rec.classes.push_back(PathClass::DirectOnly);
                else if (name == "indirect")
                    rec.classes.push_back(PathClass::HasIndirect);
                else
                    throw ValidationError("path_class: unknown value " + name);
            }
            rec.price = run.at("B").get<double>();
            result.records.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("ensemble document malformed: ") + e.what());
    }
    return result;
}

}  // namespace spillover
