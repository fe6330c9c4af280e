#include "riskdp/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace riskdp {

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file: " + path);
    out << content;
    if (!out) throw ValidationError("write failed: " + path);
}

namespace {

nlohmann::json tensor3_to_json(const std::vector<double>& flat, int d0, int d1,
                               int d2) {
    nlohmann::json out = nlohmann::json::array();
    std::size_t idx = 0;
    for (int a = 0; a < d0; ++a) {
        nlohmann::json mid = nlohmann::json::array();
        for (int b = 0; b < d1; ++b) {
            nlohmann::json row = nlohmann::json::array();
            for (int c = 0; c < d2; ++c) row.push_back(flat[idx++]);
            mid.push_back(std::move(row));
        }
        out.push_back(std::move(mid));
    }
    return out;
}

std::vector<double> tensor3_from_json(const nlohmann::json& j, int d0, int d1,
                                      int d2, const std::string& name) {
    if (!j.is_array() || static_cast<int>(j.size()) != d0)
        throw ValidationError(name + " has wrong shape");
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(d0) * d1 * d2);
    for (const auto& mid : j) {
        if (!mid.is_array() || static_cast<int>(mid.size()) != d1)
            throw ValidationError(name + " has wrong shape");
        for (const auto& row : mid) {
            if (!row.is_array() || static_cast<int>(row.size()) != d2)
                throw ValidationError(name + " has wrong shape");
            for (const auto& v : row) flat.push_back(v.get<double>());
        }
    }
    return flat;
}

}  // namespace

nlohmann::json model_to_json(const MdpModel& model) {
    nlohmann::json j;
    j["n_states"] = model.n_states;
    j["n_actions"] = model.n_actions;
    j["gamma"] = model.gamma;
    j["transitions"] = tensor3_to_json(model.transitions, model.n_actions,
                                       model.n_states, model.n_states);
    nlohmann::json cost;
    cost["c_max"] = model.cost.c_max;
    if (model.cost.kind == CostKind::Deterministic) {
        cost["kind"] = "deterministic";
        cost["table"] = tensor3_to_json(model.cost.table, model.n_states,
                                        model.n_actions, model.n_states);
    } else {
        cost["kind"] = "beta";
        cost["alpha"] = tensor3_to_json(model.cost.alpha, model.n_states,
                                        model.n_actions, model.n_states);
        cost["beta"] = tensor3_to_json(model.cost.beta, model.n_states,
                                       model.n_actions, model.n_states);
    }
    j["cost"] = std::move(cost);
    return j;
}

MdpModel model_from_json(const nlohmann::json& j) {
    MdpModel model;
    model.n_states = j.at("n_states").get<int>();
    model.n_actions = j.at("n_actions").get<int>();
    model.gamma = j.at("gamma").get<double>();
    model.transitions = tensor3_from_json(j.at("transitions"), model.n_actions,
                                          model.n_states, model.n_states,
                                          "transitions");
    const auto& cost = j.at("cost");
    model.cost.c_max = cost.at("c_max").get<double>();
    const std::string kind = cost.at("kind").get<std::string>();
    if (kind == "deterministic") {
        model.cost.kind = CostKind::Deterministic;
        model.cost.table = tensor3_from_json(cost.at("table"), model.n_states,
                                             model.n_actions, model.n_states,
                                             "cost table");
    } else if (kind == "beta") {
        model.cost.kind = CostKind::BetaRandom;
        model.cost.alpha = tensor3_from_json(cost.at("alpha"), model.n_states,
                                             model.n_actions, model.n_states,
                                             "cost alpha");
        model.cost.beta = tensor3_from_json(cost.at("beta"), model.n_states,
                                            model.n_actions, model.n_states,
                                            "cost beta");
    } else {
        throw ValidationError("unknown cost kind: " + kind);
    }
    model.validate();
    return model;
}

void save_model(const MdpModel& model, const std::string& path) {
    write_text_file(path, model_to_json(model).dump(2) + "\n");
}

MdpModel load_model(const std::string& path) {
    return model_from_json(nlohmann::json::parse(read_text_file(path)));
}

std::string model_hash(const MdpModel& model) {
    return hash_hex(model_to_json(model).dump());
}

RiskSpec risk_spec_from_json(const nlohmann::json& j, bool normalize,
                             std::vector<std::string>* notes) {
    if (!j.is_array() || j.empty())
        throw ValidationError("risk spec must be a non-empty list of measures");
    std::vector<SpectralMeasure> measures;
    for (std::size_t idx = 0; idx < j.size(); ++idx) {
        const auto& jm = j[idx];
        if (!jm.is_array() || jm.empty())
            throw ValidationError("risk spec measure " + std::to_string(idx) +
                                  " must be a non-empty list of atoms");
        SpectralMeasure measure;
        for (const auto& atom : jm)
            measure.atoms.push_back(
                {atom.at("xi").get<double>(), atom.at("weight").get<double>()});
        const double total = measure.weight_sum();
        if (std::abs(total - 1.0) > 1e-9) {
            if (!normalize)
                throw ValidationError(
                    "risk spec measure " + std::to_string(idx) +
                    " has weights summing to " + format_g17(total) +
                    "; pass normalize to rescale");
            for (auto& atom : measure.atoms) atom.weight /= total;
            if (notes != nullptr)
                notes->push_back("measure " + std::to_string(idx) +
                                 " weights normalized by " + format_g17(total));
        }
        measures.push_back(std::move(measure));
    }
    return make_risk_spec(std::move(measures));
}

nlohmann::json risk_spec_to_json(const RiskSpec& spec) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& measure : spec.measures) {
        nlohmann::json jm = nlohmann::json::array();
        for (const auto& atom : measure.atoms)
            jm.push_back({{"xi", atom.xi}, {"weight", atom.weight}});
        j.push_back(std::move(jm));
    }
    return j;
}

RiskSpec load_risk_spec(const std::string& path, bool normalize,
                        std::vector<std::string>* notes) {
    return risk_spec_from_json(nlohmann::json::parse(read_text_file(path)),
                               normalize, notes);
}

std::string risk_spec_hash(const RiskSpec& spec) {
    return hash_hex(risk_spec_to_json(spec).dump());
}

std::string dataset_to_csv(const Dataset& dataset) {
    std::string out = "t,x,a,x_next,c\n";
    for (const auto& tr : dataset.transitions) {
        out += std::to_string(tr.t);
        out += ',';
        out += std::to_string(tr.x);
        out += ',';
        out += std::to_string(tr.a);
        out += ',';
        out += std::to_string(tr.x_next);
        out += ',';
        out += format_g17(tr.c);
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(const std::string& csv, int n_states, int n_actions) {
    Dataset data;
    data.n_states = n_states;
    data.n_actions = n_actions;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "t,x,a,x_next,c")
        throw ValidationError("dataset CSV header must be 't,x,a,x_next,c'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Transition tr;
        const char* ptr = line.data();
        const char* end = line.data() + line.size();
        auto field = [&](auto& value) {
            auto [next, ec] = std::from_chars(ptr, end, value);
            if (ec != std::errc{})
                throw ValidationError("dataset CSV parse error: " + line);
            ptr = next;
            if (ptr < end && *ptr == ',') ++ptr;
        };
        field(tr.t);
        field(tr.x);
        field(tr.a);
        field(tr.x_next);
        field(tr.c);
        data.transitions.push_back(tr);
    }
    data.validate();
    return data;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    write_text_file(path, dataset_to_csv(dataset));
}

Dataset load_dataset(const std::string& path, int n_states, int n_actions) {
    return dataset_from_csv(read_text_file(path), n_states, n_actions);
}

std::string dataset_hash(const Dataset& dataset) {
    return hash_hex(dataset_to_csv(dataset));
}

nlohmann::json search_to_json(const SimplexSearch& search) {
    return {{"grid_step", search.grid_step},
            {"n_random", search.n_random},
            {"refine_rounds", search.refine_rounds},
            {"refine_radius", search.refine_radius},
            {"seed", search.seed}};
}

SimplexSearch search_from_json(const nlohmann::json& j) {
    SimplexSearch s;
    s.grid_step = j.value("grid_step", s.grid_step);
    s.n_random = j.value("n_random", s.n_random);
    s.refine_rounds = j.value("refine_rounds", s.refine_rounds);
    s.refine_radius = j.value("refine_radius", s.refine_radius);
    s.seed = j.value("seed", s.seed);
    s.validate();
    return s;
}

nlohmann::json oracle_solution_to_json(const OracleSolution& sol,
                                       const std::string& model_hash,
                                       const std::string& risk_hash) {
    nlohmann::json j;
    j["v_star"] = sol.v_star;
    nlohmann::json pi = nlohmann::json::array();
    for (int i = 0; i < sol.pi_star.n_states; ++i) {
        const auto row = sol.pi_star.row(i);
        pi.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["pi_star"] = std::move(pi);
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["tol"] = sol.tol;
    j["search"] = search_to_json(sol.search);
    j["model_hash"] = model_hash;
    j["risk_spec_hash"] = risk_hash;
    return j;
}

OracleSolution oracle_solution_from_json(const nlohmann::json& j) {
    OracleSolution sol;
    sol.v_star = j.at("v_star").get<std::vector<double>>();
    const auto& pi = j.at("pi_star");
    sol.pi_star.n_states = static_cast<int>(pi.size());
    sol.pi_star.n_actions =
        sol.pi_star.n_states > 0 ? static_cast<int>(pi[0].size()) : 0;
    for (const auto& row : pi)
        for (const auto& w : row) sol.pi_star.weights.push_back(w.get<double>());
    sol.iterations = j.at("iterations").get<int>();
    sol.residual = j.at("residual").get<double>();
    sol.tol = j.value("tol", 0.0);
    sol.search = search_from_json(j.at("search"));
    return sol;
}

nlohmann::json learned_solution_to_json(const LearnedSolution& sol,
                                        const AlgoConfig& config,
                                        const std::string& dataset_hash,
                                        const std::string& risk_hash) {
    nlohmann::json j;
    j["v_hat"] = sol.v_hat;
    nlohmann::json pi = nlohmann::json::array();
    for (int i = 0; i < sol.pi_hat.n_states; ++i) {
        const auto row = sol.pi_hat.row(i);
        pi.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["pi_hat"] = std::move(pi);
    j["grid"] = approx_grid(sol.approx).points;
    j["converged"] = sol.converged;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& rec : sol.history)
        hist.push_back({{"delta", rec.delta}, {"fit_loss", rec.fit_loss}});
    j["history"] = std::move(hist);
    nlohmann::json uncovered = nlohmann::json::array();
    for (const auto& [i, k] : sol.uncovered) uncovered.push_back({i, k});
    j["uncovered_pairs"] = std::move(uncovered);

    if (const auto* table = std::get_if<TableApprox>(&sol.approx)) {
        j["backend"] = "table";
        j["table"] = {{"values", table->values}};
    } else if (const auto* mlp = std::get_if<MlpApprox>(&sol.approx)) {
        j["backend"] = "mlp";
        j["mlp"] = {{"layer_sizes", mlp->net.layer_sizes()},
                    {"weights", mlp->net.weights()},
                    {"activation", "elu"},
                    {"q_scale", mlp->q_scale}};
    }
    j["hyperparameters"] = {{"backend", config.backend == Backend::Table ? "table" : "mlp"},
                            {"gamma", config.gamma},
                            {"c_max", config.c_max},
                            {"stop_tol", config.stop_tol},
                            {"max_outer", config.max_outer},
                            {"seed", config.seed},
                            {"warm_start", config.warm_start},
                            {"epochs", config.hyper.epochs},
                            {"minibatch", config.hyper.minibatch},
                            {"learning_rate", config.hyper.learning_rate},
                            {"beta", config.hyper.beta},
                            {"hidden", config.shape.hidden},
                            {"search", search_to_json(config.search)}};
    j["dataset_hash"] = dataset_hash;
    j["risk_spec_hash"] = risk_hash;
    return j;
}

LearnedSolution learned_solution_from_json(const nlohmann::json& j,
                                           AlgoConfig* config) {
    LearnedSolution sol;
    sol.v_hat = j.at("v_hat").get<std::vector<double>>();
    const auto& pi = j.at("pi_hat");
    sol.pi_hat.n_states = static_cast<int>(pi.size());
    sol.pi_hat.n_actions =
        sol.pi_hat.n_states > 0 ? static_cast<int>(pi[0].size()) : 0;
    for (const auto& row : pi)
        for (const auto& w : row) sol.pi_hat.weights.push_back(w.get<double>());
    sol.converged = j.value("converged", false);
    for (const auto& rec : j.value("history", nlohmann::json::array()))
        sol.history.push_back(
            {rec.at("delta").get<double>(), rec.at("fit_loss").get<double>()});

    QGrid grid;
    grid.points = j.at("grid").get<std::vector<double>>();
    const std::string backend = j.at("backend").get<std::string>();
    const int S = sol.pi_hat.n_states, A = sol.pi_hat.n_actions;
    if (backend == "table") {
        TableApprox table;
        table.n_states = S;
        table.n_actions = A;
        table.grid = grid;
        table.values = j.at("table").at("values").get<std::vector<double>>();
        sol.approx = std::move(table);
    } else if (backend == "mlp") {
        MlpApprox mlp;
        mlp.n_states = S;
        mlp.n_actions = A;
        mlp.grid = grid;
        mlp.q_scale = j.at("mlp").at("q_scale").get<double>();
        mlp.net = Mlp::from_flat(j.at("mlp").at("layer_sizes").get<std::vector<int>>(),
                                 j.at("mlp").at("weights").get<std::vector<double>>());
        sol.approx = std::move(mlp);
    } else {
        throw ValidationError("unknown learned-solution backend: " + backend);
    }

    if (config != nullptr && j.contains("hyperparameters")) {
        const auto& h = j["hyperparameters"];
        config->backend = h.value("backend", "table") == std::string("mlp")
                              ? Backend::Mlp
                              : Backend::Table;
        config->grid = grid;
        config->gamma = h.value("gamma", 0.3);
        config->c_max = h.value("c_max", 1.0);
        config->stop_tol = h.value("stop_tol", 1e-4);
        config->max_outer = h.value("max_outer", 50);
        config->seed = h.value("seed", std::uint64_t{1});
        config->warm_start = h.value("warm_start", true);
        config->hyper.epochs = h.value("epochs", 50);
        config->hyper.minibatch = h.value("minibatch", 256);
        config->hyper.learning_rate = h.value("learning_rate", 1e-3);
        config->hyper.beta = h.value("beta", 1.0);
        if (h.contains("hidden"))
            config->shape.hidden = h["hidden"].get<std::vector<int>>();
        if (h.contains("search")) config->search = search_from_json(h["search"]);
    }
    return sol;
}

}  // namespace riskdp
