#include "kpo/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "kpo/errors.hpp"

namespace kpo::io {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json mat(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::VectorXd r = m.row(i).transpose();
        rows.push_back(vec(r));
    }
    return rows;
}

Eigen::VectorXd to_vec(const json& j, const char* what) {
    if (!j.is_array())
        throw InvalidInput(std::string(what) + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw InvalidInput(std::string(what) + ": non-numeric entry");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd to_mat(const json& j, const char* what, Eigen::Index cols = -1) {
    if (!j.is_array())
        throw InvalidInput(std::string(what) + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0)
        return Eigen::MatrixXd(0, cols < 0 ? 0 : cols);
    Eigen::MatrixXd m;
    for (Eigen::Index i = 0; i < rows; ++i) {
        Eigen::VectorXd r = to_vec(j[static_cast<std::size_t>(i)], what);
        if (i == 0)
            m.resize(rows, r.size());
        else if (r.size() != m.cols())
            throw InvalidInput(std::string(what) + ": ragged rows");
        m.row(i) = r.transpose();
    }
    return m;
}

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidInput(std::string(what) + ": " + e.what());
    }
}

const json& field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end())
        throw InvalidInput(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& j, const char* key) {
    const json& v = field(j, key);
    if (!v.is_number())
        throw InvalidInput(std::string("field '") + key + "' is not a number");
    return v.get<double>();
}

std::string dump(const json& j) {
    return j.dump(2) + "\n";
}

const char* form_name(DetuningForm f) {
    return f == DetuningForm::Printed ? "printed" : "filling_ratio";
}

DetuningForm parse_form(const std::string& s) {
    if (s == "filling_ratio")
        return DetuningForm::FillingRatio;
    if (s == "printed")
        return DetuningForm::Printed;
    throw InvalidInput("unknown detuning form '" + s + "'");
}

json ground_json(const GroundStateSet& g) {
    json configs = json::array();
    for (const auto& s : g.configurations)
        configs.push_back(s);
    return {{"energy", g.energy}, {"configurations", configs}};
}

json series_json(const Eigen::VectorXd& t, const Eigen::VectorXd& p, const Eigen::VectorXd& sem, double dt) {
    return {{"t", vec(t)},
            {"p", vec(p)},
            {"sem", vec(sem)},
            {"final_p", p(p.size() - 1)},
            {"final_sem", sem(sem.size() - 1)},
            {"dt", dt}};
}

json instance_object(const CouplingMatrix& c) {
    std::vector<double> upper;
    for (int i = 0; i < c.n(); ++i)
        for (int j = i + 1; j < c.n(); ++j)
            upper.push_back(c(i, j));
    json j = {{"n", c.n()}, {"class", to_string(c.problem_class())}, {"entries", upper}};
    j["seed"] = c.seed() ? json(*c.seed()) : json(nullptr);
    return j;
}

CouplingMatrix instance_from(const json& j) {
    const double nd = number(j, "n");
    const int n = static_cast<int>(nd);
    if (nd != n || n < 2)
        throw InvalidInput("instance: n must be an integer >= 2");
    Eigen::VectorXd upper = to_vec(field(j, "entries"), "entries");
    if (upper.size() != static_cast<Eigen::Index>(n) * (n - 1) / 2)
        throw InvalidInput("instance: expected n(n-1)/2 upper-triangle entries");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    Eigen::Index k = 0;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            c(a, b) = c(b, a) = upper(k++);
    ProblemClass cls = ProblemClass::Custom;
    if (j.contains("class"))
        cls = parse_problem_class(j["class"].get<std::string>());
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j["seed"].is_null())
        seed = j["seed"].get<std::uint64_t>();
    return CouplingMatrix(std::move(c), cls, seed);
}

void add_metadata(json& j, const CouplingMatrix* c, const AnnealerParams* p) {
    if (c) {
        j["instance"] = {{"n", c->n()}, {"class", to_string(c->problem_class())}};
        j["instance"]["seed"] = c->seed() ? json(*c->seed()) : json(nullptr);
    }
    if (p)
        j["params"] = {{"a_factor", p->a_factor},
                       {"lambda_c", p->lambda_c_tilde},
                       {"eta", p->eta},
                       {"lambda_j", p->lambda_j_tilde},
                       {"lambda_big", p->lambda_big_tilde}};
}

// %.17g keeps CSV values round-trippable
std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

int folded_count(int n) { return 1 << (n - 1); }

std::string spin_label(std::uint64_t code, int n) {
    std::string s;
    for (int i = 0; i < n; ++i)
        s += (code >> i) & 1U ? '-' : '+';
    return s;
}

} // namespace

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInput("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidInput("cannot write " + path.string());
    out << text;
    if (!out)
        throw InvalidInput("write failed for " + path.string());
}

std::string instance_json(const CouplingMatrix& c, const GroundStateSet* ground) {
    json j = instance_object(c);
    if (ground)
        j["ground"] = ground_json(*ground);
    return dump(j);
}

CouplingMatrix parse_instance(const std::string& text) {
    return instance_from(parse(text, "instance"));
}

std::string params_json(const AnnealerParams& p) {
    json j = {{"units", "chi"},
              {"class", to_string(p.problem_class)},
              {"n", p.n()},
              {"lambda_c", p.lambda_c_tilde},
              {"r_max", p.r_max_tilde},
              {"eta", p.eta},
              {"lambda_j", p.lambda_j_tilde},
              {"lambda_big", p.lambda_big_tilde},
              {"d", p.d},
              {"delta", vec(p.delta_tilde)},
              {"delta_omega_bound", p.delta_omega_bound_tilde},
              {"delta_nom", vec(p.delta_nom_tilde)},
              {"g", vec(p.g_tilde)},
              {"j", mat(p.j_tilde)},
              {"kappa", p.kappa_tilde},
              {"t_ramp", p.t_ramp_tilde},
              {"a_factor", p.a_factor},
              {"detuning_form", form_name(p.detuning_form)}};
    return dump(j);
}

AnnealerParams parse_params(const std::string& text) {
    json j = parse(text, "params");
    if (j.contains("units") && j["units"] != "chi")
        throw InvalidInput("params: expected units of chi");
    AnnealerParams p;
    p.problem_class = parse_problem_class(field(j, "class").get<std::string>());
    p.lambda_c_tilde = number(j, "lambda_c");
    p.r_max_tilde = number(j, "r_max");
    p.eta = number(j, "eta");
    p.lambda_j_tilde = number(j, "lambda_j");
    p.lambda_big_tilde = number(j, "lambda_big");
    p.d = number(j, "d");
    p.delta_tilde = to_vec(field(j, "delta"), "delta");
    p.delta_omega_bound_tilde = number(j, "delta_omega_bound");
    p.delta_nom_tilde = to_vec(field(j, "delta_nom"), "delta_nom");
    p.g_tilde = to_vec(field(j, "g"), "g");
    p.j_tilde = to_mat(field(j, "j"), "j");
    p.kappa_tilde = number(j, "kappa");
    p.t_ramp_tilde = number(j, "t_ramp");
    p.a_factor = number(j, "a_factor");
    if (j.contains("detuning_form"))
        p.detuning_form = parse_form(j["detuning_form"].get<std::string>());
    p.validate();
    return p;
}

std::string design_json(const DesignSolution& d, const CouplingMatrix& c, double eta, double lambda_c) {
    json j = {{"instance", instance_object(c)},
              {"eta", eta},
              {"lambda_c", lambda_c},
              {"F", mat(d.f)},
              {"error", d.error},
              {"method", to_string(d.method)},
              {"c_eff", mat(d.c_eff)},
              {"first_order_error", d.first_order_error},
              {"modulation_depth", d.modulation_depth},
              {"passes", d.passes},
              {"column_objective", d.column_objective}};
    return dump(j);
}

CouplingMatrix design_instance(const std::string& text) {
    return instance_from(field(parse(text, "design"), "instance"));
}

DesignSolution parse_design(const std::string& text) {
    json j = parse(text, "design");
    DesignSolution d;
    const auto n = static_cast<Eigen::Index>(number(field(j, "instance"), "n"));
    d.f = to_mat(field(j, "F"), "F", n - 1);
    if (d.f.rows() != n || d.f.cols() != std::max<Eigen::Index>(n - 1, 0))
        throw InvalidInput("design: F must be n x (n-1)");
    if (!d.f.allFinite())
        throw InvalidInput("design: F has non-finite entries");
    if (j.contains("c_eff"))
        d.c_eff = to_mat(j["c_eff"], "c_eff");
    if (j.contains("method"))
        d.method = parse_design_method(j["method"].get<std::string>());
    d.error = j.value("error", 0.0);
    d.first_order_error = j.value("first_order_error", 0.0);
    d.modulation_depth = j.value("modulation_depth", modulation_depth(d.f));
    d.passes = j.value("passes", 0);
    if (j.contains("column_objective"))
        d.column_objective = j["column_objective"].get<std::vector<double>>();
    return d;
}

std::string scaling_json(const std::vector<ScalingPoint>& points, ProblemClass cls, double kappa_ratio) {
    json rows = json::array();
    for (const auto& s : points)
        rows.push_back({{"n", s.n},
                        {"g_max_rad_s", s.g_max},
                        {"delta_max_rad_s", s.delta_max},
                        {"chi_coupling_rad_s", s.chi_coupling},
                        {"chi_bandwidth_rad_s", s.chi_bandwidth},
                        {"chi_max_rad_s", s.chi_max},
                        {"chi_max_hz", s.chi_max / (2.0 * M_PI)},
                        {"t_cav_min_s", s.t_cav_min},
                        {"limiting", to_string(s.limiting)},
                        {"lambda_j", s.params.lambda_j_tilde},
                        {"lambda_big", s.params.lambda_big_tilde},
                        {"d", s.params.d}});
    json j = {{"units", "SI"}, {"class", to_string(cls)}, {"kappa_ratio", kappa_ratio}, {"points", rows}};
    return dump(j);
}

std::string scaling_csv(const std::vector<ScalingPoint>& points) {
    std::ostringstream os;
    os << "n,g_max_rad_s,delta_max_rad_s,chi_coupling_rad_s,chi_bandwidth_rad_s,chi_max_rad_s,chi_max_hz,"
          "t_cav_min_s,limiting\n";
    for (const auto& s : points)
        os << s.n << ',' << num(s.g_max) << ',' << num(s.delta_max) << ',' << num(s.chi_coupling) << ','
           << num(s.chi_bandwidth) << ',' << num(s.chi_max) << ',' << num(s.chi_max / (2.0 * M_PI)) << ','
           << num(s.t_cav_min) << ',' << to_string(s.limiting) << '\n';
    return os.str();
}

std::string classical_json(const ClassicalRecord& r) {
    const auto& c = r.config;
    json j = {{"kind", "classical"},
              {"units", "chi"},
              {"config",
               {{"n_traj", c.n_traj},
                {"n0", c.n0},
                {"t_ramp", c.t_ramp_tilde},
                {"t_final", c.t_final()},
                {"r_max", c.r_max_tilde},
                {"kappa", c.kappa_tilde},
                {"seed", c.seed},
                {"samples", c.samples}}}};
    add_metadata(j, r.instance, r.params);
    if (r.ground)
        j["ground"] = ground_json(*r.ground);
    if (r.static_run) {
        const auto& s = r.static_run->series;
        j["static"] = series_json(s.t, s.p, s.sem, r.static_run->dt);
    }
    if (r.dynamical_run) {
        const auto& s = r.dynamical_run->series;
        j["dynamical"] = series_json(s.t, s.p, s.sem, r.dynamical_run->dt);
    }
    return dump(j);
}

std::string classical_csv(const ClassicalRecord& r) {
    const EnsembleResult* base = r.static_run ? r.static_run : r.dynamical_run;
    if (!base)
        throw InvalidInput("classical record has no runs");
    std::ostringstream os;
    os << 't';
    if (r.static_run)
        os << ",p_static,sem_static";
    if (r.dynamical_run)
        os << ",p_dynamical,sem_dynamical";
    os << '\n';
    for (Eigen::Index k = 0; k < base->series.t.size(); ++k) {
        os << num(base->series.t(k));
        for (const EnsembleResult* e : {r.static_run, r.dynamical_run})
            if (e)
                os << ',' << num(e->series.p(k)) << ',' << num(e->series.sem(k));
        os << '\n';
    }
    return os.str();
}

std::string quantum_json(const QuantumRecord& r) {
    const auto& c = r.config;
    json j = {{"kind", "quantum"},
              {"units", "chi"},
              {"config",
               {{"n_traj", c.trajectories()},
                {"t_ramp", c.t_ramp_tilde},
                {"t_final", c.t_final()},
                {"r_max", c.r_max_tilde},
                {"kappa", c.kappa_tilde},
                {"seed", c.seed},
                {"levels", c.levels},
                {"samples", c.samples},
                {"stroboscopic", c.stroboscopic}}}};
    add_metadata(j, r.instance, r.params);
    if (r.ground)
        j["ground"] = ground_json(*r.ground);
    json labels = json::array();
    for (int k = 0; k < folded_count(r.n); ++k)
        labels.push_back(spin_label(static_cast<std::uint64_t>(k), r.n));
    j["configurations"] = labels;
    auto add = [&](const char* key, const QuantumEnsemble* e) {
        if (!e)
            return;
        json s = series_json(e->t, e->p, e->sem, e->dt);
        Eigen::MatrixXd folded(e->config_probs.rows(), folded_count(r.n));
        for (Eigen::Index k = 0; k < e->config_probs.rows(); ++k) {
            Eigen::VectorXd row = e->config_probs.row(k).transpose();
            folded.row(k) = fold_flips(row, r.n).transpose();
        }
        s["config_probs"] = mat(folded);
        s["jumps"] = e->jumps;
        j[key] = s;
    };
    add("static", r.static_run);
    add("dynamical", r.dynamical_run);
    if (r.density)
        j["density"] = {{"grid", vec(r.density->grid)},
                        {"position", mat(r.density->position)},
                        {"momentum", mat(r.density->momentum)}};
    return dump(j);
}

std::string quantum_csv(const QuantumRecord& r) {
    const QuantumEnsemble* base = r.static_run ? r.static_run : r.dynamical_run;
    if (!base)
        throw InvalidInput("quantum record has no runs");
    const int m = folded_count(r.n);
    std::ostringstream os;
    os << 't';
    for (auto [e, tag] : {std::pair{r.static_run, "static"}, std::pair{r.dynamical_run, "dynamical"}}) {
        if (!e)
            continue;
        os << ",p_" << tag << ",sem_" << tag;
        for (int k = 0; k < m; ++k)
            os << ",P" << spin_label(static_cast<std::uint64_t>(k), r.n) << '_' << tag;
    }
    os << '\n';
    for (Eigen::Index k = 0; k < base->t.size(); ++k) {
        os << num(base->t(k));
        for (const QuantumEnsemble* e : {r.static_run, r.dynamical_run}) {
            if (!e)
                continue;
            os << ',' << num(e->p(k)) << ',' << num(e->sem(k));
            Eigen::VectorXd row = e->config_probs.row(k).transpose();
            Eigen::VectorXd folded = fold_flips(row, r.n);
            for (int q = 0; q < m; ++q)
                os << ',' << num(folded(q));
        }
        os << '\n';
    }
    return os.str();
}

std::string control_json(const ControlPlan& plan, const SignalReport& rep, const ScalingPoint* chi) {
    const auto& fr = plan.frame();
    json osc = json::array();
    for (int i = 0; i < plan.n(); ++i)
        osc.push_back({{"index", i},
                       {"g_rad_s", fr.g(i)},
                       {"delta_rad_s", plan.delta(i)},
                       {"omega_dc_rad_s", plan.omega_dc(i)},
                       {"omega_dc_ghz", plan.omega_dc(i) / (2.0 * M_PI * 1e9)},
                       {"dc_residual_rad_s", plan.dc_residual(i)},
                       {"carrier_hz", rep.carrier(i)}});
    json j = {{"units", "SI"},
              {"omega_bus_rad_s", fr.omega_bus},
              {"chi_rad_s", fr.chi},
              {"omega_0_rad_s", plan.omega_0()},
              {"lambda_big_rad_s", plan.lambda_big()},
              {"slow_bound_rad_s", plan.slow_bound()},
              {"sample_rate_hz", rep.t.size() > 1 ? 1.0 / (rep.t(1) - rep.t(0)) : 0.0},
              {"duration_s", rep.t.size() > 1 ? rep.t(rep.t.size() - 1) - rep.t(0) : 0.0},
              {"bin_width_hz", rep.bin_width},
              {"oscillators", osc}};
    if (chi)
        j["chi_max"] = {{"chi_max_rad_s", chi->chi_max}, {"limiting", to_string(chi->limiting)}};
    return dump(j);
}

std::string signal_csv(const SignalReport& rep) {
    std::ostringstream os;
    const auto n = rep.omega.cols();
    os << "t_s";
    for (Eigen::Index i = 0; i < n; ++i)
        os << ",omega_" << i << ",omega_slow_" << i << ",omega_fast_" << i << ",x_" << i;
    os << '\n';
    for (Eigen::Index k = 0; k < rep.t.size(); ++k) {
        os << num(rep.t(k));
        for (Eigen::Index i = 0; i < n; ++i)
            os << ',' << num(rep.omega(k, i)) << ',' << num(rep.omega_slow(k, i)) << ','
               << num(rep.omega_fast(k, i)) << ',' << num(rep.x(k, i));
        os << '\n';
    }
    return os.str();
}

std::string spectrum_csv(const SignalReport& rep) {
    std::ostringstream os;
    os << "freq_hz";
    for (Eigen::Index i = 0; i < rep.psd.cols(); ++i)
        os << ",psd_" << i;
    os << '\n';
    for (Eigen::Index k = 0; k < rep.freq.size(); ++k) {
        os << num(rep.freq(k));
        for (Eigen::Index i = 0; i < rep.psd.cols(); ++i)
            os << ',' << num(rep.psd(k, i));
        os << '\n';
    }
    return os.str();
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used])))
                ++used;
            if (used != item.size())
                throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::logic_error&) {
            throw InvalidInput("bad list entry '" + item + "'");
        }
    }
    if (out.empty())
        throw InvalidInput("empty list");
    return out;
}

} // namespace kpo::io
