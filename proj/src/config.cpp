// config.cpp: Key table, parsing and typed run configuration

#include "sfd/config.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sfd/errors.hpp"
#include "sfd/integrate.hpp"

namespace sfd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

const std::vector<std::string> kDeviceKeys = {"f_hz", "mass_kg", "x0_m", "ap_hw"};

} // namespace

const std::vector<std::pair<std::string, std::string>>& ConfigMap::defaults() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        // model and state
        {"model", "gup-markov"},
        {"hamiltonian", "rwa"},
        {"dim", "30"},
        {"initial_state", "superposition01"},
        // device and physical parameters (SI)
        {"device", "hbar-16ug"},
        {"f_hz", "5960000000"},
        {"mass_kg", "1.62e-08"},
        {"x0_m", "2.9e-19"},
        {"ap_hw", "1.5e-33"},
        {"gamma", "0"},
        {"beta_bar", "0"},
        {"kappa", "0"},
        {"omega_tau_g", "0"},
        {"tau_c", "0"},
        {"omega_tau_d", "0"},
        {"kernel", "delta"},
        {"kernel_tau", "0"},
        {"omega_kernel_tau", "0"},
        // integration (times in units of 1/omega)
        {"t_end", "100"},
        {"dt", format_double(kDefaultDt)},
        {"sample_every", "10"},
        {"positivity_every", "1"},
        {"convergence_check", "true"},
        {"observables", "rho_00,rho_11,re_rho_01,im_rho_01,abs_rho_01"},
        // ensembles
        {"seed", "1"},
        {"n_traj", "2000"},
        {"threads", "0"},
        {"compare", "true"},
        // output
        {"output", "sfd_out"},
        // fitting
        {"data", ""},
        {"fit_model", "exp"},
        {"bootstrap", "0"},
        // bounds
        {"t1_us", "85.8"},
        {"sigma_t1_us", "1.5"},
        {"t2_us", "147.3"},
        {"sigma_t2_us", "2.6"},
        {"epsilon", "0.02"},
        {"sigma_epsilon", "0.005"},
        {"propagation", "linear"},
        // wigner
        {"wigner_state", "final"},
        {"ground_epsilon", "0.02"},
        {"x_min", "-5"},
        {"x_max", "5"},
        {"nx", "101"},
        {"p_min", "-5"},
        {"p_max", "5"},
        {"np", "101"},
        {"fit_ellipticity", "true"},
        // synthetic datasets
        {"synth_model", "exp"},
        {"synth_amplitude", "1"},
        {"synth_decay_us", "85.8"},
        {"synth_frequency_hz", "50000"},
        {"synth_phase", "0"},
        {"synth_offset", "0"},
        {"synth_t_max_us", "0"},
        {"synth_points", "40"},
        {"synth_noise", "0"},
    };
    return table;
}

ConfigMap::ConfigMap() {
    for (const auto& [k, v] : defaults()) {
        values_[k] = v;
        explicit_[k] = false;
    }
}

void ConfigMap::set(const std::string& key, const std::string& value) {
    const std::string k = trim(key);
    if (!values_.count(k)) throw ConfigError("unknown config key '" + k + "'");
    values_[k] = trim(value);
    explicit_[k] = true;
    if (k == "device") {
        const DeviceProfile d = DeviceProfile::by_name(values_[k]);
        const std::vector<double> v = {d.frequency_hz, d.mass_kg, d.x0_m, d.ap_hw};
        for (std::size_t i = 0; i < kDeviceKeys.size(); ++i) {
            if (!explicit_[kDeviceKeys[i]]) values_[kDeviceKeys[i]] = format_double(v[i]);
        }
    }
}

void ConfigMap::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void ConfigMap::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.find('=') == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        }
        try {
            set(line);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void ConfigMap::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    load_text(buf.str(), path);
}

const std::string& ConfigMap::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

double ConfigMap::number(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
    }
}

long ConfigMap::integer(const std::string& key) const {
    const std::string& s = get(key);
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not an integer");
    }
}

bool ConfigMap::flag(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
}

bool ConfigMap::is_set(const std::string& key) const {
    const auto it = explicit_.find(key);
    if (it == explicit_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

nlohmann::ordered_json ConfigMap::echo() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : defaults()) j[k] = values_.at(k);
    return j;
}

ModelKind parse_model_kind(const std::string& name) {
    if (name == "gup-markov") return ModelKind::gup_markov;
    if (name == "gup-nonmarkov") return ModelKind::gup_nonmarkov;
    if (name == "breuer") return ModelKind::breuer;
    if (name == "damping-only") return ModelKind::damping_only;
    throw ConfigError("model: unknown value '" + name + "' (gup-markov, gup-nonmarkov, breuer, damping-only)");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::gup_markov: return "gup-markov";
        case ModelKind::gup_nonmarkov: return "gup-nonmarkov";
        case ModelKind::breuer: return "breuer";
        case ModelKind::damping_only: return "damping-only";
    }
    return "gup-markov";
}

InitialState InitialState::parse(const std::string& text) {
    InitialState s;
    if (text == "vacuum") return s;
    if (text == "superposition01") {
        s.kind = Kind::superposition01;
        return s;
    }
    if (text.rfind("fock(", 0) == 0 && text.back() == ')') {
        try {
            s.kind = Kind::fock;
            std::size_t used = 0;
            const std::string inner = text.substr(5, text.size() - 6);
            s.n = std::stol(inner, &used);
            if (used != inner.size() || s.n < 0) throw std::invalid_argument(inner);
            return s;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("initial_state: unknown value '" + text + "' (vacuum, fock(n), superposition01)");
}

std::string InitialState::name() const {
    switch (kind) {
        case Kind::vacuum: return "vacuum";
        case Kind::fock: return "fock(" + std::to_string(n) + ")";
        case Kind::superposition01: return "superposition01";
    }
    return "vacuum";
}

Vector InitialState::vector(Index dim) const {
    switch (kind) {
        case Kind::vacuum: return fock_vector(dim, 0);
        case Kind::fock:
            if (n >= dim) throw ConfigError("initial_state fock(n) needs n < dim");
            return fock_vector(dim, n);
        case Kind::superposition01: return (fock_vector(dim, 0) + fock_vector(dim, 1)) / std::numbers::sqrt2;
    }
    return fock_vector(dim, 0);
}

RunConfig RunConfig::from(const ConfigMap& map) {
    RunConfig c;
    c.model = parse_model_kind(map.get("model"));
    const std::string& h = map.get("hamiltonian");
    if (h == "rwa") {
        c.hamiltonian = HamiltonianKind::rwa;
    } else if (h == "full") {
        c.hamiltonian = HamiltonianKind::full;
    } else {
        throw ConfigError("hamiltonian: unknown value '" + h + "' (rwa, full)");
    }
    const long dim = map.integer("dim");
    if (dim < 3) throw ConfigError("dim: must be >= 3");
    c.dim = dim;
    c.initial = InitialState::parse(map.get("initial_state"));

    c.device = DeviceProfile::by_name(map.get("device"));
    c.device.frequency_hz = map.number("f_hz");
    c.device.mass_kg = map.number("mass_kg");
    c.device.x0_m = map.number("x0_m");
    c.device.ap_hw = map.number("ap_hw");
    if (!(c.device.frequency_hz > 0.0)) throw ConfigError("f_hz: must be > 0");

    ModelParams& p = c.params;
    p.omega = c.device.omega();
    p.ap_hw = c.device.ap_hw;
    p.gamma = map.number("gamma");
    p.beta_bar = map.number("beta_bar");
    p.kappa = map.number("kappa");
    p.tau_c = map.number("tau_c");
    if (map.number("omega_tau_g") > 0.0) p.set_omega_tau_g(map.number("omega_tau_g"));
    if (map.number("omega_tau_d") > 0.0) p.set_omega_tau_d(map.number("omega_tau_d"));
    const std::string& kernel = map.get("kernel");
    if (kernel == "delta") {
        p.kernel = KernelSpec::delta();
    } else if (kernel == "exponential") {
        double tau = map.number("kernel_tau");
        if (map.number("omega_kernel_tau") > 0.0) tau = map.number("omega_kernel_tau") / p.omega;
        p.kernel = KernelSpec::exponential(tau);
    } else {
        throw ConfigError("kernel: unknown value '" + kernel + "' (delta, exponential)");
    }
    p.validate();

    c.t_end = map.number("t_end");
    c.dt = map.number("dt");
    if (!(c.t_end >= 0.0)) throw ConfigError("t_end: must be >= 0");
    if (!(c.dt > 0.0)) throw ConfigError("dt: must be > 0");
    const long se = map.integer("sample_every");
    if (se < 1) throw ConfigError("sample_every: must be >= 1");
    c.sample_every = static_cast<std::size_t>(se);
    const long pe = map.integer("positivity_every");
    if (pe < 0) throw ConfigError("positivity_every: must be >= 0");
    c.positivity_every = static_cast<std::size_t>(pe);

    std::stringstream obs(map.get("observables"));
    std::string item;
    while (std::getline(obs, item, ',')) {
        item = trim(item);
        if (!item.empty()) c.observables.push_back(item);
    }
    c.seed = static_cast<std::uint64_t>(map.integer("seed"));
    const long nt = map.integer("n_traj");
    if (nt < 1) throw ConfigError("n_traj: must be >= 1");
    c.n_traj = static_cast<std::size_t>(nt);
    c.threads = static_cast<int>(map.integer("threads"));
    c.output = map.get("output");
    if (c.output.empty()) throw ConfigError("output: must not be empty");
    return c;
}

} // namespace sfd
