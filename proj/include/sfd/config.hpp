// config.hpp: Flat key=value run configuration for the command-line tool

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfd/estimate.hpp"
#include "sfd/fock.hpp"
#include "sfd/generators.hpp"
#include "sfd/params.hpp"

namespace sfd {

// Raw key/value pairs with every known key present (defaults filled in).
class ConfigMap {
public:
    ConfigMap();

    // Lines "key = value"; '#' starts a comment. Unknown keys throw ConfigError.
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin = "<text>");
    // "key=value" override.
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    double number(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    bool is_set(const std::string& key) const;  // given explicitly rather than defaulted

    // Resolved configuration, in key-table order.
    nlohmann::ordered_json echo() const;
    static const std::vector<std::pair<std::string, std::string>>& defaults();

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

enum class ModelKind { gup_markov, gup_nonmarkov, breuer, damping_only };
ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct InitialState {
    enum class Kind { vacuum, fock, superposition01 };
    Kind kind = Kind::vacuum;
    Index n = 0;
    static InitialState parse(const std::string& text);
    std::string name() const;
    Vector vector(Index dim) const;
};

// Typed view of a ConfigMap.
struct RunConfig {
    ModelKind model = ModelKind::gup_markov;
    HamiltonianKind hamiltonian = HamiltonianKind::rwa;
    Index dim = kDefaultDim;
    InitialState initial;
    ModelParams params;
    DeviceProfile device = DeviceProfile::hbar_16ug();
    double t_end = 100.0;
    double dt = 0.0;
    std::size_t sample_every = 1;
    std::size_t positivity_every = 1;
    std::vector<std::string> observables;
    std::uint64_t seed = 1;
    std::size_t n_traj = 2000;
    int threads = 0;
    std::string output;

    static RunConfig from(const ConfigMap& map);
};

} // namespace sfd
