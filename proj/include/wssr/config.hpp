#ifndef WSSR_CONFIG_HPP
#define WSSR_CONFIG_HPP
//
// Run configuration: INI-style sections of key = value pairs. Every key has a
// default; unknown sections or keys are rejected.
//

#include <wssr/optimizers.hpp>
#include <wssr/sampler.hpp>
#include <wssr/system.hpp>
#include <wssr/wavefunction.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace wssr {

inline const std::vector<std::string>& optimizer_names()
{
    static const std::vector<std::string> names{"sgd", "sr", "minsr", "spring", "wssr", "rssr"};
    return names;
}

inline std::string joined(const std::vector<std::string>& items, const std::string& sep = ", ")
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? sep : "") + items[i];
    return out;
}

struct ConfigKey {
    std::string name; // section.key
    std::string fallback;
    std::string help;
};

inline const std::vector<ConfigKey>& config_keys()
{
    static const std::vector<ConfigKey> keys{
        {"system.preset", "He", "built-in system (H, He, Be, O, Ne, LiH, Li2); empty to use system.nuclei"},
        {"system.nuclei", "", "explicit nuclei as 'Z x y z; Z x y z' (Bohr)"},
        {"system.n_up", "", "spin-up electrons (required with system.nuclei)"},
        {"system.n_down", "", "spin-down electrons (required with system.nuclei)"},
        {"system.include_nuclear_repulsion", "true", "add the nucleus-nucleus constant to energies"},
        {"wavefunction.correlation_order", "2", "ACE correlation order B (tuple length)"},
        {"wavefunction.degree_cap", "1", "cap D on the summed degree n + l of a tuple"},
        {"wavefunction.lmax", "1", "largest l of the default Slater basis"},
        {"wavefunction.orbitals", "", "explicit basis rows 'center n l m zeta spin; ...' (spin up|down|either)"},
        {"wavefunction.jastrow", "true", "multiply by the electron-electron Jastrow factor"},
        {"wavefunction.init_noise", "0.01", "Gaussian noise on the near-Slater initial coefficients"},
        {"sampler.walkers", "2048", "walkers, also the batch size per step"},
        {"sampler.burn_in", "1000", "Metropolis steps before the first batch"},
        {"sampler.thinning", "10", "Metropolis steps between batches"},
        {"sampler.proposal_std", "0.5", "initial Gaussian proposal width (Bohr), tuned during burn-in"},
        {"sampler.clip_std", "5", "clip local energies beyond this many standard deviations"},
        {"sampler.fd_step", "1e-4", "finite-difference step for coordinate derivatives"},
        {"optimizer.name", "wssr", "one of sgd, sr, minsr, spring, wssr, rssr"},
        {"schedule.alpha", "0.015", "learning rate eta(k) = alpha / (1 + k / beta)"},
        {"schedule.beta", "1000", "learning-rate decay scale"},
        {"sr.regularization", "pseudo_inverse", "pseudo_inverse, diagonal_shift or diagonal_scale"},
        {"sr.epsilon", "0.001", "relative cutoff, shift or scale of the full SR solve"},
        {"minsr.epsilon", "0.001", "Tikhonov shift of T"},
        {"spring.mu", "0.99", "SPRING momentum"},
        {"spring.epsilon", "0.001", "Tikhonov shift of T"},
        {"wssr.delta", "0.95", "averaging weight of the history"},
        {"wssr.sigma_floor", "0.001", "S eigenvalue assigned to the orthogonal complement"},
        {"wssr.relative_floor", "false", "scale sigma_floor by the leading S eigenvalue"},
        {"wssr.r_reg", "1e-6", "relative eigenvalue cutoff for the effective rank"},
        {"wssr.initial_rank", "400", "initial r_max"},
        {"wssr.rank_growth", "0.1", "r_max growth factor when truncation binds"},
        {"wssr.ssi_max_iters", "3", "subspace iterations per step"},
        {"wssr.ssi_tolerance", "1e-10", "early exit on the subspace residual"},
        {"wssr.backend", "ssi", "ssi, exact or randomized"},
        {"rssr.oversample", "10", "sketch oversampling"},
        {"run.steps", "100", "optimizer steps k_max"},
        {"run.seed", "1", "random seed"},
        {"run.out", "run", "output directory"},
        {"run.smoothing_window", "0", "trace smoothing window, 0 for min(10000, steps / 10)"},
        {"run.checkpoint_every", "0", "checkpoint period in steps, 0 for the final step only"},
        {"run.threads", "1", "worker threads for sampling"},
    };
    return keys;
}

struct RunConfig {
    std::string preset = "He";
    MolecularSystem system;

    std::size_t correlation_order = 2;
    int degree_cap = 1;
    int lmax = 1;
    OneBodyBasisSpec basis;
    bool jastrow = true;
    double init_noise = 1e-2;

    SamplerSettings sampler;
    double clip_std = 5.0;
    double fd_step = default_fd_step;

    std::string optimizer = "wssr";
    LearningRateSchedule schedule;
    SrSettings sr;
    double minsr_epsilon = 1e-3;
    SpringSettings spring;
    WssrSettings wssr;

    std::size_t steps = 100;
    std::uint64_t seed = 1;
    std::string out = "run";
    std::size_t smoothing_window = 0;
    std::size_t checkpoint_every = 0;

    std::size_t effective_smoothing_window() const noexcept
    {
        if (smoothing_window > 0)
            return smoothing_window;
        return std::max<std::size_t>(1, std::min<std::size_t>(10000, steps / 10));
    }

    void validate() const
    {
        const auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
        if (std::find(optimizer_names().begin(), optimizer_names().end(), optimizer) == optimizer_names().end())
            fail("unknown optimizer '" + optimizer + "'; valid: " + joined(optimizer_names()));
        try {
            system.validate();
            basis.validate(system.nuclei.size());
            schedule.validate();
            wssr.validate();
        }
        catch (const Error& e) {
            fail(e.what());
        }
        if (correlation_order < 1)
            fail("wavefunction.correlation_order must be >= 1");
        if (degree_cap < 0)
            fail("wavefunction.degree_cap must be >= 0");
        if (!(init_noise >= 0.0))
            fail("wavefunction.init_noise must be >= 0");
        if (sampler.walkers < 2)
            fail("sampler.walkers must be >= 2");
        if (!(sampler.proposal_std > 0.0))
            fail("sampler.proposal_std must be positive");
        if (!(clip_std > 0.0))
            fail("sampler.clip_std must be positive");
        if (!(fd_step > 0.0))
            fail("sampler.fd_step must be positive");
        if (sampler.threads < 1)
            fail("run.threads must be >= 1");
        if (!(sr.epsilon >= 0.0) || !(minsr_epsilon >= 0.0) || !(spring.tikhonov_eps >= 0.0))
            fail("regularisation parameters must be >= 0");
        if (!(spring.mu >= 0.0 && spring.mu < 1.0))
            fail("spring.mu must lie in [0, 1)");
        if (steps < 1)
            fail("run.steps must be >= 1");
    }
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep))
        if (item.find_first_not_of(" \t") != std::string::npos)
            out.push_back(item);
    return out;
}

inline bool parse_bool(const std::string& key, std::string v)
{
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw Error(ErrorCode::ConfigError, key + ": expected a boolean, got '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v)
{
    std::istringstream in(v);
    T out{};
    if constexpr (std::is_unsigned_v<T>) {
        if (v.find('-') != std::string::npos)
            throw Error(ErrorCode::ConfigError, key + ": expected a nonnegative integer, got '" + v + "'");
    }
    in >> out;
    std::string rest;
    if (in.fail() || (in >> rest))
        throw Error(ErrorCode::ConfigError, key + ": cannot parse '" + v + "'");
    return out;
}

inline std::vector<Nucleus> parse_nuclei(const std::string& text)
{
    std::vector<Nucleus> out;
    for (const auto& row : split(text, ';')) {
        std::istringstream in(row);
        Nucleus n;
        std::string extra;
        if (!(in >> n.charge >> n.position[0] >> n.position[1] >> n.position[2]) || (in >> extra))
            throw Error(ErrorCode::ConfigError, "system.nuclei: bad row '" + row + "' (expected Z x y z)");
        out.push_back(n);
    }
    return out;
}

inline OneBodyBasisSpec parse_orbitals(const std::string& text)
{
    OneBodyBasisSpec spec;
    for (const auto& row : split(text, ';')) {
        std::istringstream in(row);
        Orbital o;
        std::string spin, extra;
        if (!(in >> o.center >> o.n >> o.l >> o.m >> o.zeta >> spin) || (in >> extra))
            throw Error(ErrorCode::ConfigError,
                        "wavefunction.orbitals: bad row '" + row + "' (expected center n l m zeta spin)");
        if (spin == "up")
            o.spin = SpinFactor::up;
        else if (spin == "down")
            o.spin = SpinFactor::down;
        else if (spin == "either")
            o.spin = SpinFactor::either;
        else
            throw Error(ErrorCode::ConfigError, "wavefunction.orbitals: spin must be up, down or either");
        spec.orbitals.push_back(o);
    }
    return spec;
}

} // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(in, tree);
    }
    catch (const pt::ini_parser_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("malformed config: ") + e.message() + " at line " +
                                                std::to_string(e.line()));
    }

    const auto& keys = config_keys();
    const auto known = [&](const std::string& name) {
        return std::any_of(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; });
    };
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw Error(ErrorCode::ConfigError, "key '" + section + "' outside of a section");
        for (const auto& [key, value] : body)
            if (!known(section + "." + key))
                throw Error(ErrorCode::ConfigError, "unknown config key '" + section + "." + key + "'");
    }

    const auto get = [&](const std::string& name) -> std::string {
        const auto v = tree.get_optional<std::string>(pt::ptree::path_type(name, '.'));
        if (v)
            return *v;
        return std::find_if(keys.begin(), keys.end(), [&](const ConfigKey& k) { return k.name == name; })->fallback;
    };
    const auto num = [&]<class T>(const std::string& name, T) { return detail::parse_number<T>(name, get(name)); };
    const auto flag = [&](const std::string& name) { return detail::parse_bool(name, get(name)); };

    RunConfig c;
    c.preset = get("system.preset");
    const std::string nuclei = get("system.nuclei");
    if (!nuclei.empty()) {
        if (!c.preset.empty() && tree.get_optional<std::string>("system.preset"))
            throw Error(ErrorCode::ConfigError, "give either system.preset or system.nuclei, not both");
        c.preset.clear();
        c.system.nuclei = detail::parse_nuclei(nuclei);
        if (get("system.n_up").empty() || get("system.n_down").empty())
            throw Error(ErrorCode::ConfigError, "system.nuclei needs system.n_up and system.n_down");
        c.system.n_up = num("system.n_up", std::size_t{});
        c.system.n_down = num("system.n_down", std::size_t{});
    }
    else {
        const auto p = preset(c.preset);
        if (!p)
            throw Error(ErrorCode::ConfigError,
                        "unknown preset '" + c.preset + "'; valid: " + joined(preset_names()));
        c.system = *p;
        if (!get("system.n_up").empty() || !get("system.n_down").empty())
            throw Error(ErrorCode::ConfigError, "system.n_up / system.n_down only apply with system.nuclei");
    }
    c.system.include_nuclear_repulsion = flag("system.include_nuclear_repulsion");

    c.correlation_order = num("wavefunction.correlation_order", std::size_t{});
    c.degree_cap = num("wavefunction.degree_cap", int{});
    c.lmax = num("wavefunction.lmax", int{});
    if (c.lmax < 0 || c.lmax > max_supported_l)
        throw Error(ErrorCode::ConfigError, "wavefunction.lmax must lie in [0, " + std::to_string(max_supported_l) + "]");
    const std::string orbitals = get("wavefunction.orbitals");
    c.basis = orbitals.empty() ? OneBodyBasisSpec::default_for(c.system, c.lmax) : detail::parse_orbitals(orbitals);
    c.basis.canonicalize();
    c.jastrow = flag("wavefunction.jastrow");
    c.init_noise = num("wavefunction.init_noise", double{});

    c.sampler.walkers = num("sampler.walkers", std::size_t{});
    c.sampler.burn_in = num("sampler.burn_in", std::size_t{});
    c.sampler.thinning = num("sampler.thinning", std::size_t{});
    c.sampler.proposal_std = num("sampler.proposal_std", double{});
    c.clip_std = num("sampler.clip_std", double{});
    c.fd_step = num("sampler.fd_step", double{});

    c.optimizer = get("optimizer.name");
    c.schedule.alpha = num("schedule.alpha", double{});
    c.schedule.beta = num("schedule.beta", double{});

    const std::string reg = get("sr.regularization");
    if (reg == "pseudo_inverse")
        c.sr.kind = SrRegularization::pseudo_inverse;
    else if (reg == "diagonal_shift")
        c.sr.kind = SrRegularization::diagonal_shift;
    else if (reg == "diagonal_scale")
        c.sr.kind = SrRegularization::diagonal_scale;
    else
        throw Error(ErrorCode::ConfigError,
                    "sr.regularization must be pseudo_inverse, diagonal_shift or diagonal_scale");
    c.sr.epsilon = num("sr.epsilon", double{});
    c.minsr_epsilon = num("minsr.epsilon", double{});
    c.spring.mu = num("spring.mu", double{});
    c.spring.tikhonov_eps = num("spring.epsilon", double{});

    c.wssr.delta = num("wssr.delta", double{});
    c.wssr.sigma_floor = num("wssr.sigma_floor", double{});
    c.wssr.relative_floor = flag("wssr.relative_floor");
    c.wssr.r_reg = num("wssr.r_reg", double{});
    c.wssr.initial_rank = num("wssr.initial_rank", std::size_t{});
    c.wssr.rank_growth = num("wssr.rank_growth", double{});
    c.wssr.ssi_max_iters = num("wssr.ssi_max_iters", std::size_t{});
    c.wssr.ssi_tolerance = num("wssr.ssi_tolerance", double{});
    const std::string backend = get("wssr.backend");
    if (backend == "ssi")
        c.wssr.backend = SvdBackend::ssi;
    else if (backend == "exact")
        c.wssr.backend = SvdBackend::exact;
    else if (backend == "randomized")
        c.wssr.backend = SvdBackend::randomized;
    else
        throw Error(ErrorCode::ConfigError, "wssr.backend must be ssi, exact or randomized");
    c.wssr.oversample = num("rssr.oversample", std::size_t{});

    c.steps = num("run.steps", std::size_t{});
    c.seed = num("run.seed", std::uint64_t{});
    c.wssr.seed = c.seed;
    c.out = get("run.out");
    c.smoothing_window = num("run.smoothing_window", std::size_t{});
    c.checkpoint_every = num("run.checkpoint_every", std::size_t{});
    c.sampler.threads = num("run.threads", std::size_t{});

    c.validate();
    return c;
}

inline RunConfig parse_config_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
    return parse_config(in);
}

// the key table as shown by --help
inline std::string config_help()
{
    std::ostringstream out;
    std::string section;
    for (const auto& k : config_keys()) {
        const auto dot = k.name.find('.');
        const auto s = k.name.substr(0, dot);
        if (s != section) {
            out << "[" << s << "]\n";
            section = s;
        }
        out << "  " << k.name.substr(dot + 1);
        out << std::string(k.name.size() - dot < 30 ? 30 - (k.name.size() - dot) : 1, ' ');
        out << k.help;
        if (!k.fallback.empty())
            out << " (default " << k.fallback << ")";
        out << "\n";
    }
    return out.str();
}

} // namespace wssr

#endif
