#ifndef WAAM_RUN_CONFIG_HPP
#define WAAM_RUN_CONFIG_HPP

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "waam/experiment_harness.hpp"

namespace waam {

/**
 * Run configuration: an INI file with sections
 *
 *   [part]        tube_diameter, bend_radius, final_angle_deg, base_height
 *   [bounds]      v_t_min, v_t_max, envelope (common|cold|hot), dh_min, dh_max
 *   [model.cold]  a, b
 *   [model.hot]   a, b
 *   [solver]      dv_t_max, beta, tolerance, max_iterations
 *   [thermal]     tau_layers, lambda_init, interlayer_cooling
 *   [sensor]      noise_sigma, seed
 *   [scenario]    feedback (open-loop|closed-loop), planning_model (cold|hot),
 *                 n_segments, theta, standoff_limit
 *
 * Every key is optional. Unknown sections or keys are rejected.
 */
class RunConfig {
public:
    using Tree = boost::property_tree::ptree;

    RunConfig() = default;
    explicit RunConfig(Tree tree) : tree_(std::move(tree)) { check_keys(); }

    static RunConfig parse(std::istream& in, const std::string& source = "<config>")
    {
        Tree t;
        try {
            boost::property_tree::ini_parser::read_ini(in, t);
        } catch (const boost::property_tree::ini_parser_error& e) {
            throw ValidationError(source + ": line " + std::to_string(e.line()) + ": " + e.message());
        }
        return RunConfig(std::move(t));
    }

    static RunConfig load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ValidationError("cannot open config file '" + path.string() + "'");
        return parse(in, path.string());
    }

    /// Applies "section.key=value"; the section is everything before the last dot.
    void set(const std::string& assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos)
            throw ValidationError("override '" + assignment + "' is not of the form section.key=value");
        const std::string path = trim(assignment.substr(0, eq));
        const std::string value = trim(assignment.substr(eq + 1));
        const auto dot = path.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == path.size())
            throw ValidationError("override '" + assignment + "' needs a section and a key");
        const std::string section = path.substr(0, dot);
        const std::string key = path.substr(dot + 1);
        Tree* child = nullptr;
        if (auto found = tree_.find(section); found != tree_.not_found())
            child = &found->second;
        else
            child = &tree_.push_back({section, Tree{}})->second;
        child->put(Tree::path_type(key, '/'), value);
        check_keys();
    }

    void set_seed(std::uint64_t seed) { set("sensor.seed=" + std::to_string(seed)); }

    const Tree& tree() const { return tree_; }

    /// Base scenario described by the file (feedback and model from [scenario]).
    ScenarioSpec scenario() const
    {
        ScenarioSpec s;
        s.part.tube_diameter = get("part", "tube_diameter", s.part.tube_diameter);
        s.part.bend_radius = get("part", "bend_radius", s.part.bend_radius);
        s.part.final_angle =
            get("part", "final_angle_deg", s.part.final_angle * 180.0 / std::numbers::pi) *
            std::numbers::pi / 180.0;
        s.part.base_height = get("part", "base_height", s.part.base_height);

        s.cold = {get("model.cold", "a", s.cold.a), get("model.cold", "b", s.cold.b), "cold"};
        s.hot = {get("model.hot", "a", s.hot.a), get("model.hot", "b", s.hot.b), "hot"};
        validate_model(s.cold);
        validate_model(s.hot);

        const double v_min = get("bounds", "v_t_min", 3.0);
        const double v_max = get("bounds", "v_t_max", 17.0);
        const std::string envelope = get_string("bounds", "envelope", "common");
        if (envelope == "common") {
            const std::array models{s.cold, s.hot};
            s.bounds = ProcessBounds::common_envelope(models, v_min, v_max);
        } else if (envelope == "cold") {
            s.bounds = ProcessBounds::from_model(s.cold, v_min, v_max);
        } else if (envelope == "hot") {
            s.bounds = ProcessBounds::from_model(s.hot, v_min, v_max);
        } else {
            throw ValidationError("bounds.envelope must be common, cold or hot (got '" + envelope + "')");
        }
        s.bounds.dh_min = get("bounds", "dh_min", s.bounds.dh_min);
        s.bounds.dh_max = get("bounds", "dh_max", s.bounds.dh_max);

        s.solver.dv_t_max = get("solver", "dv_t_max", s.solver.dv_t_max);
        s.solver.beta = has("solver", "beta") ? get("solver", "beta", 0.0) : default_beta(s.solver.dv_t_max);
        s.solver.tolerance = get("solver", "tolerance", s.solver.tolerance);
        s.solver.max_iterations = get("solver", "max_iterations", s.solver.max_iterations);

        s.thermal.tau_layers = get("thermal", "tau_layers", s.thermal.tau_layers);
        s.thermal.lambda_init = get("thermal", "lambda_init", s.thermal.lambda_init);
        s.thermal.interlayer_cooling = get("thermal", "interlayer_cooling", s.thermal.interlayer_cooling);

        s.sensor.noise_sigma = get("sensor", "noise_sigma", s.sensor.noise_sigma);
        s.sensor.seed = get<std::uint64_t>("sensor", "seed", s.sensor.seed);

        const std::string feedback = get_string("scenario", "feedback", "closed-loop");
        if (feedback == "closed-loop")
            s.feedback = Feedback::closed_loop;
        else if (feedback == "open-loop")
            s.feedback = Feedback::open_loop;
        else
            throw ValidationError("scenario.feedback must be open-loop or closed-loop (got '" + feedback + "')");
        const std::string planning = get_string("scenario", "planning_model", "cold");
        if (planning == "cold")
            s.planning_model = PlanningModel::cold;
        else if (planning == "hot")
            s.planning_model = PlanningModel::hot;
        else
            throw ValidationError("scenario.planning_model must be cold or hot (got '" + planning + "')");
        s.n_segments = get<Eigen::Index>("scenario", "n_segments", s.n_segments);
        if (has("scenario", "theta"))
            s.theta_override = get("scenario", "theta", 0.0);
        s.standoff_limit = get("scenario", "standoff_limit", s.standoff_limit);

        s.validate();
        return s;
    }

private:
    static std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    }

    static const std::map<std::string, std::set<std::string>>& schema()
    {
        static const std::map<std::string, std::set<std::string>> keys{
            {"part", {"tube_diameter", "bend_radius", "final_angle_deg", "base_height"}},
            {"bounds", {"v_t_min", "v_t_max", "envelope", "dh_min", "dh_max"}},
            {"model.cold", {"a", "b"}},
            {"model.hot", {"a", "b"}},
            {"solver", {"dv_t_max", "beta", "tolerance", "max_iterations"}},
            {"thermal", {"tau_layers", "lambda_init", "interlayer_cooling"}},
            {"sensor", {"noise_sigma", "seed"}},
            {"scenario", {"feedback", "planning_model", "n_segments", "theta", "standoff_limit"}},
        };
        return keys;
    }

    void check_keys() const
    {
        for (const auto& [section, body] : tree_) {
            const auto it = schema().find(section);
            if (it == schema().end()) {
                if (body.empty())
                    throw ValidationError("config: key '" + section + "' outside any section");
                throw ValidationError("config: unknown section [" + section + "]");
            }
            for (const auto& [key, value] : body)
                if (!it->second.contains(key))
                    throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
        }
    }

    const Tree* section(const std::string& name) const
    {
        const auto it = tree_.find(name);
        return it == tree_.not_found() ? nullptr : &it->second;
    }

    bool has(const std::string& sec, const std::string& key) const
    {
        const Tree* s = section(sec);
        return s && s->find(key) != s->not_found();
    }

    std::string get_string(const std::string& sec, const std::string& key, const std::string& fallback) const
    {
        if (!has(sec, key))
            return fallback;
        return trim(section(sec)->get<std::string>(Tree::path_type(key, '/')));
    }

    template <typename T>
    T get(const std::string& sec, const std::string& key, T fallback) const
    {
        if (!has(sec, key))
            return fallback;
        const std::string raw = get_string(sec, key, "");
        std::istringstream in(raw);
        T value{};
        in >> value;
        if constexpr (std::is_floating_point_v<T>) {
            if (in.fail()) {
                // operator>> rejects "inf"; stod accepts it.
                try {
                    std::size_t used = 0;
                    value = static_cast<T>(std::stod(raw, &used));
                    if (used == raw.size())
                        return value;
                } catch (const std::exception&) {
                }
            }
        }
        if (in.fail() || !(in >> std::ws).eof())
            throw ValidationError("config: [" + sec + "] " + key + " = '" + raw + "' is not a valid number");
        return value;
    }

    Tree tree_;
};

} // namespace waam

#endif // WAAM_RUN_CONFIG_HPP
