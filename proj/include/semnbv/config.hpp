#ifndef SEMNBV_CONFIG_HPP
#define SEMNBV_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "semnbv/common.hpp"
#include "semnbv/grid.hpp"
#include "semnbv/nbv_planner.hpp"
#include "semnbv/sensor_sim.hpp"
#include "semnbv/world_sim.hpp"

namespace semnbv {

using json = nlohmann::json;

inline constexpr int kScenarioVersion = 1;
inline constexpr int kConfigVersion = 1;

/// A ground-truth world plus the sensor and start pose that go with it.
struct Scenario {
    std::string name;
    GroundTruthWorld world;
    CameraModel camera;
    Pose start;
    std::optional<Box3> workspace;
};

struct ExperimentConfig {
    std::string scenario_path;
    Scenario scenario;
    MapParams map;
    NoiseModel noise;
    ConfusionMatrix confusion;
    CameraModel camera;
    PlannerParams planner;
    std::map<std::string, std::vector<double>> weight_presets;
    std::size_t iterations = 2000;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    Pose start;
    Box3 evaluation_bounds;

    const std::vector<std::string>& class_names() const { return scenario.world.class_names; }

    void validate() const
    {
        scenario.world.validate();
        map.validate();
        noise.validate();
        camera.validate();
        planner.validate(map.num_classes);
        if (confusion.num_classes() != map.num_classes) throw ConfigError("confusion matrix size != class count");
        if (iterations < 1) throw ConfigError("iterations must be at least 1");
        if (!map.bounds.contains(scenario.world.bounds)) throw ConfigError("world bounds exceed the map bounds");
        if (!map.bounds.contains(planner.workspace)) throw ConfigError("planner workspace exceeds the map bounds");
        if (!evaluation_bounds.valid()) throw ConfigError("evaluation bounds are empty");
    }
};

namespace detail {

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

inline Vec3 vec3_from(const json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Box3 box_from(const json& j, const char* what)
{
    if (!j.is_object() || !j.contains("min") || !j.contains("max"))
        throw ConfigError(std::string(what) + " needs 'min' and 'max'");
    return {vec3_from(j.at("min"), what), vec3_from(j.at("max"), what)};
}

inline json box_to(const Box3& b) { return {{"min", vec3_to(b.min)}, {"max", vec3_to(b.max)}}; }

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline void apply_camera(const json& j, CameraModel& cam)
{
    cam.hfov = deg2rad(j.value("hfov_deg", rad2deg(cam.hfov)));
    cam.vfov = deg2rad(j.value("vfov_deg", rad2deg(cam.vfov)));
    cam.cols = j.value("cols", cam.cols);
    cam.rows = j.value("rows", cam.rows);
    cam.max_range = j.value("max_range", cam.max_range);
}

inline json camera_to(const CameraModel& cam)
{
    return {{"hfov_deg", rad2deg(cam.hfov)}, {"vfov_deg", rad2deg(cam.vfov)}, {"cols", cam.cols},
            {"rows", cam.rows},              {"max_range", cam.max_range}};
}

inline Pose pose_from(const json& j)
{
    return Pose(vec3_from(j.at("position"), "start.position"), deg2rad(j.value("yaw_deg", 0.0)));
}

inline json pose_to(const Pose& p) { return {{"position", vec3_to(p.position)}, {"yaw_deg", rad2deg(p.yaw)}}; }

inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace detail

/// Scenario schema (version 1):
///
///   { "version": 1, "name": "...",
///     "bounds":  {"min": [x,y,z], "max": [x,y,z]},
///     "classes": ["Sky", "Floor", ...],
///     "boxes":   [{"name": "...", "min": [...], "max": [...], "class": "Floor"}, ...],
///     "camera":  {"hfov_deg": 90, "vfov_deg": 60, "cols": 64, "rows": 48, "max_range": 8},
///     "start":   {"position": [x,y,z], "yaw_deg": 0},
///     "workspace": {"min": [...], "max": [...]} }        // optional
inline Scenario scenario_from_json(const json& j)
{
    try {
        if (!j.contains("version")) throw ConfigError("scenario is missing 'version'");
        if (j.at("version").get<int>() != kScenarioVersion)
            throw ConfigError("unsupported scenario version " + j.at("version").dump());
        Scenario s;
        s.name = j.value("name", std::string("unnamed"));
        s.world.bounds = detail::box_from(j.at("bounds"), "bounds");
        s.world.class_names = j.at("classes").get<std::vector<std::string>>();
        for (const auto& b : j.value("boxes", json::array())) {
            LabeledPrimitive p;
            p.name = b.value("name", std::string());
            p.box = detail::box_from(b, "box");
            const auto cls = b.at("class").get<std::string>();
            const auto idx = s.world.class_index(cls);
            if (!idx) throw ConfigError("box '" + p.name + "' uses unknown class '" + cls + "'");
            p.class_index = *idx;
            s.world.primitives.push_back(p);
        }
        if (j.contains("camera")) detail::apply_camera(j.at("camera"), s.camera);
        s.start = j.contains("start") ? detail::pose_from(j.at("start")) : Pose(s.world.bounds.center(), 0.0);
        if (j.contains("workspace")) s.workspace = detail::box_from(j.at("workspace"), "workspace");
        s.world.validate();
        s.camera.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
}

inline json scenario_to_json(const Scenario& s)
{
    json boxes = json::array();
    for (const auto& p : s.world.primitives)
        boxes.push_back({{"name", p.name},
                         {"min", detail::vec3_to(p.box.min)},
                         {"max", detail::vec3_to(p.box.max)},
                         {"class", s.world.class_names.at(p.class_index)}});
    json j = {{"version", kScenarioVersion},
              {"name", s.name},
              {"bounds", detail::box_to(s.world.bounds)},
              {"classes", s.world.class_names},
              {"boxes", boxes},
              {"camera", detail::camera_to(s.camera)},
              {"start", detail::pose_to(s.start)}};
    if (s.workspace) j["workspace"] = detail::box_to(*s.workspace);
    return j;
}

inline Scenario load_scenario(const std::filesystem::path& path)
{
    return scenario_from_json(detail::read_json_file(path));
}

inline std::string entropy_form_name(EntropyForm f) { return f == EntropyForm::Binary ? "binary" : "single_term"; }

/// Builds a fully resolved experiment configuration. Relative scenario paths
/// are taken relative to `base_dir`.
inline ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {})
{
    try {
        if (!j.contains("version")) throw ConfigError("config is missing 'version'");
        if (j.at("version").get<int>() != kConfigVersion)
            throw ConfigError("unsupported config version " + j.at("version").dump());

        ExperimentConfig c;
        if (j.at("scenario").is_object()) {
            c.scenario = scenario_from_json(j.at("scenario"));
        } else {
            std::filesystem::path p = j.at("scenario").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            c.scenario_path = p.lexically_normal().string();
            c.scenario = load_scenario(p);
        }
        const std::size_t k = c.scenario.world.num_classes();

        c.iterations = j.value("iterations", c.iterations);
        c.seed = j.value("seed", c.seed);
        c.output_dir = j.value("output_dir", c.output_dir);

        const json m = j.value("map", json::object());
        c.map.resolution = m.value("resolution", c.map.resolution);
        c.map.bounds = m.contains("bounds") ? detail::box_from(m.at("bounds"), "map.bounds") : c.scenario.world.bounds;
        c.map.num_classes = k;
        c.map.log_odds_min = m.value("log_odds_min", c.map.log_odds_min);
        c.map.log_odds_max = m.value("log_odds_max", c.map.log_odds_max);
        c.map.p_free = m.value("p_free", c.map.p_free);
        c.map.prior_occupancy = m.value("prior_occupancy", c.map.prior_occupancy);
        c.map.class_floor = m.value("class_floor", c.map.class_floor);
        c.map.unknown_band = m.value("unknown_band", c.map.unknown_band);
        const auto form = m.value("entropy", std::string("single_term"));
        if (form == "single_term") c.map.entropy_form = EntropyForm::SingleTerm;
        else if (form == "binary") c.map.entropy_form = EntropyForm::Binary;
        else throw ConfigError("map.entropy must be 'single_term' or 'binary'");

        const json n = j.value("noise", json::object());
        c.noise.axial_scale = n.value("axial_scale", c.noise.axial_scale);
        c.noise.lateral_std = n.value("lateral_std", c.noise.lateral_std);

        const json cm = j.value("confusion", json::object());
        if (cm.contains("matrix")) {
            std::vector<double> flat;
            for (const auto& row : cm.at("matrix"))
                for (const auto& v : row) flat.push_back(v.get<double>());
            c.confusion = ConfusionMatrix(k, flat);
        } else {
            c.confusion = ConfusionMatrix::uniform_off_diagonal(k, cm.value("diagonal", 0.9));
        }

        c.camera = c.scenario.camera;
        if (j.contains("camera")) detail::apply_camera(j.at("camera"), c.camera);

        c.weight_presets["uniform"] = std::vector<double>(k, 1.0 / static_cast<double>(k));
        if (j.contains("weight_presets"))
            for (const auto& [name, w] : j.at("weight_presets").items())
                c.weight_presets[name] = w.get<std::vector<double>>();

        const json p = j.value("planner", json::object());
        auto& pl = c.planner;
        pl.tree_nodes = p.value("tree_nodes", pl.tree_nodes);
        pl.sample_budget = p.value("sample_budget", pl.sample_budget);
        pl.step_length = p.value("step_length", pl.step_length);
        pl.gain_camera = c.camera;
        pl.gain_camera.cols = 24;
        pl.gain_camera.rows = 18;
        if (p.contains("gain_rays")) {
            const auto g = p.at("gain_rays").get<std::vector<std::size_t>>();
            if (g.size() != 2) throw ConfigError("planner.gain_rays must be [cols, rows]");
            pl.gain_camera.cols = g[0];
            pl.gain_camera.rows = g[1];
        }
        pl.gain_camera.max_range = p.value("gain_range", c.camera.max_range);
        pl.distance_weight = p.value("distance_weight", pl.distance_weight);
        const auto mode = p.value("mode", std::string("semantic"));
        const auto parsed = gain_mode_from_string(mode);
        if (!parsed) throw ConfigError("planner.mode must be baseline, geometric or semantic");
        pl.mode = *parsed;
        pl.class_weights = c.weight_presets.at("uniform");
        if (p.contains("class_weights")) {
            const auto& w = p.at("class_weights");
            if (w.is_string()) {
                const auto it = c.weight_presets.find(w.get<std::string>());
                if (it == c.weight_presets.end()) throw ConfigError("unknown weight preset " + w.dump());
                pl.class_weights = it->second;
            } else {
                pl.class_weights = w.get<std::vector<double>>();
            }
        }
        pl.robot_radius = p.value("robot_radius", pl.robot_radius);
        pl.gain_threshold = p.value("gain_threshold", pl.gain_threshold);
        pl.max_retries = p.value("max_retries", pl.max_retries);
        pl.occupancy_threshold = p.value("occupancy_threshold", pl.occupancy_threshold);
        pl.paper_literal_sign = p.value("paper_literal_sign", pl.paper_literal_sign);
        if (p.contains("workspace")) pl.workspace = detail::box_from(p.at("workspace"), "planner.workspace");
        else if (c.scenario.workspace) pl.workspace = *c.scenario.workspace;
        else pl.workspace = c.map.bounds;

        c.start = j.contains("start") ? detail::pose_from(j.at("start")) : c.scenario.start;
        c.evaluation_bounds = j.contains("evaluation_bounds")
                                  ? detail::box_from(j.at("evaluation_bounds"), "evaluation_bounds")
                                  : pl.workspace;
        for (const auto& [name, w] : c.weight_presets)
            if (w.size() != k) throw ConfigError("weight preset '" + name + "' has wrong length");

        c.validate();
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    return config_from_json(detail::read_json_file(path), path.parent_path());
}

/// Fully resolved configuration, scenario inlined. Feeding this back through
/// config_from_json reproduces the same experiment.
inline json config_to_json(const ExperimentConfig& c)
{
    const auto& pl = c.planner;
    json confusion = json::array();
    for (std::size_t r = 0; r < c.confusion.num_classes(); ++r) confusion.push_back(c.confusion.row(r));
    return {
        {"version", kConfigVersion},
        {"scenario", scenario_to_json(c.scenario)},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"map",
         {{"resolution", c.map.resolution},
          {"bounds", detail::box_to(c.map.bounds)},
          {"log_odds_min", c.map.log_odds_min},
          {"log_odds_max", c.map.log_odds_max},
          {"p_free", c.map.p_free},
          {"prior_occupancy", c.map.prior_occupancy},
          {"class_floor", c.map.class_floor},
          {"unknown_band", c.map.unknown_band},
          {"entropy", entropy_form_name(c.map.entropy_form)}}},
        {"noise", {{"axial_scale", c.noise.axial_scale}, {"lateral_std", c.noise.lateral_std}}},
        {"confusion", {{"matrix", confusion}}},
        {"camera", detail::camera_to(c.camera)},
        {"weight_presets", c.weight_presets},
        {"planner",
         {{"tree_nodes", pl.tree_nodes},
          {"sample_budget", pl.sample_budget},
          {"step_length", pl.step_length},
          {"gain_rays", {pl.gain_camera.cols, pl.gain_camera.rows}},
          {"gain_range", pl.gain_camera.max_range},
          {"distance_weight", pl.distance_weight},
          {"mode", to_string(pl.mode)},
          {"class_weights", pl.class_weights},
          {"robot_radius", pl.robot_radius},
          {"gain_threshold", pl.gain_threshold},
          {"max_retries", pl.max_retries},
          {"occupancy_threshold", pl.occupancy_threshold},
          {"paper_literal_sign", pl.paper_literal_sign},
          {"workspace", detail::box_to(pl.workspace)}}},
        {"start", detail::pose_to(c.start)},
        {"evaluation_bounds", detail::box_to(c.evaluation_bounds)},
    };
}

/// Stable 64-bit hash (hex) of everything that affects results. The output
/// directory is excluded so the same experiment hashes equal wherever it runs.
inline std::string config_hash(const ExperimentConfig& c)
{
    json j = config_to_json(c);
    j.erase("output_dir");
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << detail::fnv1a(j.dump());
    return os.str();
}

/// Applies a mode token to a planner: "baseline", "geometric", "semantic"
/// (configured weights) or "semantic:<preset>".
inline void apply_mode_token(ExperimentConfig& c, const std::string& token)
{
    const auto colon = token.find(':');
    const auto mode = gain_mode_from_string(token.substr(0, colon));
    if (!mode) throw ConfigError("unknown gain mode '" + token + "'");
    c.planner.mode = *mode;
    if (colon != std::string::npos) {
        if (*mode != GainMode::SemanticWeighted) throw ConfigError("only 'semantic' takes a weight preset");
        const auto preset = token.substr(colon + 1);
        const auto it = c.weight_presets.find(preset);
        if (it == c.weight_presets.end()) throw ConfigError("unknown weight preset '" + preset + "'");
        c.planner.class_weights = it->second;
    }
}

} // namespace semnbv

#endif // SEMNBV_CONFIG_HPP
