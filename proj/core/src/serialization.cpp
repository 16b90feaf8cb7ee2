// Copyright Contributors to the viewforge project
// SPDX-License-Identifier: Apache-2.0

#include "viewforge/serialization.hpp"

#include "viewforge/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace viewforge {

using nlohmann::json;

namespace {

// Read-only cursor into a parsed document that remembers its field path.
class Node {
public:
    Node(const json &value, std::string path) : value_(&value), path_(std::move(path)) {}

    const std::string &path() const { return path_; }
    const json &raw() const { return *value_; }

    [[noreturn]] void fail(const std::string &message) const { throw ParseError(path_.empty() ? "$" : path_, message); }

    bool has(const char *key) const { return value_->is_object() && value_->contains(key); }

    Node operator[](const char *key) const {
        require_object();
        const auto it = value_->find(key);
        if (it == value_->end()) {
            Node(*value_, child_path(key)).fail("missing required field");
        }
        return Node(*it, child_path(key));
    }

    Node at(std::size_t i) const { return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]"); }

    void require_object() const {
        if (!value_->is_object()) {
            fail("expected an object");
        }
    }

    /// Rejects keys outside `allowed` so typos do not pass silently.
    void only_keys(std::initializer_list<std::string_view> allowed) const {
        require_object();
        for (const auto &item : value_->items()) {
            if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
                Node(item.value(), child_path(item.key().c_str())).fail("unknown field");
            }
        }
    }

    std::size_t size() const {
        if (!value_->is_array()) {
            fail("expected an array");
        }
        return value_->size();
    }

    double number() const {
        if (!value_->is_number()) {
            fail("expected a number");
        }
        const double v = value_->get<double>();
        if (!std::isfinite(v)) {
            fail("expected a finite number");
        }
        return v;
    }

    std::int64_t integer() const {
        if (!value_->is_number_integer()) {
            fail("expected an integer");
        }
        return value_->get<std::int64_t>();
    }

    int int32() const {
        const std::int64_t v = integer();
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            fail("integer out of range");
        }
        return static_cast<int>(v);
    }

    std::uint64_t uint64() const {
        if (!value_->is_number_unsigned() && !(value_->is_number_integer() && value_->get<std::int64_t>() >= 0)) {
            fail("expected a non-negative integer");
        }
        return value_->get<std::uint64_t>();
    }

    std::size_t index() const { return static_cast<std::size_t>(uint64()); }

    bool boolean() const {
        if (!value_->is_boolean()) {
            fail("expected true or false");
        }
        return value_->get<bool>();
    }

    std::string string() const {
        if (!value_->is_string()) {
            fail("expected a string");
        }
        return value_->get<std::string>();
    }

    template <int N>
    Eigen::Matrix<double, N, 1> vec() const {
        if (size() != static_cast<std::size_t>(N)) {
            fail("expected an array of " + std::to_string(N) + " numbers");
        }
        Eigen::Matrix<double, N, 1> v;
        for (int i = 0; i < N; ++i) {
            v[i] = at(static_cast<std::size_t>(i)).number();
        }
        return v;
    }

    /// Runs `fn` inside a context that prefixes library errors with this path.
    template <typename Fn>
    auto guarded(Fn &&fn) const {
        try {
            return fn();
        } catch (const ParseError &) {
            throw;
        } catch (const Error &e) {
            fail(e.what());
        }
    }

private:
    std::string child_path(const char *key) const { return path_.empty() ? key : path_ + "." + key; }

    const json *value_;
    std::string path_;
};

json parse_document(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string message = e.what();
        if (const auto colon = message.rfind(": "); colon != std::string::npos) {
            message = message.substr(colon + 2);
        }
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(column), message);
    }
}

template <typename T>
json vec_json(const T &v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

json pose_json(const Pose &p) {
    json r = json::array();
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r.push_back(p.rotation(i, j));
        }
    }
    return {{"rotation", r}, {"translation", vec_json(p.translation)}};
}

Pose read_pose(const Node &n) {
    n.only_keys({"rotation", "translation"});
    const Node rot = n["rotation"];
    if (rot.size() != 9) {
        rot.fail("expected 9 numbers (row-major 3x3)");
    }
    Pose p;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            p.rotation(i, j) = rot.at(static_cast<std::size_t>(3 * i + j)).number();
        }
    }
    p.translation = n["translation"].vec<3>();
    if (!p.is_valid(1e-6)) {
        rot.fail("not a proper rotation (orthonormal, determinant +1)");
    }
    return p;
}

json poses_json(const std::vector<Pose> &poses) {
    json a = json::array();
    for (const Pose &p : poses) {
        a.push_back(pose_json(p));
    }
    return a;
}

std::vector<Pose> read_poses(const Node &n) {
    std::vector<Pose> out;
    const std::size_t count = n.size();
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(read_pose(n.at(i)));
    }
    return out;
}

json intrinsics_json(const Intrinsics &k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics read_intrinsics(const Node &n) {
    n.only_keys({"fx", "fy", "cx", "cy", "width", "height"});
    Intrinsics k;
    k.fx = n["fx"].number();
    k.fy = n["fy"].number();
    k.cx = n["cx"].number();
    k.cy = n["cy"].number();
    k.width = n["width"].int32();
    k.height = n["height"].int32();
    n.guarded([&] { k.validate(); });
    return k;
}

json ids_json(const std::vector<std::size_t> &ids) {
    json a = json::array();
    for (std::size_t id : ids) {
        a.push_back(id);
    }
    return a;
}

std::vector<std::size_t> read_ids(const Node &n) {
    std::vector<std::size_t> out(n.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = n.at(i).index();
    }
    return out;
}

json scene_json(const SceneSpec &s) {
    json spheres = json::array();
    for (const Sphere &sp : s.spheres) {
        spheres.push_back({{"center", vec_json(sp.center)},
                           {"radius", sp.radius},
                           {"albedo", vec_json(sp.albedo)},
                           {"shell", sp.shell}});
    }
    return {{"spheres", spheres},
            {"background", vec_json(s.background)},
            {"ambient", s.ambient},
            {"light_direction", vec_json(s.light_direction)}};
}

SceneSpec read_scene(const Node &n) {
    n.only_keys({"spheres", "background", "ambient", "light_direction"});
    SceneSpec s;
    const Node spheres = n["spheres"];
    for (std::size_t i = 0; i < spheres.size(); ++i) {
        const Node sp = spheres.at(i);
        sp.only_keys({"center", "radius", "albedo", "shell"});
        Sphere sphere;
        sphere.center = sp["center"].vec<3>();
        sphere.radius = sp["radius"].number();
        sphere.albedo = sp["albedo"].vec<3>();
        if (sp.has("shell")) {
            sphere.shell = sp["shell"].boolean();
        }
        s.spheres.push_back(sphere);
    }
    if (n.has("background")) {
        s.background = n["background"].vec<3>();
    }
    if (n.has("ambient")) {
        s.ambient = n["ambient"].number();
    }
    if (n.has("light_direction")) {
        s.light_direction = n["light_direction"].vec<3>();
    }
    n.guarded([&] { s.validate(); });
    return s;
}

json path_spec_json(const PathSpec &p) {
    return {{"family", std::string(to_string(p.family))},
            {"center", vec_json(p.center)},
            {"scale", p.scale},
            {"height_offset", p.height_offset},
            {"n_views", p.n_views},
            {"turns", p.turns},
            {"height_range", vec_json(p.height_range)},
            {"round_trip", p.round_trip},
            {"lateral_offset", vec_json(p.lateral_offset)},
            {"control", poses_json(p.control)}};
}

PathSpec read_path_spec(const Node &n) {
    n.only_keys({"family", "center", "scale", "height_offset", "n_views", "turns", "height_range", "round_trip",
                 "lateral_offset", "control"});
    PathSpec p;
    p.family = n["family"].guarded([&] { return path_family_from_string(n["family"].string()); });
    if (n.has("center")) p.center = n["center"].vec<3>();
    if (n.has("scale")) p.scale = n["scale"].number();
    if (n.has("height_offset")) p.height_offset = n["height_offset"].number();
    if (n.has("n_views")) p.n_views = n["n_views"].int32();
    if (n.has("turns")) p.turns = n["turns"].number();
    if (n.has("height_range")) p.height_range = n["height_range"].vec<2>();
    if (n.has("round_trip")) p.round_trip = n["round_trip"].boolean();
    if (n.has("lateral_offset")) p.lateral_offset = n["lateral_offset"].vec<2>();
    if (n.has("control")) p.control = read_poses(n["control"]);
    n.guarded([&] { p.validate(); });
    return p;
}

json pose_source_json(const PoseSource &s) {
    if (!s.poses.empty()) {
        return {{"poses", poses_json(s.poses)}};
    }
    return {{"preset", s.preset},
            {"count", s.count},
            {"distance", s.distance},
            {"height", s.height},
            {"spread_degrees", s.spread_degrees}};
}

PoseSource read_pose_source(const Node &n, PoseSource defaults) {
    n.only_keys({"preset", "count", "distance", "height", "spread_degrees", "poses"});
    PoseSource s = std::move(defaults);
    if (n.has("poses")) {
        if (n.has("preset")) {
            n.fail("give either \"poses\" or \"preset\", not both");
        }
        s.poses = read_poses(n["poses"]);
        s.preset.clear();
        return s;
    }
    if (n.has("preset")) s.preset = n["preset"].string();
    if (n.has("count")) s.count = n["count"].int32();
    if (n.has("distance")) s.distance = n["distance"].number();
    if (n.has("height")) s.height = n["height"].number();
    if (n.has("spread_degrees")) s.spread_degrees = n["spread_degrees"].number();
    return s;
}

json box_json(const Box &b) { return {{"min", vec_json(b.min)}, {"max", vec_json(b.max)}}; }

json view_metrics_json(const ViewMetrics &m) {
    return {{"view_id", m.view_id}, {"psnr", m.psnr}, {"ssim", m.ssim}, {"proxy", m.proxy}};
}

json metrics_json(const MetricReport &r) {
    json per_view = json::array();
    for (const ViewMetrics &m : r.per_view) {
        per_view.push_back(view_metrics_json(m));
    }
    return {{"per_view", per_view},
            {"aggregate", {{"views", r.aggregate.view_id},
                           {"psnr", r.aggregate.psnr},
                           {"ssim", r.aggregate.ssim},
                           {"proxy", r.aggregate.proxy}}}};
}

std::string dump(const json &j) { return j.dump(2) + "\n"; }

} // namespace

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw Error("cannot write " + path.string());
    }
}

std::string poses_to_json(const std::vector<Pose> &poses) { return dump({{"poses", poses_json(poses)}}); }

std::vector<Pose> poses_from_json(std::string_view text) {
    const json doc = parse_document(text);
    const Node root(doc, "");
    root.only_keys({"poses"});
    return read_poses(root["poses"]);
}

std::string plan_to_json(const SamplingPlan &plan) {
    json steps = json::array();
    for (const PlanStep &s : plan.steps) {
        steps.push_back({{"stage", std::string(to_string(s.stage))},
                         {"conditioning", ids_json(s.conditioning_ids)},
                         {"targets", ids_json(s.target_ids)}});
    }
    return dump({{"observed_ids", ids_json(plan.observed_ids)},
                 {"target_poses", poses_json(plan.pose_table)},
                 {"steps", steps}});
}

SamplingPlan plan_from_json(std::string_view text) {
    const json doc = parse_document(text);
    const Node root(doc, "");
    root.only_keys({"observed_ids", "target_poses", "steps"});
    SamplingPlan plan;
    plan.observed_ids = read_ids(root["observed_ids"]);
    plan.pose_table = read_poses(root["target_poses"]);
    const Node steps = root["steps"];
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const Node s = steps.at(i);
        s.only_keys({"stage", "conditioning", "targets"});
        PlanStep step;
        step.stage = s["stage"].guarded([&] { return step_stage_from_string(s["stage"].string()); });
        step.conditioning_ids = read_ids(s["conditioning"]);
        step.target_ids = read_ids(s["targets"]);
        plan.steps.push_back(std::move(step));
    }
    root.guarded([&] { plan.validate(); });
    return plan;
}

std::string manifest_to_json(const ViewManifest &manifest) {
    json views = json::array();
    for (const ManifestEntry &e : manifest.views) {
        json v = {{"id", e.id}, {"kind", std::string(to_string(e.kind))}, {"file", e.file}, {"pose", pose_json(e.pose)}};
        if (e.step) {
            v["step"] = *e.step;
        }
        views.push_back(std::move(v));
    }
    return dump({{"intrinsics", intrinsics_json(manifest.intrinsics)}, {"views", views}});
}

ViewManifest manifest_from_json(std::string_view text) {
    const json doc = parse_document(text);
    const Node root(doc, "");
    root.only_keys({"intrinsics", "views"});
    ViewManifest m;
    m.intrinsics = read_intrinsics(root["intrinsics"]);
    const Node views = root["views"];
    for (std::size_t i = 0; i < views.size(); ++i) {
        const Node v = views.at(i);
        v.only_keys({"id", "kind", "file", "pose", "step"});
        ManifestEntry e;
        e.id = v["id"].index();
        e.kind = v["kind"].guarded([&] { return view_kind_from_string(v["kind"].string()); });
        e.file = v["file"].string();
        if (e.file.empty() || e.file.find('/') != std::string::npos || e.file.find('\\') != std::string::npos) {
            v["file"].fail("expected a plain file name inside the views directory");
        }
        e.pose = read_pose(v["pose"]);
        if (v.has("step")) {
            e.step = v["step"].index();
        }
        m.views.push_back(std::move(e));
    }
    return m;
}

std::string metrics_to_json(const MetricReport &report) { return dump(metrics_json(report)); }

std::string report_to_json(const PipelineReport &r) {
    json j = {{"status", r.status}, {"seed", r.seed}};
    if (r.status != "ok") {
        j["stage"] = r.failed_stage;
        j["error"] = r.error;
    } else {
        j["views"] = {{"observed", r.observed_views}, {"anchor", r.anchor_views}, {"generated", r.generated_views}};
        j["final_loss"] = r.final_loss;
        j["metrics"] = metrics_json(r.metrics);
    }
    return dump(j);
}

std::string config_to_json(const PipelineConfig &c) {
    json scene;
    if (c.scene.custom) {
        scene = scene_json(*c.scene.custom);
    } else {
        scene = {{"preset", c.scene.preset}, {"seed", c.scene.seed}};
    }
    json trajectory;
    if (!c.trajectory.paths.empty()) {
        json paths = json::array();
        for (const PathSpec &p : c.trajectory.paths) {
            paths.push_back(path_spec_json(p));
        }
        trajectory = {{"paths", paths}};
    } else {
        trajectory = {{"preset", c.trajectory.preset}};
    }
    const LossConfig &r = c.recon;
    json recon = {{"b_max", r.b_max},
                  {"iterations", r.iterations},
                  {"lr_start", r.lr_start},
                  {"lr_end", r.lr_end},
                  {"perceptual_weight", r.perceptual_weight},
                  {"patch", r.patch},
                  {"global_anneal_end", r.global_anneal_end},
                  {"grid_resolution", r.grid_resolution},
                  {"n_samples", r.n_samples},
                  {"patches_per_batch", r.patches_per_batch},
                  {"tv_weight", r.tv_weight},
                  {"density_lr_scale", r.density_lr_scale},
                  {"color_lr_scale", r.color_lr_scale}};
    if (c.bounds) {
        recon["bounds"] = box_json(*c.bounds);
    }
    json j = {{"seed", c.seed},
              {"scene", scene},
              {"image", {{"width", c.width}, {"height", c.height}, {"hfov_degrees", c.hfov_degrees}}},
              {"observed", pose_source_json(c.observed)},
              {"trajectory", trajectory},
              {"mode", std::string(to_string(c.mode))},
              {"oracle", {{"kind", std::string(to_string(c.oracle.kind))},
                          {"inconsistency_sigma", c.oracle.inconsistency_sigma},
                          {"mu", c.oracle.mu},
                          {"tau", c.oracle.tau}}},
              {"sampler", {{"steps", c.sampler.steps},
                           {"cfg", c.sampler.cfg},
                           {"raymap_divisor", c.sampler.raymap_divisor},
                           {"clip", c.sampler.clip}}},
              {"recon", recon},
              {"holdout", pose_source_json(c.holdout)},
              {"threads", c.threads},
              {"output_dir", c.output_dir.generic_string()}};
    return dump(j);
}

PipelineConfig config_from_json(std::string_view text) {
    const json doc = parse_document(text);
    const Node root(doc, "");
    root.only_keys({"seed", "scene", "image", "observed", "trajectory", "mode", "oracle", "sampler", "recon", "holdout",
                    "threads", "output_dir"});
    PipelineConfig c;
    if (root.has("seed")) c.seed = root["seed"].uint64();

    if (root.has("scene")) {
        const Node s = root["scene"];
        if (s.has("spheres")) {
            c.scene.custom = read_scene(s);
            c.scene.preset.clear();
        } else {
            s.only_keys({"preset", "seed"});
            c.scene.preset = s["preset"].string();
            if (s.has("seed")) c.scene.seed = s["seed"].uint64();
        }
    }
    if (root.has("image")) {
        const Node im = root["image"];
        im.only_keys({"width", "height", "hfov_degrees"});
        if (im.has("width")) c.width = im["width"].int32();
        if (im.has("height")) c.height = im["height"].int32();
        if (im.has("hfov_degrees")) c.hfov_degrees = im["hfov_degrees"].number();
    }
    if (root.has("observed")) c.observed = read_pose_source(root["observed"], c.observed);
    if (root.has("trajectory")) {
        const Node t = root["trajectory"];
        t.only_keys({"preset", "paths"});
        if (t.has("paths") == t.has("preset")) {
            t.fail("give exactly one of \"preset\" or \"paths\"");
        }
        if (t.has("paths")) {
            const Node paths = t["paths"];
            for (std::size_t i = 0; i < paths.size(); ++i) {
                c.trajectory.paths.push_back(read_path_spec(paths.at(i)));
            }
            c.trajectory.preset.clear();
        } else {
            c.trajectory.preset = t["preset"].string();
        }
    }
    if (root.has("mode")) {
        c.mode = root["mode"].guarded([&] { return sampling_mode_from_string(root["mode"].string()); });
    }
    if (root.has("oracle")) {
        const Node o = root["oracle"];
        o.only_keys({"kind", "inconsistency_sigma", "mu", "tau"});
        if (o.has("kind")) c.oracle.kind = o["kind"].guarded([&] { return oracle_kind_from_string(o["kind"].string()); });
        if (o.has("inconsistency_sigma")) c.oracle.inconsistency_sigma = o["inconsistency_sigma"].number();
        if (o.has("mu")) c.oracle.mu = o["mu"].number();
        if (o.has("tau")) c.oracle.tau = o["tau"].number();
    }
    if (root.has("sampler")) {
        const Node s = root["sampler"];
        s.only_keys({"steps", "cfg", "raymap_divisor", "clip"});
        if (s.has("steps")) c.sampler.steps = s["steps"].int32();
        if (s.has("cfg")) c.sampler.cfg = s["cfg"].number();
        if (s.has("raymap_divisor")) c.sampler.raymap_divisor = s["raymap_divisor"].int32();
        if (s.has("clip")) c.sampler.clip = s["clip"].number();
    }
    if (root.has("recon")) {
        const Node r = root["recon"];
        r.only_keys({"b_max", "iterations", "lr_start", "lr_end", "perceptual_weight", "patch", "global_anneal_end",
                     "grid_resolution", "n_samples", "patches_per_batch", "tv_weight", "density_lr_scale", "color_lr_scale", "bounds"});
        LossConfig &l = c.recon;
        if (r.has("b_max")) l.b_max = r["b_max"].number();
        if (r.has("iterations")) l.iterations = r["iterations"].int32();
        if (r.has("lr_start")) l.lr_start = r["lr_start"].number();
        if (r.has("lr_end")) l.lr_end = r["lr_end"].number();
        if (r.has("perceptual_weight")) l.perceptual_weight = r["perceptual_weight"].number();
        if (r.has("patch")) l.patch = r["patch"].int32();
        if (r.has("global_anneal_end")) l.global_anneal_end = r["global_anneal_end"].number();
        if (r.has("grid_resolution")) l.grid_resolution = r["grid_resolution"].int32();
        if (r.has("n_samples")) l.n_samples = r["n_samples"].int32();
        if (r.has("patches_per_batch")) l.patches_per_batch = r["patches_per_batch"].int32();
        if (r.has("tv_weight")) l.tv_weight = r["tv_weight"].number();
        if (r.has("density_lr_scale")) l.density_lr_scale = r["density_lr_scale"].number();
        if (r.has("color_lr_scale")) l.color_lr_scale = r["color_lr_scale"].number();
        if (r.has("bounds")) {
            const Node b = r["bounds"];
            b.only_keys({"min", "max"});
            Box box{b["min"].vec<3>(), b["max"].vec<3>()};
            if (!box.valid()) {
                b.fail("min must be below max componentwise");
            }
            c.bounds = box;
        }
    }
    if (root.has("holdout")) c.holdout = read_pose_source(root["holdout"], c.holdout);
    if (root.has("threads")) c.threads = root["threads"].int32();
    if (root.has("output_dir")) c.output_dir = root["output_dir"].string();
    return c;
}

std::string training_to_json(const std::vector<double> &loss, const std::vector<double> &photometric) {
    return dump({{"loss", loss}, {"photometric", photometric}});
}

std::vector<double> training_loss_from_json(std::string_view text) {
    const json doc = parse_document(text);
    const Node root(doc, "");
    const Node loss = root["loss"];
    std::vector<double> out(loss.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = loss.at(i).number();
    }
    return out;
}

} // namespace viewforge
