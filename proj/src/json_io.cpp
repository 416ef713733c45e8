#include "emrecon/json_io.hpp"

#include <fstream>

namespace emrecon {

namespace {

template <class T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void to_json(json& j, const GridShape& s) {
    j = json{{"dims", s.dims}, {"spacing", s.spacing}};
}

void from_json(const json& j, GridShape& s) {
    j.at("dims").get_to(s.dims);
    s.spacing = j.value("spacing", 1.0);
    s.validate();
}

void to_json(json& j, const ElectroParams& p) {
    j = json{{"a", p.a},
             {"k", p.k},
             {"eps0", p.eps0},
             {"mu1", p.mu1},
             {"mu2", p.mu2},
             {"k_T", p.k_T},
             {"eps_Ta_low", p.eps_Ta_low},
             {"eps_Ta_high", p.eps_Ta_high},
             {"u_switch", p.u_switch},
             {"G_s", p.G_s},
             {"E_s", p.E_s},
             {"D", p.D},
             {"dt", p.dt},
             {"h", p.h},
             {"T_max", p.T_max}};
}

void from_json(const json& j, ElectroParams& p) {
    p = ElectroParams{};
    get_if(j, "a", p.a);
    get_if(j, "k", p.k);
    get_if(j, "eps0", p.eps0);
    get_if(j, "mu1", p.mu1);
    get_if(j, "mu2", p.mu2);
    get_if(j, "k_T", p.k_T);
    get_if(j, "eps_Ta_low", p.eps_Ta_low);
    get_if(j, "eps_Ta_high", p.eps_Ta_high);
    get_if(j, "u_switch", p.u_switch);
    get_if(j, "G_s", p.G_s);
    get_if(j, "E_s", p.E_s);
    get_if(j, "D", p.D);
    get_if(j, "dt", p.dt);
    get_if(j, "h", p.h);
    get_if(j, "T_max", p.T_max);
}

void to_json(json& j, const MechParams& p) {
    j = json{{"k_edge", p.k_edge},   {"k_center", p.k_center},
             {"gamma", p.gamma},     {"mass", p.mass},
             {"c_act", p.c_act},     {"dt", p.dt},
             {"max_contraction", p.max_contraction}};
}

void from_json(const json& j, MechParams& p) {
    p = MechParams{};
    get_if(j, "k_edge", p.k_edge);
    get_if(j, "k_center", p.k_center);
    get_if(j, "gamma", p.gamma);
    get_if(j, "mass", p.mass);
    get_if(j, "c_act", p.c_act);
    get_if(j, "dt", p.dt);
    get_if(j, "max_contraction", p.max_contraction);
}

void to_json(json& j, const FiberConfig& f) {
    j = json{{"mode", f.mode == FiberConfig::Mode::uniform2d ? "uniform2d" : "sheet_stack3d"},
             {"angle_deg", f.angle_deg},
             {"total_rotation_deg", f.total_rotation_deg},
             {"angle_convention", "ccw_from_x"}};
}

void from_json(const json& j, FiberConfig& f) {
    f = FiberConfig{};
    std::string mode = j.value("mode", "uniform2d");
    if (mode == "uniform2d")
        f.mode = FiberConfig::Mode::uniform2d;
    else if (mode == "sheet_stack3d")
        f.mode = FiberConfig::Mode::sheet_stack3d;
    else
        throw std::invalid_argument("FiberConfig: unknown mode " + mode);
    get_if(j, "angle_deg", f.angle_deg);
    get_if(j, "total_rotation_deg", f.total_rotation_deg);
}

namespace {
const char* protocol_kind_name(Protocol::Kind k) {
    switch (k) {
        case Protocol::Kind::plane_wave: return "plane_wave";
        case Protocol::Kind::s1s2_spiral: return "s1s2_spiral";
        case Protocol::Kind::multi_spiral: return "multi_spiral";
        case Protocol::Kind::spherical_3d: return "spherical_3d";
        case Protocol::Kind::scroll_breakup: return "scroll_breakup";
    }
    return "plane_wave";
}

Protocol::Kind protocol_kind_from(const std::string& s) {
    if (s == "plane_wave") return Protocol::Kind::plane_wave;
    if (s == "s1s2_spiral") return Protocol::Kind::s1s2_spiral;
    if (s == "multi_spiral") return Protocol::Kind::multi_spiral;
    if (s == "spherical_3d") return Protocol::Kind::spherical_3d;
    if (s == "scroll_breakup") return Protocol::Kind::scroll_breakup;
    throw std::invalid_argument("Protocol: unknown kind " + s);
}
}  // namespace

void to_json(json& j, const Protocol& p) {
    j = json{{"kind", protocol_kind_name(p.kind)},
             {"s1_width", p.s1_width},
             {"s2_step", p.s2_step},
             {"s2_frac_x", p.s2_frac_x},
             {"s2_frac_y", p.s2_frac_y},
             {"n_stimuli", p.n_stimuli},
             {"stim_window_lo", p.stim_window_lo},
             {"stim_window_hi", p.stim_window_hi},
             {"stim_radius_frac", p.stim_radius_frac},
             {"seed", p.seed}};
}

void from_json(const json& j, Protocol& p) {
    p = Protocol{};
    p.kind = protocol_kind_from(j.value("kind", "plane_wave"));
    get_if(j, "s1_width", p.s1_width);
    get_if(j, "s2_step", p.s2_step);
    get_if(j, "s2_frac_x", p.s2_frac_x);
    get_if(j, "s2_frac_y", p.s2_frac_y);
    get_if(j, "n_stimuli", p.n_stimuli);
    get_if(j, "stim_window_lo", p.stim_window_lo);
    get_if(j, "stim_window_hi", p.stim_window_hi);
    get_if(j, "stim_radius_frac", p.stim_radius_frac);
    get_if(j, "seed", p.seed);
}

void to_json(json& j, const RunConfig& c) {
    j = json{{"name", c.name},         {"grid", c.grid},
             {"electro", c.electro},   {"mechanics", c.mech},
             {"fibers", c.fiber},      {"protocol", c.protocol},
             {"total_steps", c.total_steps}, {"frame_interval", c.frame_interval},
             {"seed", c.seed}};
}

void from_json(const json& j, RunConfig& c) {
    c = RunConfig{};
    get_if(j, "name", c.name);
    j.at("grid").get_to(c.grid);
    if (j.contains("electro")) j.at("electro").get_to(c.electro);
    if (j.contains("mechanics")) j.at("mechanics").get_to(c.mech);
    if (j.contains("fibers")) j.at("fibers").get_to(c.fiber);
    if (j.contains("protocol")) j.at("protocol").get_to(c.protocol);
    get_if(j, "total_steps", c.total_steps);
    get_if(j, "frame_interval", c.frame_interval);
    get_if(j, "seed", c.seed);
    c.validate();
}

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j;
    in >> j;
    return j;
}

void save_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace emrecon
