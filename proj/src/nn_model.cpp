#include "emrecon/nn/model.hpp"

#include <cstdio>

#include "emrecon/container.hpp"
#include "emrecon/json_io.hpp"

namespace emrecon::nn {

ModelSpec model_spec(const std::string& name) {
    ModelSpec s;
    s.name = name;
    const std::array<int, 6> ladder_a{64, 128, 256, 256, 128, 64};
    const std::array<int, 6> ladder_b{32, 64, 128, 128, 64, 32};
    const std::array<int, 6> ladder_mini{8, 16, 32, 32, 16, 8};
    if (name == "2Dt-A1") {
        s.ndim = 2; s.in_channels = 6; s.ladder = ladder_a;
    } else if (name == "2Dt*-A1") {
        s.ndim = 2; s.in_channels = 4; s.ladder = ladder_a;
    } else if (name == "2Dt-A2") {
        s.ndim = 2; s.in_channels = 6; s.ladder = ladder_b;
    } else if (name == "2Ds-B") {
        s.ndim = 2; s.in_channels = 2; s.ladder = ladder_a;
    } else if (name == "3Ds-A") {
        s.ndim = 3; s.in_channels = 3; s.ladder = ladder_b; s.batchnorm = true;
    } else if (name == "mini2d-t") {
        s.ndim = 2; s.in_channels = 6; s.ladder = ladder_mini;
    } else if (name == "mini2d-s") {
        s.ndim = 2; s.in_channels = 2; s.ladder = ladder_mini;
    } else if (name == "mini3d") {
        s.ndim = 3; s.in_channels = 3; s.ladder = ladder_mini; s.batchnorm = true;
    } else {
        throw std::invalid_argument("model_spec: unknown model " + name);
    }
    return s;
}

std::vector<PlanEntry> layer_plan(const ModelSpec& spec) {
    std::vector<PlanEntry> plan;
    auto conv = [&](int in, int out) {
        plan.push_back({PlanEntry::Kind::conv, in, out});
        if (spec.batchnorm) plan.push_back({PlanEntry::Kind::batchnorm, out, out});
    };
    int ch = spec.in_channels;
    for (int i = 0; i < 3; ++i) {
        conv(ch, spec.ladder[i]);
        ch = spec.ladder[i];
        plan.push_back({PlanEntry::Kind::relu});
        plan.push_back({PlanEntry::Kind::maxpool});
    }
    for (int i = 3; i < 6; ++i) {
        conv(ch, spec.ladder[i]);
        ch = spec.ladder[i];
        plan.push_back({PlanEntry::Kind::relu});
        plan.push_back({PlanEntry::Kind::upsample});
    }
    conv(ch, 1);
    plan.push_back({PlanEntry::Kind::sigmoid});
    return plan;
}

long param_count(const ModelSpec& spec) {
    long total = 0;
    for (const PlanEntry& e : layer_plan(spec)) {
        if (e.kind == PlanEntry::Kind::conv)
            total += static_cast<long>(e.out_ch) * e.in_ch * spec.kernel_volume() + e.out_ch;
        else if (e.kind == PlanEntry::Kind::batchnorm)
            total += 2L * e.out_ch;
    }
    return total;
}

namespace {

json spec_to_json(const ModelSpec& s) {
    return json{{"name", s.name},
                {"ndim", s.ndim},
                {"in_channels", s.in_channels},
                {"ladder", s.ladder},
                {"batchnorm", s.batchnorm}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.name = j.at("name").get<std::string>();
    s.ndim = j.at("ndim").get<int>();
    s.in_channels = j.at("in_channels").get<int>();
    const auto v = j.at("ladder").get<std::vector<int>>();
    if (v.size() != 6) throw std::runtime_error("model spec: ladder must have 6 entries");
    std::copy(v.begin(), v.end(), s.ladder.begin());
    s.batchnorm = j.at("batchnorm").get<bool>();
    return s;
}

ScalarField span_field(std::span<const float> v) {
    ScalarField f(GridShape({static_cast<int>(v.size()), 1}));
    std::copy(v.begin(), v.end(), f.values.begin());
    return f;
}

}  // namespace

void save_model(const std::filesystem::path& path, Network<float>& net) {
    std::map<std::string, FieldVariant> fields;
    const auto layers = net.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        char prefix[24];
        std::snprintf(prefix, sizeof(prefix), "L%03zu", li);
        const auto params = layers[li]->params();
        for (std::size_t pi = 0; pi < params.size(); ++pi)
            fields.emplace(std::string(prefix) + ".p" + std::to_string(pi),
                           span_field(params[pi]));
        if (auto* bn = dynamic_cast<BatchNorm<float>*>(layers[li])) {
            const auto stats = bn->running_stats();
            fields.emplace(std::string(prefix) + ".rm", span_field(stats[0]));
            fields.emplace(std::string(prefix) + ".rv", span_field(stats[1]));
        }
    }
    write_container(path, fields, {{"spec", spec_to_json(net.spec()).dump()}});
}

Network<float> load_model(const std::filesystem::path& path) {
    Container c = read_container(path);
    if (!c.metadata.count("spec")) throw std::runtime_error("load_model: missing spec metadata");
    Network<float> net(spec_from_json(json::parse(c.metadata["spec"])), 0);

    auto fill = [&](const std::string& name, std::span<float> dst) {
        auto it = c.fields.find(name);
        if (it == c.fields.end()) throw std::runtime_error("load_model: missing tensor " + name);
        const auto& f = std::get<ScalarField>(it->second);
        if (f.values.size() != dst.size())
            throw std::runtime_error("load_model: size mismatch for " + name);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(f.values[i]);
    };

    const auto layers = net.layers();
    for (std::size_t li = 0; li < layers.size(); ++li) {
        char prefix[24];
        std::snprintf(prefix, sizeof(prefix), "L%03zu", li);
        const auto params = layers[li]->params();
        for (std::size_t pi = 0; pi < params.size(); ++pi)
            fill(std::string(prefix) + ".p" + std::to_string(pi), params[pi]);
        if (auto* bn = dynamic_cast<BatchNorm<float>*>(layers[li])) {
            const auto stats = bn->running_stats();
            fill(std::string(prefix) + ".rm", stats[0]);
            fill(std::string(prefix) + ".rv", stats[1]);
        }
    }
    return net;
}

}  // namespace emrecon::nn
