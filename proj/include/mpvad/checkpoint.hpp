#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mpvad/network.hpp"

namespace mpvad {

// ============================================================================
// Checkpoint archive: a single file holding named shape-tagged float tensors
// plus a JSON metadata block (the embedded NetworkConfig, epoch counters,
// optimizer scalars...). Tensor bytes are raw little-endian float32, so
// save -> load round trips are bit-exact.
// ============================================================================

struct NamedTensorF {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct Archive {
    nlohmann::json meta;
    std::vector<NamedTensorF> tensors;

    const NamedTensorF* find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t.name == name) return &t;
        return nullptr;
    }
};

void save_archive(const Archive& a, const std::string& path);
Archive load_archive(const std::string& path);

// --- parameter helpers -------------------------------------------------------

template <typename T>
void put_params(Archive& a, const ParamBag<T>& bag, const std::string& prefix = "") {
    for (const auto* p : bag.params) {
        NamedTensorF t;
        t.name = prefix + p->name;
        t.shape = p->value.shape;
        t.data.resize(p->value.numel());
        for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(p->value[i]);
        a.tensors.push_back(std::move(t));
    }
}

// Loads values into an existing bag; every parameter must be present with the
// exact shape.
template <typename T>
void load_params(const Archive& a, ParamBag<T>& bag, const std::string& prefix = "") {
    for (auto* p : bag.params) {
        const NamedTensorF* t = a.find(prefix + p->name);
        if (!t) throw ValidationError("checkpoint: missing tensor '" + prefix + p->name + "'");
        if (t->shape != p->value.shape)
            throw ValidationError("checkpoint: tensor '" + t->name + "' has shape " +
                                  shape_string(t->shape) + ", expected " +
                                  shape_string(p->value.shape));
        for (size_t i = 0; i < t->data.size(); ++i) p->value[i] = static_cast<T>(t->data[i]);
    }
}

// --- config embedding ----------------------------------------------------------

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

// Convenience: archive with just network params + config (used for the loss
// network weights file as well, which shares the format).
template <typename T>
Archive network_archive(PredictionNetwork<T>& net) {
    Archive a;
    a.meta["kind"] = "network";
    a.meta["network"] = to_json(net.config());
    put_params(a, net.params());
    return a;
}

}  // namespace mpvad
