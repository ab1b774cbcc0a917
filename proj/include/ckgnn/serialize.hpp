#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckgnn/models.hpp"
#include "ckgnn/tensor.hpp"

namespace ckgnn {

namespace detail {

inline nlohmann::json tensor_to_json(const Tensor& t) {
    return nlohmann::json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
}

inline Tensor tensor_from_json(const nlohmann::json& j) {
    Tensor t(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& data = j.at("data");
    if (static_cast<std::size_t>(data.size()) != t.size())
        throw std::runtime_error("tensor_from_json: data length does not match shape");
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = data[i].get<double>();
    if (!t.all_finite()) throw std::runtime_error("tensor_from_json: non-finite value");
    return t;
}

}  // namespace detail

inline constexpr const char* kParamsFormatTag = "ckgnn-params-v1";

inline void save_params(const std::string& path, const ModelConfig& cfg, ModelParams& params) {
    validate_params(cfg, params);
    nlohmann::json j;
    j["format"] = kParamsFormatTag;
    j["model"] = to_string(cfg.kind);
    j["config"] = {{"in_dim", cfg.in_dim},       {"classes", cfg.classes},
                   {"hidden", cfg.hidden},       {"layers", cfg.layers},
                   {"heads", cfg.heads},         {"latent_z", cfg.latent_z},
                   {"ae_layers", cfg.ae_layers}, {"dropout", cfg.dropout},
                   {"dropout_kernel", cfg.dropout_kernel}};
    nlohmann::json tensors = nlohmann::json::object();
    for (const auto& ref : param_refs(params)) tensors[ref.name] = detail::tensor_to_json(*ref.tensor);
    j["tensors"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_params: cannot write " + path);
    out << j.dump(1, '\t') << '\n';
    if (!out) throw std::runtime_error("save_params: write failed for " + path);
}

inline std::pair<ModelConfig, ModelParams> load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_params: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_params: " + path + " is not valid JSON: " + e.what());
    }
    if (j.value("format", "") != kParamsFormatTag)
        throw std::runtime_error("load_params: " + path + " has unknown format tag");

    ModelConfig cfg;
    cfg.kind = parse_model_kind(j.at("model").get<std::string>());
    const auto& c = j.at("config");
    cfg.in_dim = c.at("in_dim").get<int>();
    cfg.classes = c.at("classes").get<int>();
    cfg.hidden = c.at("hidden").get<int>();
    cfg.layers = c.at("layers").get<int>();
    cfg.heads = c.at("heads").get<int>();
    cfg.latent_z = c.at("latent_z").get<int>();
    cfg.ae_layers = c.at("ae_layers").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.dropout_kernel = c.at("dropout_kernel").get<bool>();
    cfg.validate();

    ModelParams params;
    params.kind = cfg.kind;
    for (auto [in_w, out_w] : layer_widths(cfg)) {
        LayerParams layer;
        layer.W = Tensor(in_w, out_w);
        if (uses_attention(cfg.kind))
            for (int m = 0; m < cfg.heads; ++m) layer.theta.emplace_back(2 * out_w, 1);
        params.layers.push_back(std::move(layer));
    }
    if (uses_kernel(cfg.kind))
        params.kernel = KernelParams::zeros(cfg.in_dim, cfg.latent_z, cfg.ae_layers);

    const auto& tensors = j.at("tensors");
    std::size_t consumed = 0;
    for (const auto& ref : param_refs(params)) {
        if (!tensors.contains(ref.name))
            throw std::runtime_error("load_params: missing tensor '" + ref.name + "'");
        Tensor t = detail::tensor_from_json(tensors.at(ref.name));
        if (t.rows != ref.tensor->rows || t.cols != ref.tensor->cols)
            throw std::runtime_error("load_params: tensor '" + ref.name + "' is " + t.shape_str() +
                                     ", expected " + ref.tensor->shape_str());
        *ref.tensor = std::move(t);
        ++consumed;
    }
    if (tensors.size() != consumed)
        throw std::runtime_error("load_params: file contains unexpected extra tensors");
    validate_params(cfg, params);
    return {cfg, std::move(params)};
}

}  // namespace ckgnn
