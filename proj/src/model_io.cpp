#include "dcf/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dcf/error.hpp"

namespace dcf {

namespace {

using nlohmann::json;

json tensor_to_json(const Tensor& t) {
    json out;
    out["rows"] = t.rows();
    out["cols"] = t.cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) data.push_back(t(i, j));
    out["data"] = std::move(data);
    return out;
}

Tensor tensor_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                        const std::string& name) {
    if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols)
        throw DataError("model load: tensor '" + name + "' shape does not match config");
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw DataError("model load: tensor '" + name + "' data length mismatch");
    Tensor t(rows, cols);
    std::size_t at = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) t(i, j2) = data[at++].get<double>();
    return t;
}

json params_to_json(const ParamStore& store) {
    json out = json::object();
    for (std::size_t i = 0; i < store.size(); ++i)
        out[store.name(static_cast<int>(i))] = tensor_to_json(store.value(static_cast<int>(i)));
    return out;
}

void params_from_json(const json& j, ParamStore& store) {
    for (std::size_t i = 0; i < store.size(); ++i) {
        const std::string& name = store.name(static_cast<int>(i));
        if (!j.contains(name)) throw DataError("model load: missing tensor '" + name + "'");
        Tensor& t = store.value(static_cast<int>(i));
        t = tensor_from_json(j.at(name), t.rows(), t.cols(), name);
    }
}

json mdn_config_to_json(const MdnConfig& c) {
    return json{{"temperature", c.temperature},
                {"entropy_coef", c.entropy_coef},
                {"entropy_encourage", c.entropy_encourage},
                {"sigma_floor", c.sigma_floor},
                {"nu_cap", c.nu_cap},
                {"lstm_layers", c.lstm_layers},
                {"hidden", c.hidden},
                {"feature_hidden", c.feature_hidden},
                {"peak_lr", c.peak_lr},
                {"lr_div_initial", c.lr_div_initial},
                {"lr_div_final", c.lr_div_final},
                {"lr_warm_frac", c.lr_warm_frac},
                {"weight_decay", c.weight_decay},
                {"epochs", c.epochs},
                {"batch", c.batch},
                {"validation_fraction", c.validation_fraction}};
}

MdnConfig mdn_config_from_json(const json& j) {
    MdnConfig c;
    c.temperature = j.at("temperature").get<double>();
    c.entropy_coef = j.at("entropy_coef").get<double>();
    c.entropy_encourage = j.at("entropy_encourage").get<bool>();
    c.sigma_floor = j.at("sigma_floor").get<double>();
    c.nu_cap = j.at("nu_cap").get<double>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.feature_hidden = j.at("feature_hidden").get<int>();
    c.peak_lr = j.at("peak_lr").get<double>();
    c.lr_div_initial = j.at("lr_div_initial").get<double>();
    c.lr_div_final = j.at("lr_div_final").get<double>();
    c.lr_warm_frac = j.at("lr_warm_frac").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.epochs = j.at("epochs").get<int>();
    c.batch = j.at("batch").get<int>();
    c.validation_fraction = j.at("validation_fraction").get<double>();
    return c;
}

}  // namespace

std::string mdn_to_json(const MdnModel& model) {
    json out;
    out["format"] = "dcf-mdn";
    out["version"] = 1;
    out["k"] = model.k;
    out["config"] = mdn_config_to_json(model.config);
    out["normalization"] = {
        {"target_shift", model.target_shift},
        {"target_scale", model.target_scale},
        {"feature_shift", std::vector<double>(model.feature_shift.data(),
                                              model.feature_shift.data() + 4)},
        {"feature_scale", std::vector<double>(model.feature_scale.data(),
                                              model.feature_scale.data() + 4)}};
    out["params"] = params_to_json(model.params);
    return out.dump(2) + "\n";
}

MdnModel mdn_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "dcf-mdn" || j.at("version").get<int>() != 1)
        throw DataError("mdn load: unknown format or version");
    MdnConfig config = mdn_config_from_json(j.at("config"));
    Rng dummy(0, "load");
    MdnModel model = MdnModel::init(config, j.at("k").get<int>(), dummy);
    const json& norm = j.at("normalization");
    model.target_shift = norm.at("target_shift").get<double>();
    model.target_scale = norm.at("target_scale").get<double>();
    for (int i = 0; i < 4; ++i) {
        model.feature_shift[i] = norm.at("feature_shift").at(i).get<double>();
        model.feature_scale[i] = norm.at("feature_scale").at(i).get<double>();
    }
    params_from_json(j.at("params"), model.params);
    return model;
}

std::string cdc_to_json(const CdcModel& model) {
    json out;
    out["format"] = "dcf-cdc";
    out["version"] = 1;
    out["d"] = model.d;
    out["hidden"] = model.hidden;
    out["schedule"] = {{"times", std::vector<double>(model.schedule.times.data(),
                                                     model.schedule.times.data() +
                                                         model.schedule.times.size())}};
    out["langevin"] = {{"inner_steps", model.langevin.inner_steps},
                       {"step_size", model.langevin.step_size},
                       {"step_power", model.langevin.step_power},
                       {"refine_steps", model.langevin.refine_steps},
                       {"refine_shrink", model.langevin.refine_shrink},
                       {"max_restarts", model.langevin.max_restarts}};
    out["params"] = params_to_json(model.params);
    return out.dump(2) + "\n";
}

CdcModel cdc_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.at("format").get<std::string>() != "dcf-cdc" || j.at("version").get<int>() != 1)
        throw DataError("cdc load: unknown format or version");
    DiffusionSchedule schedule;
    const auto& times = j.at("schedule").at("times");
    schedule.times.resize(static_cast<Eigen::Index>(times.size()));
    for (std::size_t i = 0; i < times.size(); ++i)
        schedule.times[static_cast<Eigen::Index>(i)] = times[i].get<double>();
    Rng dummy(0, "load");
    CdcModel model =
        CdcModel::init(j.at("d").get<int>(), schedule, j.at("hidden").get<int>(), dummy);
    const json& lj = j.at("langevin");
    model.langevin.inner_steps = lj.at("inner_steps").get<int>();
    model.langevin.step_size = lj.at("step_size").get<double>();
    model.langevin.step_power = lj.at("step_power").get<double>();
    model.langevin.refine_steps = lj.at("refine_steps").get<int>();
    model.langevin.refine_shrink = lj.at("refine_shrink").get<double>();
    model.langevin.max_restarts = lj.at("max_restarts").get<int>();
    params_from_json(j.at("params"), model.params);
    return model;
}

void save_bundle(const ModelBundle& bundle, const std::string& dir) {
    bundle.validate();
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format"] = "dcf-bundle";
    manifest["version"] = 1;
    manifest["assets"] = bundle.assets;
    manifest["interval_seconds"] = bundle.interval_seconds;
    json marginals = json::object();
    for (std::size_t i = 0; i < bundle.assets.size(); ++i) {
        std::string file = "marginal_" + bundle.assets[i] + ".json";
        marginals[bundle.assets[i]] = file;
        write_file(dir + "/" + file, mdn_to_json(bundle.marginals[i]));
    }
    manifest["marginals"] = marginals;
    manifest["copula"] = "copula.json";
    write_file(dir + "/copula.json", cdc_to_json(bundle.copula));
    write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

ModelBundle load_bundle(const std::string& dir) {
    json manifest = json::parse(read_file(dir + "/manifest.json"));
    if (manifest.at("format").get<std::string>() != "dcf-bundle")
        throw DataError("bundle load: unknown manifest format");
    ModelBundle bundle;
    bundle.assets = manifest.at("assets").get<std::vector<std::string>>();
    bundle.interval_seconds = manifest.at("interval_seconds").get<long long>();
    for (const std::string& asset : bundle.assets) {
        std::string file = manifest.at("marginals").at(asset).get<std::string>();
        bundle.marginals.push_back(mdn_from_json(read_file(dir + "/" + file)));
    }
    bundle.copula = cdc_from_json(read_file(dir + "/" + manifest.at("copula").get<std::string>()));
    bundle.validate();
    return bundle;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
    if (!out) throw DataError("failed writing file: " + path);
}

}  // namespace dcf
