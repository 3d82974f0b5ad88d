#include "bubblecast/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bubblecast/errors.hpp"

namespace bubblecast::io {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_series_csv(const std::string& path,
                      const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    for (double v : values) out << format_double(v) << "\n";
    if (!out) throw data_error("write failed: " + path);
}

std::vector<double> read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open: " + path);
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            values.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw data_error("malformed number in " + path + ": " + line);
        }
    }
    return values;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw data_error("write failed: " + path);
}

std::string string_checksum(const std::string& content) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : content) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

std::string file_checksum(const std::string& path) {
    return string_checksum(read_text_file(path));
}

// ---------------------------------------------------------------------------

std::string marma_spec_to_json(const marma::MarmaSpec& spec) {
    json j;
    j["psi"] = spec.psi;
    j["phi"] = spec.phi;
    j["theta"] = spec.theta;
    j["eta"] = spec.eta;
    j["noise"] = {{"alpha", spec.noise.alpha},
                  {"beta", spec.noise.beta},
                  {"sigma", spec.noise.sigma},
                  {"mu", spec.noise.mu}};
    return j.dump(2);
}

marma::MarmaSpec marma_spec_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        marma::MarmaSpec spec;
        spec.psi = j.value("psi", std::vector<double>{});
        spec.phi = j.value("phi", std::vector<double>{});
        spec.theta = j.value("theta", std::vector<double>{});
        spec.eta = j.value("eta", std::vector<double>{});
        if (j.contains("noise")) {
            const auto& n = j.at("noise");
            spec.noise = stable::StableParams{
                n.at("alpha").get<double>(), n.at("beta").get<double>(),
                n.at("sigma").get<double>(), n.at("mu").get<double>()};
        }
        return spec;
    } catch (const json::exception& e) {
        throw data_error(std::string("bad MARMA spec JSON: ") + e.what());
    }
}

std::string mixture_to_json(const skewt::MixtureParams& params) {
    json j;
    j["weights"] = params.weights;
    json comps = json::array();
    for (const auto& c : params.components)
        comps.push_back(
            {{"mu", c.mu}, {"sigma", c.sigma}, {"xi", c.xi}, {"nu", c.nu}});
    j["components"] = comps;
    return j.dump(2);
}

skewt::MixtureParams mixture_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        skewt::MixtureParams params;
        params.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& c : j.at("components"))
            params.components.emplace_back(
                c.at("mu").get<double>(), c.at("sigma").get<double>(),
                c.at("xi").get<double>(), c.at("nu").get<double>());
        params.validate();
        return params;
    } catch (const json::exception& e) {
        throw data_error(std::string("bad mixture JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

namespace {

constexpr int MODEL_FORMAT_VERSION = 1;

json config_to_json(const mdn::MdnConfig& cfg) {
    return json{{"input_dim", cfg.input_dim},
                {"hidden", cfg.hidden},
                {"n_mixtures", cfg.n_mixtures},
                {"learning_rate", cfg.learning_rate},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"noise_std", cfg.noise_std},
                {"horizon", cfg.horizon},
                {"seed", cfg.seed}};
}

mdn::MdnConfig config_from_json(const json& j) {
    mdn::MdnConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    cfg.n_mixtures = j.at("n_mixtures").get<std::size_t>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.noise_std = j.at("noise_std").get<double>();
    cfg.horizon = j.at("horizon").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

}  // namespace

void save_model(const mdn::MdnModel& model, const std::string& path) {
    json j;
    j["format_version"] = MODEL_FORMAT_VERSION;
    j["kind"] = "skewt-mdn";
    j["config"] = config_to_json(model.config);
    j["in_center"] = model.in_center;
    j["in_scale"] = model.in_scale;
    j["params"] = model.params;  // flat: trunk then heads, W before b
    write_text_file(path, j.dump());
}

mdn::MdnModel load_model(const std::string& path) {
    try {
        const json j = json::parse(read_text_file(path));
        if (j.at("format_version").get<int>() != MODEL_FORMAT_VERSION)
            throw data_error("unsupported model format version in " + path);
        mdn::MdnModel model;
        model.config = config_from_json(j.at("config"));
        model.in_center = j.at("in_center").get<std::vector<double>>();
        model.in_scale = j.at("in_scale").get<std::vector<double>>();
        model.params = j.at("params").get<std::vector<double>>();
        if (model.params.size() != model.param_count())
            throw data_error("model parameter count mismatch in " + path);
        return model;
    } catch (const json::exception& e) {
        throw data_error(std::string("bad model JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

void save_recalibration(const recal::RecalibrationModel& model,
                        const std::string& path) {
    json j;
    j["format_version"] = MODEL_FORMAT_VERSION;
    j["kind"] = "local-pit-recalibration";
    j["tau_grid"] = model.tau_grid;
    j["spline_interior_knots"] = model.spline_interior_knots;
    j["feat_center"] = model.feat_center;
    j["feat_scale"] = model.feat_scale;
    j["degenerate"] = model.degenerate;
    json clfs = json::array();
    for (const auto& clf : model.classifiers) {
        json trees = json::array();
        for (const auto& tree : clf.trees) {
            json nodes = json::array();
            for (const auto& n : tree)
                nodes.push_back({{"leaf", n.leaf},
                                 {"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"value", n.value}});
            trees.push_back(nodes);
        }
        clfs.push_back({{"base_score", clf.base_score},
                        {"learning_rate", clf.learning_rate},
                        {"trees", trees}});
    }
    j["classifiers"] = clfs;
    write_text_file(path, j.dump());
}

recal::RecalibrationModel load_recalibration(const std::string& path) {
    try {
        const json j = json::parse(read_text_file(path));
        if (j.at("format_version").get<int>() != MODEL_FORMAT_VERSION)
            throw data_error("unsupported recalibration format version in " + path);
        recal::RecalibrationModel model;
        model.tau_grid = j.at("tau_grid").get<std::vector<double>>();
        model.spline_interior_knots =
            j.at("spline_interior_knots").get<std::size_t>();
        model.feat_center = j.at("feat_center").get<std::vector<double>>();
        model.feat_scale = j.at("feat_scale").get<std::vector<double>>();
        model.degenerate = j.at("degenerate").get<std::vector<bool>>();
        for (const auto& cj : j.at("classifiers")) {
            recal::BoostedClassifier clf;
            clf.base_score = cj.at("base_score").get<double>();
            clf.learning_rate = cj.at("learning_rate").get<double>();
            for (const auto& tj : cj.at("trees")) {
                recal::BoostedClassifier::Tree tree;
                for (const auto& nj : tj) {
                    recal::BoostedClassifier::Node n;
                    n.leaf = nj.at("leaf").get<bool>();
                    n.feature = nj.at("feature").get<int>();
                    n.threshold = nj.at("threshold").get<double>();
                    n.left = nj.at("left").get<int>();
                    n.right = nj.at("right").get<int>();
                    n.value = nj.at("value").get<double>();
                    tree.push_back(n);
                }
                clf.trees.push_back(std::move(tree));
            }
            model.classifiers.push_back(std::move(clf));
        }
        return model;
    } catch (const json::exception& e) {
        throw data_error(std::string("bad recalibration JSON: ") + e.what());
    }
}

void write_training_log(const std::string& path,
                        const std::vector<mdn::TrainLogEntry>& log) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open for writing: " + path);
    out << "epoch,mean_loss,wall_time_s\n";
    for (const auto& e : log)
        out << e.epoch << "," << format_double(e.mean_loss) << ","
            << format_double(e.wall_time_s) << "\n";
}

}  // namespace bubblecast::io
