#include "bubblecast/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bubblecast/baselines.hpp"
#include "bubblecast/errors.hpp"
#include "bubblecast/evaluation.hpp"
#include "bubblecast/io.hpp"
#include "bubblecast/recalibration.hpp"
#include "bubblecast/rng.hpp"
#include "bubblecast/skew_t.hpp"
#include "bubblecast/tail_weighting.hpp"

namespace bubblecast::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// config

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        if (j.contains("dgp")) {
            const auto& d = j.at("dgp");
            if (d.contains("spec")) {
                cfg.use_custom_spec = true;
                cfg.custom_spec = io::marma_spec_from_json(d.at("spec").dump());
            } else {
                cfg.dgp_preset = d.value("preset", cfg.dgp_preset);
                cfg.alpha = d.value("alpha", cfg.alpha);
            }
        }
        cfg.n_train = j.value("n_train", cfg.n_train);
        cfg.n_cal = j.value("n_cal", cfg.n_cal);
        cfg.n_test = j.value("n_test", cfg.n_test);
        cfg.horizons = j.value("horizons", cfg.horizons);
        cfg.grid_size = j.value("grid_size", cfg.grid_size);
        cfg.y_grid = j.value("y_grid", cfg.y_grid);
        cfg.methods = j.value("methods", cfg.methods);
        cfg.delta = j.value("delta", cfg.delta);
        cfg.seeds = j.value("seeds", cfg.seeds);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.burn_in = j.value("burn_in", cfg.burn_in);
        if (j.contains("moment_trunc")) {
            cfg.moment_trunc_lo = j.at("moment_trunc").at(0).get<double>();
            cfg.moment_trunc_hi = j.at("moment_trunc").at(1).get<double>();
        }
        cfg.series_file = j.value("series_file", cfg.series_file);
        cfg.recalibrate = j.value("recalibrate", cfg.recalibrate);
        if (j.contains("mdn")) {
            const auto& m = j.at("mdn");
            cfg.mdn.input_dim = m.value("input_dim", cfg.mdn.input_dim);
            cfg.mdn.hidden = m.value("hidden", cfg.mdn.hidden);
            cfg.mdn.n_mixtures = m.value("n_mixtures", cfg.mdn.n_mixtures);
            cfg.mdn.learning_rate =
                m.value("learning_rate", cfg.mdn.learning_rate);
            cfg.mdn.epochs = m.value("epochs", cfg.mdn.epochs);
            cfg.mdn.batch_size = m.value("batch_size", cfg.mdn.batch_size);
            cfg.mdn.noise_std = m.value("noise_std", cfg.mdn.noise_std);
        }
    } catch (const json::exception& e) {
        throw config_error(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string ExperimentConfig::to_json() const {
    json j;
    if (use_custom_spec)
        j["dgp"] = {{"spec", json::parse(io::marma_spec_to_json(custom_spec))}};
    else
        j["dgp"] = {{"preset", dgp_preset}, {"alpha", alpha}};
    j["n_train"] = n_train;
    j["n_cal"] = n_cal;
    j["n_test"] = n_test;
    j["horizons"] = horizons;
    j["grid_size"] = grid_size;
    j["y_grid"] = y_grid;
    j["methods"] = methods;
    j["delta"] = delta;
    j["seeds"] = seeds;
    j["output_dir"] = output_dir;
    j["threads"] = threads;
    j["burn_in"] = burn_in;
    j["moment_trunc"] = {moment_trunc_lo, moment_trunc_hi};
    j["series_file"] = series_file;
    j["recalibrate"] = recalibrate;
    j["mdn"] = {{"input_dim", mdn.input_dim},
                {"hidden", mdn.hidden},
                {"n_mixtures", mdn.n_mixtures},
                {"learning_rate", mdn.learning_rate},
                {"epochs", mdn.epochs},
                {"batch_size", mdn.batch_size},
                {"noise_std", mdn.noise_std}};
    return j.dump(2);
}

std::string ExperimentConfig::config_hash() const {
    return io::string_checksum(to_json());
}

marma::MarmaSpec ExperimentConfig::resolve_spec() const {
    if (use_custom_spec) return custom_spec;
    return marma::preset(dgp_preset, alpha);
}

std::string ExperimentConfig::resolved_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv("BUBBLECAST_OUTPUT_DIR")) return env;
    return "out";
}

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw config_error("config: seeds must be nonempty");
    if (horizons.empty()) throw config_error("config: horizons must be nonempty");
    for (std::size_t h : horizons)
        if (h < 1) throw config_error("config: horizons must be >= 1");
    if (n_train < 100 || n_test < 1)
        throw config_error("config: n_train >= 100 and n_test >= 1 required");
    if (grid_size < 2) throw config_error("config: grid_size >= 2");
    if (y_grid < 16) throw config_error("config: y_grid >= 16");
    if (!(delta > 0.0 && delta < 0.5))
        throw config_error("config: delta must lie in (0, 0.5)");
    if (!(moment_trunc_lo > 0.0 && moment_trunc_lo < moment_trunc_hi &&
          moment_trunc_hi < 1.0))
        throw config_error("config: bad moment truncation");
    if (methods.empty()) throw config_error("config: methods must be nonempty");
    for (const auto& m : methods)
        if (m != "mdn" && m != "nw" && m != "oracle")
            throw config_error("config: unknown method " + m);
    try {
        mdn.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + e.what());
    }
}

bool oracle_available(const marma::MarmaSpec& spec) {
    return spec.phi.empty() && spec.theta.empty() && spec.eta.empty() &&
           spec.psi.size() == 1 && std::fabs(spec.psi[0]) > 0.0 &&
           std::fabs(spec.psi[0]) < 1.0 && spec.noise.alpha == 1.0 &&
           spec.noise.beta == 0.0;
}

std::vector<std::size_t> find_modes(const std::vector<double>& v,
                                    double min_prominence_ratio) {
    std::vector<std::size_t> modes;
    if (v.size() < 3) return modes;
    const double vmax = *std::max_element(v.begin(), v.end());
    if (!(vmax > 0.0)) return modes;
    const double min_prom = min_prominence_ratio * vmax;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool left_ok = i == 0 || v[i] > v[i - 1];
        const bool right_ok = i + 1 == v.size() || v[i] > v[i + 1];
        if (!left_ok || !right_ok) continue;
        // prominence: lowest saddle toward higher ground on each side
        double left_min = v[i];
        bool left_higher = false;
        for (std::size_t k = i; k-- > 0;) {
            left_min = std::min(left_min, v[k]);
            if (v[k] > v[i]) {
                left_higher = true;
                break;
            }
        }
        double right_min = v[i];
        bool right_higher = false;
        for (std::size_t k = i + 1; k < v.size(); ++k) {
            right_min = std::min(right_min, v[k]);
            if (v[k] > v[i]) {
                right_higher = true;
                break;
            }
        }
        double saddle;
        if (left_higher && right_higher)
            saddle = std::max(left_min, right_min);
        else if (left_higher)
            saddle = left_min;
        else if (right_higher)
            saddle = right_min;
        else
            saddle = std::min(left_min, right_min);  // global maximum
        if (v[i] - saddle >= min_prom) modes.push_back(i);
    }
    return modes;
}

// ---------------------------------------------------------------------------
// shared helpers

namespace {

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
    threads = std::max<std::size_t>(1, threads);
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::string seed_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.resolved_output_dir() + "/seed" + std::to_string(seed);
}

std::string manifest_path(const ExperimentConfig& cfg) {
    return cfg.resolved_output_dir() + "/manifest.json";
}

json load_manifest(const ExperimentConfig& cfg) {
    try {
        return json::parse(io::read_text_file(manifest_path(cfg)));
    } catch (const json::exception& e) {
        throw data_error(std::string("bad manifest: ") + e.what());
    }
}

void store_manifest(const ExperimentConfig& cfg, const json& manifest) {
    io::write_text_file(manifest_path(cfg), manifest.dump(2));
}

void verify_checksum(const json& manifest, const std::string& path) {
    const auto& files = manifest.at("files");
    const std::string rel = path;
    if (!files.contains(rel))
        throw data_error("manifest has no entry for " + rel);
    if (files.at(rel).get<std::string>() != io::file_checksum(rel))
        throw data_error("manifest checksum mismatch for " + rel +
                         " (file changed since simulate)");
}

struct SeedData {
    std::vector<double> full;   // train followed by test, one path
    std::vector<double> train;  // first n_train values of full
    std::vector<double> cal;    // independent path
    std::vector<double> test;   // last n_test values of full
};

SeedData load_seed_data(const ExperimentConfig& cfg, std::uint64_t seed,
                        const json& manifest) {
    const std::string dir = seed_dir(cfg, seed);
    for (const char* name : {"/full.csv", "/train.csv", "/cal.csv", "/test.csv"})
        verify_checksum(manifest, dir + name);
    SeedData d;
    d.full = io::read_series_csv(dir + "/full.csv");
    d.train = io::read_series_csv(dir + "/train.csv");
    d.cal = io::read_series_csv(dir + "/cal.csv");
    d.test = io::read_series_csv(dir + "/test.csv");
    if (d.full.size() != cfg.n_train + cfg.n_test ||
        d.train.size() != cfg.n_train || d.test.size() != cfg.n_test)
        throw data_error("simulated series lengths do not match the config");
    return d;
}

bool wants_method(const ExperimentConfig& cfg, const std::string& m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) !=
           cfg.methods.end();
}

std::string model_file(const ExperimentConfig& cfg, std::uint64_t seed,
                       std::size_t h) {
    return seed_dir(cfg, seed) + "/model_h" + std::to_string(h) + ".json";
}

std::string recal_file(const ExperimentConfig& cfg, std::uint64_t seed,
                       std::size_t h) {
    return seed_dir(cfg, seed) + "/recal_h" + std::to_string(h) + ".json";
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate

void cmd_simulate(const ExperimentConfig& cfg) {
    cfg.validate();
    const marma::MarmaSpec spec = cfg.resolve_spec();
    const auto report = marma::check_spec(spec);
    if (!report.valid()) {
        std::string msg = "simulate: DGP fails the root check";
        for (const auto& m : report.messages) msg += "; " + m;
        throw config_error(msg);
    }

    const std::string out = cfg.resolved_output_dir();
    fs::create_directories(out);

    json manifest;
    manifest["config"] = json::parse(cfg.to_json());
    manifest["config_hash"] = cfg.config_hash();
    manifest["spec"] = json::parse(io::marma_spec_to_json(spec));
    manifest["identification_ok"] = report.identification_ok;
    manifest["messages"] = report.messages;
    json files = json::object();

    for (std::uint64_t seed : cfg.seeds) {
        const std::string dir = seed_dir(cfg, seed);
        fs::create_directories(dir);
        const auto path = marma::simulate_marma(
            spec, cfg.n_train + cfg.n_test, cfg.burn_in,
            rng::derive_seed(seed, 11));
        const auto cal = marma::simulate_marma(spec, cfg.n_cal, cfg.burn_in,
                                               rng::derive_seed(seed, 12));
        const std::vector<double> train(path.values.begin(),
                                        path.values.begin() + cfg.n_train);
        const std::vector<double> test(path.values.begin() + cfg.n_train,
                                       path.values.end());
        io::write_series_csv(dir + "/full.csv", path.values);
        io::write_series_csv(dir + "/train.csv", train);
        io::write_series_csv(dir + "/cal.csv", cal.values);
        io::write_series_csv(dir + "/test.csv", test);
        for (const char* name :
             {"/full.csv", "/train.csv", "/cal.csv", "/test.csv"}) {
            const std::string p = dir + name;
            files[p] = io::file_checksum(p);
        }
    }
    manifest["files"] = files;
    store_manifest(cfg, manifest);
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const ExperimentConfig& cfg) {
    cfg.validate();
    json manifest = load_manifest(cfg);
    json& files = manifest["files"];

    for (std::uint64_t seed : cfg.seeds) {
        const SeedData data = load_seed_data(cfg, seed, manifest);
        const std::string dir = seed_dir(cfg, seed);

        const tails::TailBounds bounds =
            tails::fit_tail_bounds(data.train, cfg.delta);
        manifest["tail_bounds_seed" + std::to_string(seed)] = {
            {"lower", bounds.lower},
            {"upper", bounds.upper},
            {"delta", bounds.delta}};

        const bool have_cal = !data.cal.empty();
        if (!have_cal)
            manifest["recalibration_skipped_seed" + std::to_string(seed)] = true;

        for (std::size_t h : cfg.horizons) {
            mdn::MdnConfig mcfg = cfg.mdn;
            mcfg.horizon = h;
            mcfg.seed = rng::derive_seed(seed, 1000 + h);

            mdn::TrainingSet set =
                mdn::make_training_set(data.train, mcfg.input_dim, h);
            mdn::apply_tail_weights(set, bounds);
            const mdn::TrainResult result = mdn::train(set, mcfg);

            io::save_model(result.model, model_file(cfg, seed, h));
            io::write_training_log(dir + "/train_log_h" + std::to_string(h) +
                                       ".csv",
                                   result.log);
            files[model_file(cfg, seed, h)] =
                io::file_checksum(model_file(cfg, seed, h));

            if (have_cal && cfg.recalibrate) {
                mdn::TrainingSet cal_set =
                    mdn::make_training_set(data.cal, mcfg.input_dim, h);
                std::vector<std::vector<double>> feats(cal_set.rows());
                std::vector<double> targets(cal_set.rows());
                for (std::size_t i = 0; i < cal_set.rows(); ++i) {
                    feats[i].assign(cal_set.inputs.begin() +
                                        i * cal_set.input_dim,
                                    cal_set.inputs.begin() +
                                        (i + 1) * cal_set.input_dim);
                    targets[i] = cal_set.targets[i];
                }
                const mdn::MdnModel& model = result.model;
                const auto pits = recal::compute_pit(
                    [&model](const std::vector<double>& x) {
                        return model.predict_density(x);
                    },
                    feats, targets);
                const auto rmodel =
                    recal::fit_local_pit(pits, recal::default_tau_grid());
                io::save_recalibration(rmodel, recal_file(cfg, seed, h));
                files[recal_file(cfg, seed, h)] =
                    io::file_checksum(recal_file(cfg, seed, h));
            }
        }
    }
    store_manifest(cfg, manifest);
}

// ---------------------------------------------------------------------------
// forecast

namespace {

/// Method-agnostic density factory for one (seed, horizon).
struct Forecasters {
    const mdn::MdnModel* model = nullptr;
    const recal::RecalibrationModel* recal_model = nullptr;
    const baselines::NwEstimator* nw = nullptr;
    const baselines::CauchyMar1Oracle* oracle = nullptr;

    DensityPtr make(const std::string& method, double x) const {
        if (method == "mdn") {
            DensityPtr base = model->predict_density({x});
            if (recal_model) {
                auto res = recal::recalibrate_density(std::move(base),
                                                      *recal_model, {x});
                return std::move(res.density);
            }
            return base;
        }
        if (method == "nw") return nw->density(x);
        if (method == "oracle") return oracle->predictive(x);
        throw config_error("unknown method: " + method);
    }
};

double median_forecast(const PredictiveDensity& d) { return d.quantile(0.5); }

}  // namespace

void cmd_forecast(const ExperimentConfig& cfg) {
    cfg.validate();
    const json manifest = load_manifest(cfg);
    const marma::MarmaSpec spec = cfg.resolve_spec();
    const bool oracle_ok = oracle_available(spec);
    if (wants_method(cfg, "oracle") && !oracle_ok)
        throw config_error(
            "oracle requested but the closed form exists only for the Cauchy "
            "MAR(0,1) DGP (alpha = 1, beta = 0, single forward root)");

    std::vector<double> supplied_series;
    if (!cfg.series_file.empty())
        supplied_series = io::read_series_csv(cfg.series_file);

    for (std::uint64_t seed : cfg.seeds) {
        const SeedData data = load_seed_data(cfg, seed, manifest);
        const std::string fdir = seed_dir(cfg, seed) + "/forecast";
        fs::create_directories(fdir);

        const std::vector<double> grid =
            marma::build_conditioning_grid(data.train, cfg.grid_size);

        for (std::size_t h : cfg.horizons) {
            // load per-horizon artifacts
            mdn::MdnModel model;
            std::unique_ptr<recal::RecalibrationModel> rmodel;
            if (wants_method(cfg, "mdn")) {
                const std::string mpath = model_file(cfg, seed, h);
                if (!fs::exists(mpath))
                    throw data_error("missing model file " + mpath +
                                     "; run the train command first");
                model = io::load_model(mpath);
                const std::string rpath = recal_file(cfg, seed, h);
                if (cfg.recalibrate && fs::exists(rpath))
                    rmodel = std::make_unique<recal::RecalibrationModel>(
                        io::load_recalibration(rpath));
            }
            std::unique_ptr<baselines::NwEstimator> nw;
            if (wants_method(cfg, "nw")) {
                mdn::TrainingSet pairs = mdn::make_training_set(data.train, 1, h);
                nw = std::make_unique<baselines::NwEstimator>(pairs.inputs,
                                                              pairs.targets);
            }
            std::unique_ptr<baselines::CauchyMar1Oracle> oracle;
            if (oracle_ok && wants_method(cfg, "oracle"))
                oracle = std::make_unique<baselines::CauchyMar1Oracle>(
                    spec.psi[0], spec.noise.sigma, h);

            Forecasters fc;
            fc.model = &model;
            fc.recal_model = rmodel.get();
            fc.nw = nw.get();
            fc.oracle = oracle.get();

            if (!supplied_series.empty()) {
                // median point forecasts for the supplied series
                for (const auto& method : cfg.methods) {
                    std::ostringstream out;
                    out << "t,x,median_h" << h << "\n";
                    const std::size_t n = supplied_series.size();
                    std::vector<double> med(n, 0.0);
                    parallel_for(n, cfg.threads, [&](std::size_t t) {
                        med[t] =
                            median_forecast(*fc.make(method, supplied_series[t]));
                    });
                    for (std::size_t t = 0; t < n; ++t)
                        out << t << "," << io::format_double(supplied_series[t])
                            << "," << io::format_double(med[t]) << "\n";
                    io::write_text_file(fdir + "/series_" + method + "_h" +
                                            std::to_string(h) + ".csv",
                                        out.str());
                }
                continue;
            }

            for (const auto& method : cfg.methods) {
                std::vector<std::string> summary_rows(grid.size());
                std::vector<std::string> density_rows(grid.size());
                parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
                    const double x = grid[i];
                    const DensityPtr d = fc.make(method, x);
                    const double y_lo = d->quantile(0.002);
                    const double y_hi = d->quantile(0.998);
                    std::vector<double> pdf_vals(cfg.y_grid);
                    const double step =
                        (y_hi - y_lo) / static_cast<double>(cfg.y_grid - 1);
                    double renorm = 0.0;
                    for (std::size_t k = 0; k < cfg.y_grid; ++k) {
                        const double y = y_lo + step * static_cast<double>(k);
                        pdf_vals[k] = d->pdf(y);
                        renorm += pdf_vals[k] * step;
                    }
                    const auto modes = find_modes(pdf_vals);

                    std::ostringstream srow;
                    srow << io::format_double(x);
                    for (double p : {0.05, 0.1, 0.5, 0.9, 0.95})
                        srow << "," << io::format_double(d->quantile(p));
                    srow << "," << modes.size();
                    for (int k = 1; k <= 4; ++k)
                        srow << ","
                             << io::format_double(d->moment(
                                    k, cfg.moment_trunc_lo, cfg.moment_trunc_hi));
                    srow << "," << io::format_double(renorm);
                    summary_rows[i] = srow.str();

                    std::ostringstream drow;
                    drow << io::format_double(x) << ","
                         << io::format_double(y_lo) << ","
                         << io::format_double(y_hi);
                    for (double v : pdf_vals)
                        drow << "," << io::format_double(v);
                    density_rows[i] = drow.str();
                });

                std::ostringstream summary;
                summary << "x,q05,q10,q50,q90,q95,modes,m1,m2,m3,m4,renorm\n";
                for (const auto& r : summary_rows) summary << r << "\n";
                io::write_text_file(fdir + "/summary_" + method + "_h" +
                                        std::to_string(h) + ".csv",
                                    summary.str());

                std::ostringstream density;
                density << "x,y_lo,y_hi,pdf...\n";
                for (const auto& r : density_rows) density << r << "\n";
                io::write_text_file(fdir + "/density_" + method + "_h" +
                                        std::to_string(h) + ".csv",
                                    density.str());
            }
        }
    }
}

// ---------------------------------------------------------------------------
// evaluate

void cmd_evaluate(const ExperimentConfig& cfg) {
    cfg.validate();
    const json manifest = load_manifest(cfg);
    const marma::MarmaSpec spec = cfg.resolve_spec();
    const bool oracle_ok = oracle_available(spec);

    for (std::uint64_t seed : cfg.seeds) {
        const SeedData data = load_seed_data(cfg, seed, manifest);
        const std::string edir = seed_dir(cfg, seed) + "/eval";
        fs::create_directories(edir);

        const eval::RegionPartition regions =
            eval::RegionPartition::from_series(data.train);
        const std::vector<double> grid =
            marma::build_conditioning_grid(data.train, cfg.grid_size);

        json summary;
        summary["seed"] = seed;
        summary["config_hash"] = cfg.config_hash();
        summary["regions"] = {{"q01", regions.q01},
                              {"q10", regions.q10},
                              {"q90", regions.q90},
                              {"q99", regions.q99}};
        summary["oracle_available"] = oracle_ok;

        std::vector<std::string> density_methods;
        for (const auto& m : cfg.methods)
            if (m != "oracle") density_methods.push_back(m);

        std::ostringstream case1, case2, case3, mcs_out, mspe_out;
        case1 << "method,horizon,metric,region,value\n";
        case2 << "method,horizon,moment,region,value\n";
        case3 << "method,horizon,metric,region,value\n";
        mcs_out << "metric,horizon,method,p_value,in_mcs90\n";
        mspe_out << "method,horizon,mspe_ratio\n";

        for (std::size_t h : cfg.horizons) {
            mdn::MdnModel model;
            std::unique_ptr<recal::RecalibrationModel> rmodel;
            if (wants_method(cfg, "mdn")) {
                model = io::load_model(model_file(cfg, seed, h));
                const std::string rpath = recal_file(cfg, seed, h);
                if (cfg.recalibrate && fs::exists(rpath))
                    rmodel = std::make_unique<recal::RecalibrationModel>(
                        io::load_recalibration(rpath));
            }
            std::unique_ptr<baselines::NwEstimator> nw;
            if (wants_method(cfg, "nw")) {
                mdn::TrainingSet pairs = mdn::make_training_set(data.train, 1, h);
                nw = std::make_unique<baselines::NwEstimator>(pairs.inputs,
                                                              pairs.targets);
            }
            std::unique_ptr<baselines::CauchyMar1Oracle> oracle;
            if (oracle_ok)
                oracle = std::make_unique<baselines::CauchyMar1Oracle>(
                    spec.psi[0], spec.noise.sigma, h);

            Forecasters fc;
            fc.model = &model;
            fc.recal_model = rmodel.get();
            fc.nw = nw.get();
            fc.oracle = oracle.get();

            // ---- Case 1: KL / ISE against the oracle over the grid
            if (oracle_ok) {
                for (const auto& method : density_methods) {
                    struct Acc {
                        double kl_c = 0, kl_t = 0, ise_c = 0, ise_t = 0;
                    };
                    std::vector<Acc> acc(grid.size());
                    parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
                        const double x = grid[i];
                        const DensityPtr d = fc.make(method, x);
                        const auto p = [&](double y) {
                            return oracle->pdf(y, x);
                        };
                        const auto q = [&](double y) { return d->pdf(y); };
                        acc[i].kl_c = eval::kl_divergence(p, q, regions.center());
                        acc[i].kl_t = eval::kl_divergence(p, q, regions.tails());
                        acc[i].ise_c = eval::ise(p, q, regions.center());
                        acc[i].ise_t = eval::ise(p, q, regions.tails());
                    });
                    double kl_c = 0, kl_t = 0, ise_c = 0, ise_t = 0;
                    for (const auto& a : acc) {
                        kl_c += a.kl_c;
                        kl_t += a.kl_t;
                        ise_c += a.ise_c;
                        ise_t += a.ise_t;
                    }
                    const double n = static_cast<double>(grid.size());
                    const auto emit = [&](const std::string& metric, double c,
                                          double t) {
                        case1 << method << "," << h << "," << metric
                              << ",center," << io::format_double(c / n) << "\n";
                        case1 << method << "," << h << "," << metric << ",tails,"
                              << io::format_double(t / n) << "\n";
                        case1 << method << "," << h << "," << metric << ",total,"
                              << io::format_double((c + t) / n) << "\n";
                    };
                    emit("kl", kl_c, kl_t);
                    emit("ise", ise_c, ise_t);
                }
            }

            // ---- Case 2: truncated-moment RMSE against oracle moments
            if (oracle_ok) {
                for (int k = 1; k <= 2; ++k) {
                    std::vector<double> ref(grid.size());
                    parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
                        ref[i] = oracle->moment(grid[i], k, cfg.moment_trunc_lo,
                                                cfg.moment_trunc_hi);
                    });
                    for (const auto& method : density_methods) {
                        std::vector<double> est(grid.size());
                        parallel_for(grid.size(), cfg.threads,
                                     [&](std::size_t i) {
                                         est[i] = fc.make(method, grid[i])
                                                      ->moment(
                                                          k,
                                                          cfg.moment_trunc_lo,
                                                          cfg.moment_trunc_hi);
                                     });
                        const auto r = eval::moment_rmse(grid, est, ref, regions);
                        case2 << method << "," << h << "," << k << ",center,"
                              << io::format_double(r.center) << "\n";
                        case2 << method << "," << h << "," << k << ",tails,"
                              << io::format_double(r.tails) << "\n";
                        case2 << method << "," << h << "," << k << ",total,"
                              << io::format_double(r.total) << "\n";
                    }
                }
            }

            // ---- Case 3: proper scores on the realized test observations
            struct Obs {
                double x, y;
                eval::RegionPartition::Zone zone;
            };
            std::vector<Obs> obs;
            for (std::size_t u = cfg.n_train; u < data.full.size(); ++u) {
                if (u < h) continue;
                const double x = data.full[u - h];
                obs.push_back({x, data.full[u], regions.classify(x)});
            }
            std::vector<std::string> score_methods = density_methods;
            if (oracle_ok) score_methods.push_back("oracle");

            struct Scores {
                std::vector<double> cde, crps, logs, qs;
            };
            std::vector<Scores> per_method(score_methods.size());
            for (std::size_t mi = 0; mi < score_methods.size(); ++mi) {
                auto& sc = per_method[mi];
                sc.cde.resize(obs.size());
                sc.crps.resize(obs.size());
                sc.logs.resize(obs.size());
                sc.qs.resize(obs.size());
                parallel_for(obs.size(), cfg.threads, [&](std::size_t i) {
                    const DensityPtr d = fc.make(score_methods[mi], obs[i].x);
                    sc.cde[i] = eval::cde_loss_single(*d, obs[i].y);
                    sc.crps[i] = eval::crps(*d, obs[i].y);
                    sc.logs[i] = eval::log_score(*d, obs[i].y);
                    sc.qs[i] = eval::quantile_score(*d, obs[i].y, 0.10);
                });
            }

            // region codes: 0 center, 1 tails, 2 total
            const auto region_mean = [&](const std::vector<double>& v,
                                         int code) {
                using Zone = eval::RegionPartition::Zone;
                double acc = 0.0;
                std::size_t n = 0;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (obs[i].zone == Zone::outside) continue;
                    const bool pick =
                        code == 2 || (code == 0 && obs[i].zone == Zone::center) ||
                        (code == 1 && obs[i].zone == Zone::tails);
                    if (pick) {
                        acc += v[i];
                        ++n;
                    }
                }
                return n > 0 ? acc / static_cast<double>(n)
                             : std::numeric_limits<double>::quiet_NaN();
            };

            for (std::size_t mi = 0; mi < score_methods.size(); ++mi) {
                const auto& sc = per_method[mi];
                const auto emit = [&](const std::string& metric,
                                      const std::vector<double>& v) {
                    static const char* NAMES[] = {"center", "tails", "total"};
                    for (int code = 0; code < 3; ++code)
                        case3 << score_methods[mi] << "," << h << "," << metric
                              << "," << NAMES[code] << ","
                              << io::format_double(region_mean(v, code)) << "\n";
                };
                emit("cde", sc.cde);
                emit("crps", sc.crps);
                emit("log_score", sc.logs);
                emit("qs10", sc.qs);
            }

            // ---- MCS per metric over the total-region loss series
            if (score_methods.size() >= 2) {
                std::vector<std::size_t> total_idx;
                for (std::size_t i = 0; i < obs.size(); ++i)
                    if (obs[i].zone != eval::RegionPartition::Zone::outside)
                        total_idx.push_back(i);
                const auto run_mcs = [&](const std::string& metric,
                                         auto getter, bool negate) {
                    std::vector<std::vector<double>> losses(
                        score_methods.size());
                    for (std::size_t mi = 0; mi < score_methods.size(); ++mi) {
                        for (std::size_t i : total_idx) {
                            const double v = getter(per_method[mi], i);
                            losses[mi].push_back(negate ? -v : v);
                        }
                    }
                    const auto res = eval::model_confidence_set(
                        losses, 0.10, 1000, rng::derive_seed(seed, 77 + h));
                    for (std::size_t mi = 0; mi < score_methods.size(); ++mi) {
                        const bool in =
                            std::find(res.survivors.begin(),
                                      res.survivors.end(),
                                      mi) != res.survivors.end();
                        mcs_out << metric << "," << h << ","
                                << score_methods[mi] << ","
                                << io::format_double(res.p_values[mi]) << ","
                                << (in ? 1 : 0) << "\n";
                    }
                };
                run_mcs("cde", [](const Scores& s, std::size_t i) {
                    return s.cde[i];
                }, false);
                run_mcs("crps", [](const Scores& s, std::size_t i) {
                    return s.crps[i];
                }, false);
                run_mcs("log_score", [](const Scores& s, std::size_t i) {
                    return s.logs[i];
                }, true);
                run_mcs("qs10", [](const Scores& s, std::size_t i) {
                    return s.qs[i];
                }, false);
            }

            // ---- MSPE ratios of median point forecasts vs no-change
            {
                double mspe_nc = 0.0;
                for (const auto& o : obs) {
                    const double e = o.y - o.x;  // no-change forecast = X_{t}
                    mspe_nc += e * e;
                }
                mspe_nc /= static_cast<double>(obs.size());
                mspe_out << "no_change," << h << ",1\n";
                for (std::size_t mi = 0; mi < score_methods.size(); ++mi) {
                    std::vector<double> med(obs.size());
                    parallel_for(obs.size(), cfg.threads, [&](std::size_t i) {
                        med[i] = fc.make(score_methods[mi], obs[i].x)
                                     ->quantile(0.5);
                    });
                    double mspe = 0.0;
                    for (std::size_t i = 0; i < obs.size(); ++i) {
                        const double e = obs[i].y - med[i];
                        mspe += e * e;
                    }
                    mspe /= static_cast<double>(obs.size());
                    mspe_out << score_methods[mi] << "," << h << ","
                             << io::format_double(mspe / mspe_nc) << "\n";
                }
            }
        }

        io::write_text_file(edir + "/case1_kl_ise.csv", case1.str());
        io::write_text_file(edir + "/case2_moment_rmse.csv", case2.str());
        io::write_text_file(edir + "/case3_scores.csv", case3.str());
        io::write_text_file(edir + "/mcs.csv", mcs_out.str());
        io::write_text_file(edir + "/mspe_ratios.csv", mspe_out.str());
        io::write_text_file(edir + "/summary.json", summary.dump(2));
    }
}

}  // namespace bubblecast::experiment
