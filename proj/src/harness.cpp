#include "rare/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "json.hpp"

#include "rare/io.hpp"
#include "rare/metrics.hpp"
#include "rare/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rare {

namespace {

constexpr double kGolden = 3.1415926535897932384626433832795 * 0.61803398874989484820458683436564;

std::uint64_t sub_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
    const std::uint64_t parts[4] = {root, a, b, c};
    return io::fnv1a(parts, sizeof(parts));
}

std::string num_token(double v) {
    const double r = std::round(v * 100.0) / 100.0;
    std::string s = io::fmt(r);
    for (char& ch : s) {
        if (ch == '.') ch = 'p';
        if (ch == '-') ch = 'm';
    }
    return s;
}

template <typename T>
T jget(const json& j, const std::string& scope, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw std::invalid_argument("config field '" + scope + key + "': " + e.what());
    }
}

std::string join(const std::string& dir, const std::string& rel) {
    return (fs::path(dir) / rel).string();
}

json load_json(const std::string& path) {
    try {
        return json::parse(io::read_text(path));
    } catch (const std::exception& e) {
        throw std::runtime_error("cannot parse " + path + ": " + e.what());
    }
}

json load_manifest(const std::string& out_dir) {
    const std::string p = join(out_dir, "manifest.json");
    if (!io::file_exists(p))
        throw std::runtime_error("no manifest at " + p + " (run simulate first)");
    return load_json(p);
}

CoilMaps coil_maps_from_image(const ComplexImage& img) {
    CoilMaps c;
    c.nx = img.dims.nx;
    c.ny = img.dims.ny;
    const std::size_t npix = img.dims.pixels();
    for (int i = 0; i < img.dims.phases; ++i)
        c.maps.emplace_back(img.data.begin() + i * npix, img.data.begin() + (i + 1) * npix);
    return c;
}

ComplexImage coil_maps_to_image(const CoilMaps& c) {
    ComplexImage img({c.n_coils(), c.nx, c.ny});
    const std::size_t npix = img.dims.pixels();
    for (int i = 0; i < c.n_coils(); ++i)
        std::copy(c.maps[i].begin(), c.maps[i].end(), img.data.begin() + i * npix);
    return img;
}

AcquisitionConfig acq_for_rate(const ExperimentConfig& cfg, double rate, double snr_db,
                               double offset, std::uint64_t noise_seed) {
    AcquisitionConfig a;
    a.readout = cfg.nx;
    a.sample_budget = samples_for_rate(rate, cfg.nx, cfg.ny);
    a.spokes = int((a.sample_budget + a.readout - 1) / a.readout);
    a.scheme = AngleScheme::golden;
    a.angle_offset = offset;
    a.grid_nx = cfg.nx;
    a.grid_ny = cfg.ny;
    a.snr_db = snr_db;
    a.noise_seed = noise_seed;
    return a;
}

struct Paths {
    static std::string gt(int j) { return "gt_obj" + std::to_string(j); }
    static std::string coils() { return "coils"; }
    static std::string kspace(int j, const std::string& cell) {
        return "y_obj" + std::to_string(j) + "_" + cell;
    }
    static std::string pattern(int j, const std::string& cell) {
        return "pat_obj" + std::to_string(j) + "_" + cell;
    }
    static std::string zf(int j, const std::string& cell) {
        return "zf_obj" + std::to_string(j) + "_" + cell;
    }
    static std::string train_x(int j, int i) {
        return "train_x_obj" + std::to_string(j) + "_a" + std::to_string(i);
    }
    static std::string train_y(int j, int i) {
        return "train_y_obj" + std::to_string(j) + "_a" + std::to_string(i);
    }
    static std::string train_pat(int j, int i) {
        return "train_pat_obj" + std::to_string(j) + "_a" + std::to_string(i);
    }
    static std::string rec(int j, const std::string& cell, const std::string& method) {
        return "results/rec_obj" + std::to_string(j) + "_" + cell + "_" + method;
    }
    static std::string trace(int j, const std::string& cell, const std::string& method) {
        return "results/trace_obj" + std::to_string(j) + "_" + cell + "_" + method + ".tsv";
    }
};

void write_trace_tsv(const std::string& path, const ReconReport& rep) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : rep.trace)
        rows.push_back({std::to_string(r.iteration), io::fmt(r.g_norm), io::fmt(r.gamma),
                        io::fmt(r.q), io::fmt(r.wall_ms)});
    io::write_tsv(path, {"iteration", "g_norm", "gamma", "q", "wall_ms"}, rows);
}

} // namespace

std::string CellConfig::label() const {
    return "r" + num_token(rate * 100.0) + "_s" + num_token(snr_db);
}

void ExperimentConfig::validate() const {
    if (version != 1) throw std::invalid_argument("unsupported config version");
    if (nx < 8 || ny < 8 || phases < 1) throw std::invalid_argument("grid too small");
    if (objects < 1) throw std::invalid_argument("need at least one object");
    if (n_coils < 1) throw std::invalid_argument("need at least one coil");
    if (cells.empty()) throw std::invalid_argument("need at least one (rate, snr) cell");
    for (const auto& c : cells)
        if (!(c.rate > 0.0 && c.rate <= 1.0))
            throw std::invalid_argument("cell rate must be in (0, 1]");
    if (methods.empty()) throw std::invalid_argument("method list is empty");
    for (const auto& m : methods)
        if (m != "zf" && m != "cs-tv" && m != "red" && m != "rare-a2a")
            throw std::invalid_argument("unknown method: " + m);
    if (train_acquisitions < 2)
        throw std::invalid_argument("A2A training needs at least two acquisitions");
    if (!(train_rate > 0.0 && train_rate <= 1.0))
        throw std::invalid_argument("train rate must be in (0, 1]");
    if (tau_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("tau/lambda grids must be non-empty");
    for (double t : tau_grid)
        if (!(t > 0.0)) throw std::invalid_argument("tau grid values must be positive");
    for (double l : lambda_grid)
        if (!(l >= 0.0)) throw std::invalid_argument("lambda grid values must be >= 0");
    if (red_draws < 1) throw std::invalid_argument("red_draws must be >= 1");
    train.validate();
    solver.validate();
    tv.validate();
    if (!(residual_factor > 0.0)) throw std::invalid_argument("residual factor must be > 0");
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    c.version = jget(j, "", "version", 1);
    c.seed = jget<std::uint64_t>(j, "", "seed", 1);
    if (j.contains("grid")) {
        const json& g = j["grid"];
        c.nx = jget(g, "grid.", "nx", 64);
        c.ny = jget(g, "grid.", "ny", 64);
        c.phases = jget(g, "grid.", "phases", 10);
    }
    c.objects = jget(j, "", "objects", 1);
    c.phantom_features = jget(j, "", "phantom_features", 5);
    if (j.contains("coils")) {
        const json& g = j["coils"];
        c.n_coils = jget(g, "coils.", "count", 1);
        c.coils_uniform = jget(g, "coils.", "uniform", true);
    }
    if (j.contains("cells")) {
        c.cells.clear();
        for (const auto& e : j.at("cells"))
            c.cells.push_back({jget(e, "cells[].", "rate", 0.1),
                               jget(e, "cells[].", "snr_db", 30.0)});
    }
    if (j.contains("methods")) c.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("train")) {
        const json& g = j["train"];
        c.train_acquisitions = jget(g, "train.", "acquisitions", 4);
        c.train_rate = jget(g, "train.", "rate", 0.4);
        c.train_snr_db = jget(g, "train.", "snr_db", 30.0);
        c.train.alpha = jget(g, "train.", "alpha", 0.5);
        c.train.lr = jget(g, "train.", "lr", 1e-3);
        c.train.beta1 = jget(g, "train.", "beta1", 0.9);
        c.train.beta2 = jget(g, "train.", "beta2", 0.999);
        c.train.eps = jget(g, "train.", "eps", 1e-8);
        c.train.batch = jget(g, "train.", "batch", 2);
        c.train.epochs = jget(g, "train.", "epochs", 10);
    }
    if (j.contains("arch")) {
        const json& g = j["arch"];
        c.arch.depth = jget(g, "arch.", "depth", 10);
        c.arch.width = jget(g, "arch.", "width", 64);
        c.arch.kp = jget(g, "arch.", "kp", 3);
        c.arch.kx = jget(g, "arch.", "kx", 3);
        c.arch.ky = jget(g, "arch.", "ky", 3);
    }
    if (j.contains("red")) {
        const json& g = j["red"];
        if (g.contains("sigmas")) c.red_sigmas = g.at("sigmas").get<std::vector<double>>();
        c.red_draws = jget(g, "red.", "draws", 2);
    }
    if (j.contains("solver")) {
        const json& g = j["solver"];
        if (g.contains("tau_grid")) c.tau_grid = g.at("tau_grid").get<std::vector<double>>();
        if (g.contains("lambda_grid"))
            c.lambda_grid = g.at("lambda_grid").get<std::vector<double>>();
        c.solver.gamma0 = jget(g, "solver.", "gamma0", 0.0);
        c.solver.beta = jget(g, "solver.", "beta", 0.5);
        c.solver.rho = jget(g, "solver.", "rho", 1e-6);
        c.solver.max_iters = jget(g, "solver.", "max_iters", 500);
        c.solver.accelerate = jget(g, "solver.", "accelerate", true);
        c.solver.real_projection = jget(g, "solver.", "real_projection", false);
    }
    if (j.contains("tv")) {
        const json& g = j["tv"];
        c.tv.iters = jget(g, "tv.", "iters", 40);
        c.tv.w_space = jget(g, "tv.", "w_space", 1.0);
        c.tv.w_phase = jget(g, "tv.", "w_phase", 1.0);
    }
    const std::string engine = jget<std::string>(j, "", "engine", "direct");
    if (engine == "direct")
        c.engine = TransformEngine::direct;
    else if (engine == "gridded")
        c.engine = TransformEngine::gridded;
    else
        throw std::invalid_argument("config field 'engine': must be direct or gridded");
    c.residual_factor = jget(j, "", "residual_factor", 10.0);
    c.validate();
    return c;
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["version"] = c.version;
    j["seed"] = c.seed;
    j["grid"] = {{"nx", c.nx}, {"ny", c.ny}, {"phases", c.phases}};
    j["objects"] = c.objects;
    j["phantom_features"] = c.phantom_features;
    j["coils"] = {{"count", c.n_coils}, {"uniform", c.coils_uniform}};
    json cells = json::array();
    for (const auto& cell : c.cells)
        cells.push_back({{"rate", cell.rate}, {"snr_db", cell.snr_db}});
    j["cells"] = cells;
    j["methods"] = c.methods;
    j["train"] = {{"acquisitions", c.train_acquisitions}, {"rate", c.train_rate},
                  {"snr_db", c.train_snr_db},             {"alpha", c.train.alpha},
                  {"lr", c.train.lr},                     {"beta1", c.train.beta1},
                  {"beta2", c.train.beta2},               {"eps", c.train.eps},
                  {"batch", c.train.batch},               {"epochs", c.train.epochs}};
    j["arch"] = {{"depth", c.arch.depth},
                 {"width", c.arch.width},
                 {"kp", c.arch.kp},
                 {"kx", c.arch.kx},
                 {"ky", c.arch.ky}};
    j["red"] = {{"sigmas", c.red_sigmas}, {"draws", c.red_draws}};
    j["solver"] = {{"tau_grid", c.tau_grid},
                   {"lambda_grid", c.lambda_grid},
                   {"gamma0", c.solver.gamma0},
                   {"beta", c.solver.beta},
                   {"rho", c.solver.rho},
                   {"max_iters", c.solver.max_iters},
                   {"accelerate", c.solver.accelerate},
                   {"real_projection", c.solver.real_projection}};
    j["tv"] = {{"iters", c.tv.iters}, {"w_space", c.tv.w_space}, {"w_phase", c.tv.w_phase}};
    j["engine"] = c.engine == TransformEngine::direct ? "direct" : "gridded";
    j["residual_factor"] = c.residual_factor;
    return j.dump(2) + "\n";
}

std::string cmd_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    fs::create_directories(join(out_dir, "results"));
    const std::string cfg_text = config_to_json(cfg);
    io::write_text(join(out_dir, "config.json"), cfg_text);

    json man;
    man["version"] = 1;
    man["config"] = json::parse(cfg_text);
    man["config_digest"] = io::digest_string(cfg_text);

    CoilMaps coils = synth_coil_maps(cfg.n_coils, cfg.nx, cfg.ny, sub_seed(cfg.seed, 102),
                                     cfg.coils_uniform);
    io::write_image(join(out_dir, Paths::coils()), coil_maps_to_image(coils), false,
                    "coil,x,y");
    man["coils"] = {{"path", Paths::coils()},
                    {"digest", io::digest_file(join(out_dir, Paths::coils()))}};

    json gts = json::array();
    json cases = json::array();
    json train_imgs = json::array();
    for (int j = 0; j < cfg.objects; ++j) {
        const PhantomConfig pc = random_phantom_config(cfg.nx, cfg.ny, cfg.phases,
                                                       cfg.phantom_features,
                                                       sub_seed(cfg.seed, 101, j));
        const ComplexImage gt = make_phantom(pc);
        io::write_image(join(out_dir, Paths::gt(j)), gt);
        gts.push_back({{"object", j},
                       {"path", Paths::gt(j)},
                       {"digest", io::digest_file(join(out_dir, Paths::gt(j)))}});

        for (std::size_t ci = 0; ci < cfg.cells.size(); ++ci) {
            const CellConfig cell = cfg.cells[ci];
            const AcquisitionConfig acq =
                acq_for_rate(cfg, cell.rate, cell.snr_db, 0.0, sub_seed(cfg.seed, 201, j, ci));
            const AcquisitionResult res = simulate_acquisition(gt, coils, acq, cfg.engine);
            const std::string lbl = cell.label();
            io::write_kspace(join(out_dir, Paths::kspace(j, lbl)), res.kspace);
            io::write_pattern(join(out_dir, Paths::pattern(j, lbl)), res.pattern);
            io::write_image(join(out_dir, Paths::zf(j, lbl)), res.pinv);
            cases.push_back(
                {{"object", j},
                 {"cell", lbl},
                 {"rate", cell.rate},
                 {"snr_db", cell.snr_db},
                 {"kspace", Paths::kspace(j, lbl)},
                 {"pattern", Paths::pattern(j, lbl)},
                 {"zf", Paths::zf(j, lbl)},
                 {"kspace_digest", io::digest_file(join(out_dir, Paths::kspace(j, lbl)))},
                 {"zf_digest", io::digest_file(join(out_dir, Paths::zf(j, lbl)))}});
        }

        for (int i = 0; i < cfg.train_acquisitions; ++i) {
            const AcquisitionConfig acq =
                acq_for_rate(cfg, cfg.train_rate, cfg.train_snr_db, double(i) * kGolden,
                             sub_seed(cfg.seed, 301, j, i));
            const AcquisitionResult res = simulate_acquisition(gt, coils, acq, cfg.engine);
            io::write_kspace(join(out_dir, Paths::train_y(j, i)), res.kspace);
            io::write_pattern(join(out_dir, Paths::train_pat(j, i)), res.pattern);
            io::write_image(join(out_dir, Paths::train_x(j, i)), res.pinv);
            train_imgs.push_back(
                {{"object", j},
                 {"acq", i},
                 {"path", Paths::train_x(j, i)},
                 {"kspace", Paths::train_y(j, i)},
                 {"pattern", Paths::train_pat(j, i)},
                 {"digest", io::digest_file(join(out_dir, Paths::train_x(j, i)))}});
        }
    }
    man["groundtruth"] = gts;
    man["test_cases"] = cases;
    man["train_images"] = train_imgs;
    const std::string man_path = join(out_dir, "manifest.json");
    io::write_text(man_path, man.dump(2) + "\n");
    return man_path;
}

std::string cmd_train(const std::string& out_dir) {
    const json man = load_manifest(out_dir);
    const ExperimentConfig cfg = config_from_json(man.at("config").dump());
    const auto& methods = cfg.methods;
    const bool want_a2a =
        std::find(methods.begin(), methods.end(), "rare-a2a") != methods.end();
    const bool want_red = std::find(methods.begin(), methods.end(), "red") != methods.end();
    json tr_json;

    if (want_a2a) {
        std::map<int, ObjectAcquisitions> objs;
        for (const auto& e : man.at("train_images")) {
            const int j = e.at("object").get<int>();
            objs[j].object_id = j;
            objs[j].acquisition_ids.push_back(e.at("acq").get<int>());
            objs[j].images.push_back(io::read_image(join(out_dir, e.at("path"))));
        }
        std::vector<ObjectAcquisitions> dataset;
        for (auto& [_, o] : objs) dataset.push_back(std::move(o));
        TrainConfig tc = cfg.train;
        tc.seed = sub_seed(cfg.seed, 401);
        const TrainResult res = train(dataset, cfg.arch, tc);
        io::write_weights(join(out_dir, "weights_a2a"), res.weights);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
            rows.push_back({std::to_string(e), io::fmt(res.epoch_loss[e])});
        io::write_tsv(join(out_dir, "loss_a2a.tsv"), {"epoch", "loss"}, rows);
        tr_json["a2a"] = {{"weights", "weights_a2a"},
                          {"digest", io::digest_file(join(out_dir, "weights_a2a"))},
                          {"final_loss", res.epoch_loss.back()}};
    }

    if (want_red) {
        std::vector<TrainPair> pairs;
        for (const auto& e : man.at("groundtruth")) {
            const int j = e.at("object").get<int>();
            const ComplexImage gt = io::read_image(join(out_dir, e.at("path")));
            for (std::size_t si = 0; si < cfg.red_sigmas.size(); ++si) {
                const double sigma = cfg.red_sigmas[si];
                for (int d = 0; d < cfg.red_draws; ++d) {
                    Rng rng(sub_seed(cfg.seed, 402, std::uint64_t(j) * 97 + si, d));
                    TrainPair p;
                    p.object_id = j;
                    p.acq_input = int(si) * cfg.red_draws + d;
                    p.acq_target = -1;
                    p.input = gt;
                    for (cplx& v : p.input.data)
                        v += cplx(sigma * rng.normal(), sigma * rng.normal());
                    p.target = gt;
                    pairs.push_back(std::move(p));
                }
            }
        }
        TrainConfig tc = cfg.train;
        tc.seed = sub_seed(cfg.seed, 403);
        const TrainResult res = train_on_pairs(pairs, cfg.arch, tc);
        io::write_weights(join(out_dir, "weights_red"), res.weights);
        std::vector<std::vector<std::string>> rows;
        for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
            rows.push_back({std::to_string(e), io::fmt(res.epoch_loss[e])});
        io::write_tsv(join(out_dir, "loss_red.tsv"), {"epoch", "loss"}, rows);
        tr_json["red"] = {{"weights", "weights_red"},
                          {"digest", io::digest_file(join(out_dir, "weights_red"))},
                          {"final_loss", res.epoch_loss.back()}};
    }

    const std::string path = join(out_dir, "training.json");
    io::write_text(path, tr_json.dump(2) + "\n");
    return path;
}

namespace {

struct BestPick {
    ReconReport report;
    double param = 0.0;
    double score = -1e300;
};

} // namespace

std::string cmd_reconstruct(const std::string& out_dir,
                            const std::vector<std::string>& methods_override,
                            const std::vector<double>& tau_grid_override,
                            const std::vector<double>& lambda_grid_override, bool resume) {
    const json man = load_manifest(out_dir);
    const ExperimentConfig cfg = config_from_json(man.at("config").dump());
    const std::vector<std::string> methods =
        methods_override.empty() ? cfg.methods : methods_override;
    for (const auto& m : methods)
        if (m != "zf" && m != "cs-tv" && m != "red" && m != "rare-a2a")
            throw std::invalid_argument("unknown method: " + m);
    const std::vector<double> taus = tau_grid_override.empty() ? cfg.tau_grid : tau_grid_override;
    const std::vector<double> lambdas =
        lambda_grid_override.empty() ? cfg.lambda_grid : lambda_grid_override;

    const bool want_a2a = std::find(methods.begin(), methods.end(), "rare-a2a") != methods.end();
    const bool want_red = std::find(methods.begin(), methods.end(), "red") != methods.end();
    std::optional<NetWeights> w_a2a, w_red;
    if (want_a2a) {
        if (!io::file_exists(join(out_dir, "weights_a2a.hdr")))
            throw std::runtime_error("missing weights_a2a (run train first)");
        w_a2a = io::read_weights(join(out_dir, "weights_a2a"));
    }
    if (want_red) {
        if (!io::file_exists(join(out_dir, "weights_red.hdr")))
            throw std::runtime_error("missing weights_red (run train first)");
        w_red = io::read_weights(join(out_dir, "weights_red"));
    }

    // previously completed entries, for --resume
    std::map<std::string, json> done;
    const std::string res_path = join(out_dir, "results.json");
    if (resume && io::file_exists(res_path)) {
        for (const auto& e : load_json(res_path).at("results")) {
            if (e.contains("error")) continue;
            const std::string key = e.at("image").get<std::string>();
            if (io::file_exists(join(out_dir, key) + ".hdr") &&
                io::digest_file(join(out_dir, key)) == e.at("digest").get<std::string>())
                done[key] = e;
        }
    }

    const CoilMaps coils =
        coil_maps_from_image(io::read_image(join(out_dir, man.at("coils").at("path"))));
    fs::create_directories(join(out_dir, "results"));

    json results = json::array();
    for (const auto& tc : man.at("test_cases")) {
        const int j = tc.at("object").get<int>();
        const std::string cell = tc.at("cell").get<std::string>();
        const ComplexImage gt =
            io::read_image(join(out_dir, man.at("groundtruth").at(j).at("path")));
        const KSpaceData y = io::read_kspace(join(out_dir, tc.at("kspace")));
        const SamplingPattern pat = io::read_pattern(join(out_dir, tc.at("pattern")));
        std::optional<MeasurementOperator> op; // built lazily, reused across methods
        for (const std::string& method : methods) {
            const std::string img_rel = Paths::rec(j, cell, method);
            if (auto it = done.find(img_rel); it != done.end()) {
                results.push_back(it->second);
                continue;
            }
            if (!op) op.emplace(pat, coils, gt.dims, cfg.engine);
            json entry = {{"object", j}, {"cell", cell}, {"method", method},
                          {"image", img_rel}};
            try {
                ReconReport rep;
                if (method == "zf") {
                    rep.image = op->pseudoinverse(y);
                    rep.method = "zf";
                } else if (method == "cs-tv") {
                    BestPick best;
                    for (double lam : lambdas) {
                        TVParams tvp = cfg.tv;
                        tvp.lambda = lam;
                        ReconReport r = fista_tv_solve(y, *op, tvp, cfg.solver);
                        const double score = psnr(r.image, gt).mean;
                        if (score > best.score) best = {std::move(r), lam, score};
                    }
                    rep = std::move(best.report);
                    entry["lambda"] = best.param;
                } else {
                    const NetWeights& w = (method == "rare-a2a") ? *w_a2a : *w_red;
                    const ConvNetRemover remover(w, method);
                    BestPick best;
                    for (double tau : taus) {
                        SolverConfig sc = cfg.solver;
                        sc.tau = tau;
                        ReconReport r = rare_solve(y, *op, remover, sc);
                        const double score = psnr(r.image, gt).mean;
                        if (score > best.score) best = {std::move(r), tau, score};
                    }
                    rep = std::move(best.report);
                    entry["tau"] = best.param;
                }
                io::write_image(join(out_dir, img_rel), rep.image);
                write_trace_tsv(join(out_dir, Paths::trace(j, cell, method)), rep);
                entry["trace"] = Paths::trace(j, cell, method);
                entry["iterations"] = rep.iterations;
                entry["reason"] = to_string(rep.reason);
                entry["digest"] = io::digest_file(join(out_dir, img_rel));
            } catch (const std::exception& e) {
                // solver failure on one case is recorded; the run continues
                entry["error"] = e.what();
            }
            results.push_back(std::move(entry));
        }
    }
    json out;
    out["version"] = 1;
    out["config_digest"] = man.at("config_digest");
    out["results"] = results;
    io::write_text(res_path, out.dump(2) + "\n");
    return res_path;
}

std::vector<MetricRow> evaluate_rows(const std::string& out_dir) {
    const json man = load_manifest(out_dir);
    const std::string res_path = join(out_dir, "results.json");
    if (!io::file_exists(res_path))
        throw std::runtime_error("no results.json (run reconstruct first)");
    const json res = load_json(res_path);
    std::vector<MetricRow> rows;
    for (const auto& e : res.at("results")) {
        if (e.contains("error")) continue;
        MetricRow row;
        row.method = e.at("method").get<std::string>();
        row.object = e.at("object").get<int>();
        row.cell = e.at("cell").get<std::string>();
        const ComplexImage gt =
            io::read_image(join(out_dir, man.at("groundtruth").at(row.object).at("path")));
        const ComplexImage rec = io::read_image(join(out_dir, e.at("image")));
        const MetricSeries ps = psnr(rec, gt);
        const MetricSeries ss = ssim(rec, gt);
        row.psnr_mean = ps.mean;
        row.ssim_mean = ss.mean;
        row.psnr_phase = ps.per_phase;
        row.ssim_phase = ss.per_phase;
        row.identical = ps.any_identical;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string cmd_evaluate(const std::string& out_dir) {
    const std::vector<MetricRow> rows = evaluate_rows(out_dir);
    fs::create_directories(join(out_dir, "eval"));
    std::vector<std::vector<std::string>> tsv;
    for (const auto& r : rows)
        tsv.push_back({r.method, std::to_string(r.object), r.cell, io::fmt(r.psnr_mean),
                       io::fmt(r.ssim_mean), r.identical ? "yes" : "no", "groundtruth"});
    const std::string path = join(out_dir, "eval/metrics.tsv");
    io::write_tsv(path,
                  {"method", "object", "cell", "psnr_db", "ssim", "identical", "reference"},
                  tsv);
    return path;
}

std::string cmd_report(const std::string& out_dir) {
    const json man = load_manifest(out_dir);
    const ExperimentConfig cfg = config_from_json(man.at("config").dump());
    const std::vector<MetricRow> rows = evaluate_rows(out_dir);
    fs::create_directories(join(out_dir, "report"));

    // per-(method, cell) table, mean over objects
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>,
                                                            std::vector<double>>>
        agg;
    for (const auto& r : rows) {
        auto& a = agg[{r.method, r.cell}];
        a.first.push_back(r.psnr_mean);
        a.second.push_back(r.ssim_mean);
    }
    std::vector<std::vector<std::string>> table;
    for (const auto& [key, vals] : agg) {
        double ps = 0, ss = 0;
        for (double v : vals.first) ps += v;
        for (double v : vals.second) ss += v;
        table.push_back({key.first, key.second, io::fmt(ps / double(vals.first.size())),
                         io::fmt(ss / double(vals.second.size()))});
    }
    io::write_tsv(join(out_dir, "report/table.tsv"), {"method", "cell", "psnr_db", "ssim"},
                  table);

    // per-phase curves
    std::vector<std::vector<std::string>> phases;
    for (const auto& r : rows)
        for (std::size_t p = 0; p < r.psnr_phase.size(); ++p)
            phases.push_back({r.method, std::to_string(r.object), r.cell, std::to_string(p),
                              io::fmt(r.psnr_phase[p]), io::fmt(r.ssim_phase[p])});
    io::write_tsv(join(out_dir, "report/phases.tsv"),
                  {"method", "object", "cell", "phase", "psnr_db", "ssim"}, phases);

    // magnified residual images
    const json res = load_json(join(out_dir, "results.json"));
    for (const auto& e : res.at("results")) {
        if (e.contains("error")) continue;
        const int j = e.at("object").get<int>();
        const ComplexImage gt =
            io::read_image(join(out_dir, man.at("groundtruth").at(j).at("path")));
        const ComplexImage rec = io::read_image(join(out_dir, e.at("image")));
        ComplexImage resid(rec.dims);
        for (std::size_t i = 0; i < rec.data.size(); ++i)
            resid.data[i] = cfg.residual_factor * (rec.data[i] - gt.data[i]);
        io::write_image(join(out_dir, "report/residual_obj" + std::to_string(j) + "_" +
                                          e.at("cell").get<std::string>() + "_" +
                                          e.at("method").get<std::string>()),
                        resid);
    }
    return join(out_dir, "report/table.tsv");
}

void run_full_pipeline(const ExperimentConfig& cfg, const std::string& out_dir) {
    cmd_simulate(cfg, out_dir);
    cmd_train(out_dir);
    cmd_reconstruct(out_dir);
    cmd_evaluate(out_dir);
    cmd_report(out_dir);
}

} // namespace rare
