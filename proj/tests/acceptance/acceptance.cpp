// Acceptance checks: prints one PASS/FAIL line per criterion, details on the
// lines before it. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "mixcon/checkpoint.hpp"
#include "mixcon/data.hpp"
#include "mixcon/experiments.hpp"
#include "mixcon/hardness.hpp"
#include "mixcon/invert.hpp"
#include "mixcon/losses.hpp"
#include "mixcon/metrics.hpp"
#include "mixcon/network.hpp"
#include "mixcon/train.hpp"

namespace fs = std::filesystem;
using namespace mixcon;
using testing::numeric_grad;
using testing::random_tensor;
using testing::relative_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string summary;
};

void detail(const std::string& line) { std::cout << "  " << line << "\n" << std::flush; }

std::string fmt(double v, int digits = 4) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

// ---- synthetic experiment shared by criteria 1, 2 and 4 --------------------

struct SyntheticRuns {
    std::vector<SynthRun> runs;  // seed 0, in synthetic_plan order
    double seconds = 0.0;
};

const SyntheticRuns& synthetic_runs() {
    static const SyntheticRuns cached = [] {
        SyntheticRuns r;
        const TrainConfig cfg = synthetic_train_config();
        const auto t0 = Clock::now();
        const SyntheticSplit split = gen_synthetic(cfg.seed);
        for (const auto& plan : synthetic_plan(cfg)) r.runs.push_back(run_synthetic(plan, split, cfg));
        r.seconds = seconds_since(t0);
        for (const auto& run : r.runs) {
            const auto& e = run.result.history.epochs.back();
            detail(run.plan.name + ": train " + fmt(e.train_accuracy) + " test " + fmt(e.test_accuracy) +
                   " mean pair dist " + fmt(e.mean_pair_distance));
        }
        detail("synthetic training time " + fmt(r.seconds, 3) + " s");
        return r;
    }();
    return cached;
}

const EpochRecord& final_record(const std::string& name) {
    for (const auto& run : synthetic_runs().runs) {
        if (run.plan.name == name) return run.result.history.epochs.back();
    }
    throw std::logic_error("no run named " + name);
}

bool near_half(double acc) { return std::abs(acc - 0.5) <= 0.03; }

Outcome criterion1() {
    const auto& runs = synthetic_runs();
    const auto& v = final_record("vanilla");
    const auto& m = final_record("mixcon");
    const auto& z = final_record("mixcon_beta0");
    Outcome o;
    o.pass = v.test_accuracy >= 0.85 && std::abs(m.test_accuracy - v.test_accuracy) <= 0.05 &&
             near_half(z.train_accuracy) && near_half(z.test_accuracy) && runs.seconds < 120.0;
    o.summary = "vanilla " + fmt(v.test_accuracy) + ", mixcon(0.1,0.01) " + fmt(m.test_accuracy) +
                ", mixcon(0.1,0) train " + fmt(z.train_accuracy) + " test " + fmt(z.test_accuracy) + ", " +
                fmt(runs.seconds, 3) + " s";
    return o;
}

Outcome criterion2() {
    const auto& v = final_record("vanilla");
    const auto& z = final_record("mixcon_beta0");
    return {z.mean_pair_distance < 1e-2 && v.mean_pair_distance > 1.0,
            "mean pair distance mixcon(0.1,0) " + fmt(z.mean_pair_distance) + ", vanilla " +
                fmt(v.mean_pair_distance)};
}

Outcome criterion3() {
    const TrainConfig base = synthetic_train_config();
    const auto plan = synthetic_plan(base);
    const InversionConfig attack = synthetic_attack_config();
    Outcome o;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        TrainConfig cfg = base;
        cfg.seed = seed;
        const SyntheticSplit split = gen_synthetic(seed);
        InversionConfig acfg = attack;
        acfg.seed = seed;
        const auto v = run_synthetic(plan[0], split, cfg);
        const auto m = run_synthetic(plan[1], split, cfg);
        const auto av = attack_summary(v.result.net, split.test, acfg, 200);
        const auto am = attack_summary(m.result.net, split.test, acfg, 200);
        const bool ok = am.mse.mean - av.mse.mean >= 0.02 && av.mcs.mean - am.mcs.mean >= 0.02 &&
                        av.failures == 0 && am.failures == 0;
        detail("seed " + std::to_string(seed) + ": MSE vanilla " + fmt(av.mse.mean) + " mixcon " +
               fmt(am.mse.mean) + ", MCS vanilla " + fmt(av.mcs.mean) + " mixcon " + fmt(am.mcs.mean));
        o.pass = o.pass && ok;
        o.summary += (seed ? "; " : "") + std::string("seed ") + std::to_string(seed) + (ok ? " ok" : " fails");
    }
    return o;
}

Outcome criterion4() {
    const auto& v = final_record("vanilla");
    const auto& m = final_record("mixcon");
    const auto& deeper = final_record("deeper");
    const auto& wider = final_record("wider");
    bool collapsed = true;
    for (const char* name : {"mixcon_beta0", "deeper_beta0", "wider_beta0"}) {
        const auto& r = final_record(name);
        collapsed = collapsed && near_half(r.test_accuracy) && near_half(r.train_accuracy);
    }
    Outcome o;
    o.pass = deeper.test_accuracy >= m.test_accuracy && wider.test_accuracy >= m.test_accuracy &&
             v.test_accuracy - wider.test_accuracy <= 0.03 && collapsed;
    o.summary = "mixcon " + fmt(m.test_accuracy) + ", deeper " + fmt(deeper.test_accuracy) + ", wider " +
                fmt(wider.test_accuracy) + ", vanilla " + fmt(v.test_accuracy) + ", beta=0 variants at 0.5: " +
                (collapsed ? "yes" : "no");
    return o;
}

// ---- image-scale trade-off ------------------------------------------------

Outcome criterion5() {
    const auto t0 = Clock::now();
    const SyntheticSplit split = load_idx_dir(fs::path(MIXCON_SOURCE_DIR) / "data/mnist_subset");
    if (split.train.size() != 2000 || split.test.size() != 500) return {false, "MNIST subset has the wrong size"};

    TrainConfig mcfg = image_train_config();
    mcfg.seed = 1;
    mcfg.track_history = false;
    TrainConfig vcfg = mcfg;
    vcfg.consistency = ConsistencyKind::None;
    const NetworkSpec spec = lenet5();
    const auto vanilla = train(init_params(spec, init_options(vcfg)), split.train, split.test, vcfg);
    const auto mixcon = train(init_params(spec, init_options(mcfg)), split.train, split.test, mcfg);
    const double va = evaluate_accuracy(vanilla.net, split.test);
    const double ma = evaluate_accuracy(mixcon.net, split.test);

    // Each model faces its own best step size, picked on test samples that
    // are not among the 100 evaluated ones.
    InversionConfig attack = image_attack_config();
    attack.seed = 1;
    std::vector<std::size_t> held(20);
    std::iota(held.begin(), held.end(), std::size_t{400});
    const Dataset holdout = split.test.subset(held);
    const std::vector<double> rates{10.0, 3.0, 1.0, 0.3, 0.1};
    const auto cv = calibrate_attack(vanilla.net, holdout, attack, rates);
    const auto cm = calibrate_attack(mixcon.net, holdout, attack, rates);
    auto scores = [&](const Calibration& c) {
        std::string out;
        for (std::size_t i = 0; i < rates.size(); ++i) out += " " + fmt(rates[i], 2) + ":" + fmt(c.scores[i]);
        return out;
    };
    detail("holdout SSIM by lr, vanilla" + scores(cv));
    detail("holdout SSIM by lr, mixcon" + scores(cm));
    const auto sv = attack_summary(vanilla.net, split.test, cv.config, 100);
    const auto sm = attack_summary(mixcon.net, split.test, cm.config, 100);
    detail("attack lr vanilla " + fmt(cv.config.learning_rate, 2) + " mixcon " + fmt(cm.config.learning_rate, 2));
    const double secs = seconds_since(t0);
    detail("accuracy vanilla " + fmt(va) + " mixcon " + fmt(ma));
    detail("SSIM vanilla " + fmt(sv.ssim.mean) + " +- " + fmt(sv.ssim.std) + " (" + fmt(sv.ssim.worst) +
           "), mixcon " + fmt(sm.ssim.mean) + " +- " + fmt(sm.ssim.std) + " (" + fmt(sm.ssim.worst) + ")");
    detail("failed attacks " + std::to_string(sv.failures) + " / " + std::to_string(sm.failures) + ", time " +
           fmt(secs, 4) + " s");

    Outcome o;
    o.pass = va >= 0.90 && va - ma <= 0.04 && sm.ssim.mean <= sv.ssim.mean - 0.10 && secs < 1800.0;
    o.summary = "accuracy " + fmt(va) + " vs " + fmt(ma) + ", SSIM " + fmt(sv.ssim.mean) + " vs " +
                fmt(sm.ssim.mean) + ", " + fmt(secs, 4) + " s";
    return o;
}

// ---- gradient suite -------------------------------------------------------

struct GradTally {
    std::map<std::string, std::pair<int, double>> worst;  // name -> (instances, max error)

    void add(const std::string& name, double err) {
        auto& [n, e] = worst[name];
        ++n;
        e = std::max(e, std::isfinite(err) ? err : 1e300);
    }
};

Network one_layer(LayerSpec layer, Shape input, std::uint64_t seed) {
    NetworkSpec spec{std::move(input), {std::move(layer)}, 1};
    return init_params(spec, InitOptions{InitScheme::KaimingUniform, 0.0, 1.0, seed});
}

void layer_gradients(GradTally& tally, const std::string& name, const Network& net, const Tensor& x,
                     std::uint64_t seed) {
    const auto fwd = forward(net, x);
    const Tensor probe = random_tensor(fwd.output.shape(), seed + 7);
    const auto bw = backward(net, fwd.tape, probe);
    auto objective = [&](const Network& n, const Tensor& in) { return testing::inner(probe, forward(n, in).output); };
    double err = relative_error(bw.grad_x, numeric_grad([&](const Tensor& xp) { return objective(net, xp); }, x));
    for (std::size_t l = 0; l < net.params.size(); ++l) {
        for (int which = 0; which < 2; ++which) {
            const Tensor& p = which == 0 ? net.params[l].weight : net.params[l].bias;
            if (p.empty()) continue;
            const Tensor num = numeric_grad(
                [&](const Tensor& pp) {
                    Network copy = net;
                    (which == 0 ? copy.params[l].weight : copy.params[l].bias) = pp;
                    return objective(copy, x);
                },
                p);
            err = std::max(err, relative_error(which == 0 ? bw.param_grads[l].weight : bw.param_grads[l].bias, num));
        }
    }
    tally.add(name, err);
}

std::vector<std::size_t> mixed_labels(std::size_t n, std::size_t classes, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < classes ? i : std::size_t(rng.uniform01() * double(classes));
    return labels;
}

Outcome criterion6() {
    GradTally t;
    for (std::uint64_t s = 0; s < 20; ++s) {
        layer_gradients(t, "linear", one_layer(Linear{5, 3}, {5}, s), random_tensor({3, 5}, 100 + s), s);
        layer_gradients(t, "relu", one_layer(ReLU{}, {6}, s), random_tensor({3, 6}, 200 + s), s);
        layer_gradients(t, "conv2d", one_layer(Conv2d{2, 3, 3, 2}, {2, 5, 5}, s), random_tensor({2, 2, 5, 5}, 300 + s),
                        s);
        layer_gradients(t, "maxpool2d", one_layer(MaxPool2d{2, 2}, {2, 4, 5}, s),
                        random_tensor({2, 2, 4, 5}, 400 + s), s);
        layer_gradients(t, "flatten", one_layer(Flatten{}, {2, 2, 3}, s), random_tensor({2, 2, 2, 3}, 500 + s), s);
        layer_gradients(t, "softmax", one_layer(Softmax{}, {4}, s), random_tensor({3, 4}, 600 + s), s);

        const std::size_t n = 8, classes = 2 + s % 3;
        const auto labels = mixed_labels(n, classes, 700 + s);
        const Tensor scores = random_tensor({n, classes}, 800 + s);
        for (auto red : {Reduction::Sum, Reduction::Mean}) {
            const auto ce = cross_entropy(scores, labels, red);
            t.add("cross_entropy",
                  relative_error(ce.grad, numeric_grad([&](const Tensor& p) { return cross_entropy(p, labels, red).value; },
                                                       scores)));
        }
        const Tensor feats = random_tensor({n, 3}, 900 + s);
        const MixConParams mp{0.1, 0.01 * double(s % 3), 1e-6};
        t.add("mixcon", relative_error(mixcon_loss(feats, labels, mp).loss.grad,
                                       numeric_grad([&](const Tensor& f) { return mixcon_loss(f, labels, mp).loss.value; },
                                                    feats)));
        t.add("unicon", relative_error(unicon_loss(feats, labels).grad,
                                       numeric_grad([&](const Tensor& f) { return unicon_loss(f, labels).value; }, feats)));
        const Tensor img = random_tensor({1 + s % 2, 5, 6}, 1000 + s);
        t.add("tv", relative_error(tv(img).grad, numeric_grad([](const Tensor& x) { return tv(x).value; }, img)));
    }
    Outcome o;
    for (const auto& [name, v] : t.worst) {
        const bool ok = v.first >= 20 && v.second < 1e-4;
        detail(name + ": " + std::to_string(v.first) + " instances, max relative error " + fmt(v.second, 3));
        o.pass = o.pass && ok;
    }
    o.summary = std::to_string(t.worst.size()) + " layers and losses checked";
    return o;
}

// ---- hardness -------------------------------------------------------------

std::vector<CnfFormula> satisfiable_formulas(std::size_t count, std::size_t n_min, std::size_t n_max,
                                             std::uint64_t seed) {
    std::vector<CnfFormula> out;
    for (std::uint64_t s = seed; out.size() < count; ++s) {
        const std::size_t n = n_min + s % (n_max - n_min + 1);
        const std::size_t m = n + s % (3 * n);
        auto phi = random_3cnf(n, m, s);
        if (find_model(phi)) out.push_back(std::move(phi));
    }
    return out;
}

Outcome criterion7() {
    std::size_t complete = 0;
    double worst_inf = 0.0;
    for (const auto& phi : satisfiable_formulas(50, 3, 12, 1000)) {
        const std::size_t K = 100 * phi.B() * phi.B();
        const auto model = find_model(phi);
        const auto net = build_reduction(phi, K);
        const Tensor out = reduced_forward(net, assignment_to_input(*model));
        double inf = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) inf = std::max(inf, std::abs(out[i] - net.z[i]));
        worst_inf = std::max(worst_inf, inf);
        complete += inf <= 1e-9 && verify_completeness(phi, K, *model);
    }
    std::size_t exact = 0, checked = 0;
    for (std::uint64_t f = 0; f < 20; ++f) {
        const std::size_t n = 3 + f % 8;
        const auto phi = random_3cnf(n, 2 * n + f % 5, 5000 + f);
        const auto net = build_reduction(phi, 1 + f % 3);
        bool all = true;
        for (std::uint64_t bits = 0; bits < (1ULL << n); ++bits) {
            Assignment a(n);
            for (std::size_t i = 0; i < n; ++i) a[i] = (bits >> i) & 1;
            all = all && squared_error(net, assignment_to_input(a)) == double(unsat_count(phi, a));
            ++checked;
        }
        exact += all;
    }
    detail("completeness " + std::to_string(complete) + "/50, max |h - z|_inf " + fmt(worst_inf, 3));
    detail("binary identity exact on " + std::to_string(exact) + "/20 formulas (" + std::to_string(checked) +
           " inputs)");
    return {complete == 50 && exact == 20,
            std::to_string(complete) + "/50 complete, " + std::to_string(exact) + "/20 exact identities"};
}

Outcome criterion8() {
    Outcome o;
    std::size_t clean = 0;
    for (std::uint64_t f = 0; f < 10; ++f) {
        const std::size_t n = 4 + f % 5;
        const auto phi = random_3cnf(n, n + f % 4, 8000 + f);
        const std::size_t K = 100 * phi.B() * phi.B();
        const auto r = soundness_scan(phi, K, 10000, f);
        const double limit = double(n) / 100.0;
        const bool ok = r.samples == 10000 && r.violations == 0 && r.max_D <= limit;
        detail("n=" + std::to_string(n) + " B=" + std::to_string(phi.B()) + " K=" + std::to_string(K) + ": max D " +
               fmt(r.max_D, 3) + " <= " + fmt(limit, 3) + ", violations " + std::to_string(r.violations));
        clean += ok;
    }
    o.pass = clean == 10;
    o.summary = std::to_string(clean) + "/10 formulas without violations";
    return o;
}

Outcome criterion9() {
    std::size_t clean = 0;
    double worst = 0.0;
    for (std::uint64_t f = 0; f < 20; ++f) {
        const std::size_t n = 3 + f % 10;
        const auto phi = random_3cnf(n, n + f % 7, 9000 + f);
        const auto net = build_reduction(phi, 1 + f % 4);
        const auto r = lipschitz_check(net, 1000, f);
        worst = std::max(worst, r.max_ratio / r.U);
        clean += r.trials == 1000 && r.violations == 0 && r.max_ratio <= r.U + 1e-9;
    }
    detail("largest observed ratio / U " + fmt(worst, 4));
    return {clean == 20, std::to_string(clean) + "/20 networks within the bound"};
}

// ---- determinism and formats ---------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Runs the CLI twice with identical arguments into two directories and
// compares every file byte for byte.
bool cli_repeatable(const fs::path& root, const std::string& name, const std::string& args) {
    std::vector<fs::path> dirs{root / (name + "_a"), root / (name + "_b")};
    for (const auto& d : dirs) {
        const std::string cmd = std::string("\"") + MIXCON_CLI_PATH + "\" --out \"" + d.string() + "\" " + args +
                                " > \"" + d.string() + ".log\" 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            detail(name + ": command failed: " + cmd);
            return false;
        }
    }
    std::set<std::string> files;
    for (const auto& e : fs::directory_iterator(dirs[0])) files.insert(e.path().filename().string());
    std::set<std::string> other;
    for (const auto& e : fs::directory_iterator(dirs[1])) other.insert(e.path().filename().string());
    bool same = files == other && !files.empty();
    for (const auto& f : files) same = same && slurp(dirs[0] / f) == slurp(dirs[1] / f);
    detail(name + ": " + std::to_string(files.size()) + " files " + (same ? "identical" : "differ"));
    return same;
}

Outcome criterion10() {
    const fs::path src(MIXCON_SOURCE_DIR);
    const fs::path root = fs::temp_directory_path() / "mixcon_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string mnist = (src / "data/mnist_subset").string();
    const std::string dimacs = (src / "data/fixtures/sat_small.cnf").string();

    bool ok = true;
    ok = cli_repeatable(root, "synth", "--seed 3 synth --epochs 2 --attack-samples 20 --attack-iterations 50") && ok;
    ok = cli_repeatable(root, "sweep", "--seed 3 --threads 2 sweep --lambdas 0,0.1 --betas 0.01,0 --epochs 1") && ok;
    ok = cli_repeatable(root, "train",
                        "--seed 2 train --data \"" + mnist + "\" --train-limit 200 --epochs 1 --consistency mixcon") &&
         ok;
    ok = cli_repeatable(root, "invert",
                        "--seed 2 invert --data \"" + mnist + "\" --checkpoint \"" +
                            (root / "train_a/model.ckpt").string() + "\" --samples 3 --iterations 20") &&
         ok;
    ok = cli_repeatable(root, "reduce", "reduce --dimacs \"" + dimacs + "\" --samples 500 --trials 50 --restarts 2") &&
         ok;

    // Checkpoint: save -> load reproduces every parameter bit, and re-encoding
    // gives the same bytes.
    const Network net = init_params(lenet5(), InitOptions{InitScheme::KaimingUniform, 0.0, 1.0, 11});
    save_checkpoint(net, root / "net.ckpt");
    const Network back = load_checkpoint(root / "net.ckpt", lenet5());
    const bool ckpt = back.params == net.params && encode_checkpoint(back) == encode_checkpoint(net);
    detail(std::string("checkpoint round trip ") + (ckpt ? "bit-exact" : "differs"));

    // IDX: load -> save reproduces the original files.
    const fs::path img = src / "data/mnist_subset/t10k-images-idx3-ubyte";
    const fs::path lab = src / "data/mnist_subset/t10k-labels-idx1-ubyte";
    const Dataset ds = load_idx(img, lab);
    save_idx(ds, root / "img", root / "lab");
    const bool idx = slurp(img) == slurp(root / "img") && slurp(lab) == slurp(root / "lab");
    detail(std::string("IDX round trip ") + (idx ? "bit-exact" : "differs"));

    return {ok && ckpt && idx, std::string("CLI outputs ") + (ok ? "repeatable" : "not repeatable") +
                                   ", checkpoint " + (ckpt ? "exact" : "inexact") + ", IDX " +
                                   (idx ? "exact" : "inexact")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"synthetic utility", criterion1},
        {"collapse geometry", criterion2},
        {"inversion ordering", criterion3},
        {"deeper/wider recovery", criterion4},
        {"image-scale trade-off", criterion5},
        {"gradient suite", criterion6},
        {"hardness completeness", criterion7},
        {"soundness rounding bound", criterion8},
        {"Lipschitz property", criterion9},
        {"determinism and formats", criterion10},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = int(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
                  << "): " << o.summary << "\n"
                  << std::flush;
    }
    return failures == 0 ? 0 : 1;
}
