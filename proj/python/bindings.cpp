#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mixcon/checkpoint.hpp"
#include "mixcon/data.hpp"
#include "mixcon/error.hpp"
#include "mixcon/experiments.hpp"
#include "mixcon/hardness.hpp"
#include "mixcon/invert.hpp"
#include "mixcon/losses.hpp"
#include "mixcon/metrics.hpp"
#include "mixcon/network.hpp"
#include "mixcon/sweep.hpp"
#include "mixcon/train.hpp"

namespace py = pybind11;
using namespace mixcon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.data().begin(), t.data().end(), a.mutable_data());
    return a;
}

std::vector<std::size_t> to_labels(const LabelArray& a) {
    std::vector<std::size_t> out(a.size());
    for (py::ssize_t i = 0; i < a.size(); ++i) {
        if (a.data()[i] < 0) throw ContractError("labels must be non-negative");
        out[i] = std::size_t(a.data()[i]);
    }
    return out;
}

LabelArray labels_array(const std::vector<std::size_t>& labels) {
    LabelArray a(py::ssize_t(labels.size()));
    for (std::size_t i = 0; i < labels.size(); ++i) a.mutable_data()[i] = std::int64_t(labels[i]);
    return a;
}

Dataset make_dataset(const Array& x, const LabelArray& y, std::size_t num_classes) {
    Dataset ds{to_tensor(x), to_labels(y), num_classes};
    if (ds.num_classes == 0) {
        for (auto l : ds.labels) ds.num_classes = std::max(ds.num_classes, l + 1);
    }
    validate(ds);
    return ds;
}

py::dict dataset_dict(const Dataset& ds) {
    py::dict d;
    d["x"] = to_array(ds.inputs);
    d["y"] = labels_array(ds.labels);
    d["num_classes"] = ds.num_classes;
    return d;
}

py::tuple loss_tuple(const LossValue& v) { return py::make_tuple(v.value, to_array(v.grad)); }

NetworkSpec spec_by_name(const std::string& name, std::size_t channels, std::size_t classes) {
    if (name == "mlp") return synthetic_mlp();
    if (name == "mlp-deeper") return make_variant(synthetic_mlp(), VariantKind::Deeper);
    if (name == "mlp-wider") return make_variant(synthetic_mlp(), VariantKind::Wider);
    if (name == "lenet5") return lenet5(channels, classes);
    throw ConfigError("unknown architecture '" + name + "'");
}

py::dict record_dict(const EpochRecord& e) {
    py::dict d;
    d["epoch"] = e.epoch;
    d["class_loss"] = e.class_loss;
    d["consistency_loss"] = e.consistency_loss;
    d["train_acc"] = e.train_accuracy;
    d["test_acc"] = e.test_accuracy;
    d["mean_pair_dist"] = e.mean_pair_distance;
    d["delta_h"] = e.delta_h;
    d["max_pair_dist"] = e.max_pair_distance;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "MixCon training, inversion attacks and hardness checks";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<AttackError>(m, "AttackError", PyExc_RuntimeError);

    // data
    m.def(
        "gen_synthetic",
        [](std::uint64_t seed, std::size_t n_train, std::size_t n_test) {
            const auto s = gen_synthetic(seed, n_train, n_test);
            return py::make_tuple(dataset_dict(s.train), dataset_dict(s.test));
        },
        py::arg("seed"), py::arg("n_train") = 800, py::arg("n_test") = 200);
    m.def(
        "load_idx",
        [](const std::string& images, const std::string& labels) { return dataset_dict(load_idx(images, labels)); },
        py::arg("images"), py::arg("labels"));
    m.def(
        "save_idx",
        [](const Array& x, const LabelArray& y, const std::string& images, const std::string& labels) {
            save_idx(make_dataset(x, y, 0), images, labels);
        },
        py::arg("x"), py::arg("y"), py::arg("images"), py::arg("labels"));
    m.def(
        "flip_labels",
        [](const LabelArray& y, std::size_t num_classes, double fraction, std::uint64_t seed) {
            Dataset ds{Tensor({std::size_t(y.size()), 1}), to_labels(y), num_classes};
            return labels_array(flip_labels(ds, fraction, seed).labels);
        },
        py::arg("y"), py::arg("num_classes"), py::arg("fraction"), py::arg("seed"));

    // losses
    m.def(
        "cross_entropy",
        [](const Array& scores, const LabelArray& y, const std::string& reduction) {
            const auto labels = to_labels(y);
            return loss_tuple(cross_entropy(to_tensor(scores), labels,
                                            reduction == "mean" ? Reduction::Mean : Reduction::Sum));
        },
        py::arg("scores"), py::arg("labels"), py::arg("reduction") = "sum");
    m.def(
        "mixcon_loss",
        [](const Array& features, const LabelArray& y, double lam, double beta, double eps) {
            const auto labels = to_labels(y);
            return loss_tuple(mixcon_loss(to_tensor(features), labels, MixConParams{lam, beta, eps}).loss);
        },
        py::arg("features"), py::arg("labels"), py::arg("lam") = 0.1, py::arg("beta") = 0.01, py::arg("eps") = 1e-4);
    m.def(
        "unicon_loss",
        [](const Array& features, const LabelArray& y) {
            const auto labels = to_labels(y);
            return loss_tuple(unicon_loss(to_tensor(features), labels));
        },
        py::arg("features"), py::arg("labels"));
    m.def("tv", [](const Array& image) { return loss_tuple(tv(to_tensor(image))); }, py::arg("image"));

    // metrics
    m.def("mse", [](const Array& a, const Array& b) { return mse(to_tensor(a), to_tensor(b)); });
    m.def("mcs", [](const Array& a, const Array& b) { return mcs(to_tensor(a), to_tensor(b)); });
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_tensor(a), to_tensor(b)); });
    m.def(
        "separability",
        [](const Array& features) {
            const auto s = separability(to_tensor(features));
            py::dict d;
            d["delta_h"] = s.delta_h;
            d["mean_pair"] = s.mean_pair;
            d["max_pair"] = s.max_pair;
            return d;
        },
        py::arg("features"));

    // networks and training
    py::class_<Network>(m, "Network")
        .def_property_readonly("cut_index", [](const Network& n) { return n.spec.cut_index; })
        .def_property_readonly("num_layers", [](const Network& n) { return n.spec.layers.size(); })
        .def("forward", [](const Network& n, const Array& x) { return to_array(forward(n, to_tensor(x)).output); })
        .def("hidden", [](const Network& n, const Array& x) { return to_array(hidden(n, to_tensor(x))); })
        .def("accuracy",
             [](const Network& n, const Array& x, const LabelArray& y) {
                 return evaluate_accuracy(n, make_dataset(x, y, 0));
             })
        .def("save", [](const Network& n, const std::string& path) { save_checkpoint(n, path); });

    m.def(
        "init_network",
        [](const std::string& arch, std::uint64_t seed, const std::string& init, double alpha, double stddev,
           std::size_t channels, std::size_t classes) {
            const InitScheme scheme = init == "kaiming" ? InitScheme::KaimingUniform : InitScheme::ShiftedNormal;
            return init_params(spec_by_name(arch, channels, classes), InitOptions{scheme, alpha, stddev, seed});
        },
        py::arg("arch") = "mlp", py::arg("seed") = 0, py::arg("init") = "normal", py::arg("alpha") = 0.1,
        py::arg("stddev") = 1.0, py::arg("channels") = 1, py::arg("classes") = 10);
    m.def(
        "load_network",
        [](const std::string& path, const std::string& arch, std::size_t channels, std::size_t classes) {
            return load_checkpoint(path, spec_by_name(arch, channels, classes));
        },
        py::arg("path"), py::arg("arch") = "mlp", py::arg("channels") = 1, py::arg("classes") = 10);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("label_flip_fraction", &TrainConfig::label_flip_fraction)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("init_alpha", &TrainConfig::init_alpha)
        .def_readwrite("init_stddev", &TrainConfig::init_stddev)
        .def_readwrite("normalize_features", &TrainConfig::normalize_features)
        .def_property(
            "consistency", [](const TrainConfig& c) { return consistency_name(c.consistency); },
            [](TrainConfig& c, const std::string& s) { c.consistency = parse_consistency_kind(s); })
        .def_property(
            "ce_reduction", [](const TrainConfig& c) { return c.ce_reduction == Reduction::Sum ? "sum" : "mean"; },
            [](TrainConfig& c, const std::string& s) {
                c.ce_reduction = s == "mean" ? Reduction::Mean : Reduction::Sum;
            })
        .def_property(
            "lam", [](const TrainConfig& c) { return c.mixcon.lambda; },
            [](TrainConfig& c, double v) { c.mixcon.lambda = v; })
        .def_property(
            "beta", [](const TrainConfig& c) { return c.mixcon.beta; },
            [](TrainConfig& c, double v) { c.mixcon.beta = v; })
        .def_property(
            "eps", [](const TrainConfig& c) { return c.mixcon.eps; }, [](TrainConfig& c, double v) { c.mixcon.eps = v; });
    m.def("synthetic_train_config", &synthetic_train_config);
    m.def("image_train_config", &image_train_config);

    m.def(
        "train",
        [](const Network& net, const Array& x, const LabelArray& y, const Array& test_x, const LabelArray& test_y,
           const TrainConfig& cfg) {
            const Dataset tr = make_dataset(x, y, 0);
            const Dataset te = make_dataset(test_x, test_y, tr.num_classes);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(net, tr, te, cfg);
            }
            py::list history;
            for (const auto& e : r.history.epochs) history.append(record_dict(e));
            return py::make_tuple(std::move(r.net), history);
        },
        py::arg("net"), py::arg("x"), py::arg("y"), py::arg("test_x"), py::arg("test_y"), py::arg("config"));

    // inversion
    py::class_<InversionConfig>(m, "InversionConfig")
        .def(py::init<>())
        .def_readwrite("tv_weight", &InversionConfig::tv_weight)
        .def_readwrite("weight_decay", &InversionConfig::weight_decay)
        .def_readwrite("learning_rate", &InversionConfig::learning_rate)
        .def_readwrite("iterations", &InversionConfig::iterations)
        .def_readwrite("init_value", &InversionConfig::init_value)
        .def_readwrite("clamp", &InversionConfig::clamp)
        .def_readwrite("seed", &InversionConfig::seed)
        .def_property(
            "loss", [](const InversionConfig& c) { return inversion_loss_name(c.loss); },
            [](InversionConfig& c, const std::string& s) { c.loss = parse_inversion_loss(s); })
        .def_property(
            "init", [](const InversionConfig& c) { return inversion_init_name(c.init); },
            [](InversionConfig& c, const std::string& s) { c.init = parse_inversion_init(s); });
    m.def("synthetic_attack_config", &synthetic_attack_config);
    m.def("image_attack_config", &image_attack_config);
    m.def(
        "invert",
        [](const Network& net, const Array& z, const InversionConfig& cfg) {
            const InversionResult r = invert(net, to_tensor(z), cfg);
            return py::make_tuple(to_array(r.recovered), r.final_objective, r.trajectory);
        },
        py::arg("net"), py::arg("z"), py::arg("config"));

    // hardness
    py::class_<CnfFormula>(m, "CnfFormula")
        .def_readonly("n", &CnfFormula::n)
        .def_readonly("clauses", &CnfFormula::clauses)
        .def_property_readonly("m", &CnfFormula::m)
        .def_property_readonly("B", &CnfFormula::B)
        .def("to_dimacs", [](const CnfFormula& f) { return to_dimacs(f); });
    m.def("parse_dimacs", &parse_dimacs, py::arg("text"));
    m.def("random_3cnf", &random_3cnf, py::arg("n"), py::arg("m"), py::arg("seed"));
    m.def("find_model", &find_model, py::arg("phi"));
    m.def("unsat_count", &unsat_count, py::arg("phi"), py::arg("assignment"));
    m.def(
        "reduced_forward",
        [](const CnfFormula& phi, std::size_t K, const Array& x) {
            const auto net = build_reduction(phi, K);
            return py::make_tuple(to_array(reduced_forward(net, to_tensor(x))), to_array(net.z));
        },
        py::arg("phi"), py::arg("K"), py::arg("x"));
    m.def(
        "verify_reduction",
        [](const CnfFormula& phi, std::size_t K, std::size_t samples, std::size_t trials, std::uint64_t seed) {
            return hardness_json(verify_reduction(phi, K, samples, trials, seed));
        },
        py::arg("phi"), py::arg("K") = 0, py::arg("samples") = 10000, py::arg("trials") = 1000, py::arg("seed") = 0);
}
