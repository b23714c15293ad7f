// Acceptance runner: one ctest entry per numbered criterion.
//   dcits_acceptance --criterion K [--seed S] [--jobs J]
// Prints every check of the criterion, then "criterion K: PASS|FAIL".

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dcits/config.hpp"
#include "dcits/datagen.hpp"
#include "dcits/experiment.hpp"
#include "dcits/interpret.hpp"
#include "dcits/model.hpp"
#include "dcits/reproduce.hpp"
#include "dcits/windowing.hpp"
#include "support.hpp"

using namespace dcits;

namespace {

struct Line {
    std::string name;
    bool passed;
    std::string detail;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

void print(const Line& l) {
    std::cout << (l.passed ? "PASS  " : "FAIL  ") << l.name << "  " << l.detail << '\n';
}

// ---- criterion 9: property suite ------------------------------------------

Tensor weighted(const Tensor& out, std::uint64_t seed) {
    return sum_all(hadamard(out, test::random_tensor(out.shape(), seed, false)));
}

Line gradient_property() {
    using test::random_tensor;
    struct Case {
        const char* op;
        test::LossFn f;
        std::vector<Tensor> leaves;
    };
    std::vector<Case> cases;
    cases.push_back({"conv_valid", [](const auto& p) { return weighted(conv_valid(p[0], p[1], p[2]), 1); },
                     {random_tensor({2, 2, 4, 5}, 1), random_tensor({2, 2, 3}, 2), random_tensor({1}, 3)}});
    cases.push_back({"linear", [](const auto& p) { return weighted(linear(p[0], p[1], p[2]), 2); },
                     {random_tensor({3, 4}, 4), random_tensor({2, 4}, 5), random_tensor({2}, 6)}});
    cases.push_back({"tanh", [](const auto& p) { return weighted(tanh_activate(p[0]), 3); }, {random_tensor({6}, 7)}});
    cases.push_back({"sigmoid_t", [](const auto& p) { return weighted(sigmoid_t(p[0], 0.6), 4); },
                     {random_tensor({6}, 8)}});
    cases.push_back({"diamond", [](const auto& p) { return weighted(diamond(p[0], p[1]), 5); },
                     {random_tensor({2, 3, 3, 4}, 9), random_tensor({2, 3, 4}, 10)}});
    cases.push_back({"hadamard/add/sub/scale",
                     [](const auto& p) { return weighted(scale(sub(add(hadamard(p[0], p[1]), p[0]), p[1]), 1.7), 6); },
                     {random_tensor({5}, 11), random_tensor({5}, 12)}});
    cases.push_back({"abs", [](const auto& p) { return weighted(abs_value(p[0]), 7); },
                     {Tensor::from({4}, {-0.8, 0.4, 1.1, -0.3}, true)}});
    cases.push_back({"square/pow", [](const auto& p) { return weighted(add(square(p[0]), pow_int(p[0], 3)), 8); },
                     {random_tensor({5}, 13)}});
    cases.push_back({"sum_over/mean", [](const auto& p) { return add(weighted(sum_over(p[0], {0, 2}), 9), mean_all(p[0])); },
                     {random_tensor({2, 3, 4}, 14)}});
    cases.push_back({"reshape/concat/expand",
                     [](const auto& p) {
                         return weighted(concat_flat({reshape(p[0], {2, 3}), expand_last(p[1], 2)}, 1), 10);
                     },
                     {random_tensor({6}, 15), random_tensor({2, 2, 1}, 16)}});
    ModelConfig mc;
    mc.series = 2;
    mc.window = 3;
    mc.orders = {0, 1, 2, 3};
    mc.hidden_width = 4;
    mc.hidden_layers = 2;
    mc.seed = 3;
    const DcitsModel model(mc);
    const Tensor q = random_tensor({2, 2, 3}, 17, false);
    cases.push_back({"full model", [&](const auto&) { return weighted(forward(model, q).prediction, 11); },
                     model.parameters()});

    double worst = 0.0;
    std::string where;
    for (Case& c : cases) {
        const auto r = test::check_gradients(c.f, c.leaves);
        if (r.worst >= worst) {
            worst = r.worst;
            where = std::string(c.op) + " " + r.where;
        }
    }
    return {"gradient vs finite difference", worst < 1e-5,
            "worst relative error " + sci(worst) + " (" + where + ") < 1e-5"};
}

Line decomposition_property() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        ModelConfig mc;
        mc.series = 3;
        mc.window = 5;
        mc.orders = {0, 1, 2, 3};
        mc.seed = seed;
        const DcitsModel model(mc);
        const Tensor q = test::random_tensor({4, 3, 5}, 100 + seed, false);
        const ForwardResult r = forward(model, q);
        const auto qv = q.values();
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t n = 0; n < 3; ++n) {
                double acc = 0.0;
                for (const OrderOutput& o : r.orders) {
                    const auto a = o.alpha.values();
                    if (o.order == 0) {
                        acc += a[(b * 3 + n) * 3 + n];
                        continue;
                    }
                    for (std::size_t i = 0; i < 3; ++i)
                        for (std::size_t j = 0; j < 5; ++j)
                            acc += a[((b * 3 + n) * 3 + i) * 5 + j] * std::pow(qv[(b * 3 + i) * 5 + j], o.order);
                }
                worst = std::max(worst, std::abs(acc - r.prediction.values()[b * 3 + n]));
            }
    }
    return {"forward equals triple-sum decomposition", worst <= 1e-10,
            "worst |difference| " + sci(worst) + " <= 1e-10"};
}

Line beta_property() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t n = 2 + seed % 5, l = 1 + seed % 9;
        const auto alpha = test::random_values(n * n * l, seed, -3.0, 3.0);
        const BetaMatrices b = beta_from_alpha(alpha, n, l);
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < n; ++c) s += b.beta[r * n + c];
            worst = std::max(worst, std::abs(s - 1.0));
        }
    }
    return {"beta row sums", worst <= 1e-9, "worst |row sum - 1| " + sci(worst) + " <= 1e-9"};
}

Line leakage_property() {
    std::size_t shared = 0;
    std::size_t splits = 0;
    for (DatasetKind kind : {DatasetKind::Dataset2, DatasetKind::Dataset8}) {
        GeneratorSpec spec = GeneratorSpec::defaults(kind);
        spec.length = 700;
        spec.seed = 5;
        const SeriesMatrix s = generate(spec);
        for (std::size_t l = 2; l <= 12; ++l) {
            const SplitSet sp = shuffle_train(split(build_windows(s, l), l), l);
            // Recount independently of the library checker.
            std::vector<int> owner(s.length, -1);
            int set_id = 0;
            for (const auto* set : {&sp.train, &sp.validation, &sp.test}) {
                for (const WindowSample& w : *set) {
                    for (std::size_t u = w.t + 1 - l; u <= w.t + 1; ++u) {
                        if (owner[u] != -1 && owner[u] != set_id) ++shared;
                        owner[u] = set_id;
                    }
                }
                ++set_id;
            }
            shared += count_shared_time_indices(sp);
            ++splits;
        }
    }
    return {"split leakage", shared == 0,
            std::to_string(shared) + " shared time indices over " + std::to_string(splits) + " splits (expected 0)"};
}

Line fidelity_property() {
    double worst = 0.0;
    GeneratorSpec spec = GeneratorSpec::defaults(DatasetKind::Dataset2);
    spec.noise = {0.0, 0.0};
    spec.length = 1000;
    spec.seed = 9;
    const SeriesMatrix d2 = generate(spec);
    for (std::size_t n = 0; n < d2.series; ++n)
        for (std::size_t t = 7; t < d2.length; ++t)
            worst = std::max(worst, std::abs(d2.at(n, t) - 0.5 * d2.at(n, t - 3) - 0.5 * d2.at(n, t - 7)));

    GeneratorSpec vs = GeneratorSpec::defaults(DatasetKind::Var2);
    vs.noise = {0.0, 0.0};
    vs.length = 200;
    vs.seed = 9;
    const SeriesMatrix v = generate(vs);
    for (std::size_t n = 0; n < 3; ++n)
        for (std::size_t t = 2; t < v.length; ++t) {
            double x = 0.0;
            for (std::size_t i = 0; i < 3; ++i) x += vs.var2.a1[n * 3 + i] * v.at(i, t - 1) + vs.var2.a2[n * 3 + i] * v.at(i, t - 2);
            worst = std::max(worst, std::abs(v.at(n, t) - x));
        }

    GeneratorSpec cs = GeneratorSpec::defaults(DatasetKind::Cubic);
    cs.noise = {0.0, 0.0};
    cs.length = 500;
    cs.seed = 9;
    const SeriesMatrix c = generate(cs);
    const double a = cs.cubic.a;
    for (std::size_t t = 5; t < c.length; ++t) {
        const double x = c.at(0, t - 3);
        worst = std::max(worst, std::abs(c.at(0, t) - ((1 - a) * x + a * x * x * x)));
        worst = std::max(worst, std::abs(c.at(2, t) - 0.5 * c.at(2, t - 3) - 0.5 * c.at(2, t - 5)));
    }
    return {"generator fidelity on noiseless data", worst <= 1e-12,
            "worst residual " + sci(worst) + " <= 1e-12"};
}

Line determinism_property() {
    const char* text =
        "seed=21\n"
        "generator.kind=dataset7\n"
        "generator.length=400\n"
        "window.length=5\n"
        "model.orders=0,1\n"
        "model.hidden_width=8\n"
        "model.hidden_layers=2\n"
        "train.max_epochs=4\n"
        "train.patience=2\n"
        "train.repeats=3\n";
    const ExperimentConfig cfg = normalize(parse_config(text));
    const ExperimentOutcome a = run_experiment(cfg, 1);
    const ExperimentOutcome b = run_experiment(cfg, 3);
    bool same = a.series.values == b.series.values && a.result.runs.size() == b.result.runs.size();
    for (std::size_t r = 0; same && r < a.result.runs.size(); ++r) {
        const RunResult& x = a.result.runs[r];
        const RunResult& y = b.result.runs[r];
        same = x.predictions == y.predictions && x.val_loss == y.val_loss && x.trace(1).alpha == y.trace(1).alpha;
    }
    for (std::size_t k = 0; same && k < a.result.stats.orders.size(); ++k) {
        same = a.result.stats.orders[k].mean == b.result.stats.orders[k].mean &&
               a.result.stats.orders[k].std == b.result.stats.orders[k].std;
    }
    const ExperimentConfig other = normalize(parse_config(text), 22);
    const bool seed_matters = generate(other.generator).values != a.series.values;
    return {"determinism under a fixed master seed", same && seed_matters,
            std::string("bit-identical rerun: ") + (same ? "yes" : "no") +
                ", different seed changes data: " + (seed_matters ? "yes" : "no")};
}

bool run_properties() {
    const std::vector<std::function<Line()>> props{gradient_property, decomposition_property, beta_property,
                                                   leakage_property,  fidelity_property,      determinism_property};
    bool ok = true;
    for (const auto& p : props) {
        Line l;
        try {
            l = p();
        } catch (const std::exception& e) {
            l = {"property", false, std::string("threw: ") + e.what()};
        }
        print(l);
        ok = ok && l.passed;
    }
    return ok;
}

// ---- criteria backed by reference suites ----------------------------------

bool run_reference(int criterion, std::uint64_t seed, std::size_t jobs) {
    const auto suites = suites_for_criterion(criterion);
    if (suites.empty()) {
        std::cout << "FAIL  no suite carries criterion " << criterion << '\n';
        return false;
    }
    bool ok = true;
    for (const std::string& suite : suites) {
        ReproduceOptions o;
        o.seed = seed;
        o.jobs = jobs;
        o.log = &std::cerr;
        const SuiteReport report = run_suite(suite, o);
        if (!report.error.empty()) {
            std::cout << "FAIL  [" << suite << "] " << report.error << '\n';
            ok = false;
        }
        std::size_t counted = 0;
        for (const Check& c : report.checks) {
            if (c.criterion != criterion) continue;
            ++counted;
            std::cout << (c.passed ? "PASS  " : "FAIL  ") << "[" << suite << "] " << c.name << "  expected "
                      << c.expected << "  tolerance " << c.tolerance << "  observed " << c.observed << '\n';
            ok = ok && c.passed;
        }
        if (counted == 0) {
            std::cout << "FAIL  [" << suite << "] produced no checks for criterion " << criterion << '\n';
            ok = false;
        }
        std::cout << "  (" << suite << ": " << report.seconds << " s)\n";
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DCIts acceptance criteria"};
    std::vector<int> criteria;
    std::uint64_t seed = 1;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--criterion", criteria, "Criterion number(s), 1..10; default all")->check(CLI::Range(1, 10));
    app.add_option("--seed", seed, "Master seed for the reference suites");
    app.add_option("--jobs", jobs, "Parallel training runs")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);
    if (criteria.empty()) {
        for (int k = 1; k <= 10; ++k) criteria.push_back(k);
    }

    std::vector<std::pair<int, bool>> results;
    for (int k : criteria) {
        std::cout << "== criterion " << k << '\n';
        bool ok = false;
        try {
            ok = k == 9 ? run_properties() : run_reference(k, seed, jobs);
        } catch (const std::exception& e) {
            std::cout << "FAIL  criterion " << k << " threw: " << e.what() << '\n';
        }
        std::cout << "criterion " << k << ": " << (ok ? "PASS" : "FAIL") << '\n' << std::flush;
        results.emplace_back(k, ok);
    }
    bool all = true;
    if (results.size() > 1) std::cout << "== summary\n";
    for (const auto& [k, ok] : results) {
        if (results.size() > 1) std::cout << "criterion " << k << ": " << (ok ? "PASS" : "FAIL") << '\n';
        all = all && ok;
    }
    return all ? 0 : 1;
}
