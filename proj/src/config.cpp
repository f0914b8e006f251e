#include "abcsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "abcsim/csv.hpp"
#include "abcsim/errors.hpp"
#include "json.hpp"

namespace abc {

using json = nlohmann::ordered_json;

const std::vector<std::string>& test_kinds() {
    static const std::vector<std::string> kinds{"field_mean",         "static_variance", "cross_covariance",
                                                "autocovariance",     "martingale_mean", "martingale_variance",
                                                "qv_mean",            "nonlinear_mean",  "integral_mean",
                                                "energy_mean"};
    return kinds;
}

namespace {

// Typed access to one JSON object; remembers which keys were read.
class Section {
  public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + ": expected an object");
    }

    std::string where(const std::string& key) const {
        if (path_.empty()) return key;
        return key.empty() ? path_ : path_ + "." + key;
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& v) {
        if (auto p = find(key)) {
            if (!p->is_number()) throw ConfigError(where(key) + ": expected a number");
            v = p->get<double>();
            if (!std::isfinite(v)) throw ConfigError(where(key) + ": must be finite");
        }
    }

    void integer(const std::string& key, int& v) {
        if (auto p = find(key)) {
            if (!p->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
            auto x = p->get<long long>();
            if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(where(key) + ": out of range");
            v = static_cast<int>(x);
        }
    }

    void count(const std::string& key, std::size_t& v) {
        if (auto p = find(key)) {
            if (!p->is_number_integer() || p->get<long long>() < 0)
                throw ConfigError(where(key) + ": expected a nonnegative integer");
            v = p->get<std::size_t>();
        }
    }

    void seed(const std::string& key, std::uint64_t& v) {
        if (auto p = find(key)) {
            if (p->is_number_unsigned())
                v = p->get<std::uint64_t>();
            else if (p->is_number_integer() && p->get<long long>() >= 0)
                v = static_cast<std::uint64_t>(p->get<long long>());
            else
                throw ConfigError(where(key) + ": expected an unsigned 64-bit integer");
        }
    }

    void string(const std::string& key, std::string& v) {
        if (auto p = find(key)) {
            if (!p->is_string()) throw ConfigError(where(key) + ": expected a string");
            v = p->get<std::string>();
        }
    }

    template <class T, class F>
    void array(const std::string& key, std::vector<T>& v, F item) {
        if (auto p = find(key)) {
            if (!p->is_array()) throw ConfigError(where(key) + ": expected an array");
            v.clear();
            for (std::size_t i = 0; i < p->size(); ++i) v.push_back(item((*p)[i], where(key) + "[" + std::to_string(i) + "]"));
        }
    }

    void triple(const std::string& key, std::array<double, 3>& v) {
        std::vector<double> tmp;
        array(key, tmp, [](const json& e, const std::string& w) {
            if (!e.is_number()) throw ConfigError(w + ": expected a number");
            return e.get<double>();
        });
        if (find(key)) {
            if (tmp.size() != 3) throw ConfigError(where(key) + ": expected 3 entries (A, B, C)");
            std::copy(tmp.begin(), tmp.end(), v.begin());
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Sign parse_sign(const std::string& s, const std::string& where) {
    if (s == "plus" || s == "+") return Sign::plus;
    if (s == "minus" || s == "-") return Sign::minus;
    throw ConfigError(where + ": expected \"plus\" or \"minus\"");
}

TestFunction make_test_function(const std::string& family, double center, double width, double k,
                                 const std::string& where) {
    if (!(width > 0)) throw ConfigError(where + ".width: must be positive");
    Family f;
    try {
        f = family_from_string(family);
    } catch (const std::exception&) {
        throw ConfigError(where + ".family: unknown family '" + family + "'");
    }
    switch (f) {
    case Family::gaussian: return TestFunction::gaussian(center, width);
    case Family::bump: return TestFunction::bump(center, width);
    case Family::modulated_gaussian: return TestFunction::modulated_gaussian(center, width, k);
    }
    throw ConfigError(where + ".family: unsupported");
}

std::string short_num(double x) {
    std::string s = format_double(x);
    for (auto& ch : s)
        if (ch == '.') ch = 'p';
    return s;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON (") + e.what() + ")");
    }
    RunConfig c;
    auto& plan = c.plan;
    Section top(root, "");
    top.seed("seed", plan.seed);
    top.integer("threads", plan.threads);
    top.string("out", c.out);

    double gamma = 1.0;
    plan.params.kn = {0.1, 0.0};
    plan.params.lattice_size = 2048;
    plan.lattice_factor = 32;
    if (auto m = top.find("model")) {
        Section s(*m, "model");
        s.number("gamma", gamma);
        s.number("asymmetry", c.asymmetry);
        s.triple("energies", plan.params.energies);
        s.triple("densities", plan.params.densities);
        s.number("d1", plan.params.d1);
        if (auto k = s.find("kn")) {
            Section ks(*k, "model.kn");
            ks.number("kappa0", plan.params.kn.kappa0);
            ks.number("beta", plan.params.kn.beta);
            ks.finish();
        }
        s.integer("lattice_size", plan.params.lattice_size);
        s.integer("lattice_factor", plan.lattice_factor);
        s.finish();
    }
    try {
        plan.params.set_kernel(gamma, c.asymmetry);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("model.") + e.what());
    }

    if (auto e = top.find("experiment")) {
        Section s(*e, "experiment");
        s.array("ns", plan.ns, [](const json& v, const std::string& w) {
            if (!v.is_number_integer()) throw ConfigError(w + ": expected an integer");
            return v.get<int>();
        });
        s.count("trajectories", plan.trajectories);
        s.number("horizon", plan.fields.horizon);
        s.number("dt", plan.fields.dt);
        s.array("block_eps", plan.fields.block_eps, [](const json& v, const std::string& w) {
            if (!v.is_number()) throw ConfigError(w + ": expected a number");
            return v.get<double>();
        });
        s.integer("block_refine", plan.fields.block_refine);
        if (auto tf = s.find("test_function")) {
            Section ts(*tf, "experiment.test_function");
            std::string family = "gaussian";
            double center = 0.0, width = 1.0, k = 0.0;
            ts.string("family", family);
            ts.number("center", center);
            ts.number("width", width);
            ts.number("wavenumber", k);
            ts.finish();
            plan.test_function = make_test_function(family, center, width, k, "experiment.test_function");
        }
        s.finish();
    }

    if (auto t = top.find("tests")) {
        if (!t->is_array()) throw ConfigError("tests: expected an array");
        for (std::size_t i = 0; i < t->size(); ++i) {
            const std::string w = "tests[" + std::to_string(i) + "]";
            Section s((*t)[i], w);
            TestSpec spec;
            std::string sign = "plus";
            s.string("kind", spec.kind);
            s.string("name", spec.name);
            s.string("sign", sign);
            s.integer("n", spec.n);
            s.number("t", spec.t);
            s.number("eps", spec.eps);
            s.number("reference_scale", spec.reference_scale);
            s.finish();
            spec.sign = parse_sign(sign, w + ".sign");
            c.tests.push_back(spec);
        }
    }
    top.finish();
    validate_config(c);
    return c;
}

void validate_config(const RunConfig& c) {
    const auto& plan = c.plan;
    if (plan.threads < 1) throw ConfigError("threads: must be at least 1");
    if (plan.lattice_factor < 0) throw ConfigError("model.lattice_factor: must be nonnegative");
    if (!(plan.fields.horizon > 0)) throw ConfigError("experiment.horizon: must be positive");
    if (!(plan.fields.dt >= 0)) throw ConfigError("experiment.dt: must be nonnegative (0 selects the default)");
    if (plan.fields.dt > plan.fields.horizon) throw ConfigError("experiment.dt: must not exceed the horizon");
    if (plan.fields.block_refine < 1) throw ConfigError("experiment.block_refine: must be at least 1");
    if (plan.ns.empty()) throw ConfigError("experiment.ns: at least one scale n is required");
    for (int n : plan.ns)
        if (n < 2) throw ConfigError("experiment.ns: every n must be at least 2");
    for (int i = 0; i < 3; ++i)
        if (std::abs(plan.params.densities[i] - 1.0 / 3) > 1e-12)
            throw ConfigError("model.densities: the drift decomposition of the normal fields requires rho = (1/3, 1/3, 1/3)");
    try {
        check_plan(plan);
        for (int n : plan.ns) {
            const int L = plan.params_for(n).lattice_size;
            for (double e : plan.fields.block_eps) {
                if (!(e > 0 && e < 0.5)) throw ConfigError("experiment.block_eps: each eps must lie in (0, 1/2)");
                const int l = block_length(e, n);
                if (4 * l > L) throw ConfigError("experiment.block_eps: block length exceeds L/4");
            }
        }
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        if (msg.rfind("eps:", 0) == 0) throw ConfigError("experiment.block_" + msg);
        if (msg.rfind("wrap", 0) == 0 || msg.rfind("test function", 0) == 0) throw ConfigError("experiment: " + msg);
        throw ConfigError("model." + msg);
    }
    const auto& kinds = test_kinds();
    for (std::size_t i = 0; i < c.tests.size(); ++i) {
        const auto& t = c.tests[i];
        const std::string w = "tests[" + std::to_string(i) + "]";
        if (std::find(kinds.begin(), kinds.end(), t.kind) == kinds.end())
            throw ConfigError(w + ".kind: unknown test kind '" + t.kind + "'");
        if (t.n != 0 && std::find(plan.ns.begin(), plan.ns.end(), t.n) == plan.ns.end())
            throw ConfigError(w + ".n: not one of experiment.ns");
        if (t.t > plan.fields.horizon) throw ConfigError(w + ".t: beyond the horizon");
        if (t.kind == "energy_mean") {
            const auto& be = plan.fields.block_eps;
            if (std::find(be.begin(), be.end(), t.eps) == be.end())
                throw ConfigError(w + ".eps: not one of experiment.block_eps");
        }
    }
}

std::string config_to_json(const RunConfig& c, bool include_run_options) {
    const auto& plan = c.plan;
    const auto& p = plan.params;
    json root;
    root["seed"] = plan.seed;
    if (include_run_options) {
        root["threads"] = plan.threads;
        root["out"] = c.out;
    }
    json model;
    model["gamma"] = p.gamma;
    model["asymmetry"] = c.asymmetry;
    model["energies"] = p.energies;
    model["densities"] = p.densities;
    model["d1"] = p.d1;
    model["kn"] = {{"kappa0", p.kn.kappa0}, {"beta", p.kn.beta}};
    model["lattice_size"] = p.lattice_size;
    model["lattice_factor"] = plan.lattice_factor;
    root["model"] = model;
    json exp;
    exp["ns"] = plan.ns;
    exp["trajectories"] = plan.trajectories;
    exp["horizon"] = plan.fields.horizon;
    exp["dt"] = plan.fields.dt;
    exp["block_eps"] = plan.fields.block_eps;
    exp["block_refine"] = plan.fields.block_refine;
    const auto& H = plan.test_function;
    exp["test_function"] = {{"family", to_string(H.family())},
                            {"center", H.center()},
                            {"width", H.width()},
                            {"wavenumber", H.wavenumber()}};
    root["experiment"] = exp;
    if (include_run_options) {
        json tests = json::array();
        for (const auto& t : c.tests) {
            json e;
            e["kind"] = t.kind;
            if (!t.name.empty()) e["name"] = t.name;
            e["sign"] = to_string(t.sign);
            e["n"] = t.n;
            e["t"] = t.t;
            e["eps"] = t.eps;
            e["reference_scale"] = t.reference_scale;
            tests.push_back(e);
        }
        root["tests"] = tests;
    }
    return root.dump(2);
}

TestSpec resolve_test(const TestSpec& spec, const RunConfig& c) {
    TestSpec t = spec;
    if (t.n == 0) t.n = *std::max_element(c.plan.ns.begin(), c.plan.ns.end());
    if (t.t < 0) t.t = c.plan.fields.horizon;
    if (t.name.empty()) {
        t.name = t.kind + "_" + to_string(t.sign) + "_n" + std::to_string(t.n) + "_t" + short_num(t.t);
        if (t.kind == "energy_mean") t.name += "_eps" + short_num(t.eps);
        if (t.reference_scale != 1.0) t.name += "_x" + short_num(t.reference_scale);
    }
    return t;
}

std::vector<TestSpec> default_battery(const RunConfig& c) {
    std::vector<TestSpec> out;
    for (Sign s : {Sign::plus, Sign::minus}) {
        for (const char* k : {"field_mean", "static_variance", "martingale_mean", "martingale_variance", "qv_mean",
                              "nonlinear_mean", "integral_mean"}) {
            TestSpec t;
            t.kind = k;
            t.sign = s;
            if (t.kind == "static_variance") t.t = 0.0;
            out.push_back(t);
        }
        TestSpec a;
        a.kind = "autocovariance";
        a.sign = s;
        out.push_back(a);
        for (double e : c.plan.fields.block_eps) {
            TestSpec b;
            b.kind = "energy_mean";
            b.sign = s;
            b.eps = e;
            out.push_back(b);
        }
    }
    TestSpec x;
    x.kind = "cross_covariance";
    x.t = 0.0;
    out.push_back(x);
    for (auto& t : out) t = resolve_test(t, c);
    return out;
}

} // namespace abc
