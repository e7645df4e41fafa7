#include "agd/config.hpp"

#include <fstream>
#include <set>

#include "agd/io.hpp"
#include "agd/testfns.hpp"

namespace agd::config {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where.empty() ? "config" : where, "expected an object");
}

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!keys.contains(it.key())) throw ConfigError(join(where, it.key()), "unknown field");
}

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const char* key, const std::string& where, std::optional<double> fallback = {}) {
    const json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(join(where, key), "missing required field");
    }
    if (!v->is_number()) throw ConfigError(join(where, key), "expected a number");
    return v->get<double>();
}

std::uint64_t get_uint(const json& j, const char* key, const std::string& where,
                       std::optional<std::uint64_t> fallback = {}) {
    const json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(join(where, key), "missing required field");
    }
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v->get<std::int64_t>());
    if (v->is_number_float()) {
        const double d = v->get<double>();
        if (d >= 0.0 && d == static_cast<double>(static_cast<std::uint64_t>(d)))
            return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(join(where, key), "expected a non-negative integer");
}

std::optional<std::uint64_t> get_opt_uint(const json& j, const char* key, const std::string& where) {
    if (!find(j, key)) return std::nullopt;
    return get_uint(j, key, where);
}

std::string get_string(const json& j, const char* key, const std::string& where,
                       std::optional<std::string> fallback = {}) {
    const json* v = find(j, key);
    if (!v) {
        if (fallback) return *fallback;
        throw ConfigError(join(where, key), "missing required field");
    }
    if (!v->is_string()) throw ConfigError(join(where, key), "expected a string");
    return v->get<std::string>();
}

bool get_bool(const json& j, const char* key, const std::string& where, bool fallback) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(join(where, key), "expected a boolean");
    return v->get<bool>();
}

LrScheduleKind parse_lr_schedule(const std::string& s, const std::string& field) {
    if (s == "constant") return LrScheduleKind::Constant;
    if (s == "inverse_sqrt") return LrScheduleKind::InverseSqrt;
    if (s == "milestones") return LrScheduleKind::Milestones;
    throw ConfigError(field, "unknown schedule '" + s + "'");
}

std::string lr_schedule_name(LrScheduleKind k) {
    switch (k) {
    case LrScheduleKind::Constant: return "constant";
    case LrScheduleKind::InverseSqrt: return "inverse_sqrt";
    case LrScheduleKind::Milestones: return "milestones";
    }
    return "constant";
}

Beta1ScheduleKind parse_beta1_schedule(const std::string& s, const std::string& field) {
    if (s == "constant") return Beta1ScheduleKind::Constant;
    if (s == "over_sqrt_t") return Beta1ScheduleKind::OverSqrtT;
    if (s == "over_t") return Beta1ScheduleKind::OverT;
    throw ConfigError(field, "unknown beta1 schedule '" + s + "'");
}

std::string beta1_schedule_name(Beta1ScheduleKind k) {
    switch (k) {
    case Beta1ScheduleKind::Constant: return "constant";
    case Beta1ScheduleKind::OverSqrtT: return "over_sqrt_t";
    case Beta1ScheduleKind::OverT: return "over_t";
    }
    return "constant";
}

ProblemConfig parse_problem(const json& j) {
    const std::string where = "problem";
    require_object(j, where);
    ProblemConfig p;
    const std::string kind = get_string(j, "kind", where);
    if (kind == "testfn") {
        p.kind = ProblemKind::TestFn;
        reject_unknown(j, where, {"kind", "name", "start"});
        p.name = get_string(j, "name", where);
        testfns::by_name(p.name);
        if (const json* s = find(j, "start")) {
            if (!s->is_array()) throw ConfigError("problem.start", "expected an array of numbers");
            ParamVector start;
            for (const auto& x : *s) {
                if (!x.is_number()) throw ConfigError("problem.start", "expected an array of numbers");
                start.push_back(x.get<double>());
            }
            p.start = std::move(start);
        }
    } else if (kind == "mlp") {
        p.kind = ProblemKind::Mlp;
        reject_unknown(j, where, {"kind", "in_dim", "hidden_dim", "out_dim", "activation", "loss",
                                  "dataset", "batch_size"});
        p.mlp.in_dim = get_uint(j, "in_dim", where, 2);
        p.mlp.hidden_dim = get_uint(j, "hidden_dim", where, 16);
        p.mlp.out_dim = get_uint(j, "out_dim", where, 2);
        try {
            p.mlp.activation = models::parse_activation(get_string(j, "activation", where, "tanh"));
            p.mlp.loss = models::parse_loss(get_string(j, "loss", where, "softmax_ce"));
        } catch (const ConfigError& e) {
            throw ConfigError("problem." + e.field(), e.what());
        }
        p.batch_size = get_uint(j, "batch_size", where, 32);
        if (const json* d = find(j, "dataset")) {
            const std::string dw = "problem.dataset";
            require_object(*d, dw);
            reject_unknown(*d, dw, {"generator", "n", "noise"});
            p.dataset.generator = get_string(*d, "generator", dw, "two_moons");
            p.dataset.n = get_uint(*d, "n", dw, 1000);
            p.dataset.noise = get_double(*d, "noise", dw, 0.1);
        }
    } else if (kind == "regret") {
        p.kind = ProblemKind::Regret;
        reject_unknown(j, where, {"kind", "dim", "horizon"});
        p.dim = get_uint(j, "dim", where, 2);
        p.horizon = get_uint(j, "horizon", where, 10000);
    } else {
        throw ConfigError("problem.kind", "expected one of testfn, mlp, regret");
    }
    return p;
}

ordered_json problem_to_json(const ProblemConfig& p) {
    ordered_json j;
    j["kind"] = to_string(p.kind);
    switch (p.kind) {
    case ProblemKind::TestFn:
        j["name"] = p.name;
        if (p.start) j["start"] = *p.start;
        break;
    case ProblemKind::Mlp:
        j["in_dim"] = p.mlp.in_dim;
        j["hidden_dim"] = p.mlp.hidden_dim;
        j["out_dim"] = p.mlp.out_dim;
        j["activation"] = models::to_string(p.mlp.activation);
        j["loss"] = models::to_string(p.mlp.loss);
        j["dataset"] = {{"generator", p.dataset.generator}, {"n", p.dataset.n}, {"noise", p.dataset.noise}};
        j["batch_size"] = p.batch_size;
        break;
    case ProblemKind::Regret:
        j["dim"] = p.dim;
        j["horizon"] = p.horizon;
        break;
    }
    return j;
}

}  // namespace

std::string to_string(ProblemKind k) {
    switch (k) {
    case ProblemKind::TestFn: return "testfn";
    case ProblemKind::Mlp: return "mlp";
    case ProblemKind::Regret: return "regret";
    }
    return "testfn";
}

HyperParams parse_optimizer(const json& j, OptimizerKind& kind, const std::string& where) {
    require_object(j, where);
    reject_unknown(j, where, {"name", "alpha", "beta1", "beta2", "delta", "weight_decay", "lr_schedule",
                              "milestones", "beta1_schedule", "adabelief_eps_in_ema"});
    kind = agd::parse_optimizer(get_string(j, "name", where));
    HyperParams hp;
    hp.alpha = get_double(j, "alpha", where, hp.alpha);
    hp.beta1 = get_double(j, "beta1", where, hp.beta1);
    hp.beta2 = get_double(j, "beta2", where, hp.beta2);
    hp.delta = get_double(j, "delta", where, hp.delta);
    hp.weight_decay = get_double(j, "weight_decay", where, hp.weight_decay);
    hp.lr_schedule = parse_lr_schedule(get_string(j, "lr_schedule", where, "constant"),
                                       join(where, "lr_schedule"));
    hp.beta1_schedule = parse_beta1_schedule(get_string(j, "beta1_schedule", where, "constant"),
                                             join(where, "beta1_schedule"));
    hp.adabelief_eps_in_ema = get_bool(j, "adabelief_eps_in_ema", where, true);
    if (const json* ms = find(j, "milestones")) {
        const std::string mw = join(where, "milestones");
        if (!ms->is_array()) throw ConfigError(mw, "expected an array");
        for (const auto& m : *ms) {
            require_object(m, mw);
            reject_unknown(m, mw, {"step", "factor"});
            hp.milestones.push_back({get_uint(m, "step", mw), get_double(m, "factor", mw)});
        }
    }
    try {
        agd::validate(hp);
    } catch (const ConfigError& e) {
        throw ConfigError(join(where, e.field()), e.what());
    }
    return hp;
}

ordered_json optimizer_to_json(OptimizerKind kind, const HyperParams& hp) {
    ordered_json j;
    j["name"] = std::string(optimizer_name(kind));
    j["alpha"] = hp.alpha;
    j["beta1"] = hp.beta1;
    j["beta2"] = hp.beta2;
    j["delta"] = hp.delta;
    j["weight_decay"] = hp.weight_decay;
    j["lr_schedule"] = lr_schedule_name(hp.lr_schedule);
    j["milestones"] = ordered_json::array();
    for (const auto& m : hp.milestones) j["milestones"].push_back({{"step", m.step}, {"factor", m.factor}});
    j["beta1_schedule"] = beta1_schedule_name(hp.beta1_schedule);
    j["adabelief_eps_in_ema"] = hp.adabelief_eps_in_ema;
    return j;
}

ExperimentConfig parse_config(const json& j) {
    require_object(j, "");
    reject_unknown(j, "", {"problem", "optimizer", "steps", "epochs", "seed", "output", "snapshot_every", "tol"});
    ExperimentConfig c;
    const json* p = find(j, "problem");
    if (!p) throw ConfigError("problem", "missing required field");
    c.problem = parse_problem(*p);
    const json* o = find(j, "optimizer");
    if (!o) throw ConfigError("optimizer", "missing required field");
    c.hp = parse_optimizer(*o, c.optimizer, "optimizer");
    c.steps = get_opt_uint(j, "steps", "");
    c.epochs = get_opt_uint(j, "epochs", "");
    c.seed = get_uint(j, "seed", "", 0);
    c.output = get_string(j, "output", "", "out");
    c.snapshot_every = get_opt_uint(j, "snapshot_every", "");
    if (find(j, "tol")) c.tol = get_double(j, "tol", "");
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigError("config", e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

ordered_json to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["problem"] = problem_to_json(c.problem);
    j["optimizer"] = optimizer_to_json(c.optimizer, c.hp);
    if (c.steps) j["steps"] = *c.steps;
    if (c.epochs) j["epochs"] = *c.epochs;
    j["seed"] = c.seed;
    j["output"] = c.output;
    if (c.snapshot_every) j["snapshot_every"] = *c.snapshot_every;
    if (c.tol) j["tol"] = *c.tol;
    return j;
}

void validate(const ExperimentConfig& c) {
    try {
        agd::validate(c.hp);
    } catch (const ConfigError& e) {
        throw ConfigError("optimizer." + e.field(), e.what());
    }
    if (c.steps && c.epochs) throw ConfigError("epochs", "give either steps or epochs, not both");
    if (c.steps && *c.steps == 0) throw ConfigError("steps", "must be >= 1");
    if (c.snapshot_every && *c.snapshot_every == 0) throw ConfigError("snapshot_every", "must be >= 1");
    if (c.tol && !(*c.tol > 0.0)) throw ConfigError("tol", "must be positive");
    switch (c.problem.kind) {
    case ProblemKind::TestFn: {
        const auto fn = testfns::by_name(c.problem.name);
        if (c.problem.start && c.problem.start->size() != fn.dim)
            throw ConfigError("problem.start", "dimension does not match the function");
        if (c.epochs) throw ConfigError("epochs", "only valid for mlp problems");
        if (!c.steps) throw ConfigError("steps", "missing required field");
        break;
    }
    case ProblemKind::Mlp: {
        const auto& m = c.problem.mlp;
        if (m.in_dim == 0 || m.hidden_dim == 0 || m.out_dim == 0)
            throw ConfigError("problem.hidden_dim", "layer sizes must be positive");
        if (c.problem.dataset.generator != "two_moons")
            throw ConfigError("problem.dataset.generator", "only two_moons is available");
        if (m.in_dim != 2) throw ConfigError("problem.in_dim", "two_moons inputs are 2-dimensional");
        if (m.loss == models::Loss::Logistic && m.out_dim != 1)
            throw ConfigError("problem.out_dim", "logistic loss needs out_dim 1");
        if (m.loss == models::Loss::SoftmaxCrossEntropy && m.out_dim < 2)
            throw ConfigError("problem.out_dim", "softmax needs out_dim >= 2");
        if (m.loss == models::Loss::SquaredError)
            throw ConfigError("problem.loss", "two_moons provides class labels; use softmax_ce or logistic");
        if (c.problem.dataset.n < 2) throw ConfigError("problem.dataset.n", "must be >= 2");
        if (!(c.problem.dataset.noise >= 0.0)) throw ConfigError("problem.dataset.noise", "must be >= 0");
        if (c.problem.batch_size == 0 || c.problem.batch_size > c.problem.dataset.n)
            throw ConfigError("problem.batch_size", "must satisfy 1 <= batch_size <= n");
        if (!c.steps && !c.epochs) throw ConfigError("epochs", "give steps or epochs");
        if (c.epochs && *c.epochs == 0) throw ConfigError("epochs", "must be >= 1");
        break;
    }
    case ProblemKind::Regret:
        if (c.problem.dim == 0) throw ConfigError("problem.dim", "must be >= 1");
        if (c.problem.horizon == 0) throw ConfigError("problem.horizon", "must be >= 1");
        if (c.epochs) throw ConfigError("epochs", "only valid for mlp problems");
        if (c.steps && *c.steps != c.problem.horizon)
            throw ConfigError("steps", "regret runs take their length from problem.horizon");
        break;
    }
}

std::uint64_t effective_steps(const ExperimentConfig& c) {
    if (c.problem.kind == ProblemKind::Regret) return c.problem.horizon;
    if (c.steps) return *c.steps;
    const std::uint64_t n = c.problem.dataset.n;
    const std::uint64_t bpe = (n + c.problem.batch_size - 1) / c.problem.batch_size;
    return c.epochs.value_or(1) * bpe;
}

std::uint64_t effective_snapshot_every(const ExperimentConfig& c) {
    if (c.snapshot_every) return *c.snapshot_every;
    return c.problem.kind == ProblemKind::Mlp ? 50 : 1;
}

ExperimentConfig with_override(const ExperimentConfig& base, const std::string& path,
                               const json& value) {
    json j = json::parse(to_json(base).dump());
    json* node = &j;
    std::size_t pos = 0;
    while (true) {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) throw ConfigError(path, "malformed parameter path");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            break;
        }
        if (!node->contains(key) || !(*node)[key].is_object())
            throw ConfigError(path, "unknown parameter path");
        node = &(*node)[key];
        pos = dot + 1;
    }
    return parse_config(j);
}

}  // namespace agd::config
