#include "gconvex/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gconvex {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

const char* type_name(const json& v)
{
    return v.type_name();
}

// Reads members of one JSON object and rejects any it was not asked about.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object())
            throw ConfigError(path_.empty() ? "<root>" : path_,
                              std::string("expected an object, got ") + type_name(obj_));
    }

    const json* find(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null())
            return nullptr;
        return &*it;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    double number(const std::string& key, double fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        return as_number(*v, path(key));
    }

    double required_number(const std::string& key)
    {
        const json* v = find(key);
        if (!v)
            throw ConfigError(path(key), "missing required number");
        return as_number(*v, path(key));
    }

    std::optional<double> optional_number(const std::string& key)
    {
        const json* v = find(key);
        if (!v)
            return std::nullopt;
        return as_number(*v, path(key));
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0))
            throw ConfigError(path(key), "expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const json* v = find(key);
        if (!v)
            return fallback;
        if (!v->is_boolean())
            throw ConfigError(path(key), std::string("expected a boolean, got ") + type_name(*v));
        return v->get<bool>();
    }

    std::optional<std::string> optional_string(const std::string& key)
    {
        const json* v = find(key);
        if (!v)
            return std::nullopt;
        if (!v->is_string())
            throw ConfigError(path(key), std::string("expected a string, got ") + type_name(*v));
        return v->get<std::string>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        return optional_string(key).value_or(fallback);
    }

    std::optional<std::vector<double>> numbers(const std::string& key)
    {
        const json* v = find(key);
        if (!v)
            return std::nullopt;
        if (!v->is_array())
            throw ConfigError(path(key), std::string("expected an array, got ") + type_name(*v));
        std::vector<double> out;
        for (std::size_t k = 0; k < v->size(); ++k)
            out.push_back(as_number((*v)[k], path(key) + "[" + std::to_string(k) + "]"));
        return out;
    }

    std::vector<std::string> strings(const std::string& key)
    {
        const json* v = find(key);
        if (!v)
            return {};
        if (!v->is_array())
            throw ConfigError(path(key), std::string("expected an array, got ") + type_name(*v));
        std::vector<std::string> out;
        for (std::size_t k = 0; k < v->size(); ++k) {
            if (!(*v)[k].is_string())
                throw ConfigError(path(key) + "[" + std::to_string(k) + "]", "expected a string");
            out.push_back((*v)[k].get<std::string>());
        }
        return out;
    }

    ScanRange range(const std::string& key, ScanRange fallback)
    {
        const auto v = numbers(key);
        if (!v)
            return fallback;
        if (v->size() != 2 || !((*v)[0] <= (*v)[1]))
            throw ConfigError(path(key), "expected [lo, hi] with lo <= hi");
        return {(*v)[0], (*v)[1]};
    }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(path(it.key()), "unknown key");
    }

private:
    static double as_number(const json& v, const std::string& where)
    {
        if (!v.is_number())
            throw ConfigError(where, std::string("expected a number, got ") + type_name(v));
        const double d = v.get<double>();
        if (!std::isfinite(d))
            throw ConfigError(where, "must be finite");
        return d;
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class Fn>
auto rethrow_at(const std::string& field, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

} // namespace

SpaceTimeGrid ExperimentConfig::space_time_grid() const
{
    if (grid.nt == 0)
        return SpaceTimeGrid::cfl_matched(grid.horizon, grid.x_min, grid.x_max, grid.nx, band(),
                                          grid.cfl_theta);
    return SpaceTimeGrid(grid.horizon, grid.x_min, grid.x_max, grid.nx, grid.nt);
}

GeneratorPair ExperimentConfig::generator_pair() const
{
    GeneratorPair gen;
    gen.g = rethrow_at("generator.g", [&] { return expr::TriFunction::parse(generator.g); });
    gen.f = rethrow_at("generator.f", [&] { return expr::TriFunction::parse(generator.f); });
    gen.lipschitz = generator.lipschitz;
    gen.h6 = generator.h6;
    return gen;
}

BsdeOptions ExperimentConfig::bsde_options() const
{
    return BsdeOptions{generator.picard_correction, generator.growth_bound};
}

expr::ScalarFunction ExperimentConfig::function(const std::string& name) const
{
    const std::optional<std::string>* text = nullptr;
    if (name == "h")
        text = &functions.h;
    else if (name == "phi")
        text = &functions.phi;
    else if (name == "terminal")
        text = &functions.terminal;
    else
        throw InvalidArgument("no function slot named " + name);
    const std::string field = "functions." + name;
    if (!text->has_value())
        throw ConfigError(field, "required by this command but absent");
    return rethrow_at(field, [&] { return expr::ScalarFunction::parse(**text); });
}

ExperimentConfig parse_config(const nlohmann::json& doc)
{
    ExperimentConfig c;
    ObjectReader root(doc, "");

    c.schema_version = static_cast<int>(root.count("schema_version", kSchemaVersion));
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));

    {
        const json* b = root.find("band");
        if (!b)
            throw ConfigError("band", "missing required object");
        ObjectReader r(*b, "band");
        c.sigma_min_sq = r.required_number("sigma_min_sq");
        c.sigma_max_sq = r.required_number("sigma_max_sq");
        r.finish();
        rethrow_at("band", [&] { return c.band(); });
    }

    {
        GridSettings& g = c.grid;
        const json* gj = root.find("grid");
        const json empty = json::object();
        ObjectReader r(gj ? *gj : empty, "grid");
        g.horizon = r.number("horizon", g.horizon);
        const std::optional<double> lo = r.optional_number("x_min");
        const std::optional<double> hi = r.optional_number("x_max");
        g.nx = r.count("nx", g.nx);
        g.nt = r.count("nt", 0);
        g.cfl_theta = r.number("cfl_theta", g.cfl_theta);
        r.finish();
        if (!(g.horizon > 0.0))
            throw ConfigError("grid.horizon", "must be positive");
        if (!(g.cfl_theta > 0.0) || g.cfl_theta > kMaxCflTheta)
            throw ConfigError("grid.cfl_theta", "must lie in (0, 0.5]");
        if (lo.has_value() != hi.has_value())
            throw ConfigError(lo ? "grid.x_max" : "grid.x_min", "x_min and x_max must be given together");
        if (lo) {
            g.x_min = *lo;
            g.x_max = *hi;
        } else {
            const SpaceTimeGrid std_grid = rethrow_at("grid", [&] {
                return SpaceTimeGrid::standard(c.band(), g.horizon, g.nx == 0 ? 400 : g.nx, g.cfl_theta);
            });
            g.x_min = std_grid.x_min();
            g.x_max = std_grid.x_max();
        }
        const SpaceTimeGrid resolved = rethrow_at("grid", [&] { return c.space_time_grid(); });
        rethrow_at("grid.nt", [&] {
            resolved.check_cfl(c.band());
            return 0;
        });
        g.nt = resolved.nt();
    }

    {
        GeneratorSettings& g = c.generator;
        const json* gj = root.find("generator");
        const json empty = json::object();
        ObjectReader r(gj ? *gj : empty, "generator");
        g.g = r.string("g", g.g);
        g.f = r.string("f", g.f);
        g.lipschitz = r.number("lipschitz", g.lipschitz);
        g.h6 = r.boolean("h6", g.h6);
        g.picard_correction = r.boolean("picard_correction", g.picard_correction);
        g.growth_bound = r.number("growth_bound", g.growth_bound);
        g.working_box = r.number("working_box", g.working_box);
        r.finish();
        if (!(g.lipschitz >= 0.0))
            throw ConfigError("generator.lipschitz", "must be non-negative");
        if (!(g.growth_bound > 0.0))
            throw ConfigError("generator.growth_bound", "must be positive");
        if (!(g.working_box > 0.0))
            throw ConfigError("generator.working_box", "must be positive");
        const GeneratorPair pair = c.generator_pair();
        rethrow_at("generator", [&] {
            validate_generator(pair, c.grid.horizon, g.working_box);
            return 0;
        });
    }

    {
        FunctionSettings& f = c.functions;
        const json* fj = root.find("functions");
        const json empty = json::object();
        ObjectReader r(fj ? *fj : empty, "functions");
        f.h = r.optional_string("h");
        f.phi = r.optional_string("phi");
        f.terminal = r.optional_string("terminal");
        r.finish();
        if (f.h)
            c.function("h");
        if (f.phi)
            c.function("phi");
        if (f.terminal)
            c.function("terminal");
    }

    {
        CommandParams& p = c.params;
        const json* pj = root.find("params");
        const json empty = json::object();
        ObjectReader r(pj ? *pj : empty, "params");
        p.times = r.numbers("times").value_or(std::vector<double>{c.grid.horizon});
        p.s = r.number("s", 0.0);
        p.t = r.number("t", c.grid.horizon);
        p.horizons = r.numbers("horizons").value_or(std::vector<double>{c.grid.horizon - p.s});
        p.eps_list = r.numbers("eps_list").value_or(p.eps_list);
        p.y_range = r.range("y_range", p.y_range);
        p.z_range = r.range("z_range", p.z_range);
        p.resolution = r.count("resolution", p.resolution);
        p.scan_t = r.number("scan_t", p.scan_t);
        p.tree_steps = r.count("tree_steps", p.tree_steps);
        p.tolerance = r.number("tolerance", p.tolerance);
        p.catalog = r.strings("catalog");
        p.seed = r.count("seed", p.seed);
        p.paths = r.count("paths", p.paths);
        if (const json* e = r.find("expect")) {
            ObjectReader er(*e, "params.expect");
            Expectation ex;
            ex.value = er.required_number("value");
            ex.tolerance = er.required_number("tolerance");
            er.finish();
            if (!(ex.tolerance >= 0.0))
                throw ConfigError("params.expect.tolerance", "must be non-negative");
            p.expect = ex;
        }
        r.finish();

        const double T = c.grid.horizon;
        for (std::size_t k = 0; k < p.times.size(); ++k)
            if (!(p.times[k] >= 0.0) || p.times[k] > T)
                throw ConfigError("params.times[" + std::to_string(k) + "]", "must lie in [0, horizon]");
        if (!(p.s >= 0.0) || p.s > T)
            throw ConfigError("params.s", "must lie in [0, horizon]");
        if (!(*p.t > p.s) || *p.t > T)
            throw ConfigError("params.t", "must satisfy s < t <= horizon");
        for (std::size_t k = 0; k < p.horizons.size(); ++k)
            if (!(p.horizons[k] >= 0.0) || p.s + p.horizons[k] > T * (1.0 + 1e-12))
                throw ConfigError("params.horizons[" + std::to_string(k) + "]",
                                  "must satisfy 0 <= horizon and s + horizon <= grid horizon");
        if (p.eps_list.size() < 3)
            throw ConfigError("params.eps_list", "needs at least 3 values");
        for (std::size_t k = 0; k < p.eps_list.size(); ++k) {
            if (!(p.eps_list[k] > 0.0) || (k > 0 && !(p.eps_list[k] < p.eps_list[k - 1])))
                throw ConfigError("params.eps_list[" + std::to_string(k) + "]",
                                  "values must be positive and strictly decreasing");
            if (p.s + p.eps_list[k] > T)
                throw ConfigError("params.eps_list[" + std::to_string(k) + "]", "s + eps exceeds the horizon");
        }
        if (p.resolution < 16)
            throw ConfigError("params.resolution", "must be at least 16");
        if (!(p.scan_t >= 0.0) || p.scan_t > T)
            throw ConfigError("params.scan_t", "must lie in [0, horizon]");
        if (p.tree_steps == 0)
            throw ConfigError("params.tree_steps", "must be positive");
        if (!(p.tolerance > 0.0))
            throw ConfigError("params.tolerance", "must be positive");
        for (std::size_t k = 0; k < p.catalog.size(); ++k) {
            const std::string field = "params.catalog[" + std::to_string(k) + "]";
            rethrow_at(field, [&] { return expr::ScalarFunction::parse(p.catalog[k]); });
        }
    }

    c.threads = static_cast<unsigned>(root.count("threads", 1));
    if (c.threads == 0)
        throw ConfigError("threads", "must be at least 1");
    root.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("<file>", "cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    using nlohmann::json;
    json doc;
    doc["schema_version"] = c.schema_version;
    doc["band"] = {{"sigma_min_sq", c.sigma_min_sq}, {"sigma_max_sq", c.sigma_max_sq}};
    doc["grid"] = {{"horizon", c.grid.horizon}, {"x_min", c.grid.x_min}, {"x_max", c.grid.x_max},
                   {"nx", c.grid.nx},           {"nt", c.grid.nt},       {"cfl_theta", c.grid.cfl_theta}};
    doc["generator"] = {{"g", c.generator.g},
                        {"f", c.generator.f},
                        {"lipschitz", c.generator.lipschitz},
                        {"h6", c.generator.h6},
                        {"picard_correction", c.generator.picard_correction},
                        {"growth_bound", c.generator.growth_bound},
                        {"working_box", c.generator.working_box}};
    json fn = json::object();
    if (c.functions.h)
        fn["h"] = *c.functions.h;
    if (c.functions.phi)
        fn["phi"] = *c.functions.phi;
    if (c.functions.terminal)
        fn["terminal"] = *c.functions.terminal;
    doc["functions"] = fn;

    const CommandParams& p = c.params;
    json pj = {{"times", p.times},
               {"s", p.s},
               {"t", p.t.value_or(c.grid.horizon)},
               {"horizons", p.horizons},
               {"eps_list", p.eps_list},
               {"y_range", {p.y_range.lo, p.y_range.hi}},
               {"z_range", {p.z_range.lo, p.z_range.hi}},
               {"resolution", p.resolution},
               {"scan_t", p.scan_t},
               {"tree_steps", p.tree_steps},
               {"tolerance", p.tolerance},
               {"catalog", p.catalog},
               {"seed", p.seed},
               {"paths", p.paths}};
    if (p.expect)
        pj["expect"] = {{"value", p.expect->value}, {"tolerance", p.expect->tolerance}};
    doc["params"] = pj;
    doc["threads"] = c.threads;
    return doc;
}

} // namespace gconvex
