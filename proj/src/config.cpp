#include "mspint/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mspint {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"grid", {"n", "H", "layers"}},
        {"field", {"background", "contrast", "channels"}},
        {"source", {"kind", "amplitude", "box", "px", "py", "time_rate"}},
        {"time", {"T", "N", "M"}},
        {"parareal", {"alpha", "eps", "k_max", "fine", "workers", "wr_tol", "wr_max_iter"}},
        {"output", {"dir", "timings", "export_solution"}},
    };
    return keys;
}

void check_key(const std::string& section, const std::string& key) {
    const auto& keys = known_keys();
    auto s = keys.find(section);
    if (s == keys.end()) throw ConfigError("unknown config section [" + section + "]");
    if (!s->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
}

template <class T>
T number(const pt::ptree& tree, const std::string& path, T fallback) {
    auto v = tree.get_optional<std::string>(path);
    if (!v) return fallback;
    std::istringstream in(*v);
    T x{};
    in >> x;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("bad value for " + path + ": '" + *v + "'");
    return x;
}

bool boolean(const pt::ptree& tree, const std::string& path, bool fallback) {
    auto v = tree.get_optional<std::string>(path);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw ConfigError("bad boolean for " + path + ": '" + *v + "'");
}

std::vector<double> numbers(const std::string& text, const std::string& what) {
    std::istringstream in(text);
    std::vector<double> out;
    double x;
    while (in >> x) out.push_back(x);
    if (!in.eof()) throw ConfigError("bad number list for " + what + ": '" + text + "'");
    return out;
}

std::vector<Channel> parse_channels(const std::string& text) {
    std::vector<Channel> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        const auto v = numbers(item, "field.channels");
        if (v.size() != 4) throw ConfigError("a channel needs four cell indices 'x0 x1 y0 y1': '" + item + "'");
        Channel c{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]), static_cast<int>(v[3])};
        for (double d : v)
            if (d != static_cast<int>(d)) throw ConfigError("channel bounds must be integers: '" + item + "'");
        out.push_back(c);
    }
    return out;
}

SourceKind parse_source_kind(const std::string& s) {
    if (s == "constant") return SourceKind::Constant;
    if (s == "box") return SourceKind::Box;
    if (s == "cell" || s == "point") return SourceKind::Cell;
    throw ConfigError("unknown source kind '" + s + "' (constant | box | cell)");
}

std::string source_kind_name(SourceKind k) {
    switch (k) {
        case SourceKind::Constant: return "constant";
        case SourceKind::Box: return "box";
        case SourceKind::Cell: return "cell";
    }
    return "constant";
}

std::string fmt(double x) {
    std::ostringstream o;
    o.precision(17);
    o << x;
    return o.str();
}

ExperimentConfig from_tree(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& kv : body) check_key(section, kv.first);
    }

    ExperimentConfig c;
    c.n = number(tree, "grid.n", c.n);
    c.H = number(tree, "grid.H", c.H);
    c.layers = number(tree, "grid.layers", c.layers);

    c.background = number(tree, "field.background", c.background);
    c.contrast = number(tree, "field.contrast", c.contrast);
    if (auto ch = tree.get_optional<std::string>("field.channels")) c.channels = parse_channels(*ch);

    if (auto k = tree.get_optional<std::string>("source.kind")) c.source.kind = parse_source_kind(*k);
    c.source.amplitude = number(tree, "source.amplitude", c.source.amplitude);
    if (auto box = tree.get_optional<std::string>("source.box")) {
        const auto v = numbers(*box, "source.box");
        if (v.size() != 4) throw ConfigError("source.box needs 'x0 x1 y0 y1'");
        c.source.x0 = v[0];
        c.source.x1 = v[1];
        c.source.y0 = v[2];
        c.source.y1 = v[3];
    }
    c.source.px = number(tree, "source.px", c.source.px);
    c.source.py = number(tree, "source.py", c.source.py);
    c.source.time_rate = number(tree, "source.time_rate", c.source.time_rate);

    c.T = number(tree, "time.T", c.T);
    if (auto ns = tree.get_optional<std::string>("time.N")) {
        c.N_values.clear();
        for (double v : numbers(*ns, "time.N")) {
            if (v != static_cast<int>(v)) throw ConfigError("time.N entries must be integers");
            c.N_values.push_back(static_cast<int>(v));
        }
    }
    c.M = number(tree, "time.M", c.M);

    c.alpha = number(tree, "parareal.alpha", c.alpha);
    c.eps = number(tree, "parareal.eps", c.eps);
    c.k_max = number(tree, "parareal.k_max", c.k_max);
    if (auto f = tree.get_optional<std::string>("parareal.fine")) {
        try {
            c.fine = parse_fine_kind(*f);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    c.workers = number(tree, "parareal.workers", c.workers);
    c.wr_tol = number(tree, "parareal.wr_tol", c.wr_tol);
    c.wr_max_iter = number(tree, "parareal.wr_max_iter", c.wr_max_iter);

    c.output_dir = tree.get<std::string>("output.dir", c.output_dir);
    c.timings = boolean(tree, "output.timings", c.timings);
    c.export_solution = boolean(tree, "output.export_solution", c.export_solution);

    c.validate();
    return c;
}

void apply_overrides(pt::ptree& tree, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw ConfigError("override must look like section.key=value: '" + o + "'");
        const std::string section = o.substr(0, dot), key = o.substr(dot + 1, eq - dot - 1);
        check_key(section, key);
        // ptree paths use '.' as separator, which matches section.key
        tree.put(section + "." + key, o.substr(eq + 1));
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n < 2) throw ConfigError("grid.n must be >= 2");
    if (!(H > 0.0 && H <= 1.0)) throw ConfigError("grid.H must lie in (0, 1]");
    const double blocks = 1.0 / H, cells = H * n;
    if (std::abs(blocks - std::round(blocks)) > 1e-9 || std::abs(cells - std::round(cells)) > 1e-9)
        throw ConfigError("grid.H must tile [0,1] and be a multiple of 1/n");
    if (layers < 1) throw ConfigError("grid.layers must be >= 1");
    if (!(background > 0.0)) throw ConfigError("field.background must be positive");
    if (!(contrast >= 1.0)) throw ConfigError("field.contrast must be >= 1");
    for (const auto& ch : channels)
        if (ch.x0 < 0 || ch.y0 < 0 || ch.x1 > n || ch.y1 > n || ch.x0 >= ch.x1 || ch.y0 >= ch.y1)
            throw ConfigError("channel outside the grid or empty");
    try {
        source.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("source: ") + e.what());
    }
    if (!(T > 0.0)) throw ConfigError("time.T must be positive");
    if (N_values.empty()) throw ConfigError("time.N must list at least one interval count");
    for (int N : N_values)
        if (N < 1) throw ConfigError("time.N entries must be >= 1");
    if (M < 0) throw ConfigError("time.M must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("parareal.alpha must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("parareal.eps must be positive");
    if (k_max < 1) throw ConfigError("parareal.k_max must be >= 1");
    if (workers < 1) throw ConfigError("parareal.workers must be >= 1");
    if (!(wr_tol > 0.0) || wr_max_iter < 1) throw ConfigError("parareal.wr_tol / wr_max_iter invalid");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

PararealConfig ExperimentConfig::parareal(int N) const {
    PararealConfig p;
    p.T = T;
    p.N = N;
    p.M = M;
    p.alpha = alpha;
    p.fine = fine;
    p.eps = eps;
    p.k_max = k_max;
    p.workers = workers;
    p.wr_tol = wr_tol;
    p.wr_max_iter = wr_max_iter;
    return p;
}

ExperimentConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    apply_overrides(tree, overrides);
    return from_tree(tree);
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), overrides);
}

std::string to_ini(const ExperimentConfig& c) {
    std::ostringstream o;
    o << "[grid]\nn = " << c.n << "\nH = " << fmt(c.H) << "\nlayers = " << c.layers << "\n\n";
    o << "[field]\nbackground = " << fmt(c.background) << "\ncontrast = " << fmt(c.contrast) << "\nchannels = ";
    for (std::size_t i = 0; i < c.channels.size(); ++i) {
        const auto& ch = c.channels[i];
        o << (i ? "; " : "") << ch.x0 << ' ' << ch.x1 << ' ' << ch.y0 << ' ' << ch.y1;
    }
    o << "\n\n[source]\nkind = " << source_kind_name(c.source.kind) << "\namplitude = " << fmt(c.source.amplitude)
      << "\nbox = " << fmt(c.source.x0) << ' ' << fmt(c.source.x1) << ' ' << fmt(c.source.y0) << ' '
      << fmt(c.source.y1) << "\npx = " << fmt(c.source.px) << "\npy = " << fmt(c.source.py)
      << "\ntime_rate = " << fmt(c.source.time_rate) << "\n\n";
    o << "[time]\nT = " << fmt(c.T) << "\nN =";
    for (int N : c.N_values) o << ' ' << N;
    o << "\nM = " << c.M << "\n\n";
    o << "[parareal]\nalpha = " << fmt(c.alpha) << "\neps = " << fmt(c.eps) << "\nk_max = " << c.k_max
      << "\nfine = " << to_string(c.fine) << "\nworkers = " << c.workers << "\nwr_tol = " << fmt(c.wr_tol)
      << "\nwr_max_iter = " << c.wr_max_iter << "\n\n";
    o << "[output]\ndir = " << c.output_dir << "\ntimings = " << (c.timings ? "true" : "false")
      << "\nexport_solution = " << (c.export_solution ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace mspint
