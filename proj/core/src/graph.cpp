#include "iwvi/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iwvi/errors.hpp"

namespace iwvi {

using nlohmann::json;

const std::vector<int>& SceneGraph::predicates_of_object(int i) const {
    if (i < 0 || i >= m_) throw TopologyError("object index out of range");
    return obj_predicates_[static_cast<size_t>(i)];
}

const std::vector<int>& SceneGraph::paired_objects(int i) const {
    if (i < 0 || i >= m_) throw TopologyError("object index out of range");
    return obj_partners_[static_cast<size_t>(i)];
}

int SceneGraph::global_index(const NodeRef& node) const {
    switch (node.kind) {
        case NodeKind::Object:
            if (node.index < 0 || node.index >= m_)
                throw TopologyError("object index out of range");
            return node.index;
        case NodeKind::Predicate:
            if (node.index < 0 || node.index >= n_)
                throw TopologyError("predicate index out of range");
            return m_ + node.index;
        case NodeKind::Global:
            return m_ + n_;
    }
    throw TopologyError("unknown node kind");
}

NodeRef SceneGraph::node_at(int gi) const {
    if (gi < 0 || gi > m_ + n_) throw TopologyError("node index out of range");
    if (gi < m_) return {NodeKind::Object, gi};
    if (gi < m_ + n_) return {NodeKind::Predicate, gi - m_};
    return {NodeKind::Global, 0};
}

SceneGraph build_graph(int m, int n,
                       const std::vector<std::pair<int, int>>& endpoints,
                       const std::vector<std::pair<int, int>>& object_pairs) {
    if (m < 1) throw TopologyError("graph needs at least one object node");
    if (n < 0) throw TopologyError("negative predicate count");
    if (static_cast<int>(endpoints.size()) != n)
        throw TopologyError("endpoint list length does not match predicate count");

    SceneGraph g;
    g.m_ = m;
    g.n_ = n;
    g.endpoints_ = endpoints;
    g.obj_predicates_.assign(static_cast<size_t>(m), {});
    g.obj_partners_.assign(static_cast<size_t>(m), {});

    for (int j = 0; j < n; ++j) {
        const auto [s, o] = endpoints[static_cast<size_t>(j)];
        if (s < 0 || s >= m || o < 0 || o >= m)
            throw TopologyError("predicate endpoint out of range");
        if (s == o) throw TopologyError("predicate endpoints must be distinct");
        g.obj_predicates_[static_cast<size_t>(s)].push_back(j);
        g.obj_predicates_[static_cast<size_t>(o)].push_back(j);
    }

    std::set<std::pair<int, int>> seen;
    for (const auto& [a, b] : object_pairs) {
        if (a < 0 || a >= m || b < 0 || b >= m)
            throw TopologyError("object pair index out of range");
        if (a == b) throw TopologyError("object pair must not be a self-pair");
        const auto key = std::minmax(a, b);
        if (!seen.insert(key).second) throw TopologyError("duplicate object pair");
        g.pairs_.emplace_back(a, b);
        g.obj_partners_[static_cast<size_t>(a)].push_back(b);
        g.obj_partners_[static_cast<size_t>(b)].push_back(a);
    }

    for (auto& v : g.obj_predicates_) std::sort(v.begin(), v.end());
    for (auto& v : g.obj_partners_) std::sort(v.begin(), v.end());
    return g;
}

std::vector<NodeRef> neighbors(const SceneGraph& g, const NodeRef& node) {
    std::vector<NodeRef> out;
    switch (node.kind) {
        case NodeKind::Object: {
            const int i = node.index;
            if (i < 0 || i >= g.num_objects())
                throw TopologyError("object index out of range");
            for (int j : g.paired_objects(i)) out.push_back({NodeKind::Object, j});
            for (int j : g.predicates_of_object(i))
                out.push_back({NodeKind::Predicate, j});
            out.push_back({NodeKind::Global, 0});
            break;
        }
        case NodeKind::Predicate: {
            const int j = node.index;
            if (j < 0 || j >= g.num_predicates())
                throw TopologyError("predicate index out of range");
            const auto [s, o] = g.predicate_endpoints()[static_cast<size_t>(j)];
            out.push_back({NodeKind::Object, std::min(s, o)});
            out.push_back({NodeKind::Object, std::max(s, o)});
            out.push_back({NodeKind::Global, 0});
            break;
        }
        case NodeKind::Global: {
            for (int i = 0; i < g.num_objects(); ++i)
                out.push_back({NodeKind::Object, i});
            for (int j = 0; j < g.num_predicates(); ++j)
                out.push_back({NodeKind::Predicate, j});
            break;
        }
    }
    return out;  // construction order is already ascending in global index
}

void TaskConfig::validate() const {
    if (d < 1) throw ConfigError("d must be positive");
    if (v_o < 1 || v_p < 1) throw ConfigError("vocabulary sizes must be positive");
    if (m_min < 1 || m_max < m_min) throw ConfigError("invalid m range");
    if (n_min < 0 || n_max < n_min) throw ConfigError("invalid n range");
    if (n_max >= 1 && m_min < 2)
        throw ConfigError("predicates need at least two objects (m_min >= 2)");
    if (label_skew < 0.0) throw ConfigError("label_skew must be >= 0");
    if (class_separation < 0.0) throw ConfigError("class_separation must be >= 0");
}

namespace {

// CDF of the power-law prior P(k) proportional to (k+1)^(-skew).
std::vector<double> label_cdf(int v, double skew) {
    std::vector<double> w(static_cast<size_t>(v));
    double total = 0.0;
    for (int k = 0; k < v; ++k) {
        w[static_cast<size_t>(k)] = std::pow(static_cast<double>(k + 1), -skew);
        total += w[static_cast<size_t>(k)];
    }
    double acc = 0.0;
    for (auto& x : w) {
        acc += x / total;
        x = acc;
    }
    w.back() = 1.0;
    return w;
}

int draw_label(Rng& rng, const std::vector<double>& cdf) {
    const double u = rng.uniform01();
    for (size_t k = 0; k < cdf.size(); ++k) {
        if (u <= cdf[k]) return static_cast<int>(k);
    }
    return static_cast<int>(cdf.size()) - 1;
}

Vec gaussian_vec(Rng& rng, int d) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.normal();
    return x;
}

}  // namespace

std::vector<SyntheticInstance> synth_dataset(const TaskConfig& cfg, int count) {
    cfg.validate();
    if (count < 1) throw ConfigError("dataset count must be >= 1");

    Rng rng(derive_seed(cfg.seed, 0xda7a5e7));

    // Cluster means are part of the task definition: drawn once per dataset.
    std::vector<Vec> obj_means, pred_means;
    for (int k = 0; k < cfg.v_o; ++k)
        obj_means.push_back(cfg.class_separation * gaussian_vec(rng, cfg.d));
    for (int k = 0; k < cfg.v_p; ++k)
        pred_means.push_back(cfg.class_separation * gaussian_vec(rng, cfg.d));

    const auto obj_cdf = label_cdf(cfg.v_o, cfg.label_skew);
    const auto pred_cdf = label_cdf(cfg.v_p, cfg.label_skew);

    std::vector<SyntheticInstance> out;
    out.reserve(static_cast<size_t>(count));
    for (int idx = 0; idx < count; ++idx) {
        SyntheticInstance inst;
        const int m = cfg.m_min + static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(cfg.m_max - cfg.m_min + 1)));
        const int n = cfg.n_min + static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(cfg.n_max - cfg.n_min + 1)));

        std::vector<std::pair<int, int>> endpoints;
        for (int j = 0; j < n; ++j) {
            const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
            int o = static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
            if (o >= s) ++o;
            endpoints.emplace_back(s, o);
        }

        // Each unordered object pair becomes a neighbor pair with prob 1/4.
        std::vector<std::pair<int, int>> pairs;
        for (int a = 0; a < m; ++a) {
            for (int b = a + 1; b < m; ++b) {
                if (rng.uniform01() < 0.25) pairs.emplace_back(a, b);
            }
        }

        inst.graph = build_graph(m, n, endpoints, pairs);

        for (int i = 0; i < m; ++i) {
            const int label = draw_label(rng, obj_cdf);
            inst.object_labels.push_back(label);
            inst.object_features.push_back(obj_means[static_cast<size_t>(label)] +
                                           gaussian_vec(rng, cfg.d));
        }
        for (int j = 0; j < n; ++j) {
            const int label = draw_label(rng, pred_cdf);
            inst.predicate_labels.push_back(label);
            const auto [s, o] = endpoints[static_cast<size_t>(j)];
            Vec base = pred_means[static_cast<size_t>(label)] + gaussian_vec(rng, cfg.d);
            inst.predicate_features.push_back(
                base + 0.5 * (inst.object_features[static_cast<size_t>(s)] +
                              inst.object_features[static_cast<size_t>(o)]));
        }

        Vec global = Vec::Zero(cfg.d);
        for (const auto& f : inst.object_features) global += f;
        for (const auto& f : inst.predicate_features) global += f;
        inst.global_feature = global / static_cast<double>(m + n);
        out.push_back(std::move(inst));
    }
    return out;
}

namespace {

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vec vec_from_json(const json& a) {
    Vec v(static_cast<Eigen::Index>(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json pairs_to_json(const std::vector<std::pair<int, int>>& ps) {
    json a = json::array();
    for (const auto& [x, y] : ps) a.push_back(json::array({x, y}));
    return a;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& a) {
    std::vector<std::pair<int, int>> ps;
    for (const auto& e : a) ps.emplace_back(e[0].get<int>(), e[1].get<int>());
    return ps;
}

}  // namespace

void write_dataset(std::ostream& out, const TaskConfig& cfg,
                   const std::vector<SyntheticInstance>& instances) {
    json header;
    header["record"] = "header";
    header["d"] = cfg.d;
    header["v_o"] = cfg.v_o;
    header["v_p"] = cfg.v_p;
    header["m_min"] = cfg.m_min;
    header["m_max"] = cfg.m_max;
    header["n_min"] = cfg.n_min;
    header["n_max"] = cfg.n_max;
    header["class_separation"] = cfg.class_separation;
    header["label_skew"] = cfg.label_skew;
    header["seed"] = cfg.seed;
    out << header.dump() << '\n';

    for (const auto& inst : instances) {
        json rec;
        rec["m"] = inst.graph.num_objects();
        rec["n"] = inst.graph.num_predicates();
        rec["predicate_endpoints"] = pairs_to_json(inst.graph.predicate_endpoints());
        rec["object_pairs"] = pairs_to_json(inst.graph.object_pairs());
        json of = json::array();
        for (const auto& f : inst.object_features) of.push_back(vec_to_json(f));
        rec["object_features"] = of;
        json pf = json::array();
        for (const auto& f : inst.predicate_features) pf.push_back(vec_to_json(f));
        rec["predicate_features"] = pf;
        rec["global_feature"] = vec_to_json(inst.global_feature);
        rec["object_labels"] = inst.object_labels;
        rec["predicate_labels"] = inst.predicate_labels;
        out << rec.dump() << '\n';
    }
}

void write_dataset_file(const std::string& path, const TaskConfig& cfg,
                        const std::vector<SyntheticInstance>& instances) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open dataset file for writing: " + path);
    write_dataset(f, cfg, instances);
}

LoadedDataset read_dataset(std::istream& in) {
    LoadedDataset ds;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        if (!have_header) {
            if (rec.value("record", "") != "header")
                throw ConfigError("dataset file does not start with a header record");
            ds.config.d = rec.at("d").get<int>();
            ds.config.v_o = rec.at("v_o").get<int>();
            ds.config.v_p = rec.at("v_p").get<int>();
            ds.config.m_min = rec.at("m_min").get<int>();
            ds.config.m_max = rec.at("m_max").get<int>();
            ds.config.n_min = rec.at("n_min").get<int>();
            ds.config.n_max = rec.at("n_max").get<int>();
            ds.config.class_separation = rec.at("class_separation").get<double>();
            ds.config.label_skew = rec.at("label_skew").get<double>();
            ds.config.seed = rec.at("seed").get<std::uint64_t>();
            have_header = true;
            continue;
        }
        SyntheticInstance inst;
        const int m = rec.at("m").get<int>();
        const int n = rec.at("n").get<int>();
        inst.graph = build_graph(m, n, pairs_from_json(rec.at("predicate_endpoints")),
                                 pairs_from_json(rec.at("object_pairs")));
        for (const auto& f : rec.at("object_features"))
            inst.object_features.push_back(vec_from_json(f));
        for (const auto& f : rec.at("predicate_features"))
            inst.predicate_features.push_back(vec_from_json(f));
        inst.global_feature = vec_from_json(rec.at("global_feature"));
        inst.object_labels = rec.at("object_labels").get<std::vector<int>>();
        inst.predicate_labels = rec.at("predicate_labels").get<std::vector<int>>();
        if (static_cast<int>(inst.object_features.size()) != m ||
            static_cast<int>(inst.predicate_features.size()) != n ||
            static_cast<int>(inst.object_labels.size()) != m ||
            static_cast<int>(inst.predicate_labels.size()) != n)
            throw ConfigError("dataset record is inconsistent with its m/n counts");
        for (int lbl : inst.object_labels)
            if (lbl < 0 || lbl >= ds.config.v_o) throw ConfigError("object label out of vocabulary");
        for (int lbl : inst.predicate_labels)
            if (lbl < 0 || lbl >= ds.config.v_p) throw ConfigError("predicate label out of vocabulary");
        ds.instances.push_back(std::move(inst));
    }
    if (!have_header) throw ConfigError("empty dataset file");
    return ds;
}

LoadedDataset read_dataset_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open dataset file: " + path);
    return read_dataset(f);
}

}  // namespace iwvi
