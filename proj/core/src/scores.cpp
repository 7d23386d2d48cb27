#include "iwvi/scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "iwvi/errors.hpp"

namespace iwvi {

int PotentialTables::v_o() const {
    if (!object_unary.empty()) return static_cast<int>(object_unary.front().size());
    if (!op_subj.empty()) return static_cast<int>(op_subj.front().rows());
    throw DimensionError("tables carry no object vocabulary");
}

int PotentialTables::v_p() const {
    if (!predicate_unary.empty()) return static_cast<int>(predicate_unary.front().size());
    if (!op_subj.empty()) return static_cast<int>(op_subj.front().cols());
    throw DimensionError("tables carry no predicate vocabulary");
}

namespace {

Vec concat(const Vec& a, const Vec& b) {
    Vec out(a.size() + b.size());
    out << a, b;
    return out;
}

}  // namespace

Vec object_marginal_score(const ThetaParams& theta, const SyntheticInstance& inst, int i) {
    const SceneGraph& g = inst.graph;
    if (i < 0 || i >= g.num_objects()) throw TopologyError("object index out of range");
    const Vec& yi = inst.object_features[static_cast<size_t>(i)];

    KahanVecSum acc(theta.h_o.output_width());
    acc.add(forward(theta.h_o, yi));
    for (int j : g.predicates_of_object(i))
        acc.add(forward(theta.g_op, concat(yi, inst.predicate_features[static_cast<size_t>(j)])));
    for (int l : g.paired_objects(i))
        acc.add(forward(theta.g_oo, concat(yi, inst.object_features[static_cast<size_t>(l)])));
    acc.add(forward(theta.g_og, concat(yi, inst.global_feature)));
    return -acc.value();
}

Vec predicate_marginal_score(const ThetaParams& theta, const SyntheticInstance& inst, int j) {
    const SceneGraph& g = inst.graph;
    if (j < 0 || j >= g.num_predicates()) throw TopologyError("predicate index out of range");
    const Vec& yj = inst.predicate_features[static_cast<size_t>(j)];
    const auto [s, o] = g.predicate_endpoints()[static_cast<size_t>(j)];

    KahanVecSum acc(theta.h_p.output_width());
    acc.add(forward(theta.h_p, yj));
    const int lo = std::min(s, o), hi = std::max(s, o);
    acc.add(forward(theta.g_po, concat(inst.object_features[static_cast<size_t>(lo)], yj)));
    acc.add(forward(theta.g_po, concat(inst.object_features[static_cast<size_t>(hi)], yj)));
    acc.add(forward(theta.g_pg, concat(yj, inst.global_feature)));
    return -acc.value();
}

MarginalScoreTable compute_scores(const ThetaParams& theta, const SyntheticInstance& inst) {
    MarginalScoreTable t;
    for (int i = 0; i < inst.graph.num_objects(); ++i)
        t.object_scores.push_back(object_marginal_score(theta, inst, i));
    for (int j = 0; j < inst.graph.num_predicates(); ++j)
        t.predicate_scores.push_back(predicate_marginal_score(theta, inst, j));
    return t;
}

namespace {

void check_tables(const PotentialTables& t, const SceneGraph& g) {
    const auto m = static_cast<size_t>(g.num_objects());
    const auto n = static_cast<size_t>(g.num_predicates());
    if (t.object_unary.size() != m || t.og.size() != m)
        throw DimensionError("object table count does not match graph");
    if (t.predicate_unary.size() != n || t.op_subj.size() != n || t.op_obj.size() != n ||
        t.pg.size() != n)
        throw DimensionError("predicate table count does not match graph");
    if (t.oo.size() != g.object_pairs().size())
        throw DimensionError("pair table count does not match graph");
}

int label_of(const std::vector<int>& assignment, int node, int vocab) {
    const int z = assignment[static_cast<size_t>(node)];
    if (z < 0 || z >= vocab) throw DimensionError("label out of vocabulary");
    return z;
}

}  // namespace

double joint_log_score(const PotentialTables& tables, const SceneGraph& g,
                       const std::vector<int>& assignment) {
    check_tables(tables, g);
    const int m = g.num_objects();
    const int n = g.num_predicates();
    if (static_cast<int>(assignment.size()) != m + n)
        throw DimensionError("assignment must label every non-global node");
    const int vo = tables.v_o();
    const int vp = g.num_predicates() > 0 ? tables.v_p() : 0;

    KahanSum total;
    for (int i = 0; i < m; ++i) {
        const int z = label_of(assignment, i, vo);
        total.add(tables.object_unary[static_cast<size_t>(i)][z]);
        total.add(tables.og[static_cast<size_t>(i)][z]);
    }
    for (int j = 0; j < n; ++j) {
        const int zj = label_of(assignment, m + j, vp);
        total.add(tables.predicate_unary[static_cast<size_t>(j)][zj]);
        total.add(tables.pg[static_cast<size_t>(j)][zj]);
        const auto [s, o] = g.predicate_endpoints()[static_cast<size_t>(j)];
        total.add(tables.op_subj[static_cast<size_t>(j)](label_of(assignment, s, vo), zj));
        total.add(tables.op_obj[static_cast<size_t>(j)](label_of(assignment, o, vo), zj));
    }
    for (size_t k = 0; k < g.object_pairs().size(); ++k) {
        const auto [a, b] = g.object_pairs()[k];
        total.add(tables.oo[k](label_of(assignment, a, vo), label_of(assignment, b, vo)));
    }
    return -total.value();
}

namespace {

// Log-space factor over a sorted list of variable indices.
struct Factor {
    std::vector<int> vars;        // ascending node indices
    std::vector<int> card;        // vocabulary size per var
    std::vector<double> logvals;  // row-major over vars
};

size_t table_size(const std::vector<int>& card) {
    size_t s = 1;
    for (int c : card) s *= static_cast<size_t>(c);
    return s;
}

Factor join(const Factor& a, const Factor& b) {
    Factor out;
    out.vars.reserve(a.vars.size() + b.vars.size());
    std::merge(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(),
               std::back_inserter(out.vars));
    out.vars.erase(std::unique(out.vars.begin(), out.vars.end()), out.vars.end());
    out.card.resize(out.vars.size());
    for (size_t i = 0; i < out.vars.size(); ++i) {
        for (size_t j = 0; j < a.vars.size(); ++j)
            if (a.vars[j] == out.vars[i]) out.card[i] = a.card[j];
        for (size_t j = 0; j < b.vars.size(); ++j)
            if (b.vars[j] == out.vars[i]) out.card[i] = b.card[j];
    }

    const size_t total = table_size(out.card);
    out.logvals.assign(total, 0.0);
    std::vector<int> idx(out.vars.size(), 0);
    for (size_t flat = 0; flat < total; ++flat) {
        size_t ia = 0, ib = 0;
        for (size_t j = 0; j < a.vars.size(); ++j) {
            const auto pos = static_cast<size_t>(
                std::lower_bound(out.vars.begin(), out.vars.end(), a.vars[j]) -
                out.vars.begin());
            ia = ia * static_cast<size_t>(a.card[j]) + static_cast<size_t>(idx[pos]);
        }
        for (size_t j = 0; j < b.vars.size(); ++j) {
            const auto pos = static_cast<size_t>(
                std::lower_bound(out.vars.begin(), out.vars.end(), b.vars[j]) -
                out.vars.begin());
            ib = ib * static_cast<size_t>(b.card[j]) + static_cast<size_t>(idx[pos]);
        }
        out.logvals[flat] = a.logvals[ia] + b.logvals[ib];
        for (int j = static_cast<int>(out.vars.size()) - 1; j >= 0; --j) {
            if (++idx[static_cast<size_t>(j)] < out.card[static_cast<size_t>(j)]) break;
            idx[static_cast<size_t>(j)] = 0;
        }
    }
    return out;
}

// Log-sum-exp the variable `var` out of the factor.
Factor eliminate_var(const Factor& f, int var) {
    const auto pos_it = std::lower_bound(f.vars.begin(), f.vars.end(), var);
    const auto pos = static_cast<size_t>(pos_it - f.vars.begin());
    Factor out;
    for (size_t j = 0; j < f.vars.size(); ++j) {
        if (j == pos) continue;
        out.vars.push_back(f.vars[j]);
        out.card.push_back(f.card[j]);
    }
    const size_t total = table_size(out.card);
    const int vcard = f.card[pos];

    size_t stride_after = 1;
    for (size_t j = pos + 1; j < f.vars.size(); ++j)
        stride_after *= static_cast<size_t>(f.card[j]);

    out.logvals.assign(total, 0.0);
    std::vector<double> slice(static_cast<size_t>(vcard));
    for (size_t flat = 0; flat < total; ++flat) {
        const size_t hi = flat / stride_after;
        const size_t lo = flat % stride_after;
        for (int k = 0; k < vcard; ++k)
            slice[static_cast<size_t>(k)] =
                f.logvals[(hi * static_cast<size_t>(vcard) + static_cast<size_t>(k)) *
                              stride_after +
                          lo];
        out.logvals[flat] = logsumexp(std::span<const double>(slice));
    }
    return out;
}

}  // namespace

Vec marginal_score_explicit(const PotentialTables& tables, const SceneGraph& g,
                            const NodeRef& node) {
    check_tables(tables, g);
    if (node.kind == NodeKind::Global)
        throw TopologyError("the global node carries no labels to marginalize over");
    const int m = g.num_objects();
    const int n = g.num_predicates();
    const int vo = tables.v_o();
    const int vp = g.num_predicates() > 0 ? tables.v_p() : 0;

    unsigned long long count = 1;
    for (int i = 0; i < m && count <= 10000000ull; ++i) count *= static_cast<unsigned>(vo);
    for (int j = 0; j < n && count <= 10000000ull; ++j) count *= static_cast<unsigned>(vp);
    if (count > 10000000ull)
        throw CapacityError("joint configuration count exceeds the 1e7 guard");

    const int target = g.global_index(node);
    auto card_of = [&](int x) { return x < m ? vo : vp; };

    // Seed factors: per-node unary (+ collapsed global edge), per-edge binary.
    // joint_log_score negates the potential sum, so seed with negated tables.
    std::vector<Factor> fs;
    for (int i = 0; i < m; ++i) {
        Factor f;
        f.vars = {i};
        f.card = {vo};
        f.logvals.resize(static_cast<size_t>(vo));
        for (int z = 0; z < vo; ++z)
            f.logvals[static_cast<size_t>(z)] =
                -(tables.object_unary[static_cast<size_t>(i)][z] +
                  tables.og[static_cast<size_t>(i)][z]);
        fs.push_back(std::move(f));
    }
    for (int j = 0; j < n; ++j) {
        Factor f;
        f.vars = {m + j};
        f.card = {vp};
        f.logvals.resize(static_cast<size_t>(vp));
        for (int z = 0; z < vp; ++z)
            f.logvals[static_cast<size_t>(z)] =
                -(tables.predicate_unary[static_cast<size_t>(j)][z] +
                  tables.pg[static_cast<size_t>(j)][z]);
        fs.push_back(std::move(f));

        const auto [s, o] = g.predicate_endpoints()[static_cast<size_t>(j)];
        for (const auto& [endpoint, table] :
             {std::pair<int, const Mat*>{s, &tables.op_subj[static_cast<size_t>(j)]},
              std::pair<int, const Mat*>{o, &tables.op_obj[static_cast<size_t>(j)]}}) {
            Factor e;
            e.vars = {std::min(endpoint, m + j), std::max(endpoint, m + j)};
            e.card = {card_of(e.vars[0]), card_of(e.vars[1])};
            e.logvals.resize(table_size(e.card));
            for (int zo = 0; zo < vo; ++zo)
                for (int zp = 0; zp < vp; ++zp) {
                    // endpoint index < m + j always, so object label is first
                    const size_t flat =
                        static_cast<size_t>(zo) * static_cast<size_t>(vp) +
                        static_cast<size_t>(zp);
                    e.logvals[flat] = -(*table)(zo, zp);
                }
            fs.push_back(std::move(e));
        }
    }
    for (size_t k = 0; k < g.object_pairs().size(); ++k) {
        const auto [a, b] = g.object_pairs()[k];
        Factor e;
        e.vars = {std::min(a, b), std::max(a, b)};
        e.card = {vo, vo};
        e.logvals.resize(static_cast<size_t>(vo) * static_cast<size_t>(vo));
        for (int za = 0; za < vo; ++za)
            for (int zb = 0; zb < vo; ++zb) {
                const double val = (a <= b) ? tables.oo[k](za, zb) : tables.oo[k](zb, za);
                e.logvals[static_cast<size_t>(za) * static_cast<size_t>(vo) +
                          static_cast<size_t>(zb)] = -val;
            }
        fs.push_back(std::move(e));
    }

    // Eliminate every variable except the target, ascending index order.
    for (int x = 0; x < m + n; ++x) {
        if (x == target) continue;
        Factor joined;
        bool have = false;
        std::vector<Factor> rest;
        for (auto& f : fs) {
            if (std::binary_search(f.vars.begin(), f.vars.end(), x)) {
                joined = have ? join(joined, f) : std::move(f);
                have = true;
            } else {
                rest.push_back(std::move(f));
            }
        }
        rest.push_back(eliminate_var(joined, x));
        fs = std::move(rest);
    }

    const int vt = card_of(target);
    Vec out = Vec::Zero(vt);
    for (const auto& f : fs) {
        if (f.vars.empty()) {
            out.array() += f.logvals[0];
        } else {
            for (int z = 0; z < vt; ++z) out[z] += f.logvals[static_cast<size_t>(z)];
        }
    }
    return out;
}

PotentialTables random_tables(const SceneGraph& g, int v_o, int v_p, Rng& rng, double scale) {
    auto u = [&]() { return (2.0 * rng.uniform01() - 1.0) * scale; };
    PotentialTables t;
    for (int i = 0; i < g.num_objects(); ++i) {
        Vec a(v_o), b(v_o);
        for (int z = 0; z < v_o; ++z) a[z] = u();
        for (int z = 0; z < v_o; ++z) b[z] = u();
        t.object_unary.push_back(std::move(a));
        t.og.push_back(std::move(b));
    }
    for (int j = 0; j < g.num_predicates(); ++j) {
        Vec a(v_p), b(v_p);
        for (int z = 0; z < v_p; ++z) a[z] = u();
        for (int z = 0; z < v_p; ++z) b[z] = u();
        t.predicate_unary.push_back(std::move(a));
        t.pg.push_back(std::move(b));
        Mat ms(v_o, v_p), mo(v_o, v_p);
        for (int zo = 0; zo < v_o; ++zo)
            for (int zp = 0; zp < v_p; ++zp) ms(zo, zp) = u();
        for (int zo = 0; zo < v_o; ++zo)
            for (int zp = 0; zp < v_p; ++zp) mo(zo, zp) = u();
        t.op_subj.push_back(std::move(ms));
        t.op_obj.push_back(std::move(mo));
    }
    for (size_t k = 0; k < g.object_pairs().size(); ++k) {
        Mat mm(v_o, v_o);
        for (int za = 0; za < v_o; ++za)
            for (int zb = 0; zb < v_o; ++zb) mm(za, zb) = u();
        t.oo.push_back(std::move(mm));
    }
    return t;
}

namespace {

void write_named(std::ostream& out, const std::string& name, const Mat& t) {
    out << "table " << name << ' ' << t.rows() << 'x' << t.cols() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            if (j) out << ' ';
            out << t(i, j);
        }
        out << '\n';
    }
}

Mat as_col(const Vec& v) {
    Mat mcol(v.size(), 1);
    mcol.col(0) = v;
    return mcol;
}

}  // namespace

void write_potentials(std::ostream& out, const SceneGraph& g, const PotentialTables& tables) {
    check_tables(tables, g);
    out << "iwvi-potentials 1\n";
    out << "graph " << g.num_objects() << ' ' << g.num_predicates() << '\n';
    for (const auto& [s, o] : g.predicate_endpoints()) out << "endpoint " << s << ' ' << o << '\n';
    for (const auto& [a, b] : g.object_pairs()) out << "pair " << a << ' ' << b << '\n';
    for (int i = 0; i < g.num_objects(); ++i) {
        write_named(out, "object_unary[" + std::to_string(i) + "]",
                    as_col(tables.object_unary[static_cast<size_t>(i)]));
        write_named(out, "og[" + std::to_string(i) + "]", as_col(tables.og[static_cast<size_t>(i)]));
    }
    for (int j = 0; j < g.num_predicates(); ++j) {
        write_named(out, "predicate_unary[" + std::to_string(j) + "]",
                    as_col(tables.predicate_unary[static_cast<size_t>(j)]));
        write_named(out, "pg[" + std::to_string(j) + "]", as_col(tables.pg[static_cast<size_t>(j)]));
        write_named(out, "op_subj[" + std::to_string(j) + "]", tables.op_subj[static_cast<size_t>(j)]);
        write_named(out, "op_obj[" + std::to_string(j) + "]", tables.op_obj[static_cast<size_t>(j)]);
    }
    for (size_t k = 0; k < g.object_pairs().size(); ++k)
        write_named(out, "oo[" + std::to_string(k) + "]", tables.oo[k]);
}

void write_potentials_file(const std::string& path, const SceneGraph& g,
                           const PotentialTables& tables) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open potentials file for writing: " + path);
    write_potentials(f, g, tables);
}

std::pair<SceneGraph, PotentialTables> read_potentials(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "iwvi-potentials 1")
        throw ConfigError("not a potentials file");
    if (!std::getline(in, line)) throw ConfigError("truncated potentials file");
    std::istringstream gl(line);
    std::string tag;
    int m = 0, n = 0;
    gl >> tag >> m >> n;
    if (tag != "graph") throw ConfigError("potentials file missing graph line");

    std::vector<std::pair<int, int>> endpoints, pairs;
    std::map<std::string, Mat> named;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        ls >> tag;
        if (tag == "endpoint") {
            int s, o;
            ls >> s >> o;
            endpoints.emplace_back(s, o);
        } else if (tag == "pair") {
            int a, b;
            ls >> a >> b;
            pairs.emplace_back(a, b);
        } else if (tag == "table") {
            std::string name, shape;
            ls >> name >> shape;
            const auto xpos = shape.find('x');
            if (xpos == std::string::npos) throw ConfigError("malformed table shape");
            const int rows = std::stoi(shape.substr(0, xpos));
            const int cols = std::stoi(shape.substr(xpos + 1));
            Mat t(rows, cols);
            for (int i = 0; i < rows; ++i) {
                if (!std::getline(in, line)) throw ConfigError("truncated table payload");
                std::istringstream rs(line);
                for (int j = 0; j < cols; ++j)
                    if (!(rs >> t(i, j))) throw ConfigError("malformed table payload");
            }
            named[name] = std::move(t);
        } else {
            throw ConfigError("unknown potentials record: " + tag);
        }
    }

    SceneGraph g = build_graph(m, n, endpoints, pairs);
    auto take = [&](const std::string& name) -> Mat {
        auto it = named.find(name);
        if (it == named.end()) throw ConfigError("potentials file missing table " + name);
        return it->second;
    };
    PotentialTables t;
    for (int i = 0; i < m; ++i) {
        t.object_unary.push_back(take("object_unary[" + std::to_string(i) + "]").col(0));
        t.og.push_back(take("og[" + std::to_string(i) + "]").col(0));
    }
    for (int j = 0; j < n; ++j) {
        t.predicate_unary.push_back(take("predicate_unary[" + std::to_string(j) + "]").col(0));
        t.pg.push_back(take("pg[" + std::to_string(j) + "]").col(0));
        t.op_subj.push_back(take("op_subj[" + std::to_string(j) + "]"));
        t.op_obj.push_back(take("op_obj[" + std::to_string(j) + "]"));
    }
    for (size_t k = 0; k < pairs.size(); ++k)
        t.oo.push_back(take("oo[" + std::to_string(k) + "]"));
    return {std::move(g), std::move(t)};
}

std::pair<SceneGraph, PotentialTables> read_potentials_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open potentials file: " + path);
    return read_potentials(f);
}

}  // namespace iwvi
