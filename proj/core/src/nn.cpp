#include "iwvi/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "iwvi/errors.hpp"

namespace iwvi {

int Mlp::input_width() const {
    if (weights.empty()) throw DimensionError("empty net");
    return static_cast<int>(weights.front().cols());
}

int Mlp::output_width() const {
    if (weights.empty()) throw DimensionError("empty net");
    return static_cast<int>(weights.back().rows());
}

void Mlp::validate() const {
    if (weights.empty() || weights.size() != biases.size())
        throw DimensionError("net layer lists are empty or mismatched");
    for (size_t l = 0; l < weights.size(); ++l) {
        if (biases[l].size() != weights[l].rows())
            throw DimensionError("bias width does not match weight rows");
        if (l + 1 < weights.size() && weights[l + 1].cols() != weights[l].rows())
            throw DimensionError("consecutive layer shapes incompatible");
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw NumericalError("non-finite net parameter");
    }
}

Mlp make_mlp(const std::vector<int>& sizes, Rng& rng) {
    if (sizes.size() < 2) throw DimensionError("net needs at least input and output widths");
    Mlp net;
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        if (fan_in < 1 || fan_out < 1) throw DimensionError("layer width must be positive");
        const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Mat W(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) W(i, j) = (2.0 * rng.uniform01() - 1.0) * r;
        net.weights.push_back(std::move(W));
        net.biases.push_back(Vec::Zero(fan_out));
    }
    return net;
}

Vec forward(const Mlp& net, const Vec& x) {
    if (net.weights.empty()) throw DimensionError("empty net");
    if (x.size() != net.weights.front().cols())
        throw DimensionError("input width does not match net");
    Vec h = x;
    const int L = net.num_layers();
    for (int l = 0; l < L; ++l) {
        Vec a = net.weights[static_cast<size_t>(l)] * h + net.biases[static_cast<size_t>(l)];
        h = (l + 1 < L) ? Vec(a.array().tanh()) : std::move(a);
    }
    return h;
}

MlpBackward backward(const Mlp& net, const Vec& x, const Vec& grad_out) {
    if (net.weights.empty()) throw DimensionError("empty net");
    if (x.size() != net.weights.front().cols())
        throw DimensionError("input width does not match net");
    if (grad_out.size() != net.weights.back().rows())
        throw DimensionError("grad_out width does not match net output");

    const int L = net.num_layers();
    std::vector<Vec> acts;  // activations entering each layer
    acts.reserve(static_cast<size_t>(L));
    Vec h = x;
    acts.push_back(h);
    for (int l = 0; l + 1 < L; ++l) {
        h = (net.weights[static_cast<size_t>(l)] * h + net.biases[static_cast<size_t>(l)])
                .array()
                .tanh();
        acts.push_back(h);
    }

    MlpBackward out;
    out.dW.resize(static_cast<size_t>(L));
    out.db.resize(static_cast<size_t>(L));
    Vec delta = grad_out;
    for (int l = L - 1; l >= 0; --l) {
        const Vec& in = acts[static_cast<size_t>(l)];
        out.dW[static_cast<size_t>(l)] = delta * in.transpose();
        out.db[static_cast<size_t>(l)] = delta;
        Vec up = net.weights[static_cast<size_t>(l)].transpose() * delta;
        if (l > 0) {
            // tanh'(a) = 1 - tanh(a)^2, and acts[l] already holds tanh(a).
            delta = up.array() * (1.0 - acts[static_cast<size_t>(l)].array().square());
        } else {
            delta = std::move(up);
        }
    }
    out.dx = std::move(delta);
    return out;
}

void MlpGrads::add(const MlpBackward& g) {
    for (size_t l = 0; l < dW.size(); ++l) {
        dW[l] += g.dW[l];
        db[l] += g.db[l];
    }
}

void MlpGrads::add_scaled(const MlpGrads& g, double scale) {
    for (size_t l = 0; l < dW.size(); ++l) {
        dW[l] += scale * g.dW[l];
        db[l] += scale * g.db[l];
    }
}

void MlpGrads::scale(double factor) {
    for (size_t l = 0; l < dW.size(); ++l) {
        dW[l] *= factor;
        db[l] *= factor;
    }
}

double MlpGrads::squared_norm() const {
    double s = 0.0;
    for (size_t l = 0; l < dW.size(); ++l) s += dW[l].squaredNorm() + db[l].squaredNorm();
    return s;
}

MlpGrads zeros_like(const Mlp& net) {
    MlpGrads g;
    for (size_t l = 0; l < net.weights.size(); ++l) {
        g.dW.push_back(Mat::Zero(net.weights[l].rows(), net.weights[l].cols()));
        g.db.push_back(Vec::Zero(net.biases[l].size()));
    }
    return g;
}

void ThetaGrads::add_scaled(const ThetaGrads& g, double s) {
    h_o.add_scaled(g.h_o, s);
    h_p.add_scaled(g.h_p, s);
    g_op.add_scaled(g.g_op, s);
    g_oo.add_scaled(g.g_oo, s);
    g_og.add_scaled(g.g_og, s);
    g_po.add_scaled(g.g_po, s);
    g_pg.add_scaled(g.g_pg, s);
}

void ThetaGrads::scale(double f) {
    h_o.scale(f);
    h_p.scale(f);
    g_op.scale(f);
    g_oo.scale(f);
    g_og.scale(f);
    g_po.scale(f);
    g_pg.scale(f);
}

double ThetaGrads::squared_norm() const {
    return h_o.squared_norm() + h_p.squared_norm() + g_op.squared_norm() +
           g_oo.squared_norm() + g_og.squared_norm() + g_po.squared_norm() +
           g_pg.squared_norm();
}

ThetaParams make_theta(int d, int v_o, int v_p, int hidden, Rng& rng) {
    if (d < 1 || v_o < 1 || v_p < 1 || hidden < 1)
        throw DimensionError("theta widths must be positive");
    ThetaParams t;
    t.h_o = make_mlp({d, hidden, v_o}, rng);
    t.h_p = make_mlp({d, hidden, v_p}, rng);
    t.g_op = make_mlp({2 * d, hidden, v_o}, rng);
    t.g_oo = make_mlp({2 * d, hidden, v_o}, rng);
    t.g_og = make_mlp({2 * d, hidden, v_o}, rng);
    t.g_po = make_mlp({2 * d, hidden, v_p}, rng);
    t.g_pg = make_mlp({2 * d, hidden, v_p}, rng);
    return t;
}

ThetaGrads zeros_like(const ThetaParams& t) {
    return ThetaGrads{zeros_like(t.h_o),  zeros_like(t.h_p),  zeros_like(t.g_op),
                      zeros_like(t.g_oo), zeros_like(t.g_og), zeros_like(t.g_po),
                      zeros_like(t.g_pg)};
}

namespace {

void step_net(Mlp& net, const MlpGrads& g, double alpha) {
    for (size_t l = 0; l < net.weights.size(); ++l) {
        net.weights[l] -= alpha * g.dW[l];
        net.biases[l] -= alpha * g.db[l];
    }
}

}  // namespace

void sgd_step(ThetaParams& theta, const ThetaGrads& grads, double alpha) {
    step_net(theta.h_o, grads.h_o, alpha);
    step_net(theta.h_p, grads.h_p, alpha);
    step_net(theta.g_op, grads.g_op, alpha);
    step_net(theta.g_oo, grads.g_oo, alpha);
    step_net(theta.g_og, grads.g_og, alpha);
    step_net(theta.g_po, grads.g_po, alpha);
    step_net(theta.g_pg, grads.g_pg, alpha);
}

namespace {

constexpr char kMagic[8] = {'I', 'W', 'V', 'I', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                          static_cast<unsigned char>((x >> 8) & 0xff),
                          static_cast<unsigned char>((x >> 16) & 0xff),
                          static_cast<unsigned char>((x >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ConfigError("truncated checkpoint");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("truncated checkpoint");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}

void write_tensor(std::ostream& out, const std::string& name,
                  const std::vector<std::uint32_t>& dims, const double* data,
                  size_t count) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) put_u32(out, d);
    for (size_t i = 0; i < count; ++i) put_f64(out, data[i]);
}

struct RawTensor {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<double> data;
};

RawTensor read_tensor(std::istream& in) {
    RawTensor t;
    const std::uint32_t name_len = get_u32(in);
    if (name_len > 4096) throw ConfigError("checkpoint tensor name too long");
    t.name.resize(name_len);
    if (!in.read(t.name.data(), name_len)) throw ConfigError("truncated checkpoint");
    const std::uint32_t rank = get_u32(in);
    if (rank > 8) throw ConfigError("checkpoint tensor rank too large");
    size_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t d = get_u32(in);
        t.dims.push_back(d);
        count *= d;
    }
    if (count > (1u << 28)) throw ConfigError("checkpoint tensor too large");
    t.data.resize(count);
    for (size_t i = 0; i < count; ++i) t.data[i] = get_f64(in);
    return t;
}

void write_net(std::ostream& out, const std::string& prefix, const Mlp& net) {
    for (int l = 0; l < net.num_layers(); ++l) {
        const Mat& W = net.weights[static_cast<size_t>(l)];
        // Eigen stores column-major; emit row-major as documented.
        std::vector<double> row_major(static_cast<size_t>(W.size()));
        for (Eigen::Index i = 0; i < W.rows(); ++i)
            for (Eigen::Index j = 0; j < W.cols(); ++j)
                row_major[static_cast<size_t>(i * W.cols() + j)] = W(i, j);
        write_tensor(out, prefix + ".W" + std::to_string(l),
                     {static_cast<std::uint32_t>(W.rows()), static_cast<std::uint32_t>(W.cols())},
                     row_major.data(), row_major.size());
        const Vec& b = net.biases[static_cast<size_t>(l)];
        write_tensor(out, prefix + ".b" + std::to_string(l),
                     {static_cast<std::uint32_t>(b.size())}, b.data(),
                     static_cast<size_t>(b.size()));
    }
}

}  // namespace

void save_checkpoint(std::ostream& out, const ThetaParams& theta, double tau) {
    out.write(kMagic, 8);
    put_u32(out, kVersion);
    std::uint32_t count = 1;  // tau
    const Mlp* nets[] = {&theta.h_o, &theta.h_p, &theta.g_op, &theta.g_oo,
                         &theta.g_og, &theta.g_po, &theta.g_pg};
    for (const Mlp* n : nets) count += 2 * static_cast<std::uint32_t>(n->num_layers());
    put_u32(out, count);
    const char* names[] = {"h_o", "h_p", "g_op", "g_oo", "g_og", "g_po", "g_pg"};
    for (int k = 0; k < 7; ++k) write_net(out, names[k], *nets[k]);
    write_tensor(out, "tau", {}, &tau, 1);
    if (!out) throw ConfigError("checkpoint write failed");
}

void save_checkpoint_file(const std::string& path, const ThetaParams& theta, double tau) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint for writing: " + path);
    save_checkpoint(f, theta, tau);
}

namespace {

Mlp net_from_tensors(const std::string& prefix, const std::vector<RawTensor>& tensors) {
    Mlp net;
    for (int l = 0;; ++l) {
        const std::string wname = prefix + ".W" + std::to_string(l);
        const std::string bname = prefix + ".b" + std::to_string(l);
        const RawTensor* wt = nullptr;
        const RawTensor* bt = nullptr;
        for (const auto& t : tensors) {
            if (t.name == wname) wt = &t;
            if (t.name == bname) bt = &t;
        }
        if (!wt && !bt) break;
        if (!wt || !bt) throw ConfigError("checkpoint missing tensor pair for " + prefix);
        if (wt->dims.size() != 2 || bt->dims.size() != 1)
            throw ConfigError("checkpoint tensor has unexpected rank");
        const auto rows = static_cast<Eigen::Index>(wt->dims[0]);
        const auto cols = static_cast<Eigen::Index>(wt->dims[1]);
        Mat W(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j)
                W(i, j) = wt->data[static_cast<size_t>(i * cols + j)];
        Vec b(static_cast<Eigen::Index>(bt->dims[0]));
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bt->data[static_cast<size_t>(i)];
        net.weights.push_back(std::move(W));
        net.biases.push_back(std::move(b));
    }
    if (net.weights.empty()) throw ConfigError("checkpoint has no tensors for net " + prefix);
    net.validate();
    return net;
}

}  // namespace

Checkpoint load_checkpoint(std::istream& in) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw ConfigError("not a checkpoint file (bad magic)");
    if (get_u32(in) != kVersion) throw ConfigError("unsupported checkpoint version");
    const std::uint32_t count = get_u32(in);
    std::vector<RawTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) tensors.push_back(read_tensor(in));

    Checkpoint ck;
    ck.theta.h_o = net_from_tensors("h_o", tensors);
    ck.theta.h_p = net_from_tensors("h_p", tensors);
    ck.theta.g_op = net_from_tensors("g_op", tensors);
    ck.theta.g_oo = net_from_tensors("g_oo", tensors);
    ck.theta.g_og = net_from_tensors("g_og", tensors);
    ck.theta.g_po = net_from_tensors("g_po", tensors);
    ck.theta.g_pg = net_from_tensors("g_pg", tensors);
    bool have_tau = false;
    for (const auto& t : tensors) {
        if (t.name == "tau") {
            if (t.data.size() != 1) throw ConfigError("malformed tau tensor");
            ck.tau = t.data[0];
            have_tau = true;
        }
    }
    if (!have_tau) throw ConfigError("checkpoint missing tau");
    return ck;
}

Checkpoint load_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint: " + path);
    return load_checkpoint(f);
}

}  // namespace iwvi
