#include "rare/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rare/kernels.hpp"
#include "rare/rng.hpp"

namespace rare {

PairBuildResult build_pairs(const std::vector<ObjectAcquisitions>& dataset) {
    PairBuildResult out;
    for (const auto& obj : dataset) {
        if (obj.images.size() != obj.acquisition_ids.size())
            throw std::invalid_argument("acquisition ids and images misaligned");
        if (obj.images.size() < 2) {
            ++out.skipped_objects;
            continue;
        }
        for (std::size_t i = 0; i < obj.images.size(); ++i)
            for (std::size_t j = 0; j < obj.images.size(); ++j) {
                if (i == j) continue;
                check_same_dims(obj.images[i], obj.images[j], "pair images");
                out.pairs.push_back({obj.images[i], obj.images[j], obj.object_id,
                                     obj.acquisition_ids[i], obj.acquisition_ids[j]});
            }
    }
    return out;
}

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    if (batch < 1) throw std::invalid_argument("batch size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
}

double mixed_loss(const ComplexImage& pred, const ComplexImage& target, double alpha) {
    check_same_dims(pred, target, "mixed_loss");
    const std::size_t n = pred.data.size();
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double re = pred.data[i].real() - target.data[i].real();
        const double im = pred.data[i].imag() - target.data[i].imag();
        l1 += std::abs(re) + std::abs(im);
        l2 += re * re + im * im;
    }
    const double entries = 2.0 * double(n);
    return alpha * (l1 / entries) + (1.0 - alpha) * (l2 / entries);
}

NetGrads NetGrads::zeros_like(const NetWeights& net) {
    NetGrads g;
    g.w.reserve(net.layers.size());
    g.b.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.w.emplace_back(l.weights.size(), 0.0);
        g.b.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void NetGrads::accumulate(const NetGrads& other, double scale) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (std::size_t i = 0; i < w[l].size(); ++i) w[l][i] += scale * other.w[l][i];
        for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += scale * other.b[l][i];
    }
}

void NetGrads::scale(double s) {
    for (auto& v : w)
        for (double& x : v) x *= s;
    for (auto& v : b)
        for (double& x : v) x *= s;
}

namespace {

// Forward pass retaining the input of every layer (post-activation of the
// previous one); acts[0] is the 2-channel input, acts[L] the network output.
std::vector<std::vector<double>> forward_acts(const NetWeights& net,
                                              const std::vector<double>& input, int P, int X,
                                              int Y) {
    const std::size_t vol = std::size_t(P) * X * Y;
    std::vector<std::vector<double>> acts(net.layers.size() + 1);
    acts[0] = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        acts[l + 1].assign(std::size_t(layer.shape.out_ch) * vol, 0.0);
        kern::conv3d_forward(layer.shape, layer.weights.data(), layer.bias.data(),
                             acts[l].data(), P, X, Y, acts[l + 1].data());
        if (layer.act == Activation::relu)
            for (double& v : acts[l + 1]) v = std::max(0.0, v);
    }
    return acts;
}

} // namespace

std::pair<double, NetGrads> loss_gradient(const NetWeights& net,
                                          const std::vector<const TrainPair*>& batch,
                                          double alpha) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    net.validate();
    NetGrads total = NetGrads::zeros_like(net);
    NetGrads sample = NetGrads::zeros_like(net);
    double loss_sum = 0.0;
    const double bs = double(batch.size());

    for (const TrainPair* pair : batch) {
        const ImageDims dims = pair->input.dims;
        check_same_dims(pair->input, pair->target, "train pair");
        const int P = dims.phases, X = dims.nx, Y = dims.ny;
        const std::size_t vol = dims.total();

        const std::vector<double> in_ch = image_to_channels(pair->input);
        const std::vector<double> tg_ch = image_to_channels(pair->target);
        auto acts = forward_acts(net, in_ch, P, X, Y);
        const std::vector<double>& out = acts.back();

        // mixed loss over the 2*vol real entries and its gradient
        const double entries = double(out.size());
        double l1 = 0.0, l2 = 0.0;
        std::vector<double> dout(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double r = out[i] - tg_ch[i];
            l1 += std::abs(r);
            l2 += r * r;
            const double sgn = (r > 0.0) ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
            dout[i] = alpha * sgn / entries + (1.0 - alpha) * 2.0 * r / entries;
        }
        loss_sum += alpha * (l1 / entries) + (1.0 - alpha) * (l2 / entries);

        // backward through the stack
        std::vector<double> din;
        for (int l = int(net.layers.size()) - 1; l >= 0; --l) {
            const auto& layer = net.layers[l];
            kern::conv3d_backward_weights(layer.shape, acts[l].data(), dout.data(), P, X, Y,
                                          sample.w[l].data(), sample.b[l].data());
            if (l > 0) {
                din.assign(std::size_t(layer.shape.in_ch) * vol, 0.0);
                kern::conv3d_backward_input(layer.shape, layer.weights.data(), dout.data(), P, X,
                                            Y, din.data());
                // activation mask of the previous layer (acts[l] is its output)
                if (net.layers[l - 1].act == Activation::relu)
                    for (std::size_t i = 0; i < din.size(); ++i)
                        if (acts[l][i] <= 0.0) din[i] = 0.0;
                dout.swap(din);
            }
        }
        total.accumulate(sample, 1.0 / bs);
    }
    return {loss_sum / bs, std::move(total)};
}

AdamState AdamState::zeros_like(const NetWeights& net) {
    AdamState s;
    s.m = NetGrads::zeros_like(net);
    s.v = NetGrads::zeros_like(net);
    return s;
}

void adam_step(NetWeights& net, AdamState& state, const NetGrads& grads, const TrainConfig& cfg) {
    cfg.validate();
    if (grads.w.size() != net.layers.size() || state.m.w.size() != net.layers.size())
        throw std::invalid_argument("gradient/state shape mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    auto update = [&](double& w, double& m, double& v, double g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        w -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        if (grads.w[l].size() != layer.weights.size() || grads.b[l].size() != layer.bias.size())
            throw std::invalid_argument("gradient shape mismatch at a layer");
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            update(layer.weights[i], state.m.w[l][i], state.v.w[l][i], grads.w[l][i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i)
            update(layer.bias[i], state.m.b[l][i], state.v.b[l][i], grads.b[l][i]);
    }
}

TrainResult train_on_pairs(const std::vector<TrainPair>& pairs, const NetArch& arch,
                           const TrainConfig& cfg, const std::optional<NetWeights>& init) {
    cfg.validate();
    if (pairs.empty()) throw std::invalid_argument("training requires at least one pair");
    TrainResult res;
    res.weights = init ? *init : init_net(arch, cfg.seed);
    res.weights.validate();
    AdamState state = AdamState::zeros_like(res.weights);
    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

    std::vector<int> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = int(order.size()) - 1; i > 0; --i) {
            const int j = int(shuffle_rng.uniform01() * (i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        double loss_acc = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            std::vector<const TrainPair*> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch); ++i)
                batch.push_back(&pairs[order[i]]);
            auto [loss, grads] = loss_gradient(res.weights, batch, cfg.alpha);
            if (!std::isfinite(loss))
                throw std::runtime_error("training diverged (non-finite loss) at epoch " +
                                         std::to_string(epoch));
            adam_step(res.weights, state, grads, cfg);
            loss_acc += loss * double(batch.size());
            seen += batch.size();
        }
        res.epoch_loss.push_back(loss_acc / double(seen));
    }
    return res;
}

TrainResult train(const std::vector<ObjectAcquisitions>& dataset, const NetArch& arch,
                  const TrainConfig& cfg) {
    PairBuildResult pb = build_pairs(dataset);
    return train_on_pairs(pb.pairs, arch, cfg);
}

} // namespace rare
