#include "hc/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "hc/rng.hpp"

namespace hc {

namespace {

// Flat parameter layout. Gate order: i, f, g, o.
struct Layout {
    size_t conv_w, conv_b;    // [3][h][F], [F]
    size_t lstm_wx, lstm_wh, lstm_b;  // [4][F][M], [4][M][M], [4][M]
    size_t dec_w, dec_b;      // [M][T*F], [T*F]
    size_t tconv_w, tconv_b;  // [3][F][h], [h]
    size_t total;
    size_t T;

    explicit Layout(const AeDims& d) {
        T = d.N / 2;
        size_t off = 0;
        conv_w = off; off += 3 * d.h * d.F;
        conv_b = off; off += d.F;
        lstm_wx = off; off += 4 * d.F * d.M;
        lstm_wh = off; off += 4 * d.M * d.M;
        lstm_b = off; off += 4 * d.M;
        dec_w = off; off += d.M * T * d.F;
        dec_b = off; off += T * d.F;
        tconv_w = off; off += 3 * d.F * d.h;
        tconv_b = off; off += d.h;
        total = off;
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Cache {
    std::vector<double> conv_pre;   // N x F
    std::vector<double> conv_act;   // N x F
    std::vector<double> pool;       // T x F
    std::vector<uint8_t> pool_arg;  // T x F (0 or 1; unused in mean-pool mode)
    // per step: gate activations and states
    std::vector<double> gi, gf, gg, go;  // T x M (post-activation)
    std::vector<double> cs, hs;          // T x M
    std::vector<double> y;               // M
    std::vector<double> dec_pre;         // T x F
    std::vector<double> xhat;            // N x h
};

void check_dims(const AutoencoderParams& p, const SessionMatrix& x) {
    if (x.rows != p.dims.N || x.cols != p.dims.h)
        throw DimMismatch("session matrix is " + std::to_string(x.rows) + "x" +
                          std::to_string(x.cols) + ", autoencoder expects " +
                          std::to_string(p.dims.N) + "x" + std::to_string(p.dims.h));
}

void forward(const AutoencoderParams& p, const SessionMatrix& x, Cache& c) {
    const auto& d = p.dims;
    const Layout L(d);
    const double* th = p.theta.data();
    const size_t N = d.N, h = d.h, F = d.F, M = d.M, T = L.T;
    const bool lin = p.linear_mode;

    c.conv_pre.assign(N * F, 0.0);
    c.conv_act.assign(N * F, 0.0);
    for (size_t t = 0; t < N; ++t) {
        for (size_t f = 0; f < F; ++f) {
            double acc = th[L.conv_b + f];
            for (size_t k = 0; k < 3; ++k) {
                size_t src = t + k;
                if (src < 1 || src - 1 >= N) continue;  // zero padding
                const double* xr = x.row(src - 1);
                const double* w = th + L.conv_w + (k * h) * F + f;
                for (size_t cc = 0; cc < h; ++cc) acc += w[cc * F] * xr[cc];
            }
            c.conv_pre[t * F + f] = acc;
            c.conv_act[t * F + f] = lin ? acc : std::max(0.0, acc);
        }
    }

    c.pool.assign(T * F, 0.0);
    c.pool_arg.assign(T * F, 0);
    for (size_t t = 0; t < T; ++t) {
        for (size_t f = 0; f < F; ++f) {
            double a = c.conv_act[(2 * t) * F + f];
            double b = c.conv_act[(2 * t + 1) * F + f];
            if (lin) {
                c.pool[t * F + f] = 0.5 * (a + b);
            } else if (b > a) {
                c.pool[t * F + f] = b;
                c.pool_arg[t * F + f] = 1;
            } else {
                c.pool[t * F + f] = a;
            }
        }
    }

    c.gi.assign(T * M, 0.0);
    c.gf.assign(T * M, 0.0);
    c.gg.assign(T * M, 0.0);
    c.go.assign(T * M, 0.0);
    c.cs.assign(T * M, 0.0);
    c.hs.assign(T * M, 0.0);
    std::vector<double> pre(4 * M);
    for (size_t t = 0; t < T; ++t) {
        const double* xt = &c.pool[t * F];
        const double* hprev = t > 0 ? &c.hs[(t - 1) * M] : nullptr;
        for (size_t g = 0; g < 4; ++g) {
            for (size_t m = 0; m < M; ++m) pre[g * M + m] = th[L.lstm_b + g * M + m];
            for (size_t f = 0; f < F; ++f) {
                double xv = xt[f];
                if (xv == 0.0) continue;
                const double* w = th + L.lstm_wx + (g * F + f) * M;
                for (size_t m = 0; m < M; ++m) pre[g * M + m] += w[m] * xv;
            }
            if (hprev) {
                for (size_t j = 0; j < M; ++j) {
                    double hv = hprev[j];
                    if (hv == 0.0) continue;
                    const double* w = th + L.lstm_wh + (g * M + j) * M;
                    for (size_t m = 0; m < M; ++m) pre[g * M + m] += w[m] * hv;
                }
            }
        }
        for (size_t m = 0; m < M; ++m) {
            double i_ = lin ? 1.0 : sigmoid(pre[0 * M + m]);
            double f_ = lin ? 1.0 : sigmoid(pre[1 * M + m]);
            double g_ = lin ? pre[2 * M + m] : std::tanh(pre[2 * M + m]);
            double o_ = lin ? 1.0 : sigmoid(pre[3 * M + m]);
            double cprev = t > 0 ? c.cs[(t - 1) * M + m] : 0.0;
            double cv = f_ * cprev + i_ * g_;
            double hv = lin ? cv : o_ * std::tanh(cv);
            c.gi[t * M + m] = i_;
            c.gf[t * M + m] = f_;
            c.gg[t * M + m] = g_;
            c.go[t * M + m] = o_;
            c.cs[t * M + m] = cv;
            c.hs[t * M + m] = hv;
        }
    }
    c.y.assign(M, 0.0);
    if (T > 0) std::copy_n(&c.hs[(T - 1) * M], M, c.y.begin());

    c.dec_pre.assign(T * F, 0.0);
    for (size_t u = 0; u < T * F; ++u) {
        double acc = th[L.dec_b + u];
        for (size_t m = 0; m < M; ++m) acc += th[L.dec_w + m * T * F + u] * c.y[m];
        c.dec_pre[u] = acc;
    }

    c.xhat.assign(N * h, 0.0);
    for (size_t t = 0; t < N; ++t) {
        for (size_t cc = 0; cc < h; ++cc) {
            double acc = th[L.tconv_b + cc];
            for (size_t k = 0; k < 3; ++k) {
                size_t src = t + k;
                if (src < 1 || src - 1 >= N) continue;
                size_t tau = (src - 1) / 2;  // nearest upsample
                const double* u = &c.dec_pre[tau * F];
                const double* w = th + L.tconv_w + (k * F) * h + cc;
                for (size_t f = 0; f < F; ++f) acc += w[f * h] * u[f];
            }
            c.xhat[t * h + cc] = acc;
        }
    }
}

double masked_mse(const SessionMatrix& x, const std::vector<double>& xhat) {
    if (x.len == 0) return 0.0;
    double s = 0.0;
    for (size_t t = 0; t < x.len; ++t) {
        for (size_t cc = 0; cc < x.cols; ++cc) {
            double diff = xhat[t * x.cols + cc] - x.row(t)[cc];
            s += diff * diff;
        }
    }
    return s / (double(x.len) * double(x.cols));
}

}  // namespace

AutoencoderParams init_autoencoder(const AeDims& dims, uint64_t seed, bool linear_mode) {
    if (dims.N < 2 || dims.N % 2 != 0) throw Error("autoencoder: N must be even and >= 2");
    AutoencoderParams p;
    p.dims = dims;
    p.seed = seed;
    p.linear_mode = linear_mode;
    Layout L(dims);
    p.theta.assign(L.total, 0.0);
    Rng rng = make_rng(derive_seed(seed, "ae-init"));
    const double scale = 0.08;
    for (auto& v : p.theta) v = (uniform01(rng) - 0.5) * 2.0 * scale;
    if (!linear_mode) {
        // forget-gate bias starts open
        for (size_t m = 0; m < dims.M; ++m) p.theta[L.lstm_b + 1 * dims.M + m] = 1.0;
    }
    return p;
}

std::vector<double> encode(const AutoencoderParams& params, const SessionMatrix& x) {
    check_dims(params, x);
    Cache c;
    forward(params, x, c);
    return c.y;
}

std::vector<double> decode(const AutoencoderParams& params, const std::vector<double>& y) {
    const auto& d = params.dims;
    if (y.size() != d.M) throw DimMismatch("embedding length != M");
    const Layout L(d);
    const double* th = params.theta.data();
    const size_t T = L.T;

    std::vector<double> dec_pre(T * d.F);
    for (size_t u = 0; u < T * d.F; ++u) {
        double acc = th[L.dec_b + u];
        for (size_t m = 0; m < d.M; ++m) acc += th[L.dec_w + m * T * d.F + u] * y[m];
        dec_pre[u] = acc;
    }
    std::vector<double> xhat(d.N * d.h, 0.0);
    for (size_t t = 0; t < d.N; ++t) {
        for (size_t cc = 0; cc < d.h; ++cc) {
            double acc = th[L.tconv_b + cc];
            for (size_t k = 0; k < 3; ++k) {
                size_t src = t + k;
                if (src < 1 || src - 1 >= d.N) continue;
                size_t tau = (src - 1) / 2;
                const double* u = &dec_pre[tau * d.F];
                const double* w = th + L.tconv_w + (k * d.F) * d.h + cc;
                for (size_t f = 0; f < d.F; ++f) acc += w[f * d.h] * u[f];
            }
            xhat[t * d.h + cc] = acc;
        }
    }
    return xhat;
}

double reconstruction_loss(const AutoencoderParams& params, const SessionMatrix& x) {
    check_dims(params, x);
    Cache c;
    forward(params, x, c);
    return masked_mse(x, c.xhat);
}

double loss_and_gradient(const AutoencoderParams& params, const SessionMatrix& x,
                         std::vector<double>* grad) {
    check_dims(params, x);
    const auto& d = params.dims;
    const Layout L(d);
    const double* th = params.theta.data();
    const size_t N = d.N, h = d.h, F = d.F, M = d.M, T = L.T;
    const bool lin = params.linear_mode;

    Cache c;
    forward(params, x, c);
    double loss = masked_mse(x, c.xhat);
    if (!grad) return loss;
    grad->assign(L.total, 0.0);
    if (x.len == 0) return loss;
    double* g = grad->data();

    // d loss / d xhat
    std::vector<double> dxhat(N * h, 0.0);
    const double norm = 2.0 / (double(x.len) * double(h));
    for (size_t t = 0; t < x.len; ++t) {
        for (size_t cc = 0; cc < h; ++cc) {
            dxhat[t * h + cc] = norm * (c.xhat[t * h + cc] - x.row(t)[cc]);
        }
    }

    // transposed conv
    std::vector<double> ddec(T * F, 0.0);
    for (size_t t = 0; t < N; ++t) {
        for (size_t cc = 0; cc < h; ++cc) {
            double dv = dxhat[t * h + cc];
            if (dv == 0.0) continue;
            g[L.tconv_b + cc] += dv;
            for (size_t k = 0; k < 3; ++k) {
                size_t src = t + k;
                if (src < 1 || src - 1 >= N) continue;
                size_t tau = (src - 1) / 2;
                const double* u = &c.dec_pre[tau * F];
                for (size_t f = 0; f < F; ++f) {
                    g[L.tconv_w + (k * F + f) * h + cc] += dv * u[f];
                    ddec[tau * F + f] += dv * th[L.tconv_w + (k * F + f) * h + cc];
                }
            }
        }
    }

    // decoder projection
    std::vector<double> dy(M, 0.0);
    for (size_t u = 0; u < T * F; ++u) {
        double dv = ddec[u];
        g[L.dec_b + u] += dv;
        for (size_t m = 0; m < M; ++m) {
            g[L.dec_w + m * T * F + u] += dv * c.y[m];
            dy[m] += dv * th[L.dec_w + m * T * F + u];
        }
    }

    // LSTM backward through time
    std::vector<double> dh(M, 0.0), dc(M, 0.0), dpool(T * F, 0.0);
    std::vector<double> dpre(4 * M);
    if (T > 0) dh = dy;
    for (size_t t = T; t-- > 0;) {
        std::fill(dpre.begin(), dpre.end(), 0.0);
        for (size_t m = 0; m < M; ++m) {
            double cv = c.cs[t * M + m];
            double i_ = c.gi[t * M + m], f_ = c.gf[t * M + m];
            double gg_ = c.gg[t * M + m], o_ = c.go[t * M + m];
            double cprev = t > 0 ? c.cs[(t - 1) * M + m] : 0.0;
            double dcm;
            if (lin) {
                dcm = dc[m] + dh[m];  // h = c
                dpre[2 * M + m] = dcm;  // g identity
            } else {
                double tc = std::tanh(cv);
                dpre[3 * M + m] = dh[m] * tc * o_ * (1.0 - o_);
                dcm = dc[m] + dh[m] * o_ * (1.0 - tc * tc);
                dpre[0 * M + m] = dcm * gg_ * i_ * (1.0 - i_);
                dpre[1 * M + m] = dcm * cprev * f_ * (1.0 - f_);
                dpre[2 * M + m] = dcm * i_ * (1.0 - gg_ * gg_);
            }
            dc[m] = dcm * f_;  // to c_{t-1}
        }
        // weight grads and input/hidden backprop
        const double* xt = &c.pool[t * F];
        const double* hprev = t > 0 ? &c.hs[(t - 1) * M] : nullptr;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (size_t gate = 0; gate < 4; ++gate) {
            const double* dp = &dpre[gate * M];
            for (size_t m = 0; m < M; ++m) g[L.lstm_b + gate * M + m] += dp[m];
            for (size_t f = 0; f < F; ++f) {
                double xv = xt[f];
                double acc = 0.0;
                const double* w = th + L.lstm_wx + (gate * F + f) * M;
                double* gw = g + L.lstm_wx + (gate * F + f) * M;
                for (size_t m = 0; m < M; ++m) {
                    gw[m] += dp[m] * xv;
                    acc += dp[m] * w[m];
                }
                dpool[t * F + f] += acc;
            }
            if (hprev) {
                for (size_t j = 0; j < M; ++j) {
                    double hv = hprev[j];
                    double acc = 0.0;
                    const double* w = th + L.lstm_wh + (gate * M + j) * M;
                    double* gw = g + L.lstm_wh + (gate * M + j) * M;
                    for (size_t m = 0; m < M; ++m) {
                        gw[m] += dp[m] * hv;
                        acc += dp[m] * w[m];
                    }
                    dh[j] += acc;
                }
            }
        }
    }

    // pool and conv backward
    std::vector<double> dact(N * F, 0.0);
    for (size_t t = 0; t < T; ++t) {
        for (size_t f = 0; f < F; ++f) {
            double dv = dpool[t * F + f];
            if (lin) {
                dact[(2 * t) * F + f] += 0.5 * dv;
                dact[(2 * t + 1) * F + f] += 0.5 * dv;
            } else {
                dact[(2 * t + c.pool_arg[t * F + f]) * F + f] += dv;
            }
        }
    }
    for (size_t t = 0; t < N; ++t) {
        for (size_t f = 0; f < F; ++f) {
            double dv = dact[t * F + f];
            if (!lin && c.conv_pre[t * F + f] <= 0.0) continue;  // ReLU
            if (dv == 0.0) continue;
            g[L.conv_b + f] += dv;
            for (size_t k = 0; k < 3; ++k) {
                size_t src = t + k;
                if (src < 1 || src - 1 >= N) continue;
                const double* xr = x.row(src - 1);
                double* gw = g + L.conv_w + (k * h) * F + f;
                for (size_t cc = 0; cc < h; ++cc) gw[cc * F] += dv * xr[cc];
            }
        }
    }
    return loss;
}

AeTrainResult train_autoencoder(const std::vector<SessionMatrix>& sessions, const AeDims& dims,
                                const AeTrainConfig& cfg) {
    if (sessions.empty()) throw EmptyCorpus("train_autoencoder");
    AeTrainResult result;
    result.params = init_autoencoder(dims, cfg.seed);
    Layout L(dims);

    std::vector<double> m(L.total, 0.0), v(L.total, 0.0), grad(L.total), acc(L.total);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    Rng rng = make_rng(derive_seed(cfg.seed, "ae-train"));

    std::vector<size_t> order(sessions.size());
    std::iota(order.begin(), order.end(), 0);
    size_t cursor = order.size();

    for (uint32_t step = 0; step < cfg.steps; ++step) {
        std::fill(acc.begin(), acc.end(), 0.0);
        double batch_loss = 0.0;
        uint32_t batch = std::min<size_t>(cfg.batch, sessions.size());
        for (uint32_t b = 0; b < batch; ++b) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const SessionMatrix& x = sessions[order[cursor++]];
            batch_loss += loss_and_gradient(result.params, x, &grad);
            for (size_t i = 0; i < L.total; ++i) acc[i] += grad[i];
        }
        batch_loss /= batch;
        result.loss_trace.push_back(batch_loss);

        double t = double(step) + 1.0;
        double correction = std::sqrt(1.0 - std::pow(b2, t)) / (1.0 - std::pow(b1, t));
        for (size_t i = 0; i < L.total; ++i) {
            double gi = acc[i] / batch;
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            result.params.theta[i] -= cfg.lr * correction * m[i] / (std::sqrt(v[i]) + eps);
        }
    }
    return result;
}

double gradient_check(const AutoencoderParams& params, const SessionMatrix& x, double eps,
                      size_t n_samples, uint64_t seed) {
    std::vector<double> analytic;
    loss_and_gradient(params, x, &analytic);

    std::vector<size_t> idx(params.theta.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    n_samples = std::min(n_samples, idx.size());

    AutoencoderParams probe = params;
    double max_rel = 0.0;
    for (size_t s = 0; s < n_samples; ++s) {
        size_t i = idx[s];
        double orig = probe.theta[i];
        probe.theta[i] = orig + eps;
        double lp = reconstruction_loss(probe, x);
        probe.theta[i] = orig - eps;
        double lm = reconstruction_loss(probe, x);
        probe.theta[i] = orig;
        double fd = (lp - lm) / (2.0 * eps);
        double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
    }
    return max_rel;
}

SessionMatrix embed_session_matrix(const W2VModel& w2v, const std::vector<TokenId>& tokens,
                                   size_t n_rows) {
    if (n_rows < 1) throw Error("embed_session_matrix: N must be >= 1");
    SessionMatrix sm;
    sm.rows = n_rows;
    sm.cols = w2v.dim;
    sm.len = std::min(tokens.size(), n_rows);
    sm.x.assign(n_rows * w2v.dim, 0.0);
    for (size_t t = 0; t < sm.len; ++t) {
        const float* wv = w2v.vec(tokens[t]);
        for (size_t c = 0; c < w2v.dim; ++c) sm.x[t * w2v.dim + c] = double(wv[c]);
    }
    return sm;
}

std::vector<SessionEmbedding> encode_corpus(const W2VModel& w2v, const AutoencoderParams& params,
                                            const std::vector<RawDocument>& sessions,
                                            const Vocabulary& vocab, int threads) {
    std::vector<SessionEmbedding> out(sessions.size());
    auto work = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            auto ids = encode_tokens(sessions[i].tokens, vocab);
            SessionMatrix sm = embed_session_matrix(w2v, ids, params.dims.N);
            out[i].key = sessions[i].key;
            out[i].ts = sessions[i].ts;
            out[i].y = encode(params, sm);
        }
    };
    if (threads <= 1 || sessions.size() < 2) {
        work(0, sessions.size());
    } else {
        size_t n = sessions.size();
        size_t t = std::min<size_t>(threads, n);
        std::vector<std::thread> pool;
        for (size_t i = 0; i < t; ++i) pool.emplace_back(work, n * i / t, n * (i + 1) / t);
        for (auto& th : pool) th.join();
    }
    return out;
}

}  // namespace hc
