// Copyright 2026-present the livemod project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "livemod/contrastive.h"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <random>
#include <set>

#include "livemod/errors.h"
#include "livemod/optim.h"

namespace livemod {

namespace {

constexpr double kUnitTolerance = 1e-6;

Eigen::MatrixXd
rows_of(std::span<const ViewPair> data,
        std::span<const size_t> idx,
        std::vector<double> ViewPair::*field) {
    const auto dim = static_cast<Eigen::Index>((data[idx[0]].*field).size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), dim);
    for (size_t r = 0; r < idx.size(); ++r) {
        const auto& v = data[idx[r]].*field;
        if (static_cast<Eigen::Index>(v.size()) != dim) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "views must share one dimension");
        }
        m.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
    }
    return m;
}

Eigen::MatrixXd
rows_of(std::span<const AlignedPair> data,
        std::span<const size_t> idx,
        std::vector<double> AlignedPair::*field) {
    const auto dim = static_cast<Eigen::Index>((data[idx[0]].*field).size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(idx.size()), dim);
    for (size_t r = 0; r < idx.size(); ++r) {
        const auto& v = data[idx[r]].*field;
        if (static_cast<Eigen::Index>(v.size()) != dim) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "views must share one dimension");
        }
        m.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), dim);
    }
    return m;
}

std::vector<size_t>
sample_batch(std::mt19937_64& rng, size_t n, size_t batch) {
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::vector<size_t> idx(batch);
    for (auto& i : idx) {
        i = pick(rng);
    }
    return idx;
}

// Up to `batch` indices whose latents are pairwise distinct.
std::vector<size_t>
sample_distinct_latents(std::mt19937_64& rng, std::span<const AlignedPair> data, size_t batch) {
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::set<uint64_t> seen;
    std::vector<size_t> idx;
    for (size_t i : order) {
        if (seen.insert(data[i].latent).second) {
            idx.push_back(i);
            if (idx.size() == batch) {
                break;
            }
        }
    }
    return idx;
}

void
check_moco_inputs(std::span<const ViewPair> data, const MocoConfig& cfg) {
    std::set<uint64_t> latents;
    for (const auto& d : data) {
        latents.insert(d.latent);
    }
    if (latents.size() < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "moco needs at least two distinct latents");
    }
    if (cfg.steps < 1 || cfg.batch < 1) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "moco needs steps >= 1 and batch >= 1");
    }
    cfg.ms.validate();
}

struct MocoStep {
    double loss{0.0};
    Eigen::VectorXd grad;
    Eigen::MatrixXd keys;
    std::vector<uint64_t> labels;
};

// Loss and query-encoder gradient for one batch; does not touch the pair or bank.
MocoStep
moco_objective(const MomentumPair& pair,
               const MemoryBank& bank,
               std::span<const ViewPair> data,
               std::span<const size_t> idx,
               const MsParams& ms) {
    MocoStep out;
    Encoder::Trace trace;
    Eigen::MatrixXd q = pair.query.forward(rows_of(data, idx, &ViewPair::view1), &trace);
    out.keys = pair.key.encode(rows_of(data, idx, &ViewPair::view2));
    for (size_t i : idx) {
        out.labels.push_back(data[i].latent);
    }

    const Eigen::Index b = q.rows();
    const auto bank_rows = static_cast<Eigen::Index>(bank.size());
    Eigen::MatrixXd cols(b + bank_rows, q.cols());
    cols.topRows(b) = out.keys;
    std::vector<uint64_t> col_labels = out.labels;
    if (bank_rows > 0) {
        cols.bottomRows(bank_rows) = bank.matrix();
        auto bl = bank.labels();
        col_labels.insert(col_labels.end(), bl.begin(), bl.end());
    }
    const Eigen::Index c = cols.rows();

    Eigen::MatrixXd sim = q * cols.transpose();
    std::vector<double> s(static_cast<size_t>(b * c));
    std::vector<uint8_t> pos(s.size(), 0), neg(s.size(), 0);
    for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            size_t at = static_cast<size_t>(i * c + j);
            s[at] = std::clamp(sim(i, j), -1.0, 1.0);
            bool same = col_labels[static_cast<size_t>(j)] != MemoryBank::kUnlabeled &&
                        col_labels[static_cast<size_t>(j)] == out.labels[static_cast<size_t>(i)];
            (same ? pos : neg)[at] = 1;
        }
    }
    SimilarityMatrix matrix(static_cast<size_t>(b), static_cast<size_t>(c), std::move(s),
                            std::move(pos), std::move(neg), SimilarityMatrix::Kind::CROSS);
    auto ms_result = multi_similarity_loss_with_grad(matrix, ms);
    out.loss = ms_result.loss;

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(
        ms_result.grad.data(), b, c);
    Eigen::MatrixXd d_q = g * cols;
    out.grad = pair.query.backward(trace, d_q);
    return out;
}

struct ClipStep {
    double loss{0.0};
    Eigen::VectorXd grad_a;
    Eigen::VectorXd grad_b;
};

ClipStep
clip_objective(const Encoder& a,
               const Encoder& b,
               const Eigen::MatrixXd& xa,
               const Eigen::MatrixXd& xb,
               double tau) {
    Encoder::Trace ta, tb;
    Eigen::MatrixXd ya = a.forward(xa, &ta);
    Eigen::MatrixXd yb = b.forward(xb, &tb);
    auto r = clip_nt_xent_with_grad(ya, yb, tau);
    return {r.loss, a.backward(ta, r.grad_v), b.backward(tb, r.grad_w)};
}

Eigen::MatrixXd
random_orthonormal(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            g(i, j) = normal(rng);
        }
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

}  // namespace

MemoryBank::MemoryBank(size_t capacity, size_t dim)
    : capacity_(capacity),
      dim_(dim),
      slots_(static_cast<Eigen::Index>(capacity), static_cast<Eigen::Index>(dim)),
      labels_(capacity, kUnlabeled) {
    if (capacity == 0 || dim == 0) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "memory bank needs capacity and dim >= 1");
    }
}

void
MemoryBank::push(const Eigen::MatrixXd& keys, std::span<const uint64_t> labels) {
    if (static_cast<size_t>(keys.cols()) != dim_) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "memory bank key dim mismatch");
    }
    if (!labels.empty() && labels.size() != static_cast<size_t>(keys.rows())) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "memory bank labels must match keys");
    }
    for (Eigen::Index r = 0; r < keys.rows(); ++r) {
        if (std::abs(keys.row(r).norm() - 1.0) > kUnitTolerance) {
            throw_error(ErrorCode::INVALID_ARGUMENT, "memory bank keys must be unit-norm");
        }
    }
    // only the last `capacity_` rows can survive
    Eigen::Index first = std::max<Eigen::Index>(0, keys.rows() - static_cast<Eigen::Index>(capacity_));
    for (Eigen::Index r = first; r < keys.rows(); ++r) {
        slots_.row(static_cast<Eigen::Index>(cursor_)) = keys.row(r);
        labels_[cursor_] = labels.empty() ? kUnlabeled : labels[static_cast<size_t>(r)];
        cursor_ = (cursor_ + 1) % capacity_;
        size_ = std::min(size_ + 1, capacity_);
    }
}

Eigen::MatrixXd
MemoryBank::matrix() const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(size_), static_cast<Eigen::Index>(dim_));
    size_t oldest = size_ < capacity_ ? 0 : cursor_;
    for (size_t i = 0; i < size_; ++i) {
        out.row(static_cast<Eigen::Index>(i)) =
            slots_.row(static_cast<Eigen::Index>((oldest + i) % capacity_));
    }
    return out;
}

std::vector<uint64_t>
MemoryBank::labels() const {
    std::vector<uint64_t> out(size_);
    size_t oldest = size_ < capacity_ ? 0 : cursor_;
    for (size_t i = 0; i < size_; ++i) {
        out[i] = labels_[(oldest + i) % capacity_];
    }
    return out;
}

MomentumPair
MomentumPair::create(const EncoderShape& shape, uint64_t seed, double m) {
    if (!(m >= 0.0 && m <= 1.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "momentum must lie in [0, 1]");
    }
    Encoder q(shape, seed);
    return MomentumPair{q, q, m};
}

void
momentum_update(MomentumPair& pair) {
    momentum_update(pair.key, pair.query, pair.m);
}

MocoResult
train_moco(std::span<const ViewPair> data, MomentumPair& pair, MemoryBank& bank, const MocoConfig& cfg) {
    check_moco_inputs(data, cfg);
    if (bank.dim() != pair.query.shape().output_dim) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "memory bank dim must match encoder output");
    }
    std::mt19937_64 rng(cfg.seed);
    Adam adam(pair.query.params().size(), cfg.lr);
    std::vector<double> trace;
    trace.reserve(cfg.steps);
    for (size_t step = 0; step < cfg.steps; ++step) {
        auto idx = sample_batch(rng, data.size(), cfg.batch);
        auto r = moco_objective(pair, bank, data, idx, cfg.ms);
        adam.step(pair.query.mutable_params(), r.grad);
        momentum_update(pair);
        bank.push(r.keys, r.labels);
        trace.push_back(r.loss);
    }
    return {pair.query, std::move(trace)};
}

ClipResult
train_clip_alignment(std::span<const AlignedPair> data, Encoder a, Encoder b, const ClipConfig& cfg) {
    if (!(cfg.tau > 0.0)) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "tau must be > 0");
    }
    if (cfg.batch < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip alignment needs batch >= 2");
    }
    std::set<uint64_t> latents;
    for (const auto& d : data) {
        latents.insert(d.latent);
    }
    if (latents.size() < 2) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "clip alignment needs two distinct latents");
    }
    std::mt19937_64 rng(cfg.seed);
    Adam adam_a(a.params().size(), cfg.lr);
    Adam adam_b(b.params().size(), cfg.lr);
    std::vector<double> trace;
    trace.reserve(cfg.steps);
    for (size_t step = 0; step < cfg.steps; ++step) {
        auto idx = sample_distinct_latents(rng, data, cfg.batch);
        auto r = clip_objective(a, b, rows_of(data, idx, &AlignedPair::a),
                                rows_of(data, idx, &AlignedPair::b), cfg.tau);
        adam_a.step(a.mutable_params(), r.grad_a);
        adam_b.step(b.mutable_params(), r.grad_b);
        trace.push_back(r.loss);
    }
    return {std::move(a), std::move(b), std::move(trace)};
}

ContrastiveTask::ContrastiveTask(const ContrastiveTaskConfig& cfg) : cfg_(cfg) {
    if (cfg.latent_dim == 0 || cfg.latent_dim > cfg.input_dim ||
        cfg.nuisance_rank > cfg.input_dim) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "contrastive task dims are inconsistent");
    }
    const auto in = static_cast<Eigen::Index>(cfg.input_dim);
    for (int m = 0; m < 2; ++m) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<uint64_t>(m)));
        mix_[m] = random_orthonormal(rng, in, static_cast<Eigen::Index>(cfg.latent_dim));
        nuisance_[m] = random_orthonormal(rng, in, static_cast<Eigen::Index>(cfg.nuisance_rank));
    }
}

std::vector<double>
ContrastiveTask::view(int modality, uint64_t latent, uint64_t view_seed) const {
    if (modality != 0 && modality != 1) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "modality must be 0 or 1");
    }
    auto base = synthetic_base(latent, cfg_.latent_dim);
    Eigen::Map<const Eigen::VectorXd> z(base.values().data(), static_cast<Eigen::Index>(base.dim()));
    Eigen::VectorXd x = mix_[modality] * z;

    std::mt19937_64 rng(mix_seed(mix_seed(cfg_.seed, latent), mix_seed(view_seed, modality)));
    std::normal_distribution<double> normal(0.0, 1.0);
    if (cfg_.nuisance_rank > 0) {
        Eigen::VectorXd g(static_cast<Eigen::Index>(cfg_.nuisance_rank));
        double s = cfg_.nuisance_scale / std::sqrt(static_cast<double>(cfg_.nuisance_rank));
        for (auto& v : g) {
            v = s * normal(rng);
        }
        x += nuisance_[modality] * g;
    }
    double js = cfg_.jitter / std::sqrt(static_cast<double>(cfg_.input_dim));
    for (auto& v : x) {
        v += js * normal(rng);
    }
    return std::vector<double>(x.data(), x.data() + x.size());
}

Eigen::MatrixXd
ContrastiveTask::views(int modality, std::span<const uint64_t> latents, uint64_t salt) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(latents.size()),
                        static_cast<Eigen::Index>(cfg_.input_dim));
    for (size_t i = 0; i < latents.size(); ++i) {
        auto v = view(modality, latents[i], mix_seed(latents[i], salt));
        out.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    return out;
}

double
latent_recall_one_at_k(const Eigen::MatrixXd& queries,
                       std::span<const uint64_t> query_latents,
                       const Eigen::MatrixXd& gallery,
                       std::span<const uint64_t> gallery_latents,
                       size_t k) {
    if (static_cast<size_t>(queries.rows()) != query_latents.size() ||
        static_cast<size_t>(gallery.rows()) != gallery_latents.size() || queries.rows() == 0 ||
        k == 0 || queries.cols() != gallery.cols()) {
        throw_error(ErrorCode::INVALID_ARGUMENT, "retrieval evaluation shapes are inconsistent");
    }
    Eigen::MatrixXd sim = queries * gallery.transpose();
    std::vector<size_t> order(static_cast<size_t>(gallery.rows()));
    size_t hits = 0;
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        std::iota(order.begin(), order.end(), 0);
        size_t top = std::min(k, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<long>(top), order.end(),
                          [&](size_t a, size_t b) {
                              double sa = sim(q, static_cast<Eigen::Index>(a));
                              double sb = sim(q, static_cast<Eigen::Index>(b));
                              return sa > sb || (sa == sb && a < b);
                          });
        for (size_t i = 0; i < top; ++i) {
            if (gallery_latents[order[i]] == query_latents[static_cast<size_t>(q)]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(queries.rows());
}

AblationResult
run_contrastive_ablation(const AblationConfig& cfg, uint64_t seed) {
    ContrastiveTaskConfig task_cfg = cfg.task;
    task_cfg.seed = mix_seed(cfg.task.seed, seed);
    ContrastiveTask task(task_cfg);
    EncoderShape shape = cfg.shape;
    shape.input_dim = task_cfg.input_dim;

    std::vector<ViewPair> data[2];
    std::vector<AlignedPair> pairs;
    for (uint64_t latent = 0; latent < cfg.train_latents; ++latent) {
        for (uint64_t s = 0; s < cfg.samples_per_latent; ++s) {
            for (int m = 0; m < 2; ++m) {
                data[m].push_back({latent, task.view(m, latent, mix_seed(seed, 2 * s)),
                                   task.view(m, latent, mix_seed(seed, 2 * s + 1))});
            }
            pairs.push_back({latent, data[0].back().view1, data[1].back().view1});
        }
    }

    std::vector<uint64_t> eval_latents;
    for (uint64_t i = 0; i < cfg.eval_latents; ++i) {
        eval_latents.push_back(1'000'000 + i);
    }
    Eigen::MatrixXd eval_queries = task.views(0, eval_latents, mix_seed(seed, 0xA11CE));
    std::vector<uint64_t> gallery_latents;
    Eigen::MatrixXd gallery(static_cast<Eigen::Index>(cfg.eval_latents * cfg.gallery_views),
                            static_cast<Eigen::Index>(task_cfg.input_dim));
    for (size_t g = 0; g < cfg.gallery_views; ++g) {
        gallery.middleRows(static_cast<Eigen::Index>(g * cfg.eval_latents),
                           static_cast<Eigen::Index>(cfg.eval_latents)) =
            task.views(1, eval_latents, mix_seed(seed, 0xB0B + g));
        gallery_latents.insert(gallery_latents.end(), eval_latents.begin(), eval_latents.end());
    }
    auto cross_recall = [&](const Encoder& a, const Encoder& b) {
        return latent_recall_one_at_k(a.encode(eval_queries), eval_latents, b.encode(gallery),
                                      gallery_latents, cfg.k);
    };

    const uint64_t seed_a = mix_seed(seed, 0xA);
    const uint64_t seed_b = mix_seed(seed, 0xB);
    AblationResult result;
    result.seed = seed;
    result.untrained = cross_recall(Encoder(shape, seed_a), Encoder(shape, seed_b));

    // MoCo per modality, trained independently
    MomentumPair moco[2] = {MomentumPair::create(shape, seed_a, cfg.momentum),
                            MomentumPair::create(shape, seed_b, cfg.momentum)};
    for (int m = 0; m < 2; ++m) {
        MemoryBank bank(cfg.bank_size, shape.output_dim);
        MocoConfig mc = cfg.moco;
        mc.seed = mix_seed(seed, 0x300 + static_cast<uint64_t>(m));
        auto r = train_moco(data[m], moco[m], bank, mc);
        if (m == 0) {
            result.moco_loss = std::move(r.loss_trace);
        }
    }
    result.moco_only = cross_recall(moco[0].query, moco[1].query);

    // MoCo per modality plus CLIP between the two query encoders
    MomentumPair joint[2] = {MomentumPair::create(shape, seed_a, cfg.momentum),
                             MomentumPair::create(shape, seed_b, cfg.momentum)};
    MemoryBank banks[2] = {MemoryBank(cfg.bank_size, shape.output_dim),
                           MemoryBank(cfg.bank_size, shape.output_dim)};
    Adam adams[2] = {Adam(joint[0].query.params().size(), cfg.moco.lr),
                     Adam(joint[1].query.params().size(), cfg.moco.lr)};
    std::mt19937_64 rngs[2] = {std::mt19937_64(mix_seed(seed, 0x300)),
                               std::mt19937_64(mix_seed(seed, 0x301))};
    std::mt19937_64 clip_rng(mix_seed(seed, 0x400));
    for (int m = 0; m < 2; ++m) {
        check_moco_inputs(data[m], cfg.moco);
    }
    for (size_t step = 0; step < cfg.moco.steps; ++step) {
        MocoStep ms[2];
        for (int m = 0; m < 2; ++m) {
            auto idx = sample_batch(rngs[m], data[m].size(), cfg.moco.batch);
            ms[m] = moco_objective(joint[m], banks[m], data[m], idx, cfg.moco.ms);
        }
        auto idx = sample_distinct_latents(clip_rng, pairs, cfg.clip.batch);
        auto cs = clip_objective(joint[0].query, joint[1].query, rows_of(pairs, idx, &AlignedPair::a),
                                 rows_of(pairs, idx, &AlignedPair::b), cfg.clip.tau);
        adams[0].step(joint[0].query.mutable_params(), ms[0].grad + cfg.clip_weight * cs.grad_a);
        adams[1].step(joint[1].query.mutable_params(), ms[1].grad + cfg.clip_weight * cs.grad_b);
        for (int m = 0; m < 2; ++m) {
            momentum_update(joint[m]);
            banks[m].push(ms[m].keys, ms[m].labels);
        }
        result.joint_loss.push_back(ms[0].loss + ms[1].loss + cfg.clip_weight * cs.loss);
    }
    result.moco_clip = cross_recall(joint[0].query, joint[1].query);
    return result;
}

std::string
ablation_to_json(std::span<const AblationResult> results) {
    auto decimate = [](const std::vector<double>& trace) {
        nlohmann::json arr = nlohmann::json::array();
        for (size_t i = 0; i < trace.size(); i += 50) {
            arr.push_back({{"step", i}, {"loss", trace[i]}});
        }
        return arr;
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        rows.push_back({{"seed", r.seed},
                        {"recall_one_untrained", r.untrained},
                        {"recall_one_moco", r.moco_only},
                        {"recall_one_moco_clip", r.moco_clip},
                        {"moco_loss", decimate(r.moco_loss)},
                        {"joint_loss", decimate(r.joint_loss)}});
    }
    return rows.dump(2) + "\n";
}

}  // namespace livemod
