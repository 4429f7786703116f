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


// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Tolerances and runtime budgets are fixed below.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/core.h>

#include "aggregation_oracle.h"
#include "livemod/aggregation.h"
#include "livemod/contrastive.h"
#include "livemod/distill.h"
#include "livemod/errors.h"
#include "livemod/evalkit.h"
#include "livemod/file_io.h"
#include "livemod/losses.h"
#include "livemod/pipeline.h"
#include "livemod/pipeline_config.h"
#include "livemod/report.h"
#include "livemod/simulator.h"
#include "livemod/vector_index.h"
#include "metric_oracles.h"

using namespace livemod;
namespace fs = std::filesystem;

namespace {

constexpr double kHandTraceTol = 1e-12;
constexpr double kHandLossTol = 1e-6;
constexpr double kGradTol = 1e-4;
constexpr double kHnswRecallMin = 0.95;
constexpr double kMatryoshkaGap = 0.05;
constexpr double kPrecisionMin = 0.9;
constexpr double kRecallMin = 0.8;

constexpr double kBudgetOracle = 30.0;
constexpr double kBudgetHnsw = 10.0;
constexpr double kBudgetSweep = 60.0;
constexpr double kBudgetTraining = 300.0;
constexpr double kBudgetEndToEnd = 120.0;

struct Verdict {
    bool pass{false};
    std::string detail;
};

// Collects failed sub-checks so one criterion reports every reason at once.
struct Checks {
    std::vector<std::string> failures;

    void
    expect(bool ok, const std::string& what) {
        if (!ok) {
            failures.push_back(what);
        }
    }

    Verdict
    verdict(const std::string& summary) const {
        if (failures.empty()) {
            return {true, summary};
        }
        std::string joined;
        for (const auto& f : failures) {
            joined += (joined.empty() ? "" : "; ") + f;
        }
        return {false, summary + " | " + joined};
    }
};

double
seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path
source_path(const std::string& rel) {
    return fs::path(LIVEMOD_SOURCE_DIR) / rel;
}

CorpusConfig
canonical_corpus_config() {
    return corpus_config_from_json(read_text_file(source_path("configs/canonical_corpus.json")));
}

PipelineConfig
frozen_pipeline_config() {
    return load_pipeline_config(source_path("configs/default_pipeline.json"));
}

AggParams
exact_params(double tau, double epsilon) {
    AggParams p;
    p.tau = tau;
    p.epsilon = epsilon;
    p.max_pairs = 0;
    return p;
}

std::vector<AggCandidate>
to_candidates(const std::vector<std::pair<double, double>>& list) {
    std::vector<AggCandidate> out;
    for (auto [c, s] : list) {
        out.push_back({c, s, ""});
    }
    return out;
}

Verdict
oracle_equivalence() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20260101);
    size_t mismatches = 0;
    size_t steps = 0;
    const int scenarios = 10000;
    for (int n = 0; n < scenarios; ++n) {
        auto sc = oracle::random_agg_scenario(rng);
        auto params = exact_params(sc.tau, sc.epsilon);
        MatchState state;
        auto [agg, l] = std::pair<double, size_t>{0.0, 0};
        for (const auto& ev : sc.events) {
            std::tie(agg, l) = state.process_query_clip(ev.q_time, to_candidates(ev.candidates), params);
        }
        auto want = oracle::clip_match_aggregation(sc.events, sc.tau, sc.epsilon);
        steps += sc.events.size();
        if (agg != want.agg_score || l != want.l_max || state.pairs().size() != want.m.size()) {
            ++mismatches;
        }
    }
    double t = seconds_since(t0);
    Checks c;
    c.expect(mismatches == 0, fmt::format("{} scenarios disagree", mismatches));
    c.expect(t < kBudgetOracle, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("{} scenarios, {} clip steps, {} mismatches, {:.2f}s", scenarios, steps, mismatches, t));
}

Verdict
hand_traces() {
    auto p = exact_params(0.7, 2.0);
    Checks c;
    auto check = [&](const char* name, std::pair<double, size_t> got, double agg, size_t l) {
        c.expect(got.second == l && std::abs(got.first - agg) <= kHandTraceTol,
                 fmt::format("{}: got ({:.17g}, {}) want ({}, {})", name, got.first, got.second, agg, l));
    };
    MatchState first;
    check("single pair", first.process_query_clip(100.0, to_candidates({{40.0, 0.8}}), p), 0.8, 1);

    MatchState chain;
    chain.process_query_clip(100.0, to_candidates({{40.0, 0.9}}), p);
    check("aligned pair", chain.process_query_clip(120.0, to_candidates({{60.0, 0.8}}), p), 0.85, 2);

    MatchState misaligned;
    misaligned.process_query_clip(100.0, to_candidates({{40.0, 0.9}}), p);
    check("misaligned pair", misaligned.process_query_clip(120.0, to_candidates({{90.0, 0.8}}), p), 0.9, 1);
    return c.verdict("3 traces at tolerance 1e-12");
}

EmbeddingVector
random_unit(std::mt19937_64& rng, size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) {
        x = normal(rng);
    }
    return EmbeddingVector::normalized(std::move(v));
}

std::vector<SearchHit>
brute_force(const std::vector<ClipRef>& ids,
            const std::vector<EmbeddingVector>& vecs,
            const EmbeddingVector& q,
            size_t k) {
    std::vector<SearchHit> all;
    for (size_t i = 0; i < ids.size(); ++i) {
        double s = 0.0;
        for (size_t j = 0; j < q.dim(); ++j) {
            s += q[j] * vecs[i][j];
        }
        all.push_back({ids[i], std::clamp(s, -1.0, 1.0)});
    }
    std::sort(all.begin(), all.end(), [](const SearchHit& a, const SearchHit& b) {
        return a.similarity > b.similarity || (a.similarity == b.similarity && a.ref < b.ref);
    });
    all.resize(std::min(k, all.size()));
    return all;
}

Verdict
hnsw_recall() {
    auto t0 = std::chrono::steady_clock::now();
    const size_t dim = 128;
    const size_t ef = 128;
    std::mt19937_64 rng(42);
    std::vector<ClipRef> ids;
    std::vector<EmbeddingVector> vecs;
    HnswIndex index{HnswParams{}};
    for (size_t i = 0; i < 1000; ++i) {
        ids.push_back({"s" + std::to_string(i / 10), static_cast<int64_t>(i % 10)});
        vecs.push_back(random_unit(rng, dim));
        index.insert(ids.back(), vecs.back());
    }
    size_t hit = 0;
    const size_t queries = 100;
    const size_t k = 10;
    for (size_t qi = 0; qi < queries; ++qi) {
        auto q = random_unit(rng, dim);
        std::set<ClipRef> expected;
        for (const auto& h : brute_force(ids, vecs, q, k)) {
            expected.insert(h.ref);
        }
        for (const auto& h : index.search(q, k, ef)) {
            hit += expected.count(h.ref);
        }
    }
    double recall = static_cast<double>(hit) / static_cast<double>(queries * k);

    // exact top-k whenever the index is no larger than the beam
    size_t inexact = 0;
    size_t exact_checks = 0;
    for (size_t n : {1, 7, 64, 128}) {
        HnswIndex small{HnswParams{}};
        std::vector<ClipRef> sids(ids.begin(), ids.begin() + static_cast<long>(n));
        std::vector<EmbeddingVector> svecs(vecs.begin(), vecs.begin() + static_cast<long>(n));
        for (size_t i = 0; i < n; ++i) {
            small.insert(sids[i], svecs[i]);
        }
        for (int qi = 0; qi < 20; ++qi) {
            auto q = random_unit(rng, dim);
            for (size_t kk : {size_t{1}, size_t{10}, n}) {
                ++exact_checks;
                inexact += small.search(q, kk, ef) == brute_force(sids, svecs, q, kk) ? 0 : 1;
            }
        }
    }
    double t = seconds_since(t0);
    Checks c;
    c.expect(recall >= kHnswRecallMin, fmt::format("recall {:.4f} < {}", recall, kHnswRecallMin));
    c.expect(inexact == 0, fmt::format("{} of {} small-index searches inexact", inexact, exact_checks));
    c.expect(t < kBudgetHnsw, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("recall@10 {:.4f} at ef 128, {} exactness checks, {:.2f}s", recall, exact_checks, t));
}

std::vector<double>
random_simplex(std::mt19937_64& rng, size_t c) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> p(c);
    double total = 0.0;
    for (auto& x : p) {
        x = expo(rng) + 1e-3;
        total += x;
    }
    for (auto& x : p) {
        x /= total;
    }
    return p;
}

SimilarityMatrix
random_similarity(std::mt19937_64& rng, size_t n) {
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<double> s(n * n);
    std::vector<uint8_t> pos(n * n, 0), neg(n * n, 0);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            s[i * n + j] = u(rng);
            if (i == j) {
                continue;
            }
            double r = coin(rng);
            pos[i * n + j] = r < 0.35 ? 1 : 0;
            neg[i * n + j] = r >= 0.35 && r < 0.7 ? 1 : 0;
        }
    }
    pos[1] = 1;
    neg[1] = 0;
    neg[2] = 1;
    pos[2] = 0;
    return SimilarityMatrix(n, n, std::move(s), std::move(pos), std::move(neg));
}

Eigen::MatrixXd
random_unit_rows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index dim) {
    Eigen::MatrixXd m(n, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto v = random_unit(rng, static_cast<size_t>(dim));
        for (Eigen::Index j = 0; j < dim; ++j) {
            m(i, j) = v[static_cast<size_t>(j)];
        }
    }
    return m;
}

Verdict
loss_gradients() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int points = 100;
    std::vector<std::pair<std::string, double>> worst;
    auto run = [&](const std::string& name, const std::function<double()>& one) {
        double w = 0.0;
        for (int t = 0; t < points; ++t) {
            w = std::max(w, one());
        }
        worst.emplace_back(name, w);
    };
    run("mse", [&] {
        std::vector<double> y(5), x(5);
        for (size_t i = 0; i < 5; ++i) {
            y[i] = normal(rng);
            x[i] = normal(rng);
        }
        DifferentiableFn f = [&](std::span<const double> yh, std::vector<double>* g) {
            if (g) {
                *g = mse_grad(y, yh);
            }
            return mse(y, yh);
        };
        return grad_check(f, x);
    });
    run("cross_entropy", [&] {
        auto y = random_simplex(rng, 4);
        auto p = random_simplex(rng, 4);
        DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
            if (g) {
                *g = cross_entropy_grad(y, x);
            }
            return cross_entropy(y, x);
        };
        return grad_check(f, p, 1e-7);
    });
    run("softmax_cross_entropy", [&] {
        auto y = random_simplex(rng, 5);
        std::vector<double> z(5);
        for (auto& v : z) {
            v = 2.0 * normal(rng);
        }
        DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
            if (g) {
                *g = softmax_cross_entropy_grad(y, x);
            }
            return cross_entropy(y, softmax(x));
        };
        return grad_check(f, z);
    });
    run("kl", [&] {
        auto p = random_simplex(rng, 4);
        auto q = random_simplex(rng, 4);
        DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
            if (g) {
                *g = kl_divergence_grad_q(p, x);
            }
            return kl_divergence(p, x);
        };
        return grad_check(f, q, 1e-7);
    });
    run("multi_similarity", [&] {
        auto s = random_similarity(rng, 8);
        MsParams prm{2.0, 10.0, 0.5};
        DifferentiableFn f = [&](std::span<const double> x, std::vector<double>* g) {
            auto r = multi_similarity_loss_with_grad(s.with_values(std::vector<double>(x.begin(), x.end())), prm);
            if (g) {
                *g = r.grad;
            }
            return r.loss;
        };
        return grad_check(f, s.values());
    });
    run("clip", [&] {
        const Eigen::Index n = 4, d = 8;
        const double tau = 0.5;
        Eigen::MatrixXd v = random_unit_rows(rng, n, d);
        Eigen::MatrixXd w = random_unit_rows(rng, n, d);
        std::vector<double> vflat(v.data(), v.data() + v.size());
        std::vector<double> wflat(w.data(), w.data() + w.size());
        DifferentiableFn fv = [&](std::span<const double> x, std::vector<double>* g) {
            Eigen::Map<const Eigen::MatrixXd> vm(x.data(), n, d);
            auto r = clip_nt_xent_with_grad(vm, w, tau);
            if (g) {
                g->assign(r.grad_v.data(), r.grad_v.data() + r.grad_v.size());
            }
            return r.loss;
        };
        DifferentiableFn fw = [&](std::span<const double> x, std::vector<double>* g) {
            Eigen::Map<const Eigen::MatrixXd> wm(x.data(), n, d);
            auto r = clip_nt_xent_with_grad(v, wm, tau);
            if (g) {
                g->assign(r.grad_w.data(), r.grad_w.data() + r.grad_w.size());
            }
            return r.loss;
        };
        return std::max(grad_check(fv, vflat), grad_check(fw, wflat));
    });

    Checks c;
    double overall = 0.0;
    for (const auto& [name, w] : worst) {
        overall = std::max(overall, w);
        c.expect(w < kGradTol, fmt::format("{} gradient rel err {:.3g}", name, w));
    }

    using V = std::vector<double>;
    auto e1 = EmbeddingVector::normalized({1.0, 0.0});
    auto e2 = EmbeddingVector::normalized({0.0, 1.0});
    std::vector<EmbeddingVector> pair = {e1, e2};
    MsParams ms{2.0, 2.0, 0.5};
    SimilarityMatrix sm(3, 3, {1.0, 0.5, 0.5, 0.5, 1.0, 0.0, 0.5, 0.0, 1.0}, {0, 1, 0, 0, 0, 0, 0, 0, 0},
                        {0, 0, 1, 0, 0, 0, 0, 0, 0});
    const std::vector<std::pair<std::string, std::pair<double, double>>> hand = {
        {"cross entropy", {cross_entropy(V{1, 0}, V{0.5, 0.5}), 0.693147}},
        {"kl", {kl_divergence(V{0.5, 0.5}, V{0.25, 0.75}), 0.143841}},
        {"clip", {clip_nt_xent(pair, pair, 1.0), 0.626523}},
        {"multi-similarity", {multi_similarity_loss(sm, ms), 1.386294}},
    };
    for (const auto& [name, v] : hand) {
        c.expect(std::abs(v.first - v.second) < kHandLossTol, fmt::format("{} = {:.9f}, want {}", name, v.first, v.second));
    }
    return c.verdict(fmt::format("{} losses x {} points, worst rel err {:.2e}; 4 hand values", worst.size(), points, overall));
}

Verdict
matryoshka_flatness() {
    auto t0 = std::chrono::steady_clock::now();
    auto corpus = generate_corpus(canonical_corpus_config());
    auto data = sweep_data(corpus);
    HnswParams params;
    params.ef_search = 128;
    std::vector<size_t> dims = {128, 768};
    std::vector<size_t> ks = {5};
    auto rows = dimension_sweep(data.corpus, data.queries, dims, params, ks);
    double r128 = rows.at(0).recall_one;
    double r768 = rows.at(1).recall_one;
    double t = seconds_since(t0);
    Checks c;
    c.expect(rows[0].dim == 128 && rows[1].dim == 768, "unexpected sweep row order");
    c.expect(std::abs(r768 - r128) <= kMatryoshkaGap, fmt::format("gap {:.4f}", std::abs(r768 - r128)));
    c.expect(t < kBudgetSweep, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("recall_one@5 dim 128 {:.4f}, dim 768 {:.4f}, {} queries, {:.2f}s", r128, r768,
                                 data.queries.size(), t));
}

Verdict
contrastive_direction() {
    auto t0 = std::chrono::steady_clock::now();
    AblationConfig cfg;
    size_t wins = 0;
    std::string per_seed;
    const uint64_t seeds = 3;
    for (uint64_t s = 1; s <= seeds; ++s) {
        auto r = run_contrastive_ablation(cfg, s);
        wins += r.moco_clip > r.moco_only ? 1 : 0;
        per_seed += fmt::format(" s{}: {:.3f} vs {:.3f}", s, r.moco_clip, r.moco_only);
    }
    double t = seconds_since(t0);
    Checks c;
    // one-sided sign test over three paired seeds: every seed must favour the joint arm
    c.expect(wins == seeds, fmt::format("joint arm won {} of {} seeds", wins, seeds));
    c.expect(t < kBudgetTraining, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("recall_one@5 moco+clip vs moco:{}, {:.1f}s", per_seed, t));
}

Verdict
distill_direction() {
    auto t0 = std::chrono::steady_clock::now();
    DistillExperimentConfig cfg;
    double kd = 0.0;
    double scratch = 0.0;
    const uint64_t seeds = 3;
    for (uint64_t s = 1; s <= seeds; ++s) {
        auto r = run_distill_experiment(cfg, s);
        kd += r.student_kd_ap / static_cast<double>(seeds);
        scratch += r.student_ap / static_cast<double>(seeds);
    }
    double t = seconds_since(t0);
    Checks c;
    c.expect(kd > scratch, fmt::format("mean AP with KD {:.4f} <= scratch {:.4f}", kd, scratch));
    c.expect(t < kBudgetTraining, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("mean AP student+KD {:.4f} vs scratch {:.4f}, {:.1f}s", kd, scratch, t));
}

Report
moderate_and_evaluate(const Corpus& corpus, const PipelineConfig& config) {
    ModerationEngine engine(config);
    for (const auto& [category, m] : corpus.references) {
        engine.register_reference(m, category);
    }
    std::vector<ModerationOutcome> outcomes;
    for (const auto& r : engine.ingest_streams(corpus.queries)) {
        outcomes.insert(outcomes.end(), r.outcomes.begin(), r.outcomes.end());
    }
    return evaluate(outcomes, corpus.truth);
}

Verdict
end_to_end() {
    auto t0 = std::chrono::steady_clock::now();
    auto config = frozen_pipeline_config();
    auto corpus_cfg = canonical_corpus_config();
    auto report = moderate_and_evaluate(generate_corpus(corpus_cfg), config);

    auto clean_cfg = corpus_cfg;
    clean_cfg.n_preset = 0;
    clean_cfg.n_rebroadcast = 0;
    auto clean = moderate_and_evaluate(generate_corpus(clean_cfg), config);
    double t = seconds_since(t0);

    Checks c;
    const auto& rb = report.rebroadcast;
    c.expect(rb.precision.has_value() && *rb.precision >= kPrecisionMin, "rebroadcast precision below 0.9");
    c.expect(rb.recall.has_value() && *rb.recall >= kRecallMin, "rebroadcast recall below 0.8");
    c.expect(clean.decisions.enforce == 0, fmt::format("{} Enforce outcomes on the clean corpus", clean.decisions.enforce));
    c.expect(t < kBudgetEndToEnd, fmt::format("took {:.1f}s", t));
    return c.verdict(fmt::format("precision {:.4f} recall {:.4f} (tp {} fp {} fn {}), clean corpus {} clips / {} "
                                 "enforce, {:.2f}s",
                                 rb.precision.value_or(-1.0), rb.recall.value_or(-1.0), rb.tp, rb.fp, rb.fn,
                                 clean.clips, clean.decisions.enforce, t));
}

Verdict
metrics_oracle() {
    size_t checked = 0;
    size_t mismatches = 0;
    for (size_t n = 1; n <= 12; ++n) {
        std::vector<double> distinct, coarse, mixed;
        for (size_t i = 0; i < n; ++i) {
            distinct.push_back(1.0 - static_cast<double>(i) / static_cast<double>(n));
            coarse.push_back(static_cast<double>((i * 7) % 3) / 3.0);
            mixed.push_back(static_cast<double>((i * 5 + 3) % (n / 2 + 1)) * 0.1);
        }
        for (const auto& scores : {distinct, coarse, mixed}) {
            for (uint32_t mask = 0; mask < (1U << n); ++mask) {
                std::vector<ScoredLabel> data;
                for (size_t i = 0; i < n; ++i) {
                    data.push_back({scores[i], ((mask >> i) & 1U) != 0});
                }
                bool both = mask != 0 && mask + 1 != (1U << n);
                ++checked;
                if (!both) {
                    continue;  // metrics are undefined without both labels
                }
                bool ok = std::abs(average_precision(data) - oracle::average_precision(data)) < 1e-12;
                for (int pct : {50, 70, 75, 80, 85, 90, 100}) {
                    ok = ok && recall_at_precision(data, pct / 100.0) == oracle::recall_at_precision(data, pct);
                }
                auto got = best_f1(data);
                auto want = oracle::best_f1(data);
                ok = ok && std::abs(got.f1 - want.f1) < 1e-12 && got.threshold == want.threshold;
                mismatches += ok ? 0 : 1;
            }
        }
    }
    Checks c;
    c.expect(mismatches == 0, fmt::format("{} label vectors disagree", mismatches));
    return c.verdict(fmt::format("{} labelings over 3 score patterns, n <= 12, {} mismatches", checked, mismatches));
}

Verdict
golden_determinism(const std::string& cli) {
    auto work = fs::temp_directory_path() / fmt::format("livemod_acceptance_{}", ::getpid());
    fs::remove_all(work);
    const auto corpus_cfg = source_path("configs/canonical_corpus.json").string();
    const auto pipeline_cfg = source_path("configs/default_pipeline.json").string();
    auto chain = [&](const fs::path& dir) {
        fs::create_directories(dir);
        const std::string d = dir.string();
        const std::vector<std::string> steps = {
            fmt::format("'{}' gen --config '{}' --out '{}/corpus'", cli, corpus_cfg, d),
            fmt::format("'{}' index --refs '{}/corpus/refs' --config '{}' --out '{}/index'", cli, d, pipeline_cfg, d),
            fmt::format("'{}' run --config '{}' --corpus '{}/corpus' --index '{}/index' --out '{}/outcomes.jsonl'", cli,
                        pipeline_cfg, d, d, d),
            fmt::format("'{}' eval --outcomes '{}/outcomes.jsonl' --truth '{}/corpus' --report '{}/report.json'", cli,
                        d, d, d),
        };
        for (const auto& s : steps) {
            if (std::system((s + " > /dev/null 2>&1").c_str()) != 0) {
                return std::string("command failed: ") + s;
            }
        }
        return std::string();
    };
    Checks c;
    auto e1 = chain(work / "run1");
    auto e2 = e1.empty() ? chain(work / "run2") : std::string();
    c.expect(e1.empty() && e2.empty(), e1 + e2);
    if (c.failures.empty()) {
        for (const char* artifact : {"corpus/truth.json", "outcomes.jsonl", "report.json"}) {
            c.expect(read_text_file(work / "run1" / artifact) == read_text_file(work / "run2" / artifact),
                     fmt::format("{} differs between runs", artifact));
        }
        c.expect(read_text_file(work / "run1" / "report.json") ==
                     read_text_file(source_path("tests/golden/report.json")),
                 "report differs from tests/golden/report.json");
    }
    fs::remove_all(work);
    return c.verdict("gen, index, run, eval twice; outputs compared byte for byte");
}

}  // namespace

int
main(int argc, char** argv) {
    if (argc != 2) {
        fmt::print(stderr, "usage: {} <path to livemod cli>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"AC1 aggregation incremental == batch oracle", oracle_equivalence},
        {"AC2 aggregation hand traces", hand_traces},
        {"AC3 hnsw recall and small-index exactness", hnsw_recall},
        {"AC4 loss gradients and hand values", loss_gradients},
        {"AC5 matryoshka flatness 128 vs 768", matryoshka_flatness},
        {"AC6 moco+clip beats moco", contrastive_direction},
        {"AC7 distillation beats scratch student", distill_direction},
        {"AC8 end-to-end rebroadcast detection", end_to_end},
        {"AC9 metrics equal exhaustive enumeration", metrics_oracle},
        {"AC10 golden determinism", [&] { return golden_determinism(cli); }},
    };
    size_t failed = 0;
    for (const auto& [name, run] : criteria) {
        Verdict v;
        try {
            v = run();
        } catch (const Error& e) {
            v = {false, fmt::format("error: {}", e.what())};
        } catch (const std::exception& e) {
            v = {false, fmt::format("exception: {}", e.what())};
        }
        failed += v.pass ? 0 : 1;
        fmt::print("{} {}: {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
