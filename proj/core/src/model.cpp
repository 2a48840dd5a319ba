#include "den/model.hpp"

#include <cmath>
#include <stdexcept>

#include "den/losses.hpp"
#include "den/rng.hpp"

namespace den {

namespace {

std::vector<std::size_t> net_dims(std::size_t input, std::size_t hidden, std::size_t depth,
                                  std::size_t output) {
    std::vector<std::size_t> dims;
    dims.reserve(depth + 1);
    dims.push_back(input);
    for (std::size_t l = 1; l < depth; ++l) dims.push_back(hidden);
    dims.push_back(output);
    return dims;
}

std::size_t embed_width_of(const ModelConfig& config) {
    return config.mode == Mode::multiclass ? config.hidden : 2 * config.hidden + 1;
}

Vec phi_input(const Matrix& Z, std::size_t row, const IndexSet& set, const Vec& s) {
    Vec input;
    input.reserve(set.size() + s.size());
    for (std::size_t col : set) input.push_back(Z(row, col));
    input.insert(input.end(), s.begin(), s.end());
    return input;
}

std::vector<Vec> row_phi_inputs(const Matrix& Z, std::size_t row,
                                const std::vector<IndexSet>& sets, const std::vector<Vec>& s) {
    std::vector<Vec> inputs;
    inputs.reserve(sets.size());
    for (std::size_t j = 0; j < sets.size(); ++j) inputs.push_back(phi_input(Z, row, sets[j], s[j]));
    return inputs;
}

// Routes d loss / d phi-input back to the row's tuple values and the shared
// per-set embeddings.
void scatter_dphi(const std::vector<IndexSet>& sets, const std::vector<Vec>& dphi,
                  std::size_t row, Matrix& dZ, std::vector<Vec>& ds) {
    for (std::size_t j = 0; j < sets.size(); ++j) {
        std::size_t r = sets[j].size();
        for (std::size_t t = 0; t < r; ++t) dZ(row, sets[j][t]) += dphi[j][t];
        for (std::size_t k = r; k < dphi[j].size(); ++k) ds[j][k - r] += dphi[j][k];
    }
}

Matrix transformed(const DenModel& model, const Matrix& X) {
    if (!model.config.use_plf) return X;
    if (model.bank.width() != X.cols)
        throw std::invalid_argument("den: calibration bank not fitted for this task width");
    return bank_forward(model.bank, X);
}

std::vector<Vec> support_embeddings(const DenModel& model, const Matrix& Zs,
                                    const std::vector<int>& ys,
                                    const std::vector<IndexSet>& sets,
                                    std::vector<EmbedCache>* caches) {
    if (caches) caches->assign(sets.size(), EmbedCache{});
    std::vector<Vec> s;
    s.reserve(sets.size());
    for (std::size_t j = 0; j < sets.size(); ++j) {
        Matrix slice = select_columns(Zs, sets[j]);
        if (model.config.mode == Mode::multiclass)
            s.push_back(embed_joint(model.h, *model.v, slice, ys,
                                    caches ? &(*caches)[j] : nullptr));
        else
            s.push_back(embed_conditional(model.h, slice, ys,
                                          caches ? &(*caches)[j] : nullptr));
    }
    return s;
}

double episode_binary(const DenModel& model, const Matrix& Zs, const std::vector<int>& ys,
                      const Matrix& Zq, const std::vector<int>& yq,
                      const std::vector<IndexSet>& sets, Matrix* dZs, Matrix* dZq,
                      EpisodeGrads* grads) {
    std::vector<EmbedCache> embed_caches;
    std::vector<Vec> s =
        support_embeddings(model, Zs, ys, sets, grads ? &embed_caches : nullptr);

    std::vector<DeepSetsCache> query_caches(grads ? Zq.rows : 0);
    Vec logits(Zq.rows);
    for (std::size_t i = 0; i < Zq.rows; ++i)
        logits[i] = deepsets_logit(model.head, row_phi_inputs(Zq, i, sets, s),
                                   grads ? &query_caches[i] : nullptr);

    Vec dlogits;
    double loss = bce_loss(logits, yq, grads ? &dlogits : nullptr);
    if (!grads) return loss;

    std::vector<Vec> ds(sets.size(), Vec(s.front().size(), 0.0));
    for (std::size_t i = 0; i < Zq.rows; ++i) {
        std::vector<Vec> dphi =
            deepsets_logit_backward(model.head, query_caches[i], dlogits[i], grads->head);
        scatter_dphi(sets, dphi, i, *dZq, ds);
    }
    for (std::size_t j = 0; j < sets.size(); ++j) {
        Matrix dslice =
            embed_conditional_backward(model.h, embed_caches[j], ys, ds[j], grads->h);
        for (std::size_t i = 0; i < Zs.rows; ++i)
            for (std::size_t t = 0; t < sets[j].size(); ++t)
                (*dZs)(i, sets[j][t]) += dslice(i, t);
    }
    return loss;
}

double episode_multiclass(const DenModel& model, const Matrix& Zs, const std::vector<int>& ys,
                          const Matrix& Zq, const std::vector<int>& yq,
                          std::size_t num_classes, const std::vector<IndexSet>& sets,
                          Matrix* dZs, Matrix* dZq, EpisodeGrads* grads) {
    std::vector<EmbedCache> embed_caches;
    std::vector<Vec> s =
        support_embeddings(model, Zs, ys, sets, grads ? &embed_caches : nullptr);

    std::vector<DeepSetsCache> support_caches(grads ? Zs.rows : 0);
    std::vector<Vec> e_support(Zs.rows);
    for (std::size_t i = 0; i < Zs.rows; ++i)
        e_support[i] = penultimate_embed(model.head, row_phi_inputs(Zs, i, sets, s),
                                         grads ? &support_caches[i] : nullptr);

    std::vector<DeepSetsCache> query_caches(grads ? Zq.rows : 0);
    std::vector<Vec> e_query(Zq.rows);
    Matrix scores(Zq.rows, num_classes);
    for (std::size_t i = 0; i < Zq.rows; ++i) {
        e_query[i] = penultimate_embed(model.head, row_phi_inputs(Zq, i, sets, s),
                                       grads ? &query_caches[i] : nullptr);
        scores.set_row(i, matching_scores(e_query[i], e_support, ys, num_classes));
    }

    Matrix dscores;
    double loss = softmax_ce_loss(scores, yq, grads ? &dscores : nullptr);
    if (!grads) return loss;

    std::vector<Vec> ds(sets.size(), Vec(s.front().size(), 0.0));
    std::vector<Vec> de_support(Zs.rows, Vec(e_support.front().size(), 0.0));
    for (std::size_t i = 0; i < Zq.rows; ++i) {
        Vec de_query(e_query[i].size(), 0.0);
        matching_scores_backward(e_query[i], e_support, ys, num_classes, dscores.row(i),
                                 de_query, de_support);
        std::vector<Vec> dphi =
            penultimate_embed_backward(model.head, query_caches[i], de_query, grads->head);
        scatter_dphi(sets, dphi, i, *dZq, ds);
    }
    for (std::size_t i = 0; i < Zs.rows; ++i) {
        std::vector<Vec> dphi =
            penultimate_embed_backward(model.head, support_caches[i], de_support[i],
                                       grads->head);
        scatter_dphi(sets, dphi, i, *dZs, ds);
    }
    for (std::size_t j = 0; j < sets.size(); ++j) {
        Matrix dslice = embed_joint_backward(model.h, *model.v, embed_caches[j], ys, ds[j],
                                             grads->h, grads->v);
        for (std::size_t i = 0; i < Zs.rows; ++i)
            for (std::size_t t = 0; t < sets[j].size(); ++t)
                (*dZs)(i, sets[j][t]) += dslice(i, t);
    }
    return loss;
}

void check_episode_shapes(const DenModel& model, const Matrix& support_X,
                          const std::vector<int>& support_y, const Matrix& query_X,
                          std::size_t num_classes) {
    if (support_X.cols != query_X.cols)
        throw std::invalid_argument("den: support and query dimensions differ");
    if (support_X.rows != support_y.size())
        throw std::invalid_argument("den: support rows and labels differ in length");
    if (model.config.mode == Mode::binary && num_classes != 2)
        throw std::invalid_argument("den: binary model needs exactly 2 classes");
    if (model.config.mode == Mode::multiclass && num_classes > model.config.max_classes)
        throw std::invalid_argument("den: task has more classes than the label encoder");
}

}  // namespace

DenModel make_model(const ModelConfig& config, std::uint64_t seed) {
    if (config.hidden == 0 || config.depth == 0 || config.r == 0)
        throw std::invalid_argument("make_model: zero-sized architecture");
    if (config.keypoints < 2) throw std::invalid_argument("make_model: need >= 2 keypoints");
    DenModel model;
    model.config = config;
    std::size_t h_in = config.r + (config.mode == Mode::multiclass ? config.label_dim : 0);
    model.h = init_params(net_dims(h_in, config.hidden, config.depth, config.hidden),
                          derive_seed(seed, "embedding-net"));
    std::size_t s_width = embed_width_of(config);
    model.head.phi =
        init_params(net_dims(config.r + s_width, config.hidden, config.depth, config.hidden),
                    derive_seed(seed, "phi"));
    model.head.psi = init_params(net_dims(config.hidden, config.hidden, config.depth, 1),
                                 derive_seed(seed, "psi"));
    if (config.mode == Mode::multiclass)
        model.v = init_label_encoder(config.max_classes, config.label_dim,
                                     derive_seed(seed, "label-encoder"));
    model.index_seed = derive_seed(seed, "index-policy");
    return model;
}

IndexSetPolicy index_policy(const DenModel& model) {
    return IndexSetPolicy{model.config.r, model.config.cap, model.index_seed};
}

void attach_task_bank(DenModel& model, const Matrix& support_X, const std::string& task_id) {
    if (model.config.use_plf)
        model.bank = fit_bank(support_X, model.config.keypoints, model.config.monotonic);
    model.bank_task_id = task_id;
}

EpisodeGrads zero_episode_grads(const DenModel& model) {
    EpisodeGrads grads;
    grads.bank = zero_grads(model.bank);
    grads.h = zero_grads(model.h);
    if (model.v) grads.v = Matrix(model.v->table.rows, model.v->table.cols);
    grads.head = zero_grads(model.head);
    return grads;
}

double episode_loss_and_grads(const DenModel& model, const Matrix& support_X,
                              const std::vector<int>& support_y, const Matrix& query_X,
                              const std::vector<int>& query_y, std::size_t num_classes,
                              EpisodeGrads& grads) {
    check_episode_shapes(model, support_X, support_y, query_X, num_classes);
    Matrix Zs = transformed(model, support_X);
    Matrix Zq = transformed(model, query_X);
    std::vector<IndexSet> sets = enumerate_index_sets(Zs.cols, index_policy(model));

    Matrix dZs(Zs.rows, Zs.cols);
    Matrix dZq(Zq.rows, Zq.cols);
    double loss = model.config.mode == Mode::multiclass
                      ? episode_multiclass(model, Zs, support_y, Zq, query_y, num_classes,
                                           sets, &dZs, &dZq, &grads)
                      : episode_binary(model, Zs, support_y, Zq, query_y, sets, &dZs, &dZq,
                                       &grads);
    if (model.config.use_plf) {
        bank_backward(model.bank, support_X, dZs, grads.bank);
        bank_backward(model.bank, query_X, dZq, grads.bank);
    }
    return loss;
}

Vec den_logits(const DenModel& model, const Matrix& support_X,
               const std::vector<int>& support_y, const Matrix& query_X) {
    check_episode_shapes(model, support_X, support_y, query_X, 2);
    if (model.config.mode != Mode::binary)
        throw std::invalid_argument("den_logits: binary models only");
    Matrix Zs = transformed(model, support_X);
    Matrix Zq = transformed(model, query_X);
    std::vector<IndexSet> sets = enumerate_index_sets(Zs.cols, index_policy(model));
    std::vector<Vec> s = support_embeddings(model, Zs, support_y, sets, nullptr);
    Vec logits(Zq.rows);
    for (std::size_t i = 0; i < Zq.rows; ++i)
        logits[i] = deepsets_logit(model.head, row_phi_inputs(Zq, i, sets, s));
    return logits;
}

Matrix den_probs(const DenModel& model, const Matrix& support_X,
                 const std::vector<int>& support_y, const Matrix& query_X,
                 std::size_t num_classes) {
    check_episode_shapes(model, support_X, support_y, query_X, num_classes);
    Matrix probs(query_X.rows, num_classes);
    if (model.config.mode == Mode::binary) {
        Vec logits = den_logits(model, support_X, support_y, query_X);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            double p = 1.0 / (1.0 + std::exp(-logits[i]));
            probs(i, 0) = 1.0 - p;
            probs(i, 1) = p;
        }
        return probs;
    }
    Matrix Zs = transformed(model, support_X);
    Matrix Zq = transformed(model, query_X);
    std::vector<IndexSet> sets = enumerate_index_sets(Zs.cols, index_policy(model));
    std::vector<Vec> s = support_embeddings(model, Zs, support_y, sets, nullptr);
    std::vector<Vec> e_support(Zs.rows);
    for (std::size_t i = 0; i < Zs.rows; ++i)
        e_support[i] = penultimate_embed(model.head, row_phi_inputs(Zs, i, sets, s));
    for (std::size_t i = 0; i < Zq.rows; ++i) {
        Vec e_query = penultimate_embed(model.head, row_phi_inputs(Zq, i, sets, s));
        probs.set_row(i, softmax(matching_scores(e_query, e_support, support_y, num_classes)));
    }
    return probs;
}

std::vector<int> den_predict(const DenModel& model, const Matrix& support_X,
                             const std::vector<int>& support_y, const Matrix& query_X,
                             std::size_t num_classes) {
    Matrix probs = den_probs(model, support_X, support_y, query_X, num_classes);
    std::vector<int> labels(probs.rows);
    for (std::size_t i = 0; i < probs.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < probs.cols; ++k)
            if (probs(i, k) > probs(i, best)) best = k;
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

Vec flatten_shared(const DenModel& model) {
    Vec flat = flatten(model.h);
    if (model.v) flat.insert(flat.end(), model.v->table.data.begin(), model.v->table.data.end());
    Vec head = flatten(model.head);
    flat.insert(flat.end(), head.begin(), head.end());
    return flat;
}

Vec flatten_shared_grads(const DenModel& model, const EpisodeGrads& grads) {
    Vec flat = flatten(grads.h);
    if (model.v) flat.insert(flat.end(), grads.v.data.begin(), grads.v.data.end());
    Vec head = flatten(grads.head);
    flat.insert(flat.end(), head.begin(), head.end());
    return flat;
}

void unflatten_shared(DenModel& model, std::span<const double> flat) {
    std::size_t h_count = model.h.param_count();
    unflatten(model.h, flat.subspan(0, h_count));
    std::size_t pos = h_count;
    if (model.v) {
        for (double& value : model.v->table.data) value = flat[pos++];
    }
    unflatten(model.head, flat.subspan(pos));
}

ParamCounts count_params(const DenModel& model, std::size_t d) {
    const ModelConfig& config = model.config;
    std::size_t H = config.hidden, L = config.depth, r = config.r;
    std::size_t h_in = r + (config.mode == Mode::multiclass ? config.label_dim : 0);
    std::size_t s_width = embed_width_of(config);

    ParamCounts counts{};
    counts.transform = config.use_plf ? d * config.keypoints : 0;
    counts.embedding = h_in * H + H * H * (L - 1);
    counts.classification = (r + s_width) * H + 2 * H * H * (L - 1) + H;

    auto weights_only = [](const DenseNet& net) {
        std::size_t n = 0;
        for (const Matrix& w : net.weights) n += w.data.size();
        return n;
    };
    counts.embedding_weights = weights_only(model.h);
    counts.classification_weights = weights_only(model.head.phi) + weights_only(model.head.psi);

    counts.total_with_biases = model.h.param_count() + model.head.phi.param_count() +
                               model.head.psi.param_count() + counts.transform +
                               (model.v ? model.v->table.data.size() : 0);
    return counts;
}

}  // namespace den
