#ifndef LIPSYNC_LOSS_HPP
#define LIPSYNC_LOSS_HPP

// Contrastive and reconstruction losses as pure batch functions: directional
// InfoNCE, the symmetric layer-summed contrastive objective, the masked
// reconstruction loss, the combined stage-1 objective, and the perceptual
// loss. No gradients; these are numerical references an external trainer
// can check against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "lipsync/core.hpp"
#include "lipsync/errors.hpp"
#include "lipsync/signal.hpp"

namespace lipsync::loss {

enum class Similarity { cosine, dot };

// B anchor/counterpart row pairs; row i of each side is the positive pair i.
class EmbeddingBatch {
public:
    EmbeddingBatch(std::size_t batch, std::size_t dim, std::vector<double> anchor,
                   std::vector<double> counterpart)
        : batch_(batch), dim_(dim), anchor_(std::move(anchor)),
          counterpart_(std::move(counterpart)) {
        lipsync::detail::require(batch_ >= 1, "EmbeddingBatch.batch", "must be >= 1");
        lipsync::detail::require(dim_ >= 1, "EmbeddingBatch.dim", "must be >= 1");
        lipsync::detail::require(anchor_.size() == batch_ * dim_, "EmbeddingBatch.anchor",
                                 "must hold batch * dim values");
        lipsync::detail::require(counterpart_.size() == batch_ * dim_,
                                 "EmbeddingBatch.counterpart", "must hold batch * dim values");
        lipsync::detail::require(lipsync::detail::all_finite(anchor_), "EmbeddingBatch.anchor",
                                 "must contain only finite values");
        lipsync::detail::require(lipsync::detail::all_finite(counterpart_),
                                 "EmbeddingBatch.counterpart",
                                 "must contain only finite values");
        check_rows(anchor_, "EmbeddingBatch.anchor");
        check_rows(counterpart_, "EmbeddingBatch.counterpart");
    }

    std::size_t batch() const noexcept { return batch_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> anchor_row(std::size_t i) const {
        return std::span<const double>(anchor_.data() + i * dim_, dim_);
    }
    std::span<const double> counterpart_row(std::size_t i) const {
        return std::span<const double>(counterpart_.data() + i * dim_, dim_);
    }

    // Counterpart rows as anchors and vice versa, for the reverse direction
    // of the symmetric objective.
    EmbeddingBatch swapped() const { return EmbeddingBatch(batch_, dim_, counterpart_, anchor_); }

private:
    void check_rows(const std::vector<double>& rows, const std::string& field) const {
        for (std::size_t i = 0; i < batch_; ++i) {
            double sq = 0.0;
            for (std::size_t d = 0; d < dim_; ++d) {
                const double x = rows[i * dim_ + d];
                sq += x * x;
            }
            lipsync::detail::require(sq > 0.0, field,
                                     "row " + std::to_string(i) + " must have nonzero norm");
        }
    }

    std::size_t batch_;
    std::size_t dim_;
    std::vector<double> anchor_;
    std::vector<double> counterpart_;
};

namespace detail {

inline double similarity(std::span<const double> a, std::span<const double> b, Similarity sim) {
    if (sim == Similarity::cosine) return signal::cosine_similarity(a, b);
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
}

} // namespace detail

// Directional InfoNCE: -(1/B) sum_i log softmax_i over the similarity row
// sim(a_i, c_j) / tau, evaluated with log-sum-exp stabilization. Zero for
// B = 1, ln B for a batch of identical rows.
inline double info_nce(const EmbeddingBatch& batch, double tau,
                       Similarity sim = Similarity::cosine) {
    if (!std::isfinite(tau) || tau <= 0.0) throw ConfigError("info_nce: tau must be > 0");

    const std::size_t b = batch.batch();
    double total = 0.0;
    std::vector<double> logits(b);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            logits[j] = detail::similarity(batch.anchor_row(i), batch.counterpart_row(j), sim) / tau;
        }
        const double peak = *std::max_element(logits.begin(), logits.end());
        double sum_exp = 0.0;
        for (double l : logits) sum_exp += std::exp(l - peak);
        const double lse = peak + std::log(sum_exp);
        total += lse - logits[i];
    }
    return total / static_cast<double>(b);
}

// Sum over layers of both InfoNCE directions.
inline double symmetric_contrastive(const std::map<std::uint32_t, EmbeddingBatch>& batches,
                                    double tau, Similarity sim = Similarity::cosine) {
    if (batches.empty()) throw ConfigError("symmetric_contrastive: need >= 1 layer");
    double total = 0.0;
    for (const auto& [layer, batch] : batches) {
        total += info_nce(batch, tau, sim);
        total += info_nce(batch.swapped(), tau, sim);
    }
    return total;
}

// Predicted/target token matrices for one batch item, with a mask marking
// the positions the reconstruction loss scores.
class MaskedTokenBatch {
public:
    MaskedTokenBatch(std::size_t tokens, std::size_t dim, std::vector<double> predicted,
                     std::vector<double> target, std::vector<bool> mask)
        : tokens_(tokens), dim_(dim), predicted_(std::move(predicted)),
          target_(std::move(target)), mask_(std::move(mask)) {
        lipsync::detail::require(tokens_ >= 1, "MaskedTokenBatch.tokens", "must be >= 1");
        lipsync::detail::require(dim_ >= 1, "MaskedTokenBatch.dim", "must be >= 1");
        lipsync::detail::require(predicted_.size() == tokens_ * dim_,
                                 "MaskedTokenBatch.predicted", "must hold tokens * dim values");
        lipsync::detail::require(target_.size() == tokens_ * dim_, "MaskedTokenBatch.target",
                                 "must hold tokens * dim values");
        lipsync::detail::require(mask_.size() == tokens_, "MaskedTokenBatch.mask",
                                 "must hold one flag per token");
        lipsync::detail::require(lipsync::detail::all_finite(predicted_),
                                 "MaskedTokenBatch.predicted",
                                 "must contain only finite values");
        lipsync::detail::require(lipsync::detail::all_finite(target_),
                                 "MaskedTokenBatch.target", "must contain only finite values");
    }

    std::size_t tokens() const noexcept { return tokens_; }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<bool>& mask() const noexcept { return mask_; }

    std::size_t masked_count() const noexcept {
        return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), true));
    }

    // Squared Frobenius error over masked tokens, divided by the number of
    // masked tokens.
    double masked_error() const {
        const std::size_t masked = masked_count();
        if (masked == 0) {
            throw DegenerateError("MaskedTokenBatch: no masked tokens to score");
        }
        double acc = 0.0;
        for (std::size_t t = 0; t < tokens_; ++t) {
            if (!mask_[t]) continue;
            for (std::size_t d = 0; d < dim_; ++d) {
                const double e = predicted_[t * dim_ + d] - target_[t * dim_ + d];
                acc += e * e;
            }
        }
        return acc / static_cast<double>(masked);
    }

private:
    std::size_t tokens_;
    std::size_t dim_;
    std::vector<double> predicted_;
    std::vector<double> target_;
    std::vector<bool> mask_;
};

// Reconstruction loss for one speech/video item pair: each modality's
// masked squared error normalized by its own masked-token count.
inline double mae_loss(const MaskedTokenBatch& speech, const MaskedTokenBatch& video) {
    return speech.masked_error() + video.masked_error();
}

// Batch form: mean over item pairs.
inline double mae_loss(std::span<const MaskedTokenBatch> speech,
                       std::span<const MaskedTokenBatch> video) {
    if (speech.size() != video.size()) {
        throw ConfigError("mae_loss: speech and video batches must pair up");
    }
    if (speech.empty()) throw ConfigError("mae_loss: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < speech.size(); ++i) {
        total += mae_loss(speech[i], video[i]);
    }
    return total / static_cast<double>(speech.size());
}

// L = L_MAE + lambda * L_contrastive.
inline double total_stage1_loss(double mae, double contrastive, double lambda) {
    if (!std::isfinite(mae) || !std::isfinite(contrastive)) {
        throw ConfigError("total_stage1_loss: inputs must be finite");
    }
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ConfigError("total_stage1_loss: lambda must be >= 0");
    }
    return mae + lambda * contrastive;
}

// weight * symmetric contrastive loss. The default weight matches the value
// used when plugging the representation into a generation model's training
// loss.
inline double perceptual_loss(const std::map<std::uint32_t, EmbeddingBatch>& batches, double tau,
                              double weight = 1e-7, Similarity sim = Similarity::cosine) {
    if (!std::isfinite(weight) || weight < 0.0) {
        throw ConfigError("perceptual_loss: weight must be >= 0");
    }
    return weight * symmetric_contrastive(batches, tau, sim);
}

} // namespace lipsync::loss

#endif
