#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "adashift/errors.hpp"

namespace adashift {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One named parameter block: a contiguous index range of the flat vector.
struct BlockSpan {
    std::string label;
    Eigen::Index begin = 0;
    Eigen::Index size = 0;
};

/// A named flat parameter vector, the construction unit for partitions.
struct ParamBlock {
    std::string label;
    Vector values;
};

/// Ordered disjoint blocks covering [0, dim) exactly once.
class BlockPartition {
  public:
    BlockPartition() = default;

    explicit BlockPartition(std::vector<BlockSpan> blocks) : blocks_(std::move(blocks)) {
        Eigen::Index expect = 0;
        for (const auto& b : blocks_) {
            if (b.begin != expect || b.size <= 0)
                throw ConfigError("BlockPartition: blocks must be contiguous, ordered and non-empty");
            expect += b.size;
        }
        dim_ = expect;
    }

    static BlockPartition single(Eigen::Index dim, std::string label = "all") {
        return BlockPartition({BlockSpan{std::move(label), 0, dim}});
    }

    static BlockPartition per_coordinate(Eigen::Index dim) {
        std::vector<BlockSpan> blocks;
        blocks.reserve(static_cast<std::size_t>(dim));
        for (Eigen::Index i = 0; i < dim; ++i)
            blocks.push_back({"x" + std::to_string(i), i, 1});
        return BlockPartition(std::move(blocks));
    }

    /// Concatenates named blocks into one partition (layout in given order).
    static BlockPartition from_blocks(const std::vector<ParamBlock>& parts) {
        std::vector<BlockSpan> blocks;
        Eigen::Index at = 0;
        for (const auto& p : parts) {
            blocks.push_back({p.label, at, p.values.size()});
            at += p.values.size();
        }
        return BlockPartition(std::move(blocks));
    }

    Eigen::Index dim() const { return dim_; }
    Eigen::Index block_count() const { return static_cast<Eigen::Index>(blocks_.size()); }
    const BlockSpan& block(Eigen::Index i) const { return blocks_.at(static_cast<std::size_t>(i)); }
    const std::vector<BlockSpan>& blocks() const { return blocks_; }

    void require_covers(Eigen::Index dim) const {
        if (dim_ != dim)
            throw ConfigError("BlockPartition covers " + std::to_string(dim_) +
                              " coordinates, expected " + std::to_string(dim));
    }

    /// Index of the block containing coordinate `i`.
    Eigen::Index block_of(Eigen::Index i) const {
        for (Eigen::Index b = 0; b < block_count(); ++b) {
            const auto& s = blocks_[static_cast<std::size_t>(b)];
            if (i >= s.begin && i < s.begin + s.size) return b;
        }
        throw ConfigError("coordinate outside partition");
    }

  private:
    std::vector<BlockSpan> blocks_;
    Eigen::Index dim_ = 0;
};

/// Flattens named blocks into one vector matching from_blocks layout.
inline Vector concat_blocks(const std::vector<ParamBlock>& parts) {
    Eigen::Index n = 0;
    for (const auto& p : parts) n += p.values.size();
    Vector out(n);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.segment(at, p.values.size()) = p.values;
        at += p.values.size();
    }
    return out;
}

}  // namespace adashift
