#pragma once

#include "ipsim/dfg.hpp"
#include "ipsim/vocabulary.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ipsim {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Numeric form of a graph. A is the symmetrized 0/1 adjacency without self
/// loops; P = D^-1/2 (A + I) D^-1/2 where D is the degree matrix of A + I.
/// P is held densely up to `dense_limit` nodes and sparsely beyond.
struct GraphTensors {
    std::string name;
    Eigen::MatrixXd X;     // n x vocabulary size, one-hot rows
    SparseMatrix A;
    Eigen::VectorXd degree; // diagonal of D
    bool dense = true;
    Eigen::MatrixXd P_dense;
    SparseMatrix P_sparse;

    Eigen::Index size() const { return X.rows(); }
    /// P * M.
    Eigen::MatrixXd propagate(const Eigen::MatrixXd& M) const;
    Eigen::MatrixXd P() const;
    Eigen::MatrixXd Ahat() const;
};

struct EncodeOptions {
    Eigen::Index dense_limit = 512;
};

GraphTensors encode(const DataFlowGraph& g, const NodeKindVocabulary& vocab = NodeKindVocabulary::standard(),
                    const EncodeOptions& options = {});

/// D^-1/2 (A + I) D^-1/2 for a square matrix A. Throws ShapeError otherwise.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& A);

} // namespace ipsim
