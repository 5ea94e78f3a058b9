#include "ipsim/graph_encode.hpp"

#include <cmath>
#include <vector>

namespace ipsim {

Eigen::MatrixXd GraphTensors::propagate(const Eigen::MatrixXd& M) const {
    if (M.rows() != size())
        throw ShapeError("propagate: expected " + std::to_string(size()) + " rows, got " +
                         std::to_string(M.rows()));
    if (dense)
        return P_dense * M;
    return P_sparse * M;
}

Eigen::MatrixXd GraphTensors::P() const { return dense ? P_dense : Eigen::MatrixXd(P_sparse); }

Eigen::MatrixXd GraphTensors::Ahat() const {
    Eigen::MatrixXd a = Eigen::MatrixXd(A);
    a.diagonal().array() += 1.0;
    return a;
}

GraphTensors encode(const DataFlowGraph& g, const NodeKindVocabulary& vocab, const EncodeOptions& options) {
    if (g.nodes.empty())
        throw EmptyGraph();
    const Eigen::Index n = static_cast<Eigen::Index>(g.size());
    GraphTensors t;
    t.name = g.name;
    t.X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(vocab.size()));
    for (const auto& node : g.nodes)
        t.X(node.id, static_cast<Eigen::Index>(vocab.index_of(kind_name(node.kind)))) = 1.0;

    std::vector<Eigen::Triplet<double>> adj;
    for (const auto& [s, d] : g.edges) {
        if (s == d)
            continue;
        adj.emplace_back(s, d, 1.0);
        adj.emplace_back(d, s, 1.0);
    }
    t.A.resize(n, n);
    // Duplicates (u->v and v->u both present) collapse to 1.
    t.A.setFromTriplets(adj.begin(), adj.end(), [](double, double) { return 1.0; });
    t.A.makeCompressed();

    t.degree = Eigen::VectorXd::Ones(n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (SparseMatrix::InnerIterator it(t.A, r); it; ++it)
            t.degree(r) += it.value();

    std::vector<Eigen::Triplet<double>> p;
    p.reserve(static_cast<std::size_t>(t.A.nonZeros() + n));
    for (Eigen::Index r = 0; r < n; ++r) {
        p.emplace_back(r, r, 1.0 / t.degree(r));
        for (SparseMatrix::InnerIterator it(t.A, r); it; ++it)
            p.emplace_back(r, it.col(), it.value() / std::sqrt(t.degree(r) * t.degree(it.col())));
    }
    t.dense = n <= options.dense_limit;
    t.P_sparse.resize(n, n);
    t.P_sparse.setFromTriplets(p.begin(), p.end());
    t.P_sparse.makeCompressed();
    if (t.dense) {
        t.P_dense = Eigen::MatrixXd(t.P_sparse);
        t.P_sparse = SparseMatrix();
    }
    return t;
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols())
        throw ShapeError("normalize_adjacency: matrix is " + std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()));
    Eigen::MatrixXd ahat = A;
    ahat.diagonal().array() += 1.0;
    Eigen::VectorXd deg = ahat.rowwise().sum();
    Eigen::MatrixXd P(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            P(i, j) = ahat(i, j) / std::sqrt(deg(i) * deg(j));
    return P;
}

} // namespace ipsim
