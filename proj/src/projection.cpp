#include "ipsim/projection.hpp"

#include "ipsim/error.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace ipsim {

Eigen::MatrixXd Pca::transform(const Eigen::MatrixXd& points) const {
    if (points.cols() != mean.size())
        throw ShapeError("projection expects " + std::to_string(mean.size()) + " columns, got " +
                         std::to_string(points.cols()));
    return (points.rowwise() - mean.transpose()) * components;
}

Pca fit_pca(const Eigen::MatrixXd& points, int dims) {
    const Eigen::Index n = points.rows(), d = points.cols();
    if (n < 1 || d < 1)
        throw ShapeError("projection needs at least one point");
    if (dims < 1 || dims > d)
        throw ShapeError("cannot project " + std::to_string(d) + "-D points onto " + std::to_string(dims) +
                         " components");
    Pca pca;
    pca.mean = points.colwise().mean().transpose();
    Eigen::MatrixXd centered = points.rowwise() - pca.mean.transpose();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n > 1 ? n - 1 : 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw Error("eigendecomposition of the covariance failed");
    // Eigen orders ascending; stable sort keeps equal eigenvalues reproducible.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return solver.eigenvalues()(a) > solver.eigenvalues()(b);
    });

    pca.components.resize(d, dims);
    pca.variances.resize(dims);
    for (int k = 0; k < dims; ++k) {
        Eigen::VectorXd v = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
        Eigen::Index lead = 0;
        for (Eigen::Index i = 1; i < d; ++i)
            if (std::abs(v(i)) > std::abs(v(lead)))
                lead = i;
        if (v(lead) < 0)
            v = -v;
        pca.components.col(k) = v;
        pca.variances(k) = std::max(0.0, solver.eigenvalues()(order[static_cast<std::size_t>(k)]));
    }
    return pca;
}

LabelledPoints parse_points_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    LabelledPoints out;
    std::vector<std::vector<double>> rows;
    int lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        if (lineno == 1) {
            if (fields.size() < 2)
                throw FormatError("points CSV header needs a name column and at least one value column");
            width = fields.size() - 1;
            continue;
        }
        if (fields.size() != width + 1)
            throw FormatError("points CSV line " + std::to_string(lineno) + ": expected " +
                              std::to_string(width + 1) + " fields");
        std::vector<double> row;
        for (std::size_t i = 1; i < fields.size(); ++i) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(fields[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != fields[i].size() || !std::isfinite(v))
                throw FormatError("points CSV line " + std::to_string(lineno) + ": bad number '" + fields[i] + "'");
            row.push_back(v);
        }
        out.names.push_back(fields[0]);
        rows.push_back(std::move(row));
    }
    out.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return out;
}

std::string write_points_csv(const LabelledPoints& points, const std::string& prefix) {
    std::ostringstream out;
    out << std::setprecision(17) << "design";
    for (Eigen::Index c = 0; c < points.values.cols(); ++c)
        out << ',' << prefix << c;
    out << '\n';
    for (Eigen::Index r = 0; r < points.values.rows(); ++r) {
        out << points.names[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < points.values.cols(); ++c)
            out << ',' << points.values(r, c);
        out << '\n';
    }
    return out.str();
}

} // namespace ipsim
