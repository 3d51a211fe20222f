#include "roughcast/matrix.hpp"

#include "roughcast/error.hpp"

#include <string>

namespace roughcast {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> init)
{
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
        if (r.size() != cols_) {
            fail(Errc::schema, "ragged matrix initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows)
{
    Matrix out(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != out.cols_) {
            fail(Errc::schema, "row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                                   " columns, expected " + std::to_string(out.cols_));
        }
        std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
    }
    return out;
}

std::vector<double> Matrix::column(std::size_t c) const
{
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const
{
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

void Matrix::append_rows(const Matrix& other)
{
    if (empty() && cols_ == 0) {
        *this = other;
        return;
    }
    if (other.cols_ != cols_) {
        fail(Errc::schema, "append_rows: column count mismatch");
    }
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    assert(a.cols() == b.rows());
    Matrix out(a.rows(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double s = a(i, k);
            const double* src = b.row(k).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += s * src[j];
            }
        }
    }
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b)
{
    assert(a.rows() == b.rows());
    Matrix out(a.cols(), b.cols());
    const std::size_t n = b.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* brow = b.row(r).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double s = a(r, i);
            double* dst = out.row(i).data();
            for (std::size_t j = 0; j < n; ++j) {
                dst[j] += s * brow[j];
            }
        }
    }
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b)
{
    assert(a.cols() == b.cols());
    // Same k-ordered accumulation as a dot product per output, but through the
    // row-streaming kernel so the inner loop vectorizes.
    Matrix bt(b.cols(), b.rows());
    for (std::size_t r = 0; r < b.rows(); ++r) {
        for (std::size_t c = 0; c < b.cols(); ++c) {
            bt(c, r) = b(r, c);
        }
    }
    return matmul(a, bt);
}

} // namespace roughcast
