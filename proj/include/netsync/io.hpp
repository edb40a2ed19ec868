#pragma once

// CSV emission and reloading: simulation traces and delay kernels.
// Numbers use shortest round-trip formatting, '.' decimal, LF endings,
// no quoting; identical inputs produce byte-identical files.

#include <charconv>
#include <cmath>
#include <ostream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "netsync/delay.hpp"
#include "netsync/errors.hpp"
#include "netsync/netsim.hpp"

namespace netsync {

namespace detail {

inline void append_number(std::string& line, double v) {
    if (std::isinf(v)) {
        line += v > 0 ? "inf" : "-inf";
        return;
    }
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.append(buf, res.ptr);
}

inline double parse_number(std::string_view token, const std::string& what) {
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw io_error(what + ": malformed number '" + std::string(token) + "'");
    return v;
}

inline std::vector<double> parse_csv_row(const std::string& line, const std::string& what) {
    std::vector<double> out;
    size_t begin = 0;
    while (begin <= line.size()) {
        const size_t end = line.find(',', begin);
        const std::string_view token(line.data() + begin,
                                     (end == std::string::npos ? line.size() : end) - begin);
        out.push_back(parse_number(token, what));
        if (end == std::string::npos) break;
        begin = end + 1;
    }
    return out;
}

inline void append_matrix_entries(std::string& line, const Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            line += ',';
            append_number(line, m(r, c).real());
            line += ',';
            append_number(line, m(r, c).imag());
        }
}

} // namespace detail

/// Header: t,sync_error,state_norm,y_<node>_<component>_re,..._im (1-based).
inline void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
    if (trace.outputs.empty()) throw io_error("write_trace_csv: empty trace");
    const auto n = trace.outputs.front().rows();
    const auto q = trace.outputs.front().cols();

    std::string line = "t,sync_error,state_norm";
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < q; ++k) {
            const std::string tag = "_" + std::to_string(j + 1) + "_" + std::to_string(k + 1);
            line += ",y" + tag + "_re,y" + tag + "_im";
        }
    out << line << '\n';

    for (size_t i = 0; i < trace.times.size(); ++i) {
        line.clear();
        detail::append_number(line, trace.times[i]);
        line += ',';
        detail::append_number(line, trace.sync_error[i]);
        line += ',';
        detail::append_number(line, trace.state_norms[i]);
        detail::append_matrix_entries(line, trace.outputs[i]);
        out << line << '\n';
    }
    if (!out) throw io_error("write_trace_csv: stream failure");
}

// ---------------------------------------------------------------------------
// Kernel dumps: one file each for p, f, g.
//   p: t, entries of p(t)                        (n+1 rows)
//   f: t, s_lo, s_hi, lo entries, hi entries     ((n+1)*n rows)
//   g: t, s_lo, s_hi, lo entries, hi entries     ((n+1)*2n rows)
// Matrix entries are row-major re, im interleaved; f/g rows carry the
// one-sided panel limits, so jump discontinuities reload exactly.
// ---------------------------------------------------------------------------

inline void write_kernels_csv(const KernelSet& ker, std::ostream& p_out, std::ostream& f_out,
                              std::ostream& g_out) {
    const int d = ker.dim, pdim = ker.input_dim;
    const double delta = ker.grid_step();

    std::string line = "t";
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
            const std::string tag = "_" + std::to_string(r + 1) + "_" + std::to_string(c + 1);
            line += ",p" + tag + "_re,p" + tag + "_im";
        }
    p_out << line << '\n';
    for (int i = 0; i <= ker.n; ++i) {
        line.clear();
        detail::append_number(line, ker.t_m + delta * i);
        detail::append_matrix_entries(line, ker.p[static_cast<size_t>(i)]);
        p_out << line << '\n';
    }

    const auto write_panels = [&](std::ostream& out, const char* name, int panels,
                                  const std::vector<std::vector<Matrix>>& lo,
                                  const std::vector<std::vector<Matrix>>& hi, int cols) {
        std::string header = "t,s_lo,s_hi";
        for (const char* side : {"lo", "hi"})
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < cols; ++c)
                    header += "," + std::string(name) + "_" + side + "_" + std::to_string(r + 1) +
                              "_" + std::to_string(c + 1) + "_re," + std::string(name) + "_" +
                              side + "_" + std::to_string(r + 1) + "_" + std::to_string(c + 1) +
                              "_im";
        out << header << '\n';
        std::string row;
        for (int i = 0; i <= ker.n; ++i) {
            for (int l = 0; l < panels; ++l) {
                row.clear();
                detail::append_number(row, ker.t_m + delta * i);
                row += ',';
                detail::append_number(row, delta * l);
                row += ',';
                detail::append_number(row, delta * (l + 1));
                detail::append_matrix_entries(row, lo[static_cast<size_t>(i)][static_cast<size_t>(l)]);
                detail::append_matrix_entries(row, hi[static_cast<size_t>(i)][static_cast<size_t>(l)]);
                out << row << '\n';
            }
        }
    };
    write_panels(f_out, "f", ker.n, ker.f_lo, ker.f_hi, d);
    write_panels(g_out, "g", 2 * ker.n, ker.g_lo, ker.g_hi, pdim);

    if (!p_out || !f_out || !g_out) throw io_error("write_kernels_csv: stream failure");
}

/// Reload a kernel dump; dimensions are recovered from the file shapes.
inline KernelSet read_kernels_csv(std::istream& p_in, std::istream& f_in, std::istream& g_in) {
    const auto read_rows = [](std::istream& in, const std::string& what) {
        std::vector<std::vector<double>> rows;
        std::string line;
        if (!std::getline(in, line)) throw io_error(what + ": missing header");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            rows.push_back(detail::parse_csv_row(line, what));
        }
        if (rows.empty()) throw io_error(what + ": no data rows");
        return rows;
    };

    const auto p_rows = read_rows(p_in, "kernels p");
    const auto f_rows = read_rows(f_in, "kernels f");
    const auto g_rows = read_rows(g_in, "kernels g");

    KernelSet ker;
    ker.n = static_cast<int>(p_rows.size()) - 1;
    const auto d_sq = (p_rows[0].size() - 1) / 2;
    ker.dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d_sq))));
    ker.t_m = p_rows[0][0];
    const int d = ker.dim;
    if (static_cast<size_t>(d) * d * 2 + 1 != p_rows[0].size())
        throw io_error("kernels p: inconsistent column count");
    if (f_rows.size() != static_cast<size_t>(ker.n + 1) * ker.n)
        throw io_error("kernels f: unexpected row count");
    if (g_rows.size() != static_cast<size_t>(ker.n + 1) * 2 * ker.n)
        throw io_error("kernels g: unexpected row count");
    const size_t g_entry_cols = g_rows[0].size() - 3;
    ker.input_dim = static_cast<int>(g_entry_cols / (4 * static_cast<size_t>(d)));
    const int pdim = ker.input_dim;

    const auto unpack = [](const std::vector<double>& row, size_t offset, int rows_m, int cols_m) {
        Matrix m(rows_m, cols_m);
        size_t idx = offset;
        for (int r = 0; r < rows_m; ++r)
            for (int c = 0; c < cols_m; ++c) {
                m(r, c) = Complex(row[idx], row[idx + 1]);
                idx += 2;
            }
        return m;
    };

    ker.p.resize(static_cast<size_t>(ker.n) + 1);
    for (int i = 0; i <= ker.n; ++i) ker.p[static_cast<size_t>(i)] = unpack(p_rows[static_cast<size_t>(i)], 1, d, d);

    ker.f_lo.assign(static_cast<size_t>(ker.n) + 1, std::vector<Matrix>(static_cast<size_t>(ker.n)));
    ker.f_hi = ker.f_lo;
    for (int i = 0; i <= ker.n; ++i)
        for (int l = 0; l < ker.n; ++l) {
            const auto& row = f_rows[static_cast<size_t>(i) * ker.n + static_cast<size_t>(l)];
            ker.f_lo[static_cast<size_t>(i)][static_cast<size_t>(l)] = unpack(row, 3, d, d);
            ker.f_hi[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                unpack(row, 3 + 2 * static_cast<size_t>(d) * d, d, d);
        }

    ker.g_lo.assign(static_cast<size_t>(ker.n) + 1,
                    std::vector<Matrix>(static_cast<size_t>(2 * ker.n)));
    ker.g_hi = ker.g_lo;
    for (int i = 0; i <= ker.n; ++i)
        for (int l = 0; l < 2 * ker.n; ++l) {
            const auto& row = g_rows[static_cast<size_t>(i) * 2 * ker.n + static_cast<size_t>(l)];
            ker.g_lo[static_cast<size_t>(i)][static_cast<size_t>(l)] = unpack(row, 3, d, pdim);
            ker.g_hi[static_cast<size_t>(i)][static_cast<size_t>(l)] =
                unpack(row, 3 + 2 * static_cast<size_t>(d) * pdim, d, pdim);
        }
    return ker;
}

} // namespace netsync
