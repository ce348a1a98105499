#include "nnlab/trace.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace nnlab {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw std::invalid_argument("bad number: " + s);
    return v;
}

}  // namespace

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trace_header(int dim) {
    std::string h = "n";
    for (int i = 0; i < dim; ++i) h += ",x" + std::to_string(i);
    h += ",nn_index,nn_distance,predicted,truth,mistake,cum_mistakes,rate,sep_event_keys,"
         "indicator_flag";
    return h;
}

std::string trace_to_csv(int dim, const std::vector<TraceRow>& rows) {
    std::string out = trace_header(dim) + "\n";
    for (const TraceRow& row : rows) {
        const RoundRecord& r = row.rec;
        if (static_cast<int>(r.instance.size()) != dim)
            throw std::invalid_argument("trace row dimension mismatch");
        out += std::to_string(r.n);
        for (double c : r.instance) out += "," + fmt_double(c);
        out += ",";
        if (r.nn_index) out += std::to_string(*r.nn_index);
        out += ",";
        if (r.nn_distance) out += fmt_double(*r.nn_distance);
        out += ",";
        if (r.predicted) out += std::to_string(*r.predicted);
        out += "," + std::to_string(r.truth);
        out += ",";
        out += r.mistake ? "1" : "0";
        out += "," + std::to_string(row.cum_mistakes);
        out += "," + fmt_double(row.rate);
        out += "," + row.sep_event_keys;
        out += "," + std::to_string(row.indicator_flag);
        out += "\n";
    }
    return out;
}

std::vector<TraceRow> trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty trace document");
    std::vector<std::string> head = split_csv_line(line);
    int dim = 0;
    while (1 + dim < static_cast<int>(head.size()) &&
           head[1 + dim] == "x" + std::to_string(dim))
        ++dim;
    if (dim == 0 || line != trace_header(dim))
        throw std::invalid_argument("unrecognized trace header: " + line);

    std::vector<TraceRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (static_cast<int>(f.size()) != dim + 10)
            throw std::invalid_argument("trace row has wrong column count: " + line);
        TraceRow row;
        int i = 0;
        row.rec.n = static_cast<int>(parse_double(f[i++]));
        row.rec.instance.resize(dim);
        for (int c = 0; c < dim; ++c) row.rec.instance[c] = parse_double(f[i++]);
        if (!f[i].empty()) row.rec.nn_index = static_cast<int>(parse_double(f[i]));
        ++i;
        if (!f[i].empty()) row.rec.nn_distance = parse_double(f[i]);
        ++i;
        if (!f[i].empty()) row.rec.predicted = static_cast<int>(parse_double(f[i]));
        ++i;
        row.rec.truth = static_cast<int>(parse_double(f[i++]));
        row.rec.mistake = f[i++] == "1";
        row.cum_mistakes = static_cast<long>(parse_double(f[i++]));
        row.rate = parse_double(f[i++]);
        row.sep_event_keys = f[i++];
        row.indicator_flag = static_cast<int>(parse_double(f[i++]));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<long> checkpoints(long n) {
    std::vector<long> out;
    for (long c = 100; c <= n && c > 0; c *= 10) out.push_back(c);
    if (n >= 1 && (out.empty() || out.back() != n)) out.push_back(n);
    return out;
}

}  // namespace nnlab
