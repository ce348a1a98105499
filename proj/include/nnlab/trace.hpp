#pragma once

#include <string>
#include <vector>

#include "nnlab/learner.hpp"

namespace nnlab {

// Shortest exact decimal form (%.17g): strtod round-trips it bit for bit.
std::string fmt_double(double v);

// One trace line: the learner's round record plus the harness-side
// bookkeeping columns.
struct TraceRow {
    RoundRecord rec;
    long cum_mistakes = 0;
    double rate = 0.0;
    std::string sep_event_keys;  // "node:level" charges this round, ';'-joined
    int indicator_flag = 0;
};

// CSV layout (dim coordinate columns):
//   n,x0[,x1,...],nn_index,nn_distance,predicted,truth,mistake,
//   cum_mistakes,rate,sep_event_keys,indicator_flag
// Round 1 leaves nn_index, nn_distance and predicted empty (abstention).
std::string trace_header(int dim);
std::string trace_to_csv(int dim, const std::vector<TraceRow>& rows);
std::vector<TraceRow> trace_from_csv(const std::string& text);

// Reporting checkpoints: powers of ten from 100 up to N, plus N itself.
std::vector<long> checkpoints(long n);

}  // namespace nnlab
