#include "crowd/types.hpp"

namespace crowd {

ResponseMatrix select_workers(const ResponseMatrix& Y, const std::vector<std::size_t>& rows) {
    ResponseMatrix out(rows.size(), Y.tasks());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < Y.tasks(); ++j) out.entry(i, j) = Y.entry(rows[i], j);
    return out;
}

ResponseMatrix select_tasks(const ResponseMatrix& Y, const std::vector<std::size_t>& cols) {
    ResponseMatrix out(Y.workers(), cols.size());
    for (std::size_t i = 0; i < Y.workers(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out.entry(i, j) = Y.entry(i, cols[j]);
    return out;
}

}  // namespace crowd
