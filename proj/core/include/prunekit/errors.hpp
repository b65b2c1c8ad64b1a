#pragma once

#include <stdexcept>
#include <string>

namespace prunekit {

// Error taxonomy shared by the whole toolkit. The CLI maps these onto
// exit codes: usage/domain -> 1, format -> 2, numeric -> 3.

struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (manifests, blobs, archives, dataset records).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Factorization breakdown, divergence, non-finite values.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Graph invariant violations (bad channel counts, orphan weights, ...).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unknown layer / capture names.
struct lookup_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Out-of-range arguments (K >= C, empty dataset, n > #images, ...).
struct domain_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace prunekit
