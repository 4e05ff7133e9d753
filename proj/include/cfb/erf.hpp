#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfb/pseudo_filter.hpp"
#include "cfb/sim.hpp"

namespace cfb {

/// One row of an embedding record file.
struct ErfRecord {
    std::string id;
    bool labeled = false;  // role: labeled | pseudo
    int class_id = -1;     // true class for labeled rows, predicted class for
                           // prediction rows, -1 when not yet predicted
    float confidence = 0.0f;
    GtFlag gt = GtFlag::unknown;
    Feature feature;
};

/// Text dataset: header `erf v1 dim=<D>`, optional `#` provenance lines, then
/// one CSV row per record: id,role,class_id,confidence,gt_ood,<D floats>.
/// Floats are 32-bit, shortest round-trip formatting.
struct ErfDataset {
    std::size_t dim = 0;
    std::vector<std::string> provenance;  // comment lines, kept verbatim
    std::vector<ErfRecord> records;
};

/// Strict parse with file:line diagnostics. Rejects wrong field counts,
/// non-finite or zero-norm features, out-of-range confidence, and labeled
/// rows without a class or with a nonzero gt flag.
ErfDataset parse_erf(std::istream& in, const std::string& name = "<stream>");
ErfDataset parse_erf_file(const std::string& path);

void write_erf(std::ostream& out, const ErfDataset& dataset);
void write_erf_file(const std::string& path, const ErfDataset& dataset);

/// Stream records -> dataset rows. Unlabeled records get role `pseudo` with
/// class -1; the evaluation-only true class of unlabeled ID records is not
/// representable in the file format and is dropped.
ErfDataset to_erf(std::span<const StreamRecord> records, std::size_t dim);

/// Writes `path` atomically (temp file + rename) using `writer(out)`.
void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer);

}  // namespace cfb
