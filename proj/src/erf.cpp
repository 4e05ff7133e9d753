#include "cfb/erf.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "text_util.hpp"

namespace cfb {

namespace {

GtFlag parse_gt_flag(std::string_view text, const std::string& where) {
    const int v = detail::parse_number<int>(text, where);
    switch (v) {
        case 0: return GtFlag::id;
        case 1: return GtFlag::ood;
        case -1: return GtFlag::unknown;
        default: throw FormatError(where + ": gt_ood must be 0, 1 or -1, got " + std::string(text));
    }
}

int gt_flag_value(GtFlag f) { return static_cast<int>(f); }

}  // namespace

ErfDataset parse_erf(std::istream& in, const std::string& name) {
    ErfDataset ds;
    std::string line;
    std::size_t lineno = 0;

    auto where = [&] { return name + ":" + std::to_string(lineno); };

    if (!std::getline(in, line)) throw FormatError(name + ": empty file, expected erf header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        auto head = detail::split(line, ' ');
        if (head.size() != 3 || head[0] != "erf" || head[1] != "v1" ||
            !head[2].starts_with("dim="))
            throw FormatError(where() + ": expected header 'erf v1 dim=<D>'");
        ds.dim = detail::parse_number<std::size_t>(head[2].substr(4), where());
        if (ds.dim == 0) throw FormatError(where() + ": dimension must be positive");
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw FormatError(where() + ": blank line inside record section");
        }
        if (line.front() == '#') {
            ds.provenance.push_back(line);
            continue;
        }
        auto fields = detail::split(line, ',');
        if (fields.size() != 5 + ds.dim)
            throw FormatError(where() + ": expected " + std::to_string(5 + ds.dim) +
                              " fields (id,role,class_id,confidence,gt_ood," +
                              std::to_string(ds.dim) + " floats), got " +
                              std::to_string(fields.size()));
        ErfRecord r;
        r.id = std::string(fields[0]);
        if (r.id.empty()) throw FormatError(where() + ": empty record id");
        if (fields[1] == "labeled") {
            r.labeled = true;
        } else if (fields[1] == "pseudo") {
            r.labeled = false;
        } else {
            throw FormatError(where() + ": role must be 'labeled' or 'pseudo', got '" +
                              std::string(fields[1]) + "'");
        }
        r.class_id = detail::parse_number<int>(fields[2], where());
        if (r.class_id < -1) throw FormatError(where() + ": class_id must be >= -1");
        r.confidence = detail::parse_number<float>(fields[3], where());
        if (!(r.confidence >= 0.0f && r.confidence <= 1.0f))
            throw FormatError(where() + ": confidence outside [0, 1]");
        r.gt = parse_gt_flag(fields[4], where());
        if (r.labeled && r.class_id < 0)
            throw FormatError(where() + ": labeled record without a class");
        if (r.labeled && r.gt != GtFlag::id)
            throw FormatError(where() + ": labeled record with nonzero gt_ood");
        r.feature.resize(ds.dim);
        for (std::size_t d = 0; d < ds.dim; ++d)
            r.feature[d] = detail::parse_number<float>(fields[5 + d], where());
        try {
            validate_feature(r.feature, ds.dim);
        } catch (const ValidationError& e) {
            throw FormatError(where() + ": " + e.message());
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

ErfDataset parse_erf_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);
    return parse_erf(in, path);
}

void write_erf(std::ostream& out, const ErfDataset& dataset) {
    out << "erf v1 dim=" << dataset.dim << "\n";
    for (const auto& p : dataset.provenance) out << p << "\n";
    for (const auto& r : dataset.records) {
        out << r.id << ',' << (r.labeled ? "labeled" : "pseudo") << ',' << r.class_id << ','
            << detail::format_float(r.confidence) << ',' << gt_flag_value(r.gt);
        for (float x : r.feature) out << ',' << detail::format_float(x);
        out << "\n";
    }
}

void write_erf_file(const std::string& path, const ErfDataset& dataset) {
    atomic_write(path, [&](std::ostream& out) { write_erf(out, dataset); });
}

ErfDataset to_erf(std::span<const StreamRecord> records, std::size_t dim) {
    ErfDataset ds;
    ds.dim = dim;
    ds.records.reserve(records.size());
    for (const auto& r : records) {
        validate_feature(r.feature, dim, "record '" + r.record_id + "' feature");
        ErfRecord e;
        e.id = r.record_id;
        e.labeled = r.labeled;
        e.class_id = r.labeled ? r.gt_class : -1;
        e.confidence = r.labeled ? 1.0f : 0.0f;
        e.gt = r.gt_ood;
        e.feature = r.feature;
        ds.records.push_back(std::move(e));
    }
    return ds;
}

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write: " + tmp);
        writer(out);
        out.flush();
        if (!out) throw IoError("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace cfb
