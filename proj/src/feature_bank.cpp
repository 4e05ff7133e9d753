#include "cfb/feature_bank.hpp"

#include <cassert>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cfb/erf.hpp"
#include "text_util.hpp"

namespace cfb {

ClassFeatureBank::ClassFeatureBank(int class_id, std::size_t capacity, std::size_t dim)
    : class_id_(class_id), capacity_(capacity), dim_(dim) {
    if (capacity == 0) throw ConfigError("bank capacity must be at least 1");
    if (dim == 0) throw ConfigError("bank dimension must be at least 1");
    storage_.resize(capacity_ * dim_);
}

void ClassFeatureBank::push(std::span<const float> feature) {
    validate_feature(feature, dim_);
    std::size_t slot;
    if (size_ < capacity_) {
        slot = (start_ + size_) % capacity_;
        ++size_;
    } else {
        slot = start_;  // overwrite the oldest, then advance the front
        start_ = (start_ + 1) % capacity_;
    }
    std::copy(feature.begin(), feature.end(), storage_.begin() + slot * dim_);
    ++push_count_;
}

std::span<const float> ClassFeatureBank::prototype(std::size_t i) const {
    assert(i < size_);
    const std::size_t slot = (start_ + i) % capacity_;
    return {storage_.data() + slot * dim_, dim_};
}

std::vector<Feature> ClassFeatureBank::prototypes() const {
    std::vector<Feature> out;
    out.reserve(size_);
    for (std::size_t i = 0; i < size_; ++i) {
        auto p = prototype(i);
        out.emplace_back(p.begin(), p.end());
    }
    return out;
}

ClassFeatureBank ClassFeatureBank::restore(int class_id, std::size_t capacity, std::size_t dim,
                                           std::span<const Feature> protos,
                                           std::uint64_t push_count) {
    ClassFeatureBank bank(class_id, capacity, dim);
    if (protos.size() > capacity) throw FormatError("snapshot holds more prototypes than capacity");
    if (push_count < protos.size())
        throw FormatError("snapshot push counter below prototype count");
    for (const Feature& f : protos) bank.push(f);
    bank.push_count_ = push_count;
    return bank;
}

FeatureBankSet::FeatureBankSet(int num_classes, std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim) {
    if (num_classes < 1) throw ConfigError("bank set needs at least 1 class");
    if (capacity == 0) throw ConfigError("bank capacity must be at least 1");
    if (dim == 0) throw ConfigError("bank dimension must be at least 1");
    banks_.reserve(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) banks_.emplace_back(c, capacity, dim);
}

bool FeatureBankSet::has_class(int class_id) const {
    return class_id >= 0 && class_id < num_classes();
}

ClassFeatureBank& FeatureBankSet::bank(int class_id) {
    if (!has_class(class_id))
        throw LookupError("class " + std::to_string(class_id) + " is not a declared class");
    return banks_[static_cast<std::size_t>(class_id)];
}

const ClassFeatureBank& FeatureBankSet::bank(int class_id) const {
    if (!has_class(class_id))
        throw LookupError("class " + std::to_string(class_id) + " is not a declared class");
    return banks_[static_cast<std::size_t>(class_id)];
}

void FeatureBankSet::push(int class_id, std::span<const float> feature) {
    bank(class_id).push(feature);
}

bool FeatureBankSet::is_warm() const {
    for (const auto& b : banks_) {
        if (!b.full()) return false;
    }
    return true;
}

std::string FeatureBankSet::cold_classes_diagnostic() const {
    std::string out;
    for (const auto& b : banks_) {
        if (b.full()) continue;
        if (!out.empty()) out += ", ";
        out += "class " + std::to_string(b.class_id()) + " (" + std::to_string(b.size()) + "/" +
               std::to_string(b.capacity()) + ")";
    }
    return out;
}

void FeatureBankSet::save(std::ostream& out) const {
    out << "cfb v1 dim=" << dim_ << " capacity=" << capacity_ << " classes=" << num_classes()
        << "\n";
    for (const auto& b : banks_) {
        out << "class " << b.class_id() << " len=" << b.size() << " pushes=" << b.push_count()
            << "\n";
        for (std::size_t i = 0; i < b.size(); ++i) {
            auto p = b.prototype(i);
            for (std::size_t d = 0; d < p.size(); ++d) {
                if (d) out << ',';
                out << detail::format_float(p[d]);
            }
            out << "\n";
        }
    }
}

namespace {

// One snapshot line, or a format error mentioning the position.
std::string next_line(std::istream& in, std::size_t& lineno, const std::string& expect) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("snapshot truncated at line " + std::to_string(lineno + 1) +
                          ", expected " + expect);
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::uint64_t parse_kv_uint(std::string_view token, std::string_view key, std::size_t lineno) {
    const std::string where = "snapshot line " + std::to_string(lineno);
    if (!token.starts_with(key) || token.size() <= key.size() || token[key.size()] != '=')
        throw FormatError(where + ": expected '" + std::string(key) + "=<n>', got '" +
                          std::string(token) + "'");
    return detail::parse_number<std::uint64_t>(token.substr(key.size() + 1), where);
}

}  // namespace

FeatureBankSet FeatureBankSet::load(std::istream& in) {
    std::size_t lineno = 0;
    const std::string header = next_line(in, lineno, "header");
    auto head = detail::split(header, ' ');
    if (head.size() != 5 || head[0] != "cfb" || head[1] != "v1")
        throw FormatError("snapshot line 1: expected 'cfb v1 dim=<D> capacity=<L> classes=<C>'");
    const auto dim = parse_kv_uint(head[2], "dim", 1);
    const auto capacity = parse_kv_uint(head[3], "capacity", 1);
    const auto classes = parse_kv_uint(head[4], "classes", 1);
    if (dim == 0 || capacity == 0 || classes == 0)
        throw FormatError("snapshot line 1: dim, capacity and classes must be positive");

    FeatureBankSet set(static_cast<int>(classes), capacity, dim);
    for (std::uint64_t c = 0; c < classes; ++c) {
        const std::string line = next_line(in, lineno, "class header");
        auto fields = detail::split(line, ' ');
        // `pushes=` is optional so externally produced snapshots stay loadable.
        if ((fields.size() != 3 && fields.size() != 4) || fields[0] != "class")
            throw FormatError("snapshot line " + std::to_string(lineno) +
                              ": expected 'class <id> len=<n>'");
        const auto id = detail::parse_number<std::uint64_t>(
            fields[1], "snapshot line " + std::to_string(lineno));
        if (id != c)
            throw FormatError("snapshot line " + std::to_string(lineno) + ": expected class " +
                              std::to_string(c) + ", got " + std::to_string(id));
        const auto len = parse_kv_uint(fields[2], "len", lineno);
        if (len > capacity)
            throw FormatError("snapshot line " + std::to_string(lineno) +
                              ": class length exceeds capacity");
        const std::uint64_t pushes =
            fields.size() == 4 ? parse_kv_uint(fields[3], "pushes", lineno) : len;

        std::vector<Feature> protos;
        protos.reserve(len);
        for (std::uint64_t i = 0; i < len; ++i) {
            const std::string row = next_line(in, lineno, "prototype row");
            auto cols = detail::split(row, ',');
            if (cols.size() != dim)
                throw FormatError("snapshot line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(dim) + " components, got " +
                                  std::to_string(cols.size()));
            Feature f(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                f[d] = detail::parse_number<float>(cols[d],
                                                   "snapshot line " + std::to_string(lineno));
            }
            try {
                validate_feature(f, dim);
            } catch (const ValidationError& e) {
                throw FormatError("snapshot line " + std::to_string(lineno) + ": " + e.message());
            }
            protos.push_back(std::move(f));
        }
        set.banks_[static_cast<std::size_t>(c)] = ClassFeatureBank::restore(
            static_cast<int>(c), capacity, dim, protos, pushes);
    }
    std::string trailing;
    if (std::getline(in, trailing) && !detail::trim(trailing).empty())
        throw FormatError("snapshot line " + std::to_string(lineno + 1) +
                          ": unexpected trailing content");
    return set;
}

void FeatureBankSet::save_file(const std::string& path) const {
    atomic_write(path, [this](std::ostream& out) { save(out); });
}

FeatureBankSet FeatureBankSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open bank snapshot: " + path);
    try {
        return load(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.message());
    }
}

}  // namespace cfb
