#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfb/feature.hpp"

namespace cfb {

/// Fixed-capacity FIFO queue of prototype features for one class, backed by a
/// single contiguous buffer so nearest-neighbor scans stay cache-friendly.
///
/// Once `push_count() >= capacity()` the queue always holds exactly the
/// `capacity()` most recent pushes, oldest first.
class ClassFeatureBank {
public:
    ClassFeatureBank(int class_id, std::size_t capacity, std::size_t dim);

    /// Enqueue a prototype; evicts the oldest entry when already full.
    /// Rejects wrong-dimension, non-finite and zero-norm features.
    void push(std::span<const float> feature);

    int class_id() const { return class_id_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return size_; }
    bool full() const { return size_ == capacity_; }

    /// Total pushes ever seen. Monotone; used as a cheap change marker by the
    /// threshold statistics cache.
    std::uint64_t push_count() const { return push_count_; }

    /// i-th prototype in insertion order (0 = oldest). No bounds check beyond
    /// the debug assert; callers index with i < size().
    std::span<const float> prototype(std::size_t i) const;

    /// Insertion-ordered copies of all prototypes.
    std::vector<Feature> prototypes() const;

    /// Rebuilds a bank from snapshot fields: prototypes in insertion order
    /// plus the historical push counter (>= prototypes.size()).
    static ClassFeatureBank restore(int class_id, std::size_t capacity, std::size_t dim,
                                    std::span<const Feature> protos, std::uint64_t push_count);

private:
    int class_id_;
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t size_ = 0;
    std::size_t start_ = 0;  // physical slot of the oldest entry
    std::uint64_t push_count_ = 0;
    std::vector<float> storage_;  // capacity * dim floats
};

/// One bank per declared in-distribution class (ids 0..num_classes-1), all
/// sharing capacity and dimension.
class FeatureBankSet {
public:
    FeatureBankSet(int num_classes, std::size_t capacity, std::size_t dim);

    int num_classes() const { return static_cast<int>(banks_.size()); }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }

    bool has_class(int class_id) const;
    ClassFeatureBank& bank(int class_id);
    const ClassFeatureBank& bank(int class_id) const;

    void push(int class_id, std::span<const float> feature);

    /// True iff every bank is filled to capacity.
    bool is_warm() const;

    /// Human-readable list of the classes still below capacity; empty when warm.
    std::string cold_classes_diagnostic() const;

    /// Text snapshot. Round-trips the full state including per-class push
    /// counters; float components use shortest round-trip formatting.
    void save(std::ostream& out) const;
    static FeatureBankSet load(std::istream& in);

    void save_file(const std::string& path) const;
    static FeatureBankSet load_file(const std::string& path);

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::vector<ClassFeatureBank> banks_;
};

}  // namespace cfb
