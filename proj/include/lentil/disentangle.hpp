#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lentil/boundary.hpp"
#include "lentil/scene.hpp"
#include "lentil/tolerances.hpp"

namespace lentil {

// Arrival times of one recovered source on every grid node.
struct ArrivalFunction
{
    std::vector<double> values;
    std::int64_t source_tag = 0;
};

// A graph that does not close up around the boundary (typically cut by the
// time window). Node i of `values` sits at grid node start + i (cyclic).
struct PartialFunction
{
    std::int64_t start = 0;
    std::vector<double> values;
};

struct Ambiguity
{
    std::int64_t node = 0;  // first node after which the two tails may swap
    std::int64_t tag_a = 0;
    std::int64_t tag_b = 0;
    double swap_residual = 0.0;  // jet mismatch of the swapped continuation
};

struct SeparationResult
{
    CloudHeader header;
    std::int64_t sweep_start = 0;
    std::vector<ArrivalFunction> functions;  // canonical order
    std::vector<PartialFunction> partials;
    double jet_tol = 0.0;
    double closure_residual = 0.0;  // worst wrap-around jet mismatch
    std::vector<Ambiguity> ambiguities;
    // Partition with the tails of the first ambiguous pair exchanged.
    std::optional<std::vector<ArrivalFunction>> alternative;
    bool ambiguous() const { return !ambiguities.empty(); }
};

SeparationResult separate(const ArrivalCloud& cloud, const Tolerances& tol);

// Bypasses tracking: groups samples by given labels (one per sample).
SeparationResult separate_with_labels(const ArrivalCloud& cloud, const std::vector<std::int64_t>& labels);

// Spatial duplicates: functions whose difference is constant to const_tol.
struct DedupeResult
{
    std::vector<ArrivalFunction> representatives;
    // For every input function: index of its representative and the offset
    // (input - representative) in time.
    std::vector<std::size_t> representative_of;
    std::vector<double> offset;
};
DedupeResult dedupe_spatial(const std::vector<ArrivalFunction>& functions, double const_tol);

// Data-side length scale for tolerances when no model is at hand: L/pi bounds
// the diameter of a disk with convex boundary from below by the isoperimetric
// argument and is close to it in practice.
double data_tol_dist(const CloudHeader& header, const Tolerances& tol);

// Fraction of cloud samples assigned to the graph of the correct source.
// `truth` holds each ground-truth source's arrival function on the grid.
struct AssociationReport
{
    double accuracy = 0.0;
    std::size_t samples = 0;
    std::size_t correct = 0;
    std::vector<std::int64_t> matched_truth;  // per recovered function, -1 if none
};
AssociationReport association_accuracy(const SeparationResult& result,
                                       const std::vector<std::vector<double>>& truth, double match_tol);

// Smallest jet mismatch of a tail exchange over all close approaches of two
// functions (|f - g| <= gate): the quantity an ambiguity is judged by.
double min_crossing_separation(const std::vector<double>& f, const std::vector<double>& g, double gate);

nlohmann::json to_json(const SeparationResult& r);
SeparationResult separation_from_json(const nlohmann::json& j);

}  // namespace lentil
