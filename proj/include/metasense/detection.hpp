#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "metasense/mechanics.hpp"

namespace metasense {

/// Per-channel series sharing one time base.
struct SignalSet {
    std::vector<std::vector<double>> channels;   // channels[c][k]
    std::vector<double> X;                       // imposed displacement per sample (may be empty)
    std::vector<std::size_t> steps;              // global step index per sample (may be empty)

    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    std::size_t step_at(std::size_t k) const { return steps.empty() ? k : steps[k]; }
    void validate(std::size_t min_length = 1) const;
};

class DegenerateChannelError : public std::runtime_error {
public:
    explicit DegenerateChannelError(std::vector<std::size_t> channels);
    const std::vector<std::size_t>& channels() const { return channels_; }

private:
    std::vector<std::size_t> channels_;
};

/// Which sign of the derivative marks a deployment. Opening a cell widens
/// its plate gap, so the capacitance falls.
enum class Polarity { Falling, Rising };

struct DetectionConfig {
    int window = 1;              // moving-average width, odd
    double theta = 0.3;          // threshold as a fraction of the global derivative maximum
    int refractory = -1;         // minimum separation in samples; < 0 means 2 * window
    Polarity polarity = Polarity::Falling;
    int score_window = 5;        // tolerance in samples when matching against ground truth

    int refractory_gap() const { return refractory < 0 ? 2 * window : refractory; }
    void validate() const;
};

struct DetectedEvent {
    int cell_id = 0;             // 1-based channel
    std::size_t step_index = 0;
    double magnitude = 0.0;      // normalized units per sample
};

/// Per-channel min-max scaling to [0, 1].
SignalSet normalize(const SignalSet& sig);
/// Centered moving average; the window shrinks at the boundaries.
SignalSet smooth(const SignalSet& sig, int window);
/// Central differences inside, one-sided at the ends. Units per sample.
SignalSet derivative(const SignalSet& sig);

/// Peak picking on a derivative signal set.
std::vector<DetectedEvent> detect_events(const SignalSet& deriv, const DetectionConfig& cfg);

/// normalize -> smooth -> derivative -> detect_events.
std::vector<DetectedEvent> detect_pipeline(const SignalSet& raw, const DetectionConfig& cfg);

struct SequenceResult {
    std::vector<int> sequence;
    bool anomaly = false;          // some cell appears more than once
    std::vector<int> repeated;     // cells that appear more than once
};

SequenceResult sequence_from_events(std::span<const DetectedEvent> events);

struct DetectionScore {
    bool exact_match = false;
    double hit_rate = 1.0;
    std::size_t hits = 0;
    std::size_t truth_count = 0;
    std::size_t false_positives = 0;
};

/// Compares detections with the DEPLOY events in truth.
DetectionScore score_detection(std::span<const DetectedEvent> detected, std::span<const TransitionEvent> truth,
                               int window);

/// Sample ranges [first, last] over which X rises monotonically from a
/// trough to the following crest.
std::vector<std::pair<std::size_t, std::size_t>> loading_strokes(std::span<const double> X);

/// Restrict a signal set to samples [first, last].
SignalSet slice(const SignalSet& sig, std::size_t first, std::size_t last);

}  // namespace metasense
