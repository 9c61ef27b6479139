#include "metasense/detection.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace metasense {

namespace {

std::string join(const std::vector<std::size_t>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += std::to_string(v[i] + 1);
    }
    return s;
}

}  // namespace

DegenerateChannelError::DegenerateChannelError(std::vector<std::size_t> channels)
    : std::runtime_error("normalize: constant channel(s) " + join(channels)), channels_(std::move(channels))
{
}

void SignalSet::validate(std::size_t min_length) const
{
    if (channels.empty())
        throw std::invalid_argument("SignalSet: no channels");
    const std::size_t n = channels.front().size();
    for (const auto& ch : channels)
        if (ch.size() != n)
            throw std::invalid_argument("SignalSet: channels differ in length");
    if (n < min_length)
        throw std::invalid_argument("SignalSet: need at least " + std::to_string(min_length) + " samples");
    if (!X.empty() && X.size() != n)
        throw std::invalid_argument("SignalSet: displacement column length mismatch");
    if (!steps.empty() && steps.size() != n)
        throw std::invalid_argument("SignalSet: step column length mismatch");
}

void DetectionConfig::validate() const
{
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("DetectionConfig: window must be odd and >= 1");
    if (!(theta > 0.0 && theta < 1.0))
        throw std::invalid_argument("DetectionConfig: theta must lie in (0, 1)");
    if (score_window < 0)
        throw std::invalid_argument("DetectionConfig: score_window must be >= 0");
}

SignalSet normalize(const SignalSet& sig)
{
    sig.validate(1);
    SignalSet out = sig;
    std::vector<std::size_t> degenerate;
    for (std::size_t c = 0; c < sig.channels.size(); ++c) {
        const auto& ch = sig.channels[c];
        const auto [lo, hi] = std::minmax_element(ch.begin(), ch.end());
        const double range = *hi - *lo;
        if (!(range > 0.0)) {
            degenerate.push_back(c);
            continue;
        }
        for (std::size_t k = 0; k < ch.size(); ++k)
            out.channels[c][k] = (ch[k] - *lo) / range;
    }
    if (!degenerate.empty())
        throw DegenerateChannelError(std::move(degenerate));
    return out;
}

SignalSet smooth(const SignalSet& sig, int window)
{
    sig.validate(1);
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("smooth: window must be odd and >= 1");
    const std::size_t n = sig.length();
    if (static_cast<std::size_t>(window) > n)
        throw std::invalid_argument("smooth: window longer than the series");

    SignalSet out = sig;
    if (window == 1)
        return out;
    const std::size_t half = static_cast<std::size_t>(window / 2);
    for (std::size_t c = 0; c < sig.channels.size(); ++c) {
        const auto& ch = sig.channels[c];
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t first = k >= half ? k - half : 0;
            const std::size_t last = std::min(n - 1, k + half);
            double sum = 0.0;
            for (std::size_t j = first; j <= last; ++j)
                sum += ch[j];
            out.channels[c][k] = sum / static_cast<double>(last - first + 1);
        }
    }
    return out;
}

SignalSet derivative(const SignalSet& sig)
{
    sig.validate(3);
    const std::size_t n = sig.length();
    SignalSet out = sig;
    for (std::size_t c = 0; c < sig.channels.size(); ++c) {
        const auto& ch = sig.channels[c];
        auto& d = out.channels[c];
        d[0] = ch[1] - ch[0];
        d[n - 1] = ch[n - 1] - ch[n - 2];
        for (std::size_t k = 1; k + 1 < n; ++k)
            d[k] = 0.5 * (ch[k + 1] - ch[k - 1]);
    }
    return out;
}

std::vector<DetectedEvent> detect_events(const SignalSet& deriv, const DetectionConfig& cfg)
{
    cfg.validate();
    deriv.validate(1);
    const double sign = cfg.polarity == Polarity::Falling ? -1.0 : 1.0;
    const std::size_t n = deriv.length();

    double global_max = 0.0;
    for (const auto& ch : deriv.channels)
        for (double v : ch)
            global_max = std::max(global_max, sign * v);
    if (!(global_max > 0.0) || n < 3)
        return {};
    const double threshold = cfg.theta * global_max;

    struct Candidate {
        double value;
        std::size_t channel;
        std::size_t k;
    };
    std::vector<Candidate> candidates;
    for (std::size_t c = 0; c < deriv.channels.size(); ++c) {
        const auto& ch = deriv.channels[c];
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double v = sign * ch[k];
            // A step shows up as a two-sample plateau under central
            // differences; its last sample is the step location.
            if (v > threshold && v >= sign * ch[k - 1] && v > sign * ch[k + 1])
                candidates.push_back({v, c, k});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.value != b.value)
            return a.value > b.value;
        if (a.channel != b.channel)
            return a.channel < b.channel;
        return a.k < b.k;
    });

    // Greedy suppression: a peak claims its refractory window on every
    // channel, which both spaces peaks within a channel and lets the
    // strongest channel win across channels.
    const auto gap = static_cast<std::size_t>(cfg.refractory_gap());
    std::vector<Candidate> accepted;
    for (const Candidate& cand : candidates) {
        const bool blocked = std::any_of(accepted.begin(), accepted.end(), [&](const Candidate& a) {
            const std::size_t d = a.k > cand.k ? a.k - cand.k : cand.k - a.k;
            return d < gap;
        });
        if (!blocked)
            accepted.push_back(cand);
    }
    std::sort(accepted.begin(), accepted.end(), [](const Candidate& a, const Candidate& b) {
        return a.k != b.k ? a.k < b.k : a.channel < b.channel;
    });

    std::vector<DetectedEvent> events;
    events.reserve(accepted.size());
    for (const Candidate& a : accepted)
        events.push_back({static_cast<int>(a.channel) + 1, deriv.step_at(a.k), a.value});
    return events;
}

std::vector<DetectedEvent> detect_pipeline(const SignalSet& raw, const DetectionConfig& cfg)
{
    cfg.validate();
    return detect_events(derivative(smooth(normalize(raw), cfg.window)), cfg);
}

SequenceResult sequence_from_events(std::span<const DetectedEvent> events)
{
    SequenceResult r;
    std::map<int, int> seen;
    for (const DetectedEvent& e : events) {
        r.sequence.push_back(e.cell_id);
        if (++seen[e.cell_id] == 2)
            r.repeated.push_back(e.cell_id);
    }
    r.anomaly = !r.repeated.empty();
    return r;
}

DetectionScore score_detection(std::span<const DetectedEvent> detected, std::span<const TransitionEvent> truth,
                               int window)
{
    DetectionScore s;
    std::vector<int> truth_seq;
    std::vector<bool> used(detected.size(), false);
    for (const TransitionEvent& t : truth) {
        if (t.direction != Direction::Deploy)
            continue;
        truth_seq.push_back(t.cell_id);
        for (std::size_t i = 0; i < detected.size(); ++i) {
            if (used[i] || detected[i].cell_id != t.cell_id)
                continue;
            const auto a = static_cast<long long>(detected[i].step_index);
            const auto b = static_cast<long long>(t.step_index);
            if (std::llabs(a - b) <= window) {
                used[i] = true;
                ++s.hits;
                break;
            }
        }
    }
    s.truth_count = truth_seq.size();
    s.hit_rate = truth_seq.empty() ? 1.0 : static_cast<double>(s.hits) / static_cast<double>(truth_seq.size());
    s.false_positives = detected.size() - s.hits;
    s.exact_match = sequence_from_events(detected).sequence == truth_seq;
    return s;
}

std::vector<std::pair<std::size_t, std::size_t>> loading_strokes(std::span<const double> X)
{
    std::vector<std::pair<std::size_t, std::size_t>> strokes;
    const std::size_t n = X.size();
    std::size_t k = 0;
    while (k + 1 < n) {
        while (k + 1 < n && !(X[k + 1] > X[k]))
            ++k;
        if (k + 1 >= n)
            break;
        const std::size_t first = k;
        while (k + 1 < n && X[k + 1] > X[k])
            ++k;
        strokes.emplace_back(first, k);
    }
    return strokes;
}

SignalSet slice(const SignalSet& sig, std::size_t first, std::size_t last)
{
    sig.validate(1);
    if (first > last || last >= sig.length())
        throw std::out_of_range("slice: invalid sample range");
    SignalSet out;
    for (const auto& ch : sig.channels)
        out.channels.emplace_back(ch.begin() + static_cast<long>(first), ch.begin() + static_cast<long>(last) + 1);
    if (!sig.X.empty())
        out.X.assign(sig.X.begin() + static_cast<long>(first), sig.X.begin() + static_cast<long>(last) + 1);
    out.steps.resize(last - first + 1);
    for (std::size_t k = first; k <= last; ++k)
        out.steps[k - first] = sig.step_at(k);
    return out;
}

}  // namespace metasense
