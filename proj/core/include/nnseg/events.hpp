#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace nnseg {

enum class EventLabel { Nns, NonNns, Pacifier };

std::string_view to_string(EventLabel label);
/// Accepts "nns", "non-nns", "pacifier".
EventLabel parse_event_label(std::string_view s);

/// Labeled time interval [start_s, end_s).
struct Event {
    double start_s = 0.0;
    double end_s = 0.0;
    EventLabel label = EventLabel::Nns;
    double confidence = 1.0;

    double duration() const { return end_s - start_s; }
    bool operator==(const Event&) const = default;
};

using EventList = std::vector<Event>;

/// Event tagged with the clip it belongs to.
struct SourcedEvent {
    std::string source;
    Event event;
};

} // namespace nnseg
