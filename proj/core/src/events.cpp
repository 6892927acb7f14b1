#include "nnseg/events.hpp"

#include "nnseg/error.hpp"

namespace nnseg {

std::string_view to_string(EventLabel label) {
    switch (label) {
    case EventLabel::Nns: return "nns";
    case EventLabel::NonNns: return "non-nns";
    case EventLabel::Pacifier: return "pacifier";
    }
    return "nns";
}

EventLabel parse_event_label(std::string_view s) {
    if (s == "nns" || s == "NNS") return EventLabel::Nns;
    if (s == "non-nns" || s == "non-NNS") return EventLabel::NonNns;
    if (s == "pacifier") return EventLabel::Pacifier;
    throw ValidationError("unknown event label '" + std::string(s) + "'");
}

} // namespace nnseg
