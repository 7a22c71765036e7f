#include "courtside/types.hpp"

#include <algorithm>
#include <cctype>

#include "courtside/error.hpp"

namespace courtside {

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

PlayerSlot parse_player_slot(std::string_view s) {
    const std::string lower = to_lower(s);
    if (lower == "top") return PlayerSlot::Top;
    if (lower == "bottom") return PlayerSlot::Bottom;
    throw SpecError("unknown player slot: '" + std::string(s) + "' (expected top or bottom)");
}

std::string player_slot_name(PlayerSlot slot) {
    return slot == PlayerSlot::Top ? "top" : "bottom";
}

const std::array<std::string, kBallTypeCount>& ball_type_names() {
    static const std::array<std::string, kBallTypeCount> names = {"cut",     "drive", "lob",  "long",
                                                                  "netplay", "rush",  "smash"};
    return names;
}

BallType parse_ball_type(std::string_view s) {
    const std::string lower = to_lower(s);
    const auto& names = ball_type_names();
    for (int i = 0; i < kBallTypeCount; ++i) {
        if (lower == names[static_cast<std::size_t>(i)]) return static_cast<BallType>(i);
    }
    throw SpecError("unknown ball type: '" + std::string(s) + "'");
}

std::string ball_type_name(BallType t) {
    return ball_type_names()[static_cast<std::size_t>(t)];
}

}  // namespace courtside
